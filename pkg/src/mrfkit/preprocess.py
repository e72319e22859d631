"""Discriminative pre-processing: fix variables before running inference.

A candidate assignment ``x_i = label`` is accepted when the estimated
probability mass of neighbor configurations under which that label strictly
beats every alternative reaches a threshold ``kappa``, and the worst-case
energy loss of committing to it stays below a cap ``epsilon``.

The probability mass is never computed exactly on large neighborhoods.
Instead, per-neighbor admissible label sets (labels that make the candidate
a guaranteed strict winner no matter what the remaining neighbors do) are
derived from precomputed gap tables, and the factorized union of those sets
yields a certified lower bound on the mass. Fixing a variable collapses its
marginal to a point mass and tightens its neighbors' gap tables, so the
sweep is repeated for ``tau`` passes.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .energy import EnergyFunction, PartialLabeling
from .errors import TooLargeError
from .marginals import MarginalSet, marginals_for
from .oracle import _assignment_blocks, _space_size
from .tolerance import resolve_tol

EXACT_CHECK_CAP = 1 << 20

__all__ = [
    "PreprocessConfig",
    "PreprocessResult",
    "MinTables",
    "build_min_tables",
    "admissible_labels",
    "criterion_lower_bound",
    "loss_upper_bound",
    "decide_persistent",
    "run_preprocess",
]


@dataclass(frozen=True)
class PreprocessConfig:
    """Tuning knobs for one pre-processing run.

    kappa: acceptance threshold on the criterion lower bound, in [0, 1].
    tau: number of full sweeps over the unfixed variables (>= 1).
    epsilon: cap on the per-variable worst-case loss bound; ``inf`` disables
        the gate (no worst-case certificate is then available).
    q_mode: marginal construction, one of ``uniform``, ``unary``, ``lbp:K``.
    check_mode: ``approx`` for the factorized lower bound, ``exact`` for
        exhaustive neighborhood enumeration (small neighborhoods only).
    """

    kappa: float = 0.8
    tau: int = 3
    epsilon: float = math.inf
    q_mode: str = "unary"
    check_mode: str = "approx"
    tol: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.kappa <= 1.0:
            raise ValueError("kappa must lie in [0, 1]")
        if self.tau < 1:
            raise ValueError("tau must be >= 1")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.check_mode not in ("approx", "exact"):
            raise ValueError("check_mode must be 'approx' or 'exact'")


@dataclass
class PreprocessResult:
    """Fixed variables plus per-fix diagnostics of one run."""

    fixed: PartialLabeling
    fix_order: list[int]
    loss_bounds: dict[int, float]
    lb_values: dict[int, float]
    iterations_used: int
    candidates_tested: int
    wall_time: float
    multi_pass_fixes: int
    config: PreprocessConfig

    @property
    def loss_total(self) -> float:
        return float(sum(self.loss_bounds.values()))

    def to_dict(self) -> dict:
        return {
            "fixed": {str(i): int(l) for i, l in sorted(self.fixed.items())},
            "fix_order": list(self.fix_order),
            "loss_bounds": {str(i): self.loss_bounds[i] for i in self.fix_order},
            "lb_values": {str(i): self.lb_values[i] for i in self.fix_order},
            "loss_total": self.loss_total,
            "iterations_used": self.iterations_used,
            "candidates_tested": self.candidates_tested,
            "wall_time": self.wall_time,
            "multi_pass_fixes": self.multi_pass_fixes,
            "num_fixed": len(self.fixed),
        }


def _gap_vector(costs: np.ndarray) -> np.ndarray:
    """gap[l] = min over competitors y != l of costs[y] - costs[l]."""
    n = costs.size
    if n == 1:
        return np.array([np.inf])
    part = np.partition(costs, 1)
    m1, m2 = part[0], part[1]
    idx = int(np.argmin(costs))
    best_other = np.full(n, m1)
    best_other[idx] = m2
    return best_other - costs


class MinTables:
    """Precomputed per-term minima used by every candidate decision.

    ``unary_gap[i][l]`` is the smallest unary handicap of a competitor of
    label ``l`` at node ``i``. ``pair_gap[(i, j)][l, z]`` is the smallest
    competitor handicap on edge (i, j) when neighbor ``j`` shows label ``z``;
    ``pair_gap_min[(i, j)][l]`` is its minimum over the labels ``j`` can
    still take. Fixing a node shrinks that range to a singleton.
    """

    __slots__ = ("energy", "unary_gap", "pair_gap", "pair_gap_min", "fixed")

    def __init__(self, energy: EnergyFunction) -> None:
        self.energy = energy
        self.unary_gap = [_gap_vector(u) for u in energy.unaries]
        self.pair_gap: dict[tuple[int, int], np.ndarray] = {}
        self.pair_gap_min: dict[tuple[int, int], np.ndarray] = {}
        for u, v in energy.edges:
            self._build_edge(u, v)
            self._build_edge(v, u)
        self.fixed: dict[int, int] = {}

    def _build_edge(self, i: int, j: int) -> None:
        t = self.energy.pair_table(i, j)
        gap = np.empty_like(t)
        for z in range(t.shape[1]):
            gap[:, z] = _gap_vector(t[:, z])
        self.pair_gap[(i, j)] = gap
        self.pair_gap_min[(i, j)] = gap.min(axis=1)

    def allowed_labels(self, j: int) -> Sequence[int]:
        if j in self.fixed:
            return (self.fixed[j],)
        return range(int(self.energy.label_counts[j]))

    def fix(self, i: int, label: int) -> None:
        """Commit node ``i``; tighten the tables of its neighbors."""
        self.fixed[i] = label
        for j in self.energy.neighbors(i):
            self.pair_gap_min[(j, i)] = self.pair_gap[(j, i)][:, label]


def build_min_tables(energy: EnergyFunction) -> MinTables:
    return MinTables(energy)


def _gap_total(tables: MinTables, i: int, label: int) -> float:
    total = float(tables.unary_gap[i][label])
    for j in tables.energy.neighbors(i):
        total += float(tables.pair_gap_min[(i, j)][label])
    return total


def admissible_labels(
    energy: EnergyFunction,
    tables: MinTables,
    i: int,
    label: int,
    tol: float | None = None,
) -> dict[int, list[int]]:
    """Per-neighbor label sets that certify a strict win for the candidate.

    A neighbor label ``z`` of ``j`` is admissible when the summed gap terms
    stay strictly positive with ``z_j = z`` pinned and every other neighbor
    term replaced by its minimum, so any configuration showing ``z`` at
    ``j`` is guaranteed to favor the candidate.
    """
    tol = resolve_tol(tol)
    if energy.label_counts[i] == 1:
        return {j: list(tables.allowed_labels(j)) for j in energy.neighbors(i)}
    total = _gap_total(tables, i, label)
    out: dict[int, list[int]] = {}
    for j in energy.neighbors(i):
        slack = total - float(tables.pair_gap_min[(i, j)][label])
        gaps = tables.pair_gap[(i, j)][label]
        out[j] = [z for z in tables.allowed_labels(j) if slack + float(gaps[z]) > tol]
    return out


def criterion_lower_bound(
    energy: EnergyFunction,
    tables: MinTables,
    i: int,
    label: int,
    marginals: MarginalSet,
    tol: float | None = None,
) -> float:
    """Certified lower bound on the win mass of the candidate.

    Expands the union of the per-neighbor admissible events in ascending
    node order: LB = sum_j Q_j * prod_{k<j} (1 - Q_k) where Q_j is the
    marginal mass of the admissible labels of neighbor j. For an isolated
    node the bound degenerates to an exact unary check.
    """
    tol = resolve_tol(tol)
    neighbors = energy.neighbors(i)
    if not neighbors:
        if energy.label_counts[i] == 1:
            return 1.0
        return 1.0 if float(tables.unary_gap[i][label]) > tol else 0.0
    adm = admissible_labels(energy, tables, i, label, tol=tol)
    lb = 0.0
    remaining = 1.0
    for j in neighbors:
        q_j = marginals.probs[j]
        mass = float(sum(q_j[z] for z in adm[j]))
        lb += mass * remaining
        remaining *= 1.0 - mass
    return min(1.0, max(0.0, lb))


def loss_upper_bound(
    energy: EnergyFunction, tables: MinTables, i: int, label: int
) -> float:
    """Upper bound on the worst-case energy loss of committing to the label.

    Swapping min and sum relaxes the true loss, so the bound may exceed it
    but never undershoots.
    """
    if energy.label_counts[i] == 1:
        return 0.0
    return max(0.0, -_gap_total(tables, i, label))


def _exact_mass_current(
    energy: EnergyFunction,
    tables: MinTables,
    i: int,
    label: int,
    marginals: MarginalSet,
    tol: float,
) -> float:
    """Exact win mass with fixed neighbors pinned at their labels."""
    neighbors = energy.neighbors(i)
    L_i = int(energy.label_counts[i])
    unary = energy.unaries[i]

    base = unary - unary[label]  # competitor handicap, y-indexed
    free: list[int] = []
    for j in neighbors:
        t = energy.pair_table(i, j)
        if j in tables.fixed:
            z = tables.fixed[j]
            base = base + (t[:, z] - t[label, z])
        else:
            free.append(j)

    counts = [int(energy.label_counts[j]) for j in free]
    size = _space_size(counts)
    if size > EXACT_CHECK_CAP:
        raise TooLargeError(
            f"exact check over {size} neighborhood assignments exceeds cap {EXACT_CHECK_CAP}"
        )

    mass_in = 0.0
    mass_total = 0.0
    for zs in _assignment_blocks(counts):
        delta = np.broadcast_to(base, (zs.shape[0], L_i)).copy()
        for p, j in enumerate(free):
            t = energy.pair_table(i, j)
            delta += (t - t[label]).T[zs[:, p], :]
        delta[:, label] = np.inf
        if L_i == 1:
            good = np.ones(zs.shape[0], dtype=bool)
        else:
            good = delta.min(axis=1) > tol
        w = np.ones(zs.shape[0])
        for p, j in enumerate(free):
            w *= marginals.probs[j][zs[:, p]]
        mass_in += float(w[good].sum())
        mass_total += float(w.sum())
    if mass_total == 0.0:
        return 0.0
    return mass_in / mass_total


def decide_persistent(
    energy: EnergyFunction,
    tables: MinTables,
    i: int,
    label: int,
    marginals: MarginalSet,
    config: PreprocessConfig,
) -> tuple[bool, float, float]:
    """Accept the candidate when the (lower-bounded or exact) win mass
    reaches ``kappa`` and the loss bound stays within ``epsilon``.

    Returns (accept, criterion value, loss bound).
    """
    tol = resolve_tol(config.tol)
    loss = loss_upper_bound(energy, tables, i, label)
    if config.check_mode == "exact":
        lb = _exact_mass_current(energy, tables, i, label, marginals, tol)
    else:
        lb = criterion_lower_bound(energy, tables, i, label, marginals, tol=tol)
    accept = lb >= config.kappa and loss <= config.epsilon
    return accept, lb, loss


def run_preprocess(
    energy: EnergyFunction,
    config: PreprocessConfig,
    *,
    only_label: int | None = None,
    marginals: MarginalSet | None = None,
    engine: str = "auto",
) -> PreprocessResult:
    """Sweep all unfixed (node, label) candidates up to ``tau`` times.

    Candidates are scanned in ascending node order, labels ascending; the
    first accepted label wins and immediately shrinks the node's label set,
    collapses its marginal, and tightens its neighbors' tables. A pass that
    fixes nothing ends the run early. ``only_label`` restricts the scan to
    one label index per node (used for keep-current-only checks on binary
    subproblems). ``engine`` picks the sweep implementation: the vectorized
    binary path when applicable (``auto``), or ``generic`` to force the
    table-by-table reference path.
    """
    t0 = time.perf_counter()
    if marginals is None:
        marginals = marginals_for(energy, config.q_mode)

    use_binary = (
        engine != "generic"
        and config.check_mode == "approx"
        and energy.is_binary()
        and energy.num_edges > 0
        and (only_label is None or 0 <= only_label < 2)
    )
    if use_binary and engine != "python" and _sweep_kernel() is not None:
        return _run_binary_compiled(energy, config, marginals, only_label, t0)
    sweep = (
        _BinarySweep(energy, config, marginals)
        if use_binary
        else _GenericSweep(energy, config, marginals.copy(), build_min_tables(energy))
    )

    fixed: dict[int, int] = {}
    fix_order: list[int] = []
    loss_bounds: dict[int, float] = {}
    lb_values: dict[int, float] = {}
    tested = 0
    multi_pass = 0
    passes = 0
    # Two labels of one node can both pass only if each carries criterion
    # mass >= kappa; their win sets are disjoint, so above 1/2 the
    # multi-pass diagnostic can never fire and the probes are skipped.
    probe_rest = config.kappa <= 0.5

    n = energy.num_nodes
    for _ in range(config.tau):
        passes += 1
        changed = False
        for i in range(n):
            if i in fixed:
                continue
            if only_label is not None:
                labels = [only_label] if only_label < energy.label_counts[i] else []
            else:
                labels = list(range(int(energy.label_counts[i])))
            for pos, ell in enumerate(labels):
                tested += 1
                accept, lb, loss = sweep.decide(i, ell)
                if not accept:
                    continue
                if probe_rest and any(
                    sweep.decide(i, other)[0] for other in labels[pos + 1 :]
                ):
                    multi_pass += 1
                fixed[i] = ell
                fix_order.append(i)
                lb_values[i] = lb
                loss_bounds[i] = loss
                sweep.fix(i, ell)
                changed = True
                break
        if not changed:
            break

    return PreprocessResult(
        fixed=PartialLabeling(fixed),
        fix_order=fix_order,
        loss_bounds=loss_bounds,
        lb_values=lb_values,
        iterations_used=passes,
        candidates_tested=tested,
        wall_time=time.perf_counter() - t0,
        multi_pass_fixes=multi_pass,
        config=config,
    )


class _GenericSweep:
    """Per-candidate decisions straight from the public operations."""

    def __init__(self, energy, config, work, tables):
        self.energy = energy
        self.config = config
        self.work = work
        self.tables = tables

    def decide(self, i: int, label: int) -> tuple[bool, float, float]:
        return decide_persistent(
            self.energy, self.tables, i, label, self.work, self.config
        )

    def fix(self, i: int, label: int) -> None:
        self.tables.fix(i, label)
        point = np.zeros(int(self.energy.label_counts[i]))
        point[label] = 1.0
        self.work.probs[i] = point


class _BinarySweep:
    """Flat pure-Python sweep for all-binary energies (expansion subproblems).

    The per-candidate decision touches a handful of floats, so plain list
    indexing beats array machinery here. Gap tables are laid out as flat
    lists indexed [direction][source label][neighbor label][edge]; the
    per-direction minima are the only state mutated when a node is fixed.
    Decisions match the generic path exactly.
    """

    __slots__ = (
        "kappa",
        "epsilon",
        "tol",
        "gamma",
        "nu",
        "mu",
        "q",
        "fixed",
        "incident",
    )

    def __init__(self, energy: EnergyFunction, config, marginals: MarginalSet):
        self.kappa = config.kappa
        self.epsilon = config.epsilon
        self.tol = resolve_tol(config.tol)

        n = energy.num_nodes
        ea = energy.edge_array()
        t = energy.stacked_pairwise()  # (E, 2, 2)
        u = energy.stacked_unaries()
        g = u[:, ::-1] - u
        self.gamma = (g[:, 0].tolist(), g[:, 1].tolist())

        # competitor gaps per direction (0: lower->upper endpoint, 1: back)
        nu_f = t[:, ::-1, :] - t
        tt = t.transpose(0, 2, 1)
        nu_b = tt[:, ::-1, :] - tt
        self.nu = [
            [[nu_f[:, l, z].tolist() for z in (0, 1)] for l in (0, 1)],
            [[nu_b[:, l, z].tolist() for z in (0, 1)] for l in (0, 1)],
        ]
        self.mu = [
            [np.minimum(nu_f[:, l, 0], nu_f[:, l, 1]).tolist() for l in (0, 1)],
            [np.minimum(nu_b[:, l, 0], nu_b[:, l, 1]).tolist() for l in (0, 1)],
        ]

        qm = marginals.as_matrix()
        self.q = [qm[:, 0].tolist(), qm[:, 1].tolist()]
        self.fixed = [-1] * n

        incident: list[list[tuple[int, int, int]]] = [[] for _ in range(n)]
        for e in range(ea.shape[0]):
            uu = int(ea[e, 0])
            vv = int(ea[e, 1])
            incident[uu].append((e, 0, vv))
            incident[vv].append((e, 1, uu))
        for lst in incident:
            lst.sort(key=lambda t3: t3[2])
        self.incident = incident

    def decide(self, i: int, label: int) -> tuple[bool, float, float]:
        inc = self.incident[i]
        tol = self.tol
        gamma = self.gamma[label][i]
        if not inc:
            loss = -gamma if gamma < 0.0 else 0.0
            lb = 1.0 if gamma > tol else 0.0
            return lb >= self.kappa and loss <= self.epsilon, lb, loss

        mu0, mu1 = self.mu[0][label], self.mu[1][label]
        total = gamma
        for e, d, _ in inc:
            total += mu0[e] if d == 0 else mu1[e]
        loss = -total if total < 0.0 else 0.0

        nu_l = self.nu[0][label], self.nu[1][label]
        q0, q1 = self.q
        fixed = self.fixed
        lb = 0.0
        remaining = 1.0
        for e, d, j in inc:
            if d == 0:
                slack = total - mu0[e]
            else:
                slack = total - mu1[e]
            nz0, nz1 = nu_l[d]
            fl = fixed[j]
            if fl < 0:
                mass = 0.0
                if slack + nz0[e] > tol:
                    mass = q0[j]
                if slack + nz1[e] > tol:
                    mass += q1[j]
            elif fl == 0:
                mass = q0[j] if slack + nz0[e] > tol else 0.0
            else:
                mass = q1[j] if slack + nz1[e] > tol else 0.0
            lb += mass * remaining
            remaining *= 1.0 - mass
        if lb > 1.0:
            lb = 1.0
        elif lb < 0.0:
            lb = 0.0
        return lb >= self.kappa and loss <= self.epsilon, lb, loss

    def fix(self, i: int, label: int) -> None:
        self.fixed[i] = label
        self.q[label][i] = 1.0
        self.q[1 - label][i] = 0.0
        nu, mu = self.nu, self.mu
        for e, d, _ in self.incident[i]:
            # pin the gap minima of the edge direction pointing at i
            back = 1 - d
            mu[back][0][e] = nu[back][0][label][e]
            mu[back][1][e] = nu[back][1][label][e]


# ---------------------------------------------------------------------------
# Compiled sweep for binary energies
# ---------------------------------------------------------------------------

_KERNEL = None
_KERNEL_TRIED = False


def _sweep_kernel():
    """JIT-compiled sweep, or None when numba is unavailable."""
    global _KERNEL, _KERNEL_TRIED
    if not _KERNEL_TRIED:
        _KERNEL_TRIED = True
        try:
            from numba import njit
        except ImportError:
            return None
        _KERNEL = njit(cache=True)(_binary_sweep_loop)
    return _KERNEL


def _binary_sweep_loop(
    gamma,  # (N, 2) unary competitor gaps
    nu,  # (2, E, 2, 2) directed pair gaps [dir, edge, source label, dst label]
    mu,  # (2, E, 2) per-direction minima, mutated as nodes are fixed
    q,  # (N, 2) marginals, collapsed to point masses on fixing
    inc_ptr,  # (N+1,) CSR offsets of the incidence arrays
    inc_e,  # (2E,) incident edge ids, neighbors ascending per node
    inc_d,  # (2E,) 0 when the node is the lower endpoint of the edge
    inc_j,  # (2E,) the neighbor on the other end
    tau,
    kappa,
    epsilon,
    tol,
    only_label,  # -1 to scan both labels
    probe_rest,
    fixed,  # (N,) label per node, -1 while unfixed; mutated
    fix_order,  # (N,) output buffer
    lb_out,  # (N,) criterion value per fixed node
    loss_out,  # (N,) loss bound per fixed node
):
    n = gamma.shape[0]
    n_fixed = 0
    tested = 0
    multi = 0
    passes = 0
    for _ in range(tau):
        passes += 1
        changed = False
        for i in range(n):
            if fixed[i] >= 0:
                continue
            lab_lo = 0 if only_label < 0 else only_label
            lab_hi = 2 if only_label < 0 else only_label + 1
            for ell in range(lab_lo, lab_hi):
                tested += 1
                s = inc_ptr[i]
                e_ = inc_ptr[i + 1]
                g = gamma[i, ell]
                if s == e_:
                    loss = -g if g < 0.0 else 0.0
                    lb = 1.0 if g > tol else 0.0
                else:
                    total = g
                    for k in range(s, e_):
                        total += mu[inc_d[k], inc_e[k], ell]
                    loss = -total if total < 0.0 else 0.0
                    lb = 0.0
                    rem = 1.0
                    for k in range(s, e_):
                        d = inc_d[k]
                        e = inc_e[k]
                        j = inc_j[k]
                        slack = total - mu[d, e, ell]
                        fl = fixed[j]
                        mass = 0.0
                        if fl < 0:
                            if slack + nu[d, e, ell, 0] > tol:
                                mass = q[j, 0]
                            if slack + nu[d, e, ell, 1] > tol:
                                mass += q[j, 1]
                        else:
                            if slack + nu[d, e, ell, fl] > tol:
                                mass = q[j, fl]
                        lb += mass * rem
                        rem *= 1.0 - mass
                    if lb > 1.0:
                        lb = 1.0
                    elif lb < 0.0:
                        lb = 0.0
                if not (lb >= kappa and loss <= epsilon):
                    continue
                if probe_rest and ell + 1 < lab_hi:
                    # would the other label have passed too? (diagnostic)
                    other = ell + 1
                    g2 = gamma[i, other]
                    if s == e_:
                        loss2 = -g2 if g2 < 0.0 else 0.0
                        lb2 = 1.0 if g2 > tol else 0.0
                    else:
                        total2 = g2
                        for k in range(s, e_):
                            total2 += mu[inc_d[k], inc_e[k], other]
                        loss2 = -total2 if total2 < 0.0 else 0.0
                        lb2 = 0.0
                        rem2 = 1.0
                        for k in range(s, e_):
                            d = inc_d[k]
                            e = inc_e[k]
                            j = inc_j[k]
                            slack2 = total2 - mu[d, e, other]
                            fl = fixed[j]
                            mass2 = 0.0
                            if fl < 0:
                                if slack2 + nu[d, e, other, 0] > tol:
                                    mass2 = q[j, 0]
                                if slack2 + nu[d, e, other, 1] > tol:
                                    mass2 += q[j, 1]
                            else:
                                if slack2 + nu[d, e, other, fl] > tol:
                                    mass2 = q[j, fl]
                            lb2 += mass2 * rem2
                            rem2 *= 1.0 - mass2
                        if lb2 > 1.0:
                            lb2 = 1.0
                        elif lb2 < 0.0:
                            lb2 = 0.0
                    if lb2 >= kappa and loss2 <= epsilon:
                        multi += 1
                fixed[i] = ell
                fix_order[n_fixed] = i
                lb_out[n_fixed] = lb
                loss_out[n_fixed] = loss
                n_fixed += 1
                q[i, ell] = 1.0
                q[i, 1 - ell] = 0.0
                for k in range(s, e_):
                    back = 1 - inc_d[k]
                    e = inc_e[k]
                    mu[back, e, 0] = nu[back, e, 0, ell]
                    mu[back, e, 1] = nu[back, e, 1, ell]
                changed = True
                break
        if not changed:
            break
    return n_fixed, tested, multi, passes


def _incidence_csr(energy: EnergyFunction):
    """Directed incidence of every node, neighbors ascending, as CSR arrays."""
    ea = energy.edge_array()
    m = ea.shape[0]
    n = energy.num_nodes
    src = np.concatenate((ea[:, 0], ea[:, 1]))
    oth = np.concatenate((ea[:, 1], ea[:, 0]))
    eid = np.concatenate((np.arange(m), np.arange(m)))
    dr = np.concatenate((np.zeros(m, dtype=np.int64), np.ones(m, dtype=np.int64)))
    order = np.lexsort((oth, src))
    src = src[order]
    ptr = np.searchsorted(src, np.arange(n + 1))
    return ptr, eid[order], dr[order], oth[order]


def _run_binary_compiled(
    energy: EnergyFunction,
    config: PreprocessConfig,
    marginals: MarginalSet,
    only_label: int | None,
    t0: float,
) -> PreprocessResult:
    kernel = _sweep_kernel()
    n = energy.num_nodes
    u = energy.stacked_unaries()
    gamma = np.ascontiguousarray(u[:, ::-1] - u)
    t = energy.stacked_pairwise()
    tt = t.transpose(0, 2, 1)
    nu = np.ascontiguousarray(
        np.stack((t[:, ::-1, :] - t, tt[:, ::-1, :] - tt))
    )
    mu = nu.min(axis=3)
    q = marginals.as_matrix().copy()
    ptr, inc_e, inc_d, inc_j = _incidence_csr(energy)

    fixed = np.full(n, -1, dtype=np.int64)
    fix_order = np.empty(n, dtype=np.int64)
    lb_out = np.empty(n)
    loss_out = np.empty(n)
    n_fixed, tested, multi, passes = kernel(
        gamma,
        nu,
        mu,
        q,
        ptr,
        inc_e,
        inc_d,
        inc_j,
        config.tau,
        config.kappa,
        config.epsilon,
        resolve_tol(config.tol),
        -1 if only_label is None else int(only_label),
        config.kappa <= 0.5,
        fixed,
        fix_order,
        lb_out,
        loss_out,
    )

    order = [int(i) for i in fix_order[:n_fixed]]
    return PreprocessResult(
        fixed=PartialLabeling({i: int(fixed[i]) for i in order}),
        fix_order=order,
        loss_bounds={i: float(loss_out[k]) for k, i in enumerate(order)},
        lb_values={i: float(lb_out[k]) for k, i in enumerate(order)},
        iterations_used=int(passes),
        candidates_tested=int(tested),
        wall_time=time.perf_counter() - t0,
        multi_pass_fixes=int(multi),
        config=config,
    )
