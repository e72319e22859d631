"""Brute-force ground truth for small instances.

Everything here is plain exhaustive enumeration (vectorized in blocks, but
with no pruning): exact minimizers, exact persistency and autarky tests,
exact criterion masses and exact worst-case losses. The fast paths in the
other modules are validated against these functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .energy import EnergyFunction, PartialLabeling, evaluate_many, neighborhood
from .errors import TooLargeError
from .tolerance import resolve_tol

DEFAULT_CAP = 1 << 24
_BLOCK = 1 << 14

__all__ = [
    "DEFAULT_CAP",
    "MinimizerSet",
    "brute_force_minimize",
    "is_persistent",
    "is_autarky",
    "exact_win_configs",
    "exact_criterion_mass",
    "exact_worst_loss",
]


@dataclass(frozen=True)
class MinimizerSet:
    """All labelings within tolerance of the global minimum energy."""

    minimizers: list[np.ndarray]
    min_energy: float

    def restricted(self, nodes: Sequence[int]) -> set[tuple[int, ...]]:
        """Distinct restrictions of the minimizers to the given nodes."""
        idx = list(nodes)
        return {tuple(int(m[i]) for i in idx) for m in self.minimizers}


def _space_size(counts: Sequence[int]) -> int:
    size = 1
    for c in counts:
        size *= int(c)
    return size


def _check_cap(size: int, cap: int, what: str) -> None:
    if size > cap:
        raise TooLargeError(f"{what} needs {size} assignments, cap is {cap}")


def _assignment_blocks(counts: Sequence[int], block: int = _BLOCK) -> Iterator[np.ndarray]:
    """Yield the full assignment grid over ``counts`` in (K, m) blocks.

    Assignments are enumerated in mixed-radix order with the last position
    varying fastest.
    """
    counts = [int(c) for c in counts]
    m = len(counts)
    total = _space_size(counts)
    if m == 0:
        yield np.zeros((1, 0), dtype=np.int64)
        return
    strides = np.ones(m, dtype=np.int64)
    for i in range(m - 2, -1, -1):
        strides[i] = strides[i + 1] * counts[i + 1]
    for start in range(0, total, block):
        stop = min(start + block, total)
        lin = np.arange(start, stop, dtype=np.int64)
        out = np.empty((stop - start, m), dtype=np.int64)
        for i in range(m):
            out[:, i] = (lin // strides[i]) % counts[i]
        yield out


def brute_force_minimize(
    energy: EnergyFunction, cap: int = DEFAULT_CAP, tol: float | None = None
) -> MinimizerSet:
    """Enumerate every labeling; return all within ``tol`` of the minimum."""
    tol = resolve_tol(tol)
    _check_cap(_space_size(energy.label_counts), cap, "full minimization")

    best = math.inf
    for block in _assignment_blocks(energy.label_counts):
        e = evaluate_many(energy, block)
        best = min(best, float(e.min()))

    minimizers: list[np.ndarray] = []
    for block in _assignment_blocks(energy.label_counts):
        e = evaluate_many(energy, block)
        for row in block[e <= best + tol]:
            minimizers.append(row.copy())
    return MinimizerSet(minimizers, best)


def is_persistent(
    energy: EnergyFunction,
    partial: PartialLabeling,
    cap: int = DEFAULT_CAP,
    tol: float | None = None,
) -> bool:
    """Whether every global minimizer agrees with the partial labeling."""
    partial.validate_against(energy)
    found = brute_force_minimize(energy, cap=cap, tol=tol)
    return all(
        all(int(m[i]) == ell for i, ell in partial.items()) for m in found.minimizers
    )


def _local_delta_blocks(
    energy: EnergyFunction,
    support: list[int],
    outside: list[int],
    x_index: int,
    cap: int,
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield (Z block, delta matrix) pairs for a support / neighborhood split.

    The delta matrix has one row per neighborhood assignment in the block and
    one column per support assignment: the energy change from replacing the
    reference support assignment (column ``x_index``) by the column's one.
    """
    s_counts = [int(energy.label_counts[i]) for i in support]
    z_counts = [int(energy.label_counts[j]) for j in outside]
    k_y = _space_size(s_counts)
    k_z = _space_size(z_counts)
    _check_cap(k_y * k_z, cap, "support x neighborhood enumeration")

    ys = next(_assignment_blocks(s_counts, block=k_y))  # all support assignments
    s_pos = {i: p for p, i in enumerate(support)}
    z_pos = {j: p for p, j in enumerate(outside)}

    base = np.zeros(k_y)
    for p, i in enumerate(support):
        base += energy.unaries[i][ys[:, p]]
    inner = [
        (u, v)
        for (u, v) in energy.edges
        if u in s_pos and v in s_pos
    ]
    for u, v in inner:
        base += energy.pair_table(u, v)[ys[:, s_pos[u]], ys[:, s_pos[v]]]
    cross = [
        (u, v)
        for (u, v) in energy.edges
        if (u in s_pos) != (v in s_pos)
    ]

    block_rows = max(1, _BLOCK // max(1, k_y))
    for zs in _assignment_blocks(z_counts, block=block_rows):
        local = np.broadcast_to(base, (zs.shape[0], k_y)).copy()
        for u, v in cross:
            if u in s_pos:
                i, j = u, v
            else:
                i, j = v, u
            t = energy.pair_table(i, j)
            local += t[ys[:, s_pos[i]], :][:, zs[:, z_pos[j]]].T
        delta = local - local[:, x_index : x_index + 1]
        yield zs, delta


def _support_index(energy: EnergyFunction, support: list[int], partial: PartialLabeling) -> int:
    idx = 0
    for i in support:
        idx = idx * int(energy.label_counts[i]) + partial[i]
    return idx


def is_autarky(
    energy: EnergyFunction,
    partial: PartialLabeling,
    cap: int = DEFAULT_CAP,
    tol: float | None = None,
) -> bool:
    """Whether substituting the partial labeling into any completion strictly
    lowers the energy (strictness within tolerance)."""
    partial.validate_against(energy)
    tol = resolve_tol(tol)
    support = sorted(partial.support)
    outside = sorted(neighborhood(energy, support))
    x_index = _support_index(energy, support, partial)

    for _, delta in _local_delta_blocks(energy, support, outside, x_index, cap):
        delta[:, x_index] = np.inf  # only competing assignments count
        if delta.shape[1] == 1:
            continue
        if not np.all(delta.min(axis=1) > tol):
            return False
    return True


def exact_win_configs(
    energy: EnergyFunction,
    i: int,
    label: int,
    cap: int = DEFAULT_CAP,
    tol: float | None = None,
) -> set[tuple[int, ...]]:
    """Neighbor assignments under which the label strictly beats every
    alternative at node ``i``.

    Returned tuples are aligned with ``energy.neighbors(i)``.
    """
    tol = resolve_tol(tol)
    partial = PartialLabeling({i: label})
    partial.validate_against(energy)
    outside = list(energy.neighbors(i))
    wins: set[tuple[int, ...]] = set()
    for zs, delta in _local_delta_blocks(energy, [i], outside, label, cap):
        delta[:, label] = np.inf
        if delta.shape[1] == 1:
            good = np.ones(zs.shape[0], dtype=bool)
        else:
            good = delta.min(axis=1) > tol
        for row in zs[good]:
            wins.add(tuple(int(v) for v in row))
    return wins


def exact_criterion_mass(
    energy: EnergyFunction,
    i: int,
    label: int,
    marginals,
    cap: int = DEFAULT_CAP,
    tol: float | None = None,
) -> float:
    """Probability mass, under factorized marginals, of the neighbor
    assignments where the label strictly wins at node ``i``.

    Normalized by the total enumerated mass so that full coverage returns
    exactly 1.0 regardless of round-off in the marginals.
    """
    tol = resolve_tol(tol)
    outside = list(energy.neighbors(i))
    mass_in = 0.0
    mass_total = 0.0
    for zs, delta in _local_delta_blocks(energy, [i], outside, label, cap):
        delta[:, label] = np.inf
        if delta.shape[1] == 1:
            good = np.ones(zs.shape[0], dtype=bool)
        else:
            good = delta.min(axis=1) > tol
        w = np.ones(zs.shape[0])
        for p, j in enumerate(outside):
            w *= marginals.probs[j][zs[:, p]]
        mass_in += float(w[good].sum())
        mass_total += float(w.sum())
    if mass_total == 0.0:
        return 0.0
    return mass_in / mass_total


def exact_worst_loss(
    energy: EnergyFunction,
    i: int,
    label: int,
    cap: int = DEFAULT_CAP,
) -> float:
    """Maximum energy loss from committing node ``i`` to the label: the worst
    case, over neighbor assignments, of the best competing substitution.

    Always >= 0 because keeping the label itself costs nothing.
    """
    outside = list(energy.neighbors(i))
    worst = 0.0
    for _, delta in _local_delta_blocks(energy, [i], outside, label, cap):
        worst = max(worst, -float(delta.min()))
    return worst
