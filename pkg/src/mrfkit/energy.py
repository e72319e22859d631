"""Discrete pairwise MRF energies and the algebra of labelings.

An energy is a sum of per-node unary costs and per-edge pairwise costs:

    E(x) = sum_i theta_i(x_i) + sum_{(i,j) in E} theta_ij(x_i, x_j)

Everything downstream (oracle, pre-processing, graph-cut inference) consumes
the types defined here. Energies are immutable after construction and safe
to share across concurrent readers; labelings are value objects.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    CompositionError,
    DomainError,
    InvalidLabelingError,
    MissingNeighborError,
)
from .tolerance import resolve_tol

__all__ = [
    "EnergyFunction",
    "PartialLabeling",
    "Conditioned",
    "ExpansionSubproblem",
    "evaluate",
    "evaluate_many",
    "compose",
    "delta_energy",
    "neighborhood",
    "condition",
    "expansion_subproblem",
    "is_submodular",
    "instance_to_dict",
    "instance_from_dict",
    "load_instance",
    "save_instance",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class EnergyFunction:
    """Graph topology plus dense unary and pairwise cost tables.

    Edges are unordered; each pairwise table is stored oriented with the
    lower node index on the rows and transposed transparently on access.
    Tables may share storage (e.g. one Potts table reused across edges).
    """

    __slots__ = (
        "label_counts",
        "_unaries",
        "_edges",
        "_pairwise",
        "_adjacency",
        "_edge_of",
        "_stacked",
        "_stacked_u",
        "_edge_arr",
        "_num_edges",
    )

    def __init__(
        self,
        label_counts: Sequence[int],
        unaries: Sequence[Sequence[float]],
        edges: Sequence[tuple[int, int]] = (),
        pairwise: Sequence[np.ndarray] = (),
        *,
        validate: bool = True,
    ) -> None:
        self.label_counts = _frozen(np.asarray(label_counts, dtype=np.int64))
        n = self.label_counts.size
        self._unaries = [
            _frozen(np.asarray(u, dtype=np.float64)) for u in unaries
        ]

        if len(edges) != len(pairwise):
            raise ValueError("edges and pairwise tables must align")

        norm_edges: list[tuple[int, int]] = []
        norm_tables: list[np.ndarray] = []
        for (u, v), tbl in zip(edges, pairwise):
            u, v = int(u), int(v)
            t = np.asarray(tbl, dtype=np.float64)
            if u > v:
                u, v = v, u
                t = t.T
            norm_edges.append((u, v))
            norm_tables.append(_frozen(np.ascontiguousarray(t)))
        self._edges = norm_edges
        self._pairwise = norm_tables
        self._num_edges = len(norm_edges)

        adjacency: list[list[int]] = [[] for _ in range(n)]
        edge_of: dict[tuple[int, int], int] = {}
        for e, (u, v) in enumerate(norm_edges):
            if validate:
                if not (0 <= u < n and 0 <= v < n) or u == v:
                    raise ValueError(f"edge ({u},{v}) references invalid nodes")
                if (u, v) in edge_of:
                    raise ValueError(f"duplicate edge ({u},{v})")
            adjacency[u].append(v)
            adjacency[v].append(u)
            edge_of[(u, v)] = e
        self._adjacency = [sorted(nb) for nb in adjacency]
        self._edge_of = edge_of
        self._stacked: np.ndarray | None = None
        self._stacked_u: np.ndarray | None = None
        self._edge_arr: np.ndarray | None = None

        if validate:
            self._validate()

    @classmethod
    def from_binary_arrays(
        cls,
        unaries: np.ndarray,
        edges: np.ndarray,
        tables: np.ndarray,
    ) -> "EnergyFunction":
        """Trusted fast constructor for all-binary energies.

        ``unaries`` is (N, 2), ``edges`` (M, 2) with the lower node first and
        no duplicates, ``tables`` (M, 2, 2); all finite. Rows are shared with
        the input arrays (not copied) and the per-item Python views are
        materialized lazily.
        """
        self = cls.__new__(cls)
        n = unaries.shape[0]
        unaries = _frozen(np.ascontiguousarray(unaries, dtype=np.float64))
        tables = _frozen(np.ascontiguousarray(tables, dtype=np.float64))
        self.label_counts = _frozen(np.full(n, 2, dtype=np.int64))
        self._unaries = None
        self._edges = None
        self._pairwise = None
        self._adjacency = None
        self._edge_of = None
        self._stacked = tables
        self._stacked_u = unaries
        self._edge_arr = np.asarray(edges, dtype=np.int64).reshape(tables.shape[0], 2)
        self._num_edges = int(self._edge_arr.shape[0])
        return self

    @property
    def unaries(self) -> list[np.ndarray]:
        if self._unaries is None:
            self._unaries = list(self._stacked_u)
        return self._unaries

    @property
    def edges(self) -> list[tuple[int, int]]:
        if self._edges is None:
            self._edges = [(int(u), int(v)) for u, v in self._edge_arr]
        return self._edges

    @property
    def pairwise(self) -> list[np.ndarray]:
        if self._pairwise is None:
            self._pairwise = list(self._stacked)
        return self._pairwise

    @property
    def adjacency(self) -> list[list[int]]:
        if self._adjacency is None:
            adjacency: list[list[int]] = [[] for _ in range(self.num_nodes)]
            for u, v in self._edge_arr:
                adjacency[u].append(int(v))
                adjacency[v].append(int(u))
            self._adjacency = [sorted(nb) for nb in adjacency]
        return self._adjacency

    def _validate(self) -> None:
        n = self.num_nodes
        if len(self.unaries) != n:
            raise ValueError("one unary vector required per node")
        if np.any(self.label_counts < 1):
            raise ValueError("every node needs at least one label")
        for i, u in enumerate(self.unaries):
            if u.shape != (self.label_counts[i],):
                raise ValueError(f"unary vector of node {i} has wrong length")
            if not np.all(np.isfinite(u)):
                raise ValueError(f"unary vector of node {i} is not finite")
        for (u, v), t in zip(self.edges, self.pairwise):
            want = (self.label_counts[u], self.label_counts[v])
            if t.shape != want:
                raise ValueError(f"pairwise table of edge ({u},{v}) has shape {t.shape}, want {want}")
            if not np.all(np.isfinite(t)):
                raise ValueError(f"pairwise table of edge ({u},{v}) is not finite")

    @property
    def num_nodes(self) -> int:
        return int(self.label_counts.size)

    @property
    def num_edges(self) -> int:
        return self._num_edges

    @property
    def max_labels(self) -> int:
        return int(self.label_counts.max()) if self.num_nodes else 0

    def is_binary(self) -> bool:
        return bool(np.all(self.label_counts == 2)) if self.num_nodes else True

    def uniform_labels(self) -> bool:
        return self.num_nodes == 0 or bool(np.all(self.label_counts == self.label_counts[0]))

    def neighbors(self, i: int) -> list[int]:
        return self.adjacency[i]

    def _edge_index(self, u: int, v: int) -> int:
        if self._edge_of is None:
            self._edge_of = {
                (int(a), int(b)): e for e, (a, b) in enumerate(self._edge_arr)
            }
        return self._edge_of[(u, v)]

    def pair_table(self, i: int, j: int) -> np.ndarray:
        """Pairwise table oriented with node ``i`` on the rows."""
        if i < j:
            return self.pairwise[self._edge_index(i, j)]
        return self.pairwise[self._edge_index(j, i)].T

    def edge_array(self) -> np.ndarray:
        if self._edge_arr is None:
            self._edge_arr = np.asarray(self.edges, dtype=np.int64).reshape(self.num_edges, 2)
        return self._edge_arr

    def stacked_pairwise(self) -> np.ndarray:
        """All pairwise tables as one (E, L, L) array; uniform labels only."""
        if not self.uniform_labels():
            raise DomainError("stacked tables require uniform label counts")
        if self._stacked is None:
            L = self.max_labels
            if self.num_edges == 0:
                self._stacked = np.zeros((0, L, L))
            else:
                self._stacked = _frozen(np.stack(self.pairwise))
        return self._stacked

    def stacked_unaries(self) -> np.ndarray:
        """All unary vectors as one (N, L) array; uniform labels only."""
        if not self.uniform_labels():
            raise DomainError("stacked unaries require uniform label counts")
        if self._stacked_u is None:
            L = self.max_labels
            if self.num_nodes == 0:
                self._stacked_u = np.zeros((0, L))
            else:
                self._stacked_u = _frozen(np.stack(self.unaries))
        return self._stacked_u

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        return f"EnergyFunction(nodes={self.num_nodes}, edges={self.num_edges}, max_labels={self.max_labels})"


class PartialLabeling:
    """A set of nodes with assigned labels; supports composition."""

    __slots__ = ("assignments",)

    def __init__(self, assignments: Mapping[int, int] | None = None) -> None:
        self.assignments: dict[int, int] = {}
        if assignments:
            for i, ell in assignments.items():
                i, ell = int(i), int(ell)
                if i < 0 or ell < 0:
                    raise ValueError("node and label indices must be non-negative")
                self.assignments[i] = ell

    @property
    def support(self) -> frozenset[int]:
        return frozenset(self.assignments)

    def __len__(self) -> int:
        return len(self.assignments)

    def __contains__(self, i: int) -> bool:
        return i in self.assignments

    def __getitem__(self, i: int) -> int:
        return self.assignments[i]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PartialLabeling) and self.assignments == other.assignments

    def items(self):
        return self.assignments.items()

    def copy(self) -> "PartialLabeling":
        return PartialLabeling(self.assignments)

    def validate_against(self, energy: EnergyFunction) -> None:
        for i, ell in self.assignments.items():
            if i >= energy.num_nodes:
                raise InvalidLabelingError(f"node {i} outside energy with {energy.num_nodes} nodes")
            if ell >= energy.label_counts[i]:
                raise InvalidLabelingError(f"label {ell} outside range of node {i}")

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        inner = ", ".join(f"{i}: {l}" for i, l in sorted(self.assignments.items()))
        return "PartialLabeling({%s})" % inner


def _as_labeling(energy: EnergyFunction, x: Sequence[int]) -> np.ndarray:
    arr = np.asarray(x, dtype=np.int64)
    if arr.shape != (energy.num_nodes,):
        raise InvalidLabelingError(
            f"labeling has length {arr.size}, energy has {energy.num_nodes} nodes"
        )
    if arr.size and (np.any(arr < 0) or np.any(arr >= energy.label_counts)):
        raise InvalidLabelingError("label index out of range")
    return arr


def evaluate(energy: EnergyFunction, x: Sequence[int]) -> float:
    """Total energy of a full labeling; each edge counted once."""
    arr = _as_labeling(energy, x)
    if energy.uniform_labels() and energy.num_nodes:
        u = energy.stacked_unaries()
        total = float(u[np.arange(energy.num_nodes), arr].sum())
        if energy.num_edges:
            t = energy.stacked_pairwise()
            ea = energy.edge_array()
            total += float(t[np.arange(energy.num_edges), arr[ea[:, 0]], arr[ea[:, 1]]].sum())
        return total
    total = 0.0
    for i in range(energy.num_nodes):
        total += energy.unaries[i][arr[i]]
    for (u, v), t in zip(energy.edges, energy.pairwise):
        total += t[arr[u], arr[v]]
    return float(total)


def evaluate_many(energy: EnergyFunction, xs: np.ndarray) -> np.ndarray:
    """Energies of a (K, n) batch of labelings."""
    xs = np.asarray(xs, dtype=np.int64)
    if xs.ndim != 2 or xs.shape[1] != energy.num_nodes:
        raise InvalidLabelingError("batch must have shape (K, num_nodes)")
    out = np.zeros(xs.shape[0])
    for i in range(energy.num_nodes):
        out += energy.unaries[i][xs[:, i]]
    for (u, v), t in zip(energy.edges, energy.pairwise):
        out += t[xs[:, u], xs[:, v]]
    return out


def compose(a: PartialLabeling, b: PartialLabeling) -> PartialLabeling:
    """Disjoint union of two partial labelings."""
    overlap = a.support & b.support
    if overlap:
        raise CompositionError(f"supports overlap on nodes {sorted(overlap)}")
    merged = dict(a.assignments)
    merged.update(b.assignments)
    return PartialLabeling(merged)


def delta_energy(
    energy: EnergyFunction,
    i: int,
    x_i: int,
    y_i: int,
    z: Mapping[int, int],
) -> float:
    """Energy change from substituting label ``x_i`` by ``y_i`` at node ``i``.

    ``z`` assigns a label to every neighbor of ``i``. By the Markov property
    the result equals the full-energy difference for any extension of ``z``.
    """
    u = energy.unaries[i]
    if not (0 <= x_i < u.size and 0 <= y_i < u.size):
        raise InvalidLabelingError(f"label out of range for node {i}")
    total = float(u[y_i] - u[x_i])
    for j in energy.neighbors(i):
        if j not in z:
            raise MissingNeighborError(f"assignment missing neighbor {j} of node {i}")
        t = energy.pair_table(i, j)
        zj = int(z[j])
        total += float(t[y_i, zj] - t[x_i, zj])
    return total


def neighborhood(energy: EnergyFunction, nodes: Iterable[int]) -> frozenset[int]:
    """Nodes outside the set adjacent to at least one member of it."""
    inside = set(int(i) for i in nodes)
    out: set[int] = set()
    for i in inside:
        out.update(j for j in energy.neighbors(i) if j not in inside)
    return frozenset(out)


@dataclass(frozen=True)
class Conditioned:
    """A reduced energy over the unfixed nodes plus an exact constant.

    ``evaluate(energy, y) + constant == evaluate(original, fixed (+) y)``
    for every labeling ``y`` of the kept nodes (ascending original order).
    """

    energy: EnergyFunction
    constant: float
    kept: tuple[int, ...]
    fixed: PartialLabeling

    def full_labeling(self, y: Sequence[int]) -> np.ndarray:
        full = np.empty(len(self.kept) + len(self.fixed), dtype=np.int64)
        for i, ell in self.fixed.items():
            full[i] = ell
        for pos, i in enumerate(self.kept):
            full[i] = y[pos]
        return full


def _condition_binary(energy: EnergyFunction, fixed: PartialLabeling) -> Conditioned:
    """Array-based fold-in for all-binary energies."""
    n = energy.num_nodes
    lab = np.full(n, -1, dtype=np.int64)
    for i, ell in fixed.items():
        lab[i] = ell
    keep = lab < 0
    kept = np.flatnonzero(keep)
    pos = np.full(n, -1, dtype=np.int64)
    pos[kept] = np.arange(kept.size)

    u = energy.stacked_unaries()
    constant = float(u[~keep, lab[~keep]].sum()) if (~keep).any() else 0.0
    new_unary = u[kept].copy()

    m = energy.num_edges
    if m:
        t = energy.stacked_pairwise()
        ea = energy.edge_array()
        idx = np.arange(m)
        fu, fv = ~keep[ea[:, 0]], ~keep[ea[:, 1]]

        both = fu & fv
        if both.any():
            constant += float(t[idx[both], lab[ea[both, 0]], lab[ea[both, 1]]].sum())

        only_u = fu & ~fv
        if only_u.any():
            rows = t[idx[only_u], lab[ea[only_u, 0]], :]  # (k, 2) costs for v
            np.add.at(new_unary, pos[ea[only_u, 1]], rows)
        only_v = fv & ~fu
        if only_v.any():
            rows = t[idx[only_v], :, lab[ea[only_v, 1]]]
            np.add.at(new_unary, pos[ea[only_v, 0]], rows)

        inner = ~fu & ~fv
        new_edges = pos[ea[inner]]
        new_tables = np.ascontiguousarray(t[inner])
    else:
        new_edges = np.zeros((0, 2), dtype=np.int64)
        new_tables = np.zeros((0, 2, 2))

    reduced = EnergyFunction.from_binary_arrays(new_unary, new_edges, new_tables)
    return Conditioned(reduced, constant, tuple(int(i) for i in kept), fixed.copy())


def condition(energy: EnergyFunction, fixed: PartialLabeling) -> Conditioned:
    """Fold a partial labeling into the energy.

    Cross edges are absorbed into the unaries of the unfixed endpoints and
    costs internal to the fixed set into the returned constant.
    """
    fixed.validate_against(energy)
    if energy.is_binary() and energy.num_nodes:
        return _condition_binary(energy, fixed)
    inside = fixed.assignments
    kept = [i for i in range(energy.num_nodes) if i not in inside]
    pos = {i: p for p, i in enumerate(kept)}

    constant = 0.0
    new_unaries = [energy.unaries[i].copy() for i in kept]
    for i, ell in inside.items():
        constant += float(energy.unaries[i][ell])

    new_edges: list[tuple[int, int]] = []
    new_tables: list[np.ndarray] = []
    for (u, v), t in zip(energy.edges, energy.pairwise):
        fu, fv = u in inside, v in inside
        if fu and fv:
            constant += float(t[inside[u], inside[v]])
        elif fu:
            new_unaries[pos[v]] += t[inside[u], :]
        elif fv:
            new_unaries[pos[u]] += t[:, inside[v]]
        else:
            new_edges.append((pos[u], pos[v]))
            new_tables.append(t)

    reduced = EnergyFunction(
        [int(energy.label_counts[i]) for i in kept],
        new_unaries,
        new_edges,
        new_tables,
        validate=False,
    )
    return Conditioned(reduced, constant, tuple(kept), fixed.copy())


@dataclass(frozen=True)
class ExpansionSubproblem:
    """Binary keep-or-switch reduction of one expansion move.

    Binary label 0 means "keep the current label", 1 means "switch to the
    proposal". Nodes whose label set lacks the proposal are frozen at their
    current label and folded into the constant / unaries.
    """

    energy: EnergyFunction
    constant: float
    active: tuple[int, ...]
    current: np.ndarray
    alpha: int

    def to_full(self, b: Sequence[int]) -> np.ndarray:
        full = self.current.copy()
        for pos, i in enumerate(self.active):
            if b[pos] == 1:
                full[i] = self.alpha
        return full


def _expansion_subproblem_uniform(
    energy: EnergyFunction, cur: np.ndarray, alpha: int
) -> ExpansionSubproblem:
    """Array-based reduction when every node carries the proposal label."""
    n = energy.num_nodes
    u = energy.stacked_unaries()
    unary = np.empty((n, 2))
    unary[:, 0] = u[np.arange(n), cur]
    unary[:, 1] = u[:, alpha]

    m = energy.num_edges
    if m:
        t = energy.stacked_pairwise()
        ea = energy.edge_array()
        idx = np.arange(m)
        cu, cv = cur[ea[:, 0]], cur[ea[:, 1]]
        tables = np.empty((m, 2, 2))
        tables[:, 0, 0] = t[idx, cu, cv]
        tables[:, 0, 1] = t[idx, cu, alpha]
        tables[:, 1, 0] = t[idx, alpha, cv]
        tables[:, 1, 1] = t[idx, alpha, alpha]
    else:
        ea = np.zeros((0, 2), dtype=np.int64)
        tables = np.zeros((0, 2, 2))

    sub = EnergyFunction.from_binary_arrays(unary, ea, tables)
    return ExpansionSubproblem(sub, 0.0, tuple(range(n)), cur.copy(), int(alpha))


def expansion_subproblem(
    energy: EnergyFunction, current: Sequence[int], alpha: int
) -> ExpansionSubproblem:
    """Binary subproblem for a single expansion move.

    For any binary assignment ``b``:
    ``evaluate(sub.energy, b) + sub.constant == evaluate(energy, sub.to_full(b))``.
    """
    cur = _as_labeling(energy, current)
    if energy.uniform_labels() and energy.num_nodes and alpha < energy.max_labels:
        return _expansion_subproblem_uniform(energy, cur, alpha)
    active = [i for i in range(energy.num_nodes) if alpha < energy.label_counts[i]]
    pos = {i: p for p, i in enumerate(active)}

    constant = 0.0
    unary = np.zeros((len(active), 2))
    for p, i in enumerate(active):
        unary[p, 0] = energy.unaries[i][cur[i]]
        unary[p, 1] = energy.unaries[i][alpha]
    for i in range(energy.num_nodes):
        if i not in pos:
            constant += float(energy.unaries[i][cur[i]])

    edges: list[tuple[int, int]] = []
    tables: list[np.ndarray] = []
    for (u, v), t in zip(energy.edges, energy.pairwise):
        au, av = u in pos, v in pos
        if au and av:
            edges.append((pos[u], pos[v]))
            tables.append(
                np.array(
                    [
                        [t[cur[u], cur[v]], t[cur[u], alpha]],
                        [t[alpha, cur[v]], t[alpha, alpha]],
                    ]
                )
            )
        elif au:
            unary[pos[u], 0] += t[cur[u], cur[v]]
            unary[pos[u], 1] += t[alpha, cur[v]]
        elif av:
            unary[pos[v], 0] += t[cur[u], cur[v]]
            unary[pos[v], 1] += t[cur[u], alpha]
        else:
            constant += float(t[cur[u], cur[v]])

    sub = EnergyFunction(
        [2] * len(active),
        list(unary),
        edges,
        tables,
        validate=False,
    )
    return ExpansionSubproblem(sub, constant, tuple(active), cur.copy(), int(alpha))


def is_submodular(energy: EnergyFunction, tol: float | None = None) -> bool:
    """Whether every pairwise table of a binary energy is submodular.

    A binary table is submodular when t(0,0) + t(1,1) <= t(0,1) + t(1,0),
    checked within the global tolerance.
    """
    if not energy.is_binary():
        raise DomainError("submodularity is defined for binary energies only")
    tol = resolve_tol(tol)
    if energy.num_edges == 0:
        return True
    t = energy.stacked_pairwise()
    return bool(np.all(t[:, 0, 0] + t[:, 1, 1] <= t[:, 0, 1] + t[:, 1, 0] + tol))


# ---------------------------------------------------------------------------
# Instance interchange format (JSON, UTF-8)
# ---------------------------------------------------------------------------


def instance_to_dict(energy: EnergyFunction) -> dict:
    return {
        "nodes": energy.num_nodes,
        "labels": [int(c) for c in energy.label_counts],
        "unary": [u.tolist() for u in energy.unaries],
        "edges": [
            {"u": int(u), "v": int(v), "table": t.tolist()}
            for (u, v), t in zip(energy.edges, energy.pairwise)
        ],
    }


def instance_from_dict(data: Mapping) -> EnergyFunction:
    nodes = int(data["nodes"])
    labels = list(data["labels"])
    if len(labels) != nodes:
        raise ValueError("label count list does not match node count")
    edges = [(int(e["u"]), int(e["v"])) for e in data.get("edges", [])]
    tables = [np.asarray(e["table"], dtype=np.float64) for e in data.get("edges", [])]
    return EnergyFunction(labels, data["unary"], edges, tables)


def save_instance(energy: EnergyFunction, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(energy)), encoding="utf-8")


def load_instance(path: str | Path) -> EnergyFunction:
    return instance_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
