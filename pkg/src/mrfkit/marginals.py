"""Factorized approximations of the minimizer-neighborhood distribution.

Three ways to build per-node categorical marginals: uniform, a softmax of
the negated unaries, and beliefs from a few rounds of min-sum (max-product
in the log domain) loopy message passing. All of them are fully factorized
across nodes by construction.
"""

from __future__ import annotations

import numpy as np

from .energy import EnergyFunction

__all__ = [
    "MarginalSet",
    "uniform_marginals",
    "unary_marginals",
    "lbp_marginals",
    "marginals_for",
]


class MarginalSet:
    """Per-node probability vectors over each node's label set."""

    __slots__ = ("probs", "_matrix")

    def __init__(
        self,
        probs: list[np.ndarray],
        *,
        validate: bool = True,
        matrix: np.ndarray | None = None,
    ) -> None:
        self.probs = [np.asarray(p, dtype=np.float64) for p in probs]
        self._matrix = matrix
        if validate:
            for i, p in enumerate(self.probs):
                if p.ndim != 1 or p.size < 1:
                    raise ValueError(f"marginal of node {i} must be a non-empty vector")
                if np.any(p < 0):
                    raise ValueError(f"marginal of node {i} has negative entries")
                if abs(float(p.sum()) - 1.0) > 1e-9:
                    raise ValueError(f"marginal of node {i} does not sum to 1")

    def copy(self) -> "MarginalSet":
        return MarginalSet([p.copy() for p in self.probs], validate=False)

    def as_matrix(self) -> np.ndarray:
        """(N, L) view of the marginals; uniform label counts only."""
        if self._matrix is None:
            self._matrix = np.stack(self.probs)
        return self._matrix

    def __len__(self) -> int:
        return len(self.probs)


def _softmax_neg(costs: np.ndarray) -> np.ndarray:
    """exp(-costs), normalized, with max-subtraction for overflow safety."""
    shifted = -(costs - costs.min())
    w = np.exp(shifted)
    return w / w.sum()


def uniform_marginals(energy: EnergyFunction) -> MarginalSet:
    """Uniform distribution over each node's labels."""
    if energy.uniform_labels() and energy.num_nodes:
        L = energy.max_labels
        m = np.full((energy.num_nodes, L), 1.0 / L)
        return MarginalSet(list(m), validate=False, matrix=m)
    return MarginalSet(
        [np.full(int(c), 1.0 / int(c)) for c in energy.label_counts],
        validate=False,
    )


def unary_marginals(energy: EnergyFunction) -> MarginalSet:
    """Softmax of the negated unary costs, node by node."""
    if energy.uniform_labels() and energy.num_nodes:
        u = energy.stacked_unaries()
        w = np.exp(-(u - u.min(axis=1, keepdims=True)))
        w /= w.sum(axis=1, keepdims=True)
        return MarginalSet(list(w), validate=False, matrix=w)
    return MarginalSet([_softmax_neg(u) for u in energy.unaries], validate=False)


def lbp_marginals(
    energy: EnergyFunction, iterations: int, damping: float = 0.0
) -> MarginalSet:
    """Beliefs after synchronous min-sum message passing.

    Messages live in the negative-log domain, are normalized to minimum zero
    after every round, and may be damped towards the previous round. Zero
    iterations reproduce :func:`unary_marginals` exactly; convergence is not
    required or checked.
    """
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    if not 0.0 <= damping < 1.0:
        raise ValueError("damping must lie in [0, 1)")
    if iterations == 0 or energy.num_edges == 0:
        return unary_marginals(energy)

    # messages[(j, i)] is the message from j to i, a vector over labels of i
    messages: dict[tuple[int, int], np.ndarray] = {}
    for u, v in energy.edges:
        messages[(u, v)] = np.zeros(int(energy.label_counts[v]))
        messages[(v, u)] = np.zeros(int(energy.label_counts[u]))

    for _ in range(iterations):
        updated: dict[tuple[int, int], np.ndarray] = {}
        for j, i in messages:
            cost_j = energy.unaries[j].copy()
            for k in energy.neighbors(j):
                if k != i:
                    cost_j += messages[(k, j)]
            # min over z_j of theta_j(z_j) + theta_ij(z_i, z_j) + incoming
            t = energy.pair_table(i, j)
            m = (t + cost_j[None, :]).min(axis=1)
            m -= m.min()
            if damping > 0.0:
                m = (1.0 - damping) * m + damping * messages[(j, i)]
            updated[(j, i)] = m
        messages = updated

    beliefs = []
    for i in range(energy.num_nodes):
        b = energy.unaries[i].copy()
        for j in energy.neighbors(i):
            b += messages[(j, i)]
        beliefs.append(_softmax_neg(b))
    return MarginalSet(beliefs, validate=False)


def marginals_for(energy: EnergyFunction, mode: str) -> MarginalSet:
    """Build marginals from a mode string: uniform, unary, or lbp:K."""
    if mode == "uniform":
        return uniform_marginals(energy)
    if mode == "unary":
        return unary_marginals(energy)
    if mode.startswith("lbp:"):
        return lbp_marginals(energy, int(mode.split(":", 1)[1]))
    if mode == "lbp":
        return lbp_marginals(energy, 3)
    raise ValueError(f"unknown marginal mode {mode!r}")
