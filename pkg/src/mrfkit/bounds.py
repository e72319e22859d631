"""Optimality certificates derived from a pre-processing run.

Fixing variables can cost energy; the per-fix loss bounds accumulate into a
per-instance additive certificate, and the loss cap (epsilon gate) turns it
into worst-case additive or multiplicative statements for the downstream
solver's own guarantee.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .energy import EnergyFunction
from .errors import NoCertificateError, NoFactorError
from .preprocess import PreprocessResult
from .tolerance import resolve_tol

__all__ = [
    "BoundCertificate",
    "per_instance_additive",
    "worst_case_additive",
    "worst_case_multiplicative",
    "expansion_factor",
]


@dataclass(frozen=True)
class BoundCertificate:
    """One certified inequality relating the result to the global minimum.

    kinds:
      per-instance-additive:     E(result) <= E(opt) + bound_value
      worst-case-additive:       E(result) <= E(opt) + bound_value
      worst-case-multiplicative: E(result) <= factor * E(opt) + bound_value
    """

    kind: str
    bound_value: float
    additive_slack: float
    fixed_count: int
    solver_bound: float | None = None
    factor: float | None = None
    epsilon: float | None = None

    def statement(self) -> str:
        if self.kind == "worst-case-multiplicative":
            return f"E(result) <= {self.factor} * E(opt) + {self.bound_value}"
        return f"E(result) <= E(opt) + {self.bound_value}"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "bound_value": self.bound_value,
            "additive_slack": self.additive_slack,
            "fixed_count": self.fixed_count,
            "solver_bound": self.solver_bound,
            "factor": self.factor,
            "epsilon": self.epsilon,
            "statement": self.statement(),
        }


def per_instance_additive(result: PreprocessResult, solver_bound: float = 0.0) -> BoundCertificate:
    """Additive certificate from the measured loss bounds of this run.

    ``solver_bound`` is the additive guarantee of whatever solved the
    remaining variables (0 for an exact solver).
    """
    slack = result.loss_total
    return BoundCertificate(
        kind="per-instance-additive",
        bound_value=solver_bound + slack,
        additive_slack=slack,
        fixed_count=len(result.fixed),
        solver_bound=solver_bound,
    )


def worst_case_additive(result: PreprocessResult, solver_bound: float = 0.0) -> BoundCertificate:
    """Additive certificate independent of the measured losses.

    Requires the run to have used a finite loss gate: every fix then cost at
    most epsilon, giving ``solver_bound + |fixed| * epsilon``.
    """
    eps = result.config.epsilon
    if math.isinf(eps):
        raise NoCertificateError("run used an unbounded loss gate; no worst-case certificate")
    return BoundCertificate(
        kind="worst-case-additive",
        bound_value=solver_bound + len(result.fixed) * eps,
        additive_slack=result.loss_total,
        fixed_count=len(result.fixed),
        solver_bound=solver_bound,
        epsilon=eps,
    )


def worst_case_multiplicative(result: PreprocessResult, factor: float) -> BoundCertificate:
    """Multiplicative certificate for an expansion-style solver.

    For a solver with a ``factor``-multiplicative guarantee on the
    conditioned remainder, the composed labeling satisfies
    ``E(result) <= factor * E(opt) + |fixed| * epsilon`` (the loss term is
    not multiplied by the factor because cross edges act as unaries in the
    conditioned energy).
    """
    eps = result.config.epsilon
    if math.isinf(eps):
        raise NoCertificateError("run used an unbounded loss gate; no worst-case certificate")
    if factor < 1.0:
        raise ValueError("multiplicative factor must be >= 1")
    return BoundCertificate(
        kind="worst-case-multiplicative",
        bound_value=len(result.fixed) * eps,
        additive_slack=result.loss_total,
        fixed_count=len(result.fixed),
        factor=factor,
        epsilon=eps,
    )


def _is_metric(t: np.ndarray, tol: float) -> bool:
    if t.shape[0] != t.shape[1]:
        return False
    L = t.shape[0]
    if np.any(np.abs(np.diag(t)) > tol):
        return False
    if np.any(np.abs(t - t.T) > tol):
        return False
    off = t[~np.eye(L, dtype=bool)]
    if off.size and np.any(off <= tol):
        return False
    for c in range(L):
        if np.any(t > t[:, c][:, None] + t[c, :][None, :] + tol):
            return False
    return True


def expansion_factor(energy: EnergyFunction, tol: float | None = None) -> float:
    """Worst-case multiplicative factor of expansion moves on this energy.

    Defined for metric pairwise tables with strictly positive off-diagonal
    costs: twice the largest off-diagonal spread over all edges (2 for a
    uniform Potts model).
    """
    tol = resolve_tol(tol)
    if energy.num_edges == 0:
        return 1.0
    worst = 0.0
    for (u, v), t in zip(energy.edges, energy.pairwise):
        if not _is_metric(t, tol):
            raise NoFactorError(f"pairwise table of edge ({u},{v}) is not a metric")
        off = t[~np.eye(t.shape[0], dtype=bool)]
        worst = max(worst, float(off.max()) / float(off.min()))
    return 2.0 * worst
