"""Global strictness tolerance.

All strict comparisons on real energies ("the energy must strictly drop")
are implemented as ``value > tol`` with a single configurable cutoff. The
default is 1e-9 and can be overridden with the ``MRF_TOL`` environment
variable or per-call ``tol`` arguments.
"""

from __future__ import annotations

import os

DEFAULT_TOL = 1e-9

__all__ = ["DEFAULT_TOL", "global_tol", "resolve_tol"]


def global_tol() -> float:
    """Tolerance from the environment, falling back to the default."""
    raw = os.environ.get("MRF_TOL")
    if raw is None:
        return DEFAULT_TOL
    return float(raw)


def resolve_tol(tol: float | None) -> float:
    """Per-call tolerance override: an explicit value wins over the env."""
    return global_tol() if tol is None else float(tol)
