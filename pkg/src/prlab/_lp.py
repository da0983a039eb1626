"""Thin wrapper around ``scipy.optimize.linprog`` (HiGHS) for the small dense LPs used here."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog


@dataclass
class LPResult:
    feasible: bool
    x: np.ndarray | None
    objective: float | None
    message: str


def solve(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None, tol: float = 1e-9) -> LPResult:
    """Minimize ``c @ x``; infeasibility is reported, not raised."""
    options = {
        "primal_feasibility_tolerance": max(tol, 1e-10),
        "dual_feasibility_tolerance": max(tol, 1e-10),
    }
    res = linprog(
        np.asarray(c, dtype=float),
        A_ub=None if A_ub is None or len(A_ub) == 0 else np.asarray(A_ub, dtype=float),
        b_ub=None if b_ub is None or len(b_ub) == 0 else np.asarray(b_ub, dtype=float),
        A_eq=None if A_eq is None or len(A_eq) == 0 else np.asarray(A_eq, dtype=float),
        b_eq=None if b_eq is None or len(b_eq) == 0 else np.asarray(b_eq, dtype=float),
        bounds=bounds,
        method="highs",
        options=options,
    )
    if res.status == 0:
        return LPResult(True, np.asarray(res.x), float(res.fun), res.message)
    if res.status == 2:
        return LPResult(False, None, None, res.message)
    raise RuntimeError(f"LP solver failed: {res.message}")


def feasible(A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None, n: int | None = None, tol: float = 1e-9) -> LPResult:
    if n is None:
        n = (np.asarray(A_eq) if A_eq is not None and len(A_eq) else np.asarray(A_ub)).shape[1]
    return solve(np.zeros(n), A_ub, b_ub, A_eq, b_eq, bounds, tol)
