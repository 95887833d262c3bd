"""Solver backends behind a single synchronous ``solve`` call."""
from __future__ import annotations

import logging
import time
from typing import Callable

import numpy as np
from scipy.optimize import linprog

from .model import CompiledLP, LinearProgram, LpSolution, SolverError, Status
from .simplex import solve_dense

logger = logging.getLogger(__name__)

FEAS_TOL = 1e-7
OPT_TOL = 1e-7

# below this many (rows x columns) cells the dense simplex is used by "auto"
AUTO_DENSE_LIMIT = 40_000

Backend = Callable[[CompiledLP], tuple]
_BACKENDS: dict[str, Backend] = {}


def register_backend(name: str, fn: Backend) -> None:
    """Make ``fn(compiled) -> (status, x, iterations)`` available as ``name``."""
    _BACKENDS[name] = fn


def available_backends() -> list[str]:
    return sorted(_BACKENDS) + ["auto"]


def _highs(lp: CompiledLP, method: str = "highs-ds"):
    A = lp.A
    le, ge, eq = lp.rel < 0, lp.rel > 0, lp.rel == 0
    A_ub = A_eq = b_ub = b_eq = None
    if le.any() or ge.any():
        ineq = le | ge
        sign = np.where(ge[ineq], -1.0, 1.0)
        A_ub = A[ineq].multiply(sign[:, None]).tocsr()
        b_ub = lp.rhs[ineq] * sign
    if eq.any():
        A_eq = A[eq]
        b_eq = lp.rhs[eq]
    bounds = np.column_stack([lp.lb, lp.ub]) if lp.c.size else None
    options = {"primal_feasibility_tolerance": FEAS_TOL, "dual_feasibility_tolerance": OPT_TOL}
    res = linprog(lp.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method=method,
                  options=options)
    if res.status in (2, 3):
        # presolve can report an unbounded model as infeasible; confirm without it
        res = linprog(lp.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method=method,
                      options={**options, "presolve": False})
    if res.status == 0:
        return Status.OPTIMAL, np.asarray(res.x, dtype=float), int(getattr(res, "nit", 0) or 0)
    if res.status == 2:
        return Status.INFEASIBLE, None, 0
    if res.status == 3:
        return Status.UNBOUNDED, None, 0
    raise SolverError(f"HiGHS failed with status {res.status}: {res.message}")


register_backend("simplex", solve_dense)
# dual simplex: deterministic, and the interior point code has reported
# infeasibility on feasible affine models
register_backend("highs", _highs)


def _pick(lp: LinearProgram, backend: str) -> str:
    if backend != "auto":
        return backend
    return "simplex" if max(lp.n_rows, 1) * max(lp.n_vars, 1) <= AUTO_DENSE_LIMIT else "highs"


def solve(lp: LinearProgram, backend: str = "auto") -> LpSolution:
    """Solve ``lp`` with the named backend.

    The returned solution is checked against the model: an "optimal" answer
    that violates a row by more than ``FEAS_TOL * (1 + |rhs|)`` raises
    :class:`SolverError` instead of being passed on.
    """
    name = _pick(lp, backend)
    try:
        fn = _BACKENDS[name]
    except KeyError:
        raise SolverError(f"unknown solver backend {name!r}; available: {available_backends()}") from None
    comp = lp.compile()
    if lp.n_vars == 0:
        infeasible = lp.max_violation(np.zeros(0)) > FEAS_TOL
        status = Status.INFEASIBLE if infeasible else Status.OPTIMAL
        values = None if infeasible else np.zeros(0)
        return LpSolution(status, None if infeasible else comp.obj_const, values, 0.0, name, 0, lp._index)

    t0 = time.perf_counter()
    status, x, iters = fn(comp)
    elapsed = time.perf_counter() - t0
    if status is not Status.OPTIMAL:
        return LpSolution(status, None, None, elapsed, name, iters, lp._index)
    viol = lp.max_violation(x)
    if not np.all(np.isfinite(x)) or viol > FEAS_TOL:
        raise SolverError(f"{name} returned a point violating the model by {viol:.3e}")
    return LpSolution(Status.OPTIMAL, lp.objective_value(x), x, elapsed, name, iters, lp._index)
