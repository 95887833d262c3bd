"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Meant for small and medium models (unit tests, toy instances, per-scenario
evaluation LPs). Large robust models should go to the HiGHS backend.
"""
from __future__ import annotations

import numpy as np

from .model import CompiledLP, SolverError, Status

PIVOT_TOL = 1e-9
OPT_TOL = 1e-9
PHASE1_TOL = 1e-7


def _standard_form(lp: CompiledLP):
    """Rewrite the model as ``min c'y  s.t.  A'y (rel) b,  y >= 0``.

    Returns the new arrays together with the affine map ``x = offset + T y``.
    """
    n = lp.c.size
    lb, ub = lp.lb, lp.ub
    cols_T = []  # (original var, coefficient) for each y column
    offset = np.zeros(n)
    extra_rows = []  # (y column, upper bound) rows for doubly bounded vars
    for j in range(n):
        lo, hi = lb[j], ub[j]
        if np.isfinite(lo):
            offset[j] = lo
            cols_T.append((j, 1.0))
            if np.isfinite(hi):
                extra_rows.append((len(cols_T) - 1, hi - lo))
        elif np.isfinite(hi):
            offset[j] = hi
            cols_T.append((j, -1.0))
        else:
            cols_T.append((j, 1.0))
            cols_T.append((j, -1.0))
    ny = len(cols_T)
    T = np.zeros((n, ny))
    for col, (j, s) in enumerate(cols_T):
        T[j, col] = s

    A = lp.A.toarray() if lp.A.shape[0] else np.zeros((0, n))
    A_y = A @ T
    b = lp.rhs - A @ offset
    rel = lp.rel.copy()
    if extra_rows:
        E = np.zeros((len(extra_rows), ny))
        for r, (col, bound) in enumerate(extra_rows):
            E[r, col] = 1.0
        A_y = np.vstack([A_y, E])
        b = np.concatenate([b, [bound for _, bound in extra_rows]])
        rel = np.concatenate([rel, -np.ones(len(extra_rows), dtype=rel.dtype)])
    c_y = lp.c @ T
    const = float(lp.c @ offset)
    return c_y, A_y, b, rel, T, offset, const


def _pivot(tab: np.ndarray, r: int, e: int) -> None:
    tab[r] /= tab[r, e]
    col = tab[:, e].copy()
    col[r] = 0.0
    tab -= np.outer(col, tab[r])


def _iterate(tab, basis, allowed, max_iter, counter):
    """Run Bland-rule pivots on ``tab`` until optimal or unbounded.

    The last row of ``tab`` holds reduced costs and ``-objective``.
    """
    m = tab.shape[0] - 1
    while True:
        rc = tab[-1, :-1]
        cand = np.flatnonzero((rc < -OPT_TOL) & allowed)
        if cand.size == 0:
            return "optimal"
        e = int(cand[0])
        col = tab[:m, e]
        pos = np.flatnonzero(col > PIVOT_TOL)
        if pos.size == 0:
            return "unbounded"
        ratios = tab[pos, -1] / col[pos]
        best = ratios.min()
        ties = pos[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
        r = int(ties[np.argmin(basis[ties])])
        _pivot(tab, r, e)
        basis[r] = e
        counter[0] += 1
        if counter[0] > max_iter:
            raise SolverError(f"simplex exceeded {max_iter} pivots")


def solve_dense(lp: CompiledLP, max_iter: int | None = None):
    """Solve a compiled model; returns ``(status, x, iterations)``."""
    c, A, b, rel, T, offset, const = _standard_form(lp)
    m, ny = A.shape

    # slack/surplus columns
    n_slack = int(np.count_nonzero(rel != 0))
    S = np.zeros((m, n_slack))
    slack_of_row = -np.ones(m, dtype=int)
    k = 0
    for i in range(m):
        if rel[i] != 0:
            S[i, k] = 1.0 if rel[i] < 0 else -1.0
            slack_of_row[i] = ny + k
            k += 1
    M = np.hstack([A, S])
    neg = b < 0
    M[neg] *= -1.0
    b = np.where(neg, -b, b)

    # rows whose slack enters with +1 can start basic; others need artificials
    basis = -np.ones(m, dtype=int)
    for i in range(m):
        s = slack_of_row[i]
        if s >= 0 and M[i, s] > 0:
            basis[i] = s
    art_rows = np.flatnonzero(basis < 0)
    n_main = ny + n_slack
    n_art = art_rows.size
    tab = np.zeros((m + 1, n_main + n_art + 1))
    tab[:m, :n_main] = M
    tab[:m, -1] = b
    for a, i in enumerate(art_rows):
        tab[i, n_main + a] = 1.0
        basis[i] = n_main + a

    if max_iter is None:
        max_iter = 50 * (m + n_main) + 1000
    counter = [0]

    if n_art:
        tab[-1, :] = 0.0
        tab[-1, n_main:n_main + n_art] = 1.0
        for i in art_rows:
            tab[-1] -= tab[i]
        allowed = np.ones(n_main + n_art, dtype=bool)
        _iterate(tab, basis, allowed, max_iter, counter)
        if -tab[-1, -1] > PHASE1_TOL * max(1.0, float(np.abs(b).max(initial=0.0))):
            return Status.INFEASIBLE, None, counter[0]
        # drive remaining artificials out of the basis
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if basis[i] >= n_main:
                row = tab[i, :n_main]
                nz = np.flatnonzero(np.abs(row) > PIVOT_TOL)
                if nz.size:
                    _pivot(tab, i, int(nz[0]))
                    basis[i] = int(nz[0])
                else:
                    keep[i] = False
        tab = np.vstack([tab[:m][keep], tab[-1:]])
        basis = basis[keep]
        tab = np.delete(tab, np.s_[n_main:n_main + n_art], axis=1)
        m = tab.shape[0] - 1

    cost = np.concatenate([c, np.zeros(n_slack)])
    tab[-1, :-1] = cost - cost[basis] @ tab[:m, :-1]
    tab[-1, -1] = -(cost[basis] @ tab[:m, -1])
    allowed = np.ones(n_main, dtype=bool)
    outcome = _iterate(tab, basis, allowed, max_iter, counter)
    if outcome == "unbounded":
        return Status.UNBOUNDED, None, counter[0]

    y = np.zeros(n_main)
    y[basis] = tab[:m, -1]
    x = offset + T @ y[:ny]
    return Status.OPTIMAL, x, counter[0]
