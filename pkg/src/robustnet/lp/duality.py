"""LP dual of ``max { c.d : V d <= b, lower <= d <= upper }``.

The objective vector ``c`` may itself be affine in decision variables of an
enclosing model, which is what robust counterparts need: the dual bound can
then be used in place of the inner maximisation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import GE, LinearProgram, LPValidationError, Status
from .backends import solve


@dataclass(frozen=True)
class DualBlock:
    """Dual variables, linking rows and bound for one inner maximisation.

    For each commodity ``l`` the linking row reads::

        sum_i V[i, l] * alpha_i + beta_up_l - beta_lo_l >= c_l (+ terms_l)

    and the bound is ``b.alpha + upper.beta_up - lower.beta_lo``. All dual
    variables are nonnegative. ``terms`` holds COO triplets
    ``(l, column, coef)`` of the enclosing model's variables that enter
    ``c_l``.
    """

    V: np.ndarray
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    c: np.ndarray
    terms: Optional[tuple] = None

    @property
    def kappa(self) -> int:
        return self.c.size

    @property
    def n_rows_poly(self) -> int:
        return self.b.size

    @property
    def n_new_vars(self) -> int:
        return self.n_rows_poly + 2 * self.kappa

    def bound_value(self, alpha, beta_up, beta_lo) -> float:
        return float(self.b @ alpha + self.upper @ beta_up - self.lower @ beta_lo)

    def attach(self, lp: LinearProgram, tag: str, symbols=("alpha", "betaU", "betaL")):
        """Declare the dual variables in ``lp`` and add the linking rows.

        Returns ``(bound_cols, bound_vals, var_indices)`` where the first two
        describe the bound expression over ``lp`` columns and ``var_indices``
        is a tuple ``(alpha, beta_up, beta_lo)`` of index arrays.
        """
        M, kappa = self.V.shape
        sep = "_" if tag else ""
        alpha = lp.add_vars(f"{symbols[0]}{sep}{tag}", M, lb=0.0) if M else np.zeros(0, dtype=np.int64)
        bu = lp.add_vars(f"{symbols[1]}{sep}{tag}", kappa, lb=0.0)
        bl = lp.add_vars(f"{symbols[2]}{sep}{tag}", kappa, lb=0.0)

        ii, ll = np.nonzero(self.V)
        rows = [ll, np.arange(kappa), np.arange(kappa)]
        cols = [alpha[ii], bu, bl]
        vals = [self.V[ii, ll], np.ones(kappa), -np.ones(kappa)]
        if self.terms is not None:
            t_rows, t_cols, t_vals = self.terms
            rows.append(np.asarray(t_rows, dtype=np.int64))
            cols.append(np.asarray(t_cols, dtype=np.int64))
            vals.append(-np.asarray(t_vals, dtype=float))
        lp.add_triplets(np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), kappa, GE, self.c,
                        prefix=f"link{sep}{tag}")

        bound_cols = np.concatenate([alpha, bu, bl])
        bound_vals = np.concatenate([self.b, self.upper, -self.lower])
        return bound_cols, bound_vals, (alpha, bu, bl)

    def minimize(self, backend: str = "auto") -> float:
        """Solve the standalone dual (only meaningful without ``terms``)."""
        if self.terms is not None:
            raise LPValidationError("standalone dual requires a constant objective vector")
        lp = LinearProgram("dual", "min")
        bcols, bvals, _ = self.attach(lp, "")
        lp.set_objective((bcols, bvals))
        sol = solve(lp, backend)
        if sol.status is not Status.OPTIMAL:
            raise LPValidationError(f"dual is {sol.status.value}; polyhedron may be empty")
        return sol.objective


def dualize_max(c, poly, terms=None) -> DualBlock:
    """Build the dual block for ``max { c.d : d in poly }``.

    ``poly`` needs ``V``, ``b``, ``lower`` and ``upper`` attributes. ``c`` is a
    vector of constants; ``terms`` optionally adds variable parts to it as
    ``(commodity, column, coef)`` triplets.
    """
    c = np.asarray(c, dtype=float).ravel()
    V = np.asarray(poly.V, dtype=float).reshape(-1, c.size) if np.size(poly.V) else np.zeros((0, c.size))
    lower = np.asarray(poly.lower, dtype=float)
    upper = np.asarray(poly.upper, dtype=float)
    if V.shape[1] != c.size or lower.shape != (c.size,) or upper.shape != (c.size,):
        raise LPValidationError(
            f"dimension mismatch: objective has {c.size} entries, polyhedron has "
            f"{V.shape[1]} columns and bounds of length {lower.size}/{upper.size}"
        )
    b = np.asarray(poly.b, dtype=float).ravel()
    if b.size != V.shape[0]:
        raise LPValidationError("polyhedron V and b disagree on the number of rows")
    return DualBlock(V, b, lower, upper, c, terms)
