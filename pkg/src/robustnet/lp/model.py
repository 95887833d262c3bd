"""Backend-neutral linear program container.

Variables are addressed by dense integer index; every variable also carries a
unique name so that exports and solutions can be read back by name.
Constraints are stored in row blocks (COO triplets with global column
indices) so that builders can append thousands of rows with one numpy call.
"""
from __future__ import annotations

import copy
import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

INF = math.inf

LE, GE, EQ = "<=", ">=", "="
_REL_CODE = {LE: -1, GE: 1, EQ: 0}
_REL_ALIASES = {"<=": LE, "<": LE, "le": LE, ">=": GE, ">": GE, "ge": GE, "=": EQ, "==": EQ, "eq": EQ}

Terms = Union[Mapping[int, float], tuple]


class LPValidationError(ValueError):
    """Raised when a model references undeclared variables or is malformed."""


class SolverError(RuntimeError):
    """Raised when a backend fails numerically or returns an unusable answer."""


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


def _relation(rel: str) -> str:
    try:
        return _REL_ALIASES[rel]
    except KeyError:
        raise LPValidationError(f"unknown constraint relation {rel!r}") from None


@dataclass
class _RowBlock:
    rows: np.ndarray  # local row index of each nonzero
    cols: np.ndarray
    vals: np.ndarray
    rel: np.ndarray  # int codes, one per row
    rhs: np.ndarray
    names: list


@dataclass
class CompiledLP:
    """Array form of a model, as consumed by the solver backends.

    ``c`` is always the minimization objective; for ``max`` models it is the
    negated user objective and ``obj_sign`` is -1.
    """

    c: np.ndarray
    A: sp.csr_matrix
    rel: np.ndarray
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    obj_sign: float
    obj_const: float = 0.0


class LinearProgram:
    """A linear program ``min/max c.x`` over boxes and linear rows.

    Free variables are allowed (``lb=-inf``). Once handed to a solver the
    model should be treated as read-only; :meth:`with_rhs` gives cheap
    variants that share the constraint matrix.
    """

    def __init__(self, name: str = "lp", sense: str = "min"):
        if sense not in ("min", "max"):
            raise LPValidationError(f"objective sense must be 'min' or 'max', got {sense!r}")
        self.name = name
        self.sense = sense
        self._names: list[str] = []
        self._index: dict[str, int] = {}
        self._lb: list[np.ndarray] = []
        self._ub: list[np.ndarray] = []
        self._obj: dict[int, float] = {}
        self.obj_const = 0.0
        self._blocks: list[_RowBlock] = []
        self._n_rows = 0
        self._compiled: Optional[CompiledLP] = None
        self._rhs_override: Optional[np.ndarray] = None
        # named index arrays set by model builders (e.g. "x" -> first-stage columns)
        self.layout: dict[str, np.ndarray] = {}

    # ----------------------------------------------------------------- variables
    @property
    def n_vars(self) -> int:
        return len(self._names)

    @property
    def n_rows(self) -> int:
        return self._n_rows

    @property
    def var_names(self) -> list[str]:
        return self._names

    def var_index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise LPValidationError(f"unknown variable {name!r}") from None

    def _register(self, names: Sequence[str], lb, ub) -> np.ndarray:
        start = len(self._names)
        for offset, nm in enumerate(names):
            if nm in self._index:
                raise LPValidationError(f"duplicate variable name {nm!r}")
            self._index[nm] = start + offset
        self._names.extend(names)
        n = len(names)
        lb = np.broadcast_to(np.asarray(lb, dtype=float), (n,)).copy()
        ub = np.broadcast_to(np.asarray(ub, dtype=float), (n,)).copy()
        if np.any(np.isnan(lb)) or np.any(np.isnan(ub)) or np.any(lb > ub):
            raise LPValidationError("variable bounds must satisfy lb <= ub")
        if np.any(lb == INF) or np.any(ub == -INF):
            raise LPValidationError("lower bound +inf or upper bound -inf is not allowed")
        self._lb.append(lb)
        self._ub.append(ub)
        self._compiled = None
        return np.arange(start, start + n)

    def add_var(self, name: str, lb: float = 0.0, ub: float = INF, obj: float = 0.0) -> int:
        (idx,) = self._register([name], lb, ub)
        if obj:
            self._obj[int(idx)] = float(obj)
        return int(idx)

    def add_vars(self, prefix: str, shape, lb=0.0, ub=INF) -> np.ndarray:
        """Declare an array of variables named ``prefix_i_j...``.

        Returns an integer array of the given shape holding column indices.
        """
        shape = (shape,) if isinstance(shape, (int, np.integer)) else tuple(shape)
        names = [prefix + "".join(f"_{i}" for i in ix) for ix in np.ndindex(*shape)]
        idx = self._register(names, lb, ub)
        return idx.reshape(shape)

    def add_var_list(self, names: Sequence[str], lb=0.0, ub=INF) -> np.ndarray:
        return self._register(list(names), lb, ub)

    @property
    def lower(self) -> np.ndarray:
        return np.concatenate(self._lb) if self._lb else np.zeros(0)

    @property
    def upper(self) -> np.ndarray:
        return np.concatenate(self._ub) if self._ub else np.zeros(0)

    # ----------------------------------------------------------------- objective
    def set_objective(self, terms: Terms, sense: Optional[str] = None, constant: float = 0.0):
        if sense is not None:
            if sense not in ("min", "max"):
                raise LPValidationError(f"objective sense must be 'min' or 'max', got {sense!r}")
            self.sense = sense
        cols, vals = self._terms(terms)
        self._obj = {}
        for j, v in zip(cols.tolist(), vals.tolist()):
            self._obj[j] = self._obj.get(j, 0.0) + v
        self.obj_const = float(constant)
        self._compiled = None

    @property
    def objective(self) -> dict[int, float]:
        return dict(self._obj)

    # --------------------------------------------------------------- constraints
    def _terms(self, terms: Terms):
        if isinstance(terms, Mapping):
            cols = np.fromiter((int(k) for k in terms.keys()), dtype=np.int64, count=len(terms))
            vals = np.fromiter((float(v) for v in terms.values()), dtype=float, count=len(terms))
        else:
            cols, vals = terms
            cols = np.asarray(cols, dtype=np.int64).ravel()
            vals = np.broadcast_to(np.asarray(vals, dtype=float), cols.shape).ravel()
        if cols.size and (cols.min() < 0 or cols.max() >= self.n_vars):
            raise LPValidationError("constraint references an undeclared variable")
        return cols, vals

    def add_constraint(self, terms: Terms, relation: str, rhs: float, name: Optional[str] = None) -> int:
        cols, vals = self._terms(terms)
        row = self._n_rows
        self._append_block(
            np.zeros(cols.size, dtype=np.int64), cols, vals, 1, _relation(relation), [float(rhs)],
            [name if name is not None else f"c{row}"],
        )
        return row

    def add_constraints(self, matrix, cols, relation: str, rhs, prefix: str = "c") -> np.ndarray:
        """Append ``matrix @ x[cols] (relation) rhs`` row-wise.

        ``matrix`` may be dense or scipy-sparse with one column per entry of
        ``cols``. Returns the global indices of the new rows.
        """
        m = sp.coo_matrix(matrix)
        cols = np.asarray(cols, dtype=np.int64).ravel()
        if m.shape[1] != cols.size:
            raise LPValidationError("matrix column count does not match cols")
        nrows = m.shape[0]
        start = self._n_rows
        gcols = cols[m.col] if m.nnz else np.zeros(0, dtype=np.int64)
        if gcols.size and (gcols.min() < 0 or gcols.max() >= self.n_vars):
            raise LPValidationError("constraint references an undeclared variable")
        names = [f"{prefix}_{i}" for i in range(nrows)]
        self._append_block(m.row.astype(np.int64), gcols, m.data.astype(float), nrows,
                           _relation(relation), rhs, names)
        return np.arange(start, start + nrows)

    def add_triplets(self, rows, cols, vals, nrows: int, relation: str, rhs, prefix: str = "c") -> np.ndarray:
        """Append ``nrows`` rows given as COO triplets (local row, global col, value)."""
        cols = np.asarray(cols, dtype=np.int64)
        if cols.size and (cols.min() < 0 or cols.max() >= self.n_vars):
            raise LPValidationError("constraint references an undeclared variable")
        start = self._n_rows
        names = [f"{prefix}_{i}" for i in range(nrows)]
        self._append_block(np.asarray(rows, dtype=np.int64), cols, np.asarray(vals, dtype=float),
                           nrows, _relation(relation), rhs, names)
        return np.arange(start, start + nrows)

    def _append_block(self, rows, cols, vals, nrows, rel, rhs, names):
        rhs = np.broadcast_to(np.asarray(rhs, dtype=float), (nrows,)).copy()
        if not np.all(np.isfinite(rhs)):
            raise LPValidationError("constraint right-hand sides must be finite")
        self._blocks.append(_RowBlock(rows, cols, vals, np.full(nrows, _REL_CODE[rel]), rhs, names))
        self._n_rows += nrows
        self._compiled = None
        self._rhs_override = None

    @property
    def row_names(self) -> list[str]:
        out: list[str] = []
        for blk in self._blocks:
            out.extend(blk.names)
        return out

    def row(self, i: int) -> tuple[dict[int, float], str, float]:
        """Coefficient map, relation and rhs of global row ``i``."""
        comp = self.compile()
        start, end = comp.A.indptr[i], comp.A.indptr[i + 1]
        coefs = dict(zip(comp.A.indices[start:end].tolist(), comp.A.data[start:end].tolist()))
        rel = {-1: LE, 0: EQ, 1: GE}[int(comp.rel[i])]
        return coefs, rel, float(comp.rhs[i])

    # ------------------------------------------------------------------- compile
    def compile(self) -> CompiledLP:
        if self._compiled is None:
            n = self.n_vars
            if self._blocks:
                offsets = np.cumsum([0] + [len(b.rhs) for b in self._blocks[:-1]])
                rows = np.concatenate([b.rows + off for b, off in zip(self._blocks, offsets)])
                cols = np.concatenate([b.cols for b in self._blocks])
                vals = np.concatenate([b.vals for b in self._blocks])
                rel = np.concatenate([b.rel for b in self._blocks])
                rhs = np.concatenate([b.rhs for b in self._blocks])
            else:
                rows = cols = np.zeros(0, dtype=np.int64)
                vals = rhs = np.zeros(0)
                rel = np.zeros(0, dtype=int)
            A = sp.csr_matrix((vals, (rows, cols)), shape=(self._n_rows, n))
            A.sum_duplicates()
            A.eliminate_zeros()
            sign = -1.0 if self.sense == "max" else 1.0
            c = np.zeros(n)
            for j, v in self._obj.items():
                c[j] += sign * v
            self._compiled = CompiledLP(c, A, rel, rhs, self.lower, self.upper, sign, self.obj_const)
        if self._rhs_override is not None:
            return CompiledLP(**{**self._compiled.__dict__, "rhs": self._rhs_override})
        return self._compiled

    def with_rhs(self, rhs) -> "LinearProgram":
        """Shallow copy with a replaced right-hand-side vector."""
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape != (self._n_rows,):
            raise LPValidationError(f"rhs must have shape ({self._n_rows},), got {rhs.shape}")
        self.compile()
        clone = copy.copy(self)
        clone._rhs_override = rhs.copy()
        return clone

    # ------------------------------------------------------------------ checking
    def objective_value(self, x) -> float:
        comp = self.compile()
        return float(comp.obj_sign * (comp.c @ x)) + comp.obj_const

    def max_violation(self, x, scaled: bool = True) -> float:
        """Largest bound or row violation of ``x``.

        With ``scaled`` each row violation is divided by ``1 + |rhs|``.
        """
        comp = self.compile()
        x = np.asarray(x, dtype=float)
        viol = 0.0
        if x.size:
            viol = max(viol, float(np.max(comp.lb - x, initial=0.0)), float(np.max(x - comp.ub, initial=0.0)))
        if comp.A.shape[0]:
            ax = comp.A @ x
            d = np.zeros_like(ax)
            le, ge, eq = comp.rel < 0, comp.rel > 0, comp.rel == 0
            d[le] = ax[le] - comp.rhs[le]
            d[ge] = comp.rhs[ge] - ax[ge]
            d[eq] = np.abs(ax[eq] - comp.rhs[eq])
            if scaled:
                d = d / (1.0 + np.abs(comp.rhs))
            viol = max(viol, float(np.max(d, initial=0.0)))
        return viol

    def __repr__(self):
        return f"LinearProgram({self.name!r}, sense={self.sense!r}, vars={self.n_vars}, rows={self.n_rows})"


@dataclass
class LpSolution:
    status: Status
    objective: Optional[float] = None
    values: Optional[np.ndarray] = None
    solve_time: float = 0.0
    backend: str = ""
    iterations: int = 0
    var_index: Mapping[str, int] = field(default_factory=dict, repr=False)

    @property
    def is_optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    def value(self, name: str) -> float:
        if self.values is None:
            raise SolverError(f"no values available: status is {self.status.value}")
        try:
            return float(self.values[self.var_index[name]])
        except KeyError:
            raise LPValidationError(f"unknown variable {name!r}") from None

    def take(self, indices) -> np.ndarray:
        if self.values is None:
            raise SolverError(f"no values available: status is {self.status.value}")
        return self.values[np.asarray(indices)]


def linear_sum(pairs: Iterable[tuple[int, float]]) -> dict[int, float]:
    out: dict[int, float] = {}
    for j, v in pairs:
        out[j] = out.get(j, 0.0) + v
    return out
