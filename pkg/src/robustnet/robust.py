"""Nominal, discrete-scenario and affine-policy capacity expansion LPs.

Variable layout (fixed, so LP exports diff cleanly):

* nominal / discrete: ``x_e`` (one per edge), then ``f_i_p`` (scenario i,
  global path p).
* affine: ``x_e``, ``phi_p``, ``Phi_p_l``, then one dual block per inner
  problem in the order coverage (``alpha_k_i``, ``betaU_k_l``,
  ``betaL_k_l``), capacity (``pi_e_i``, ``rhoU_e_l``, ``rhoL_e_l``) and flow
  nonnegativity (``xi_p_i``, ``zetaU_p_l``, ``zetaL_p_l``).

Paths are numbered globally in commodity order (see :class:`PathSet`).
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp

from .lp import GE, INF, LE, LinearProgram, LpSolution, Status, dualize_max, solve
from .network import Network, PathSet
from .uncertainty import DiscreteSet, EmptyPolyhedronError, Polyhedron


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class CapacityPlan:
    """First-stage expansion ``x`` with its cost and provenance."""

    x: np.ndarray
    cost: float
    model: str
    param: dict = field(default_factory=dict)
    seed: Optional[int] = None
    build_s: float = 0.0
    solve_s: float = 0.0
    lam: float = 1.0

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        if np.any(x < 0):
            raise PlanError("capacity expansion must be nonnegative")
        object.__setattr__(self, "x", x)

    @property
    def plan_id(self) -> str:
        pid = self.model + "".join(f"_{k}{v}" for k, v in sorted(self.param.items()))
        return pid if self.lam == 1.0 else f"{pid}@{self.lam:g}"

    def to_dict(self) -> dict:
        return {"x": self.x.tolist(), "cost": self.cost, "model": self.model, "param": dict(self.param),
                "seed": self.seed, "lambda": self.lam, "build_s": self.build_s, "solve_s": self.solve_s}

    @classmethod
    def from_dict(cls, data: dict) -> "CapacityPlan":
        return cls(data["x"], float(data["cost"]), data["model"], dict(data.get("param", {})), data.get("seed"),
                   float(data.get("build_s", 0.0)), float(data.get("solve_s", 0.0)), float(data.get("lambda", 1.0)))

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "CapacityPlan":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _check_coverage(paths: PathSet, D: np.ndarray) -> None:
    sizes = paths.sizes()
    if D.shape[1] != paths.kappa:
        raise PlanError(f"demand has {D.shape[1]} commodities, path set has {paths.kappa}")
    missing = np.flatnonzero((sizes == 0) & np.any(D > 0, axis=0))
    if missing.size:
        c = paths.commodities[int(missing[0])]
        raise PlanError(f"commodity {c.id} {{{c.i},{c.j}}} has positive demand but no path")


def build_discrete(network: Network, paths: PathSet, scenarios) -> LinearProgram:
    """One flow block per scenario, all sharing the expansion ``x``.

    ``scenarios`` is a :class:`DiscreteSet` or a ``(K, kappa)`` array.
    """
    D = scenarios.points if isinstance(scenarios, DiscreteSet) else np.asarray(scenarios, dtype=float)
    D = np.atleast_2d(D)
    _check_coverage(paths, D)
    K = D.shape[0]
    E, P = network.n_edges, paths.n_paths

    lp = LinearProgram("discrete", "min")
    x = lp.add_vars("x", E)
    f = lp.add_vars("f", (K, P))
    lp.set_objective((x, network.costs))

    C = paths.commodity_incidence()
    B = paths.edge_incidence()
    eyeK = sp.identity(K, format="csr")
    lp.add_constraints(sp.kron(eyeK, C), f.ravel(), GE, D.ravel(), prefix="cover")
    cap = sp.hstack([sp.kron(eyeK, B), -sp.kron(np.ones((K, 1)), sp.identity(E))])
    lp.add_constraints(cap, np.concatenate([f.ravel(), x]), LE, np.tile(network.capacities, K), prefix="cap")
    lp.layout = {"x": x, "f": f}
    return lp


def build_nominal(network: Network, paths: PathSet, d) -> LinearProgram:
    lp = build_discrete(network, paths, np.asarray(d, dtype=float).reshape(1, -1))
    lp.name = "nominal"
    return lp


def _polyhedron_feasible(poly: Polyhedron) -> bool:
    if poly.is_nonempty():
        return True
    lp = LinearProgram("poly-feasibility")
    d = lp.add_vars("d", poly.kappa, lb=poly.lower, ub=poly.upper)
    if poly.M:
        lp.add_constraints(poly.V, d, LE, poly.b, prefix="row")
    return solve(lp).status is Status.OPTIMAL


def interacting_commodities(paths: PathSet) -> np.ndarray:
    """``kappa x kappa`` mask: some path of k shares an edge with some path of l."""
    U = (paths.commodity_incidence() @ paths.edge_incidence().T) > 0
    U = U.astype(float)
    return ((U @ U.T).toarray() > 0) | np.eye(paths.kappa, dtype=bool)


def build_affine(network: Network, paths: PathSet, poly: Polyhedron, sparsify: bool = False) -> LinearProgram:
    """Affine-policy robust counterpart over a polyhedral demand set.

    Flows are restricted to ``f_p(d) = phi_p + sum_l Phi_p_l d_l`` and every
    inner max/min over the polyhedron is replaced by its LP dual. With
    ``sparsify`` the slopes ``Phi_p_l`` are only created for commodities ``l``
    whose paths share an edge with the paths of p's commodity; the default
    keeps the full dense policy.
    """
    kappa, E, P = paths.kappa, network.n_edges, paths.n_paths
    if poly.kappa != kappa:
        raise PlanError(f"polyhedron has dimension {poly.kappa}, path set has {kappa} commodities")
    if not _polyhedron_feasible(poly):
        raise EmptyPolyhedronError("uncertainty polyhedron is empty")
    _check_coverage(paths, poly.upper[None, :])

    pc = paths.path_commodity()
    lp = LinearProgram("affine", "min")
    x = lp.add_vars("x", E)
    phi = lp.add_vars("phi", P, lb=-INF)
    if sparsify:
        mask = interacting_commodities(paths)[pc]
    else:
        mask = np.ones((P, kappa), dtype=bool)
    Phi = -np.ones((P, kappa), dtype=np.int64)
    pp, ll = np.nonzero(mask)
    Phi[pp, ll] = lp.add_var_list([f"Phi_{p}_{l}" for p, l in zip(pp, ll)], lb=-INF)
    lp.set_objective((x, network.costs))

    def phi_terms(path_ids, sign):
        sub = Phi[path_ids]
        rows, cols = np.nonzero(sub >= 0)
        # triplets (l, column, coef): l indexes the dual linking row
        return cols, sub[rows, cols], np.full(rows.size, float(sign))

    offsets = paths.offsets
    # demand coverage: sum_p phi_kp >= max_d sum_l (1[l=k] - sum_p Phi_kpl) d_l
    for k in range(kappa):
        pk = np.arange(offsets[k], offsets[k + 1])
        block = dualize_max(np.eye(kappa)[k], poly, phi_terms(pk, -1.0))
        bcols, bvals, _ = block.attach(lp, f"{k}", ("alpha", "betaU", "betaL"))
        lp.add_constraint((np.concatenate([phi[pk], bcols]), np.concatenate([np.ones(pk.size), -bvals])),
                          GE, 0.0, name=f"cover_{k}")

    # edge capacity: sum_{p∋e} phi_p + max_d sum_l (sum_{p∋e} Phi_pl) d_l <= u_e + x_e
    B = paths.edge_incidence().tocsr()
    caps = network.capacities
    for e in range(E):
        pe = B.indices[B.indptr[e]:B.indptr[e + 1]]
        block = dualize_max(np.zeros(kappa), poly, phi_terms(pe, 1.0))
        bcols, bvals, _ = block.attach(lp, f"{e}", ("pi", "rhoU", "rhoL"))
        lp.add_constraint((np.concatenate([phi[pe], bcols, [x[e]]]),
                           np.concatenate([np.ones(pe.size), bvals, [-1.0]])), LE, caps[e], name=f"cap_{e}")

    # flow nonnegativity: phi_p + min_d sum_l Phi_pl d_l >= 0, i.e. phi_p >= max_d sum_l (-Phi_pl) d_l
    for p in range(P):
        block = dualize_max(np.zeros(kappa), poly, phi_terms(np.array([p]), -1.0))
        bcols, bvals, _ = block.attach(lp, f"{p}", ("xi", "zetaU", "zetaL"))
        lp.add_constraint((np.concatenate([[phi[p]], bcols]), np.concatenate([[1.0], -bvals])),
                          GE, 0.0, name=f"nonneg_{p}")

    lp.layout = {"x": x, "phi": phi, "Phi": Phi}
    return lp


def discrete_var_count(network: Network, paths: PathSet, K: int) -> int:
    return network.n_edges + K * paths.n_paths


@dataclass(frozen=True)
class AffinePolicy:
    """Recourse rule ``f(d) = phi + Phi @ d`` over global paths."""

    phi: np.ndarray
    Phi: np.ndarray

    def flows(self, d) -> np.ndarray:
        return self.phi + self.Phi @ np.asarray(d, dtype=float)


def extract_policy(solution: LpSolution, lp: LinearProgram) -> AffinePolicy:
    if solution.status is not Status.OPTIMAL:
        raise PlanError(f"cannot extract a policy from a {solution.status.value} solution")
    idx = lp.layout["Phi"]
    Phi = np.where(idx >= 0, solution.values[np.maximum(idx, 0)], 0.0)
    return AffinePolicy(solution.take(lp.layout["phi"]), Phi)


def extract_first_stage(solution: LpSolution, network: Network, model: str = "", param=None,
                        seed: Optional[int] = None, build_s: float = 0.0) -> CapacityPlan:
    """Read the expansion vector ``x`` from a solved model."""
    if solution.status is not Status.OPTIMAL:
        raise PlanError(f"cannot extract a plan from a {solution.status.value} solution")
    x = np.array([solution.value(f"x_{e}") for e in range(network.n_edges)])
    if np.any(x < -1e-9):
        raise PlanError(f"solver returned negative expansion {x.min():.3e}")
    x = np.maximum(x, 0.0)
    cost = float(x @ network.costs)
    return CapacityPlan(x, cost, model, dict(param or {}), seed, build_s, solution.solve_time)


def plan_discrete(network: Network, paths: PathSet, scenarios: DiscreteSet, backend: str = "auto") -> CapacityPlan:
    t0 = time.perf_counter()
    lp = build_discrete(network, paths, scenarios)
    build_s = time.perf_counter() - t0
    sol = solve(lp, backend)
    return extract_first_stage(sol, network, "discrete", {"K": scenarios.K}, scenarios.seed, build_s)


def plan_affine(network: Network, paths: PathSet, poly: Polyhedron, backend: str = "auto",
                seed: Optional[int] = None, sparsify: bool = False):
    """Solve the affine model; returns ``(plan, policy)``."""
    t0 = time.perf_counter()
    lp = build_affine(network, paths, poly, sparsify)
    build_s = time.perf_counter() - t0
    sol = solve(lp, backend)
    plan = extract_first_stage(sol, network, "affine", {"M": poly.M}, seed, build_s)
    return plan, extract_policy(sol, lp)


def plan_nominal(network: Network, paths: PathSet, d, backend: str = "auto") -> CapacityPlan:
    t0 = time.perf_counter()
    lp = build_nominal(network, paths, d)
    build_s = time.perf_counter() - t0
    return extract_first_stage(solve(lp, backend), network, "nominal", {}, None, build_s)


def optimal_cost(lp: LinearProgram, backend: str = "auto") -> float:
    sol = solve(lp, backend)
    if sol.status is not Status.OPTIMAL:
        raise PlanError(f"{lp.name} model is {sol.status.value}")
    return sol.objective


__all__ = [
    "AffinePolicy", "CapacityPlan", "PlanError", "build_affine", "build_discrete", "build_nominal",
    "discrete_var_count", "extract_first_stage", "extract_policy", "interacting_commodities", "optimal_cost",
    "plan_affine", "plan_discrete", "plan_nominal",
]
