"""Out-of-sample evaluation of capacity plans.

For a fixed expansion ``x`` and demand ``d`` the unmet demand is the optimum
of ``min sum_k h_k`` subject to ``h_k >= d_k - sum_p f_kp``, edge capacities
``u + x`` and ``f, h >= 0``.
"""
from __future__ import annotations

import csv
import dataclasses
import math
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp
from joblib import Parallel, delayed

from .lp import GE, LE, LinearProgram, SolverError, Status, solve
from .network import Network, PathSet
from .robust import CapacityPlan
from .scenarios import ScenarioSet

TAILS = (0.25, 0.05)
EVAL_COLUMNS = ["plan_id", "model", "param", "lambda", "dataset", "cost", "avg", "cvar75", "cvar95", "max",
                "n_scenarios", "wall_s"]


class UnmetDemandModel:
    """Evaluation LP for one network and path set, reused across scenarios.

    Only the right-hand side changes between calls, so the constraint matrix
    is built once.
    """

    def __init__(self, network: Network, paths: PathSet, backend: str = "auto"):
        if paths.kappa == 0 or np.any(paths.sizes() == 0):
            raise ValueError("every commodity needs at least one path for evaluation")
        self.network = network
        self.paths = paths
        self.backend = backend
        kappa, P, E = paths.kappa, paths.n_paths, network.n_edges
        lp = LinearProgram("unmet", "min")
        f = lp.add_vars("f", P)
        h = lp.add_vars("h", kappa)
        lp.set_objective((h, np.ones(kappa)))
        cover = sp.hstack([paths.commodity_incidence(), sp.identity(kappa)])
        lp.add_constraints(cover, np.concatenate([f, h]), GE, np.zeros(kappa), prefix="cover")
        lp.add_constraints(paths.edge_incidence(), f, LE, np.zeros(E), prefix="cap")
        lp.layout = {"f": f, "h": h}
        lp.compile()
        self.lp = lp

    def __call__(self, x, d) -> float:
        x = np.asarray(x, dtype=float)
        d = np.asarray(d, dtype=float)
        rhs = np.concatenate([d, self.network.capacities + x])
        sol = solve(self.lp.with_rhs(rhs), self.backend)
        if sol.status is not Status.OPTIMAL:
            raise SolverError(f"evaluation LP is {sol.status.value}")
        # the objective is a sum of nonnegative variables
        return max(0.0, sol.objective)


def unmet_demand(network: Network, paths: PathSet, x, d, backend: str = "auto") -> float:
    return UnmetDemandModel(network, paths, backend)(x, d)


def _tail_count(fraction: float, n: int) -> int:
    # exact ceil(fraction * n), immune to 0.05 * 100 = 5.000000000000001
    return max(1, math.ceil(Fraction(str(fraction)) * n))


def metrics(values: Iterable[float], tails: Sequence[float] = TAILS) -> dict:
    """Average, tail means (mean of the ceil(t*n) largest values) and maximum."""
    v = np.sort(np.asarray(list(values), dtype=float))[::-1]
    if v.size == 0:
        raise ValueError("metrics need at least one value")
    out = {"avg": float(v.mean())}
    for t in tails:
        out[f"cvar{round(100 * (1 - t))}"] = float(v[:_tail_count(t, v.size)].mean())
    out["max"] = float(v[0])
    return out


def scale_plan(plan: CapacityPlan, lam: float) -> CapacityPlan:
    if lam < 0:
        raise ValueError(f"scale factor must be nonnegative, got {lam}")
    return dataclasses.replace(plan, x=plan.x * lam, cost=plan.cost * lam, lam=plan.lam * lam)


def lambda_grid(start: float = 0.5, stop: float = 1.5, step: float = 1 / 40) -> np.ndarray:
    """Evenly spaced scale factors, both ends included (41 values by default)."""
    n = int(round((stop - start) / step)) + 1
    return np.array([start + i * step for i in range(n)])


@dataclass(frozen=True)
class EvalRecord:
    plan_id: str
    model: str
    param: str
    lam: float
    dataset: str
    cost: float
    avg: float
    cvar75: float
    cvar95: float
    max: float
    n_scenarios: int
    wall_s: float = 0.0

    def row(self) -> list:
        return [self.plan_id, self.model, self.param, repr(self.lam), self.dataset, repr(self.cost),
                repr(self.avg), repr(self.cvar75), repr(self.cvar95), repr(self.max), self.n_scenarios,
                f"{self.wall_s:.6f}"]


def _chunk_unmet(model: UnmetDemandModel, x, D, start: int):
    out = np.empty(D.shape[0])
    for i, d in enumerate(D):
        try:
            out[i] = model(x, d)
        except SolverError as exc:
            raise SolverError(f"scenario {start + i}: {exc}") from exc
    return out


def scenario_unmet(model: UnmetDemandModel, x, scenarios: ScenarioSet, n_jobs: int = 1,
                   chunk: int = 64) -> np.ndarray:
    """Unmet demand for every scenario, in scenario order."""
    D = scenarios.demands
    starts = range(0, D.shape[0], chunk)
    if n_jobs == 1:
        parts = [_chunk_unmet(model, x, D[s:s + chunk], s) for s in starts]
    else:
        parts = Parallel(n_jobs=n_jobs)(delayed(_chunk_unmet)(model, x, D[s:s + chunk], s) for s in starts)
    return np.concatenate(parts) if parts else np.zeros(0)


def evaluate(plan: CapacityPlan, datasets: Sequence[ScenarioSet], lam_grid, network: Network,
             paths: PathSet, backend: str = "auto", n_jobs: int = 1,
             dump_dir: Optional[Union[str, Path]] = None) -> list[EvalRecord]:
    """Evaluate ``plan`` scaled by every factor in ``lam_grid`` on every dataset.

    With ``dump_dir`` the per-scenario unmet demand is written to
    ``<dump_dir>/<plan_id>__<dataset>__lam<lambda>.csv``.
    """
    model = UnmetDemandModel(network, paths, backend)
    records = []
    for lam in lam_grid:
        scaled = scale_plan(plan, float(lam))
        for ds in datasets:
            if ds.kappa != paths.kappa:
                raise ValueError(f"dataset {ds.tag} has {ds.kappa} commodities, expected {paths.kappa}")
            t0 = time.perf_counter()
            values = scenario_unmet(model, scaled.x, ds, n_jobs)
            wall = time.perf_counter() - t0
            m = metrics(values)
            param = ";".join(f"{k}={v}" for k, v in sorted(plan.param.items()))
            records.append(EvalRecord(plan.plan_id, plan.model, param, float(lam), ds.tag, scaled.cost,
                                      m["avg"], m["cvar75"], m["cvar95"], m["max"], values.size, wall))
            if dump_dir is not None:
                write_scenario_dump(Path(dump_dir) / f"{plan.plan_id}__{ds.tag}__lam{float(lam):.6f}.csv",
                                    ds, values)
    return records


def write_scenario_dump(path: Path, scenarios: ScenarioSet, values: np.ndarray) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scenario", "timestamp", "unmet"])
        for i, (ts, v) in enumerate(zip(scenarios.timestamps, values)):
            w.writerow([i, ts, repr(float(v))])


def write_records(records: Sequence[EvalRecord], path: Union[str, Path], append: bool = True) -> None:
    path = Path(path)
    new = not path.exists() or not append
    with path.open("a" if append else "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new:
            w.writerow(EVAL_COLUMNS)
        for r in records:
            w.writerow(r.row())


def read_records(path: Union[str, Path]) -> list[EvalRecord]:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in EVAL_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"{path}: evaluation CSV is missing columns {missing}")
        return [EvalRecord(r["plan_id"], r["model"], r["param"], float(r["lambda"]), r["dataset"],
                           float(r["cost"]), float(r["avg"]), float(r["cvar75"]), float(r["cvar95"]),
                           float(r["max"]), int(r["n_scenarios"]), float(r["wall_s"])) for r in reader]
