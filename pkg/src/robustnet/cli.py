"""Command line driver.

Stages hand off through files under the output directory::

    prepare     train.csv, paths.json
    build-sets  sets/discrete_K<K>.csv, sets/poly_M<M>.json
    solve       plans/<plan_id>.json (and plans/<plan_id>.lp with --export-lp)
    evaluate    evaluation.csv, dumps/<plan_id>__<dataset>__lam<lambda>.csv
    report      report/frontier_<dataset>_<metric>.csv, report/timing.csv

Every option can also come from a TOML file passed with ``--config``; flags
given on the command line win. Exit codes: 0 success, 2 validation error,
3 solver error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .evaluation import evaluate, lambda_grid, read_records, write_records
from .lp import SolverError, write_lp
from .network import PathSet, build_path_set, load_network, save_network
from .robust import CapacityPlan, build_affine, build_discrete, plan_affine, plan_discrete
from .scenarios import ScenarioSet, load_scenarios, quantile_filter, save_scenarios
from .synthetic import make_demands, make_network
from .uncertainty import DiscreteSet, HyperplaneConfig, Polyhedron, build_polyhedron, kmeans

log = logging.getLogger("robustnet")

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER = 0, 2, 3

# per-stage seeds are master seed + fixed offset
SEED_OFFSETS = {"kmeans": 1, "polyhedron": 2}
METRICS = ("avg", "cvar75", "cvar95", "max")
TIMING_COLUMNS = ["plan_id", "model", "param", "set_size", "cost", "build_s", "solve_s"]


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    network: Optional[str] = None
    train: Optional[str] = None
    train_tag: str = "train"
    eval: list = field(default_factory=list)  # entries "path" or "tag=path"
    quantile: float = 0.98
    filter_eval: bool = False
    K: list = field(default_factory=list)
    M: list = field(default_factory=list)
    noise_count: Optional[int] = None
    swap_prob: float = 0.02
    w1: float = 100.0
    gamma: float = 0.8
    w_min: float = 1.0
    search_budget: int = 20_000
    lambda_start: float = 0.5
    lambda_stop: float = 1.5
    lambda_step: float = 1 / 40
    jobs: int = 1
    backend: str = "auto"
    seed: int = 0
    out: str = "run"
    max_paths: Optional[int] = None
    dump_scenarios: bool = False
    export_lp: bool = False

    def validate(self, need: Sequence[str] = ()) -> None:
        for key in need:
            value = getattr(self, key)
            if value is None:
                raise ConfigError(f"missing required setting '{key}'")
            if key in ("network", "train") and not Path(value).is_file():
                raise ConfigError(f"{key} file not found: {value}")
        if "eval" in need:
            for tag, path in self.eval_sets():
                if not Path(path).is_file():
                    raise ConfigError(f"evaluation file for '{tag}' not found: {path}")
        if not 0.0 < self.quantile <= 1.0:
            raise ConfigError("quantile must lie in (0, 1]")
        if any(int(k) < 1 for k in self.K):
            raise ConfigError("K entries must be >= 1")
        if any(int(m) < 0 for m in self.M):
            raise ConfigError("M entries must be >= 0")
        if not (0.0 <= self.lambda_start <= self.lambda_stop <= 10.0) or self.lambda_step <= 0:
            raise ConfigError("lambda grid must lie within [0, 10] with a positive step")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    def eval_sets(self) -> list[tuple[str, str]]:
        out = []
        for entry in self.eval:
            tag, sep, path = str(entry).partition("=")
            out.append((tag, path) if sep else (Path(entry).stem, str(entry)))
        return out

    def hyperplane_config(self) -> HyperplaneConfig:
        return HyperplaneConfig(noise_count=self.noise_count, swap_prob=self.swap_prob, w1=self.w1,
                                gamma=self.gamma, w_min=self.w_min, search_budget=self.search_budget,
                                seed=self.stage_seed("polyhedron"))

    def stage_seed(self, stage: str) -> int:
        return int(self.seed) + SEED_OFFSETS[stage]

    def lambdas(self) -> np.ndarray:
        return lambda_grid(self.lambda_start, self.lambda_stop, self.lambda_step)

    @property
    def path_limit(self):
        return "auto" if self.max_paths is None else int(self.max_paths)

    # output layout
    @property
    def out_dir(self) -> Path:
        return Path(self.out)

    @property
    def train_csv(self) -> Path:
        return self.out_dir / "train.csv"

    @property
    def paths_json(self) -> Path:
        return self.out_dir / "paths.json"

    @property
    def sets_dir(self) -> Path:
        return self.out_dir / "sets"

    @property
    def plans_dir(self) -> Path:
        return self.out_dir / "plans"

    @property
    def eval_csv(self) -> Path:
        return self.out_dir / "evaluation.csv"

    @property
    def dumps_dir(self) -> Path:
        return self.out_dir / "dumps"

    @property
    def report_dir(self) -> Path:
        return self.out_dir / "report"


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def load_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    data = {k.replace("-", "_"): v for k, v in data.items()}
    unknown = sorted(set(data) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"{path}: unknown settings {unknown}")
    return data


def make_config(args: argparse.Namespace) -> RunConfig:
    values = load_config(args.config) if getattr(args, "config", None) else {}
    for name in _FIELDS:
        v = getattr(args, name, None)
        if v is not None and v != []:
            values[name] = v
    if isinstance(values.get("eval"), str):
        values["eval"] = [values["eval"]]
    for key in ("K", "M"):
        if isinstance(values.get(key), int):
            values[key] = [values[key]]
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------- stages

def _load_inputs(cfg: RunConfig):
    network = load_network(cfg.network)
    return network, network.kappa


def _train_set(cfg: RunConfig) -> ScenarioSet:
    if not cfg.train_csv.is_file():
        raise ConfigError(f"{cfg.train_csv} not found; run 'prepare' first")
    return load_scenarios(cfg.train_csv, tag=cfg.train_tag)


def _paths(cfg: RunConfig) -> PathSet:
    if not cfg.paths_json.is_file():
        raise ConfigError(f"{cfg.paths_json} not found; run 'prepare' first")
    return PathSet.load(cfg.paths_json)


def cmd_prepare(cfg: RunConfig) -> int:
    cfg.validate(("network", "train", "eval"))
    network, kappa = _load_inputs(cfg)
    raw = load_scenarios(cfg.train, kappa, cfg.train_tag)
    for tag, path in cfg.eval_sets():
        load_scenarios(path, kappa, tag)
    train = raw if cfg.quantile == 1.0 else quantile_filter(raw, cfg.quantile)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    save_scenarios(train, cfg.train_csv)
    paths = build_path_set(network, max_paths=cfg.path_limit)
    paths.save(cfg.paths_json)
    log.info("prepare: kappa=%d, %d of %d training rows kept, %d paths", kappa, train.T, raw.T, paths.n_paths)
    return EXIT_OK


def cmd_build_sets(cfg: RunConfig) -> int:
    cfg.validate()
    train = _train_set(cfg)
    cfg.sets_dir.mkdir(parents=True, exist_ok=True)
    for K in sorted({int(k) for k in cfg.K}):
        if K > train.T:
            raise ConfigError(f"K={K} exceeds the {train.T} training scenarios")
        ds = kmeans(train, K, cfg.stage_seed("kmeans"))
        ds.save(cfg.sets_dir / f"discrete_K{K}.csv")
    if cfg.M:
        Ms = sorted({int(m) for m in cfg.M})
        full = build_polyhedron(train, Ms[-1], cfg.hyperplane_config())
        for M in Ms:
            if M > full.M:
                log.warning("only %d hyperplanes were placed; M=%d skipped", full.M, M)
                continue
            full.prefix(M).save(cfg.sets_dir / f"poly_M{M}.json")
    if not cfg.K and not cfg.M:
        log.warning("build-sets: empty K and M lists, nothing to do")
    return EXIT_OK


def _set_files(cfg: RunConfig) -> list[Path]:
    if not cfg.sets_dir.is_dir():
        return []
    found = list(cfg.sets_dir.glob("discrete_K*.csv")) + list(cfg.sets_dir.glob("poly_M*.json"))
    return sorted(found, key=lambda p: (p.suffix, int(p.stem.split("_")[1][1:])))


def _solve_one(path: Path, network, paths: PathSet, cfg: RunConfig):
    if path.suffix == ".csv":
        uset = DiscreteSet.load(path)
        plan = plan_discrete(network, paths, uset, cfg.backend)
        lp_builder = (build_discrete, uset)
    else:
        uset = Polyhedron.load(path)
        plan, _ = plan_affine(network, paths, uset, cfg.backend, cfg.stage_seed("polyhedron"))
        lp_builder = (build_affine, uset)
    plan.save(cfg.plans_dir / f"{plan.plan_id}.json")
    if cfg.export_lp:
        build, obj = lp_builder
        with open(cfg.plans_dir / f"{plan.plan_id}.lp", "w") as fh:
            write_lp(build(network, paths, obj), fh)
    return plan


def _solve_safe(path, network, paths, cfg):
    try:
        return path, _solve_one(path, network, paths, cfg), None
    except SolverError as exc:
        return path, None, str(exc)


def cmd_solve(cfg: RunConfig) -> int:
    cfg.validate(("network",))
    network, _ = _load_inputs(cfg)
    paths = _paths(cfg)
    files = _set_files(cfg)
    if not files:
        log.warning("solve: no uncertainty-set files under %s", cfg.sets_dir)
        return EXIT_OK
    cfg.plans_dir.mkdir(parents=True, exist_ok=True)
    if cfg.jobs == 1:
        results = [_solve_safe(p, network, paths, cfg) for p in files]
    else:
        results = Parallel(n_jobs=cfg.jobs)(delayed(_solve_safe)(p, network, paths, cfg) for p in files)
    failed = 0
    for path, plan, err in results:
        if err is not None:
            failed += 1
            log.error("solve %s failed: %s", path.name, err)
        else:
            log.info("solve %s: cost=%.6g build=%.3fs solve=%.3fs", plan.plan_id, plan.cost, plan.build_s,
                     plan.solve_s)
    return EXIT_SOLVER if failed else EXIT_OK


def _plan_files(cfg: RunConfig) -> list[Path]:
    return sorted(cfg.plans_dir.glob("*.json")) if cfg.plans_dir.is_dir() else []


def cmd_evaluate(cfg: RunConfig) -> int:
    cfg.validate(("network", "eval"))
    network, kappa = _load_inputs(cfg)
    paths = _paths(cfg)
    plans = _plan_files(cfg)
    if not plans:
        raise ConfigError(f"no plan files under {cfg.plans_dir}; run 'solve' first")
    datasets = [_train_set(cfg)]
    for tag, path in cfg.eval_sets():
        ds = load_scenarios(path, kappa, tag)
        datasets.append(quantile_filter(ds, cfg.quantile) if cfg.filter_eval else ds)
    dump = cfg.dumps_dir if cfg.dump_scenarios else None
    for path in plans:
        plan = CapacityPlan.load(path)
        records = evaluate(plan, datasets, cfg.lambdas(), network, paths, cfg.backend, cfg.jobs, dump)
        write_records(records, cfg.eval_csv)
        log.info("evaluate %s: %d records", plan.plan_id, len(records))
    return EXIT_OK


def frontier_rows(records, dataset: str, metric: str) -> list[list]:
    """Cost-vs-metric points of every plan on ``dataset``, grouped by series."""
    rows = [[r.model, r.param, r.plan_id, repr(r.lam), repr(r.cost), repr(getattr(r, metric))]
            for r in records if r.dataset == dataset]
    return sorted(rows, key=lambda row: (row[0], row[1], float(row[3])))


def cmd_report(cfg: RunConfig) -> int:
    cfg.validate()
    if not cfg.eval_csv.is_file():
        raise ConfigError(f"{cfg.eval_csv} not found; run 'evaluate' first")
    records = read_records(cfg.eval_csv)
    if not records:
        raise ConfigError(f"{cfg.eval_csv} holds no records")
    cfg.report_dir.mkdir(parents=True, exist_ok=True)
    for dataset in sorted({r.dataset for r in records}):
        for metric in METRICS:
            with open(cfg.report_dir / f"frontier_{dataset}_{metric}.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["model", "param", "plan_id", "lambda", "cost", metric])
                w.writerows(frontier_rows(records, dataset, metric))
    with open(cfg.report_dir / "timing.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TIMING_COLUMNS)
        for path in _plan_files(cfg):
            plan = CapacityPlan.load(path)
            size = next(iter(plan.param.values()), "")
            param = ";".join(f"{k}={v}" for k, v in sorted(plan.param.items()))
            w.writerow([plan.plan_id, plan.model, param, size, repr(plan.cost), f"{plan.build_s:.6f}",
                        f"{plan.solve_s:.6f}"])
    return EXIT_OK


def cmd_run(cfg: RunConfig) -> int:
    for stage in (cmd_prepare, cmd_build_sets, cmd_solve, cmd_evaluate, cmd_report):
        code = stage(cfg)
        if code != EXIT_OK:
            return code
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    """Write a synthetic network, training month and evaluation month."""
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    net = make_network(args.nodes, args.edges, args.seed)
    save_network(net, out / "network.json")
    save_scenarios(make_demands(net, args.T, args.seed + 1, "train"), out / "train.csv")
    save_scenarios(make_demands(net, args.T, args.seed + 2, "eval", start="2004-08-01T00:00"), out / "eval.csv")
    log.info("synth: %d nodes, %d edges, kappa=%d, T=%d", net.n_nodes, net.n_edges, net.kappa, args.T)
    return EXIT_OK


# ---------------------------------------------------------------- argparse

def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of integers, got {text!r}")


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML file with default settings")
    p.add_argument("--network", help="network JSON")
    p.add_argument("--train", help="training scenario CSV")
    p.add_argument("--train-tag", dest="train_tag")
    p.add_argument("--eval", action="append", default=[], help="evaluation CSV, optionally tag=path; repeatable")
    p.add_argument("--quantile", type=float, help="training cutoff quantile (default 0.98)")
    p.add_argument("--filter-eval", dest="filter_eval", action="store_const", const=True,
                   help="also apply the quantile cutoff to evaluation sets")
    p.add_argument("--K", type=_int_list, help="cluster counts, e.g. 1,5,10")
    p.add_argument("--M", type=_int_list, help="hyperplane counts, e.g. 0,5,10")
    p.add_argument("--noise-count", dest="noise_count", type=int)
    p.add_argument("--swap-prob", dest="swap_prob", type=float)
    p.add_argument("--w1", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--w-min", dest="w_min", type=float)
    p.add_argument("--search-budget", dest="search_budget", type=int)
    p.add_argument("--lambda-start", dest="lambda_start", type=float)
    p.add_argument("--lambda-stop", dest="lambda_stop", type=float)
    p.add_argument("--lambda-step", dest="lambda_step", type=float)
    p.add_argument("--jobs", type=int)
    p.add_argument("--backend")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--max-paths", dest="max_paths", type=int)
    p.add_argument("--dump-scenarios", dest="dump_scenarios", action="store_const", const=True)
    p.add_argument("--export-lp", dest="export_lp", action="store_const", const=True)


STAGES = {"prepare": cmd_prepare, "build-sets": cmd_build_sets, "solve": cmd_solve, "evaluate": cmd_evaluate,
          "report": cmd_report, "run": cmd_run}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robustnet", description="Robust network capacity planning")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in STAGES.items():
        p = sub.add_parser(name, help=(fn.__doc__ or "").strip().split("\n")[0] or None)
        _add_run_options(p)
    p = sub.add_parser("synth", help="write a synthetic network and demand series")
    p.add_argument("--nodes", type=int, default=6)
    p.add_argument("--edges", type=int, default=9)
    p.add_argument("--T", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="synthetic")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    t0 = time.perf_counter()
    try:
        if args.command == "synth":
            code = cmd_synth(args)
        else:
            code = STAGES[args.command](make_config(args))
    except SolverError as exc:
        print(f"error: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    log.info("%s finished in %.2fs", args.command, time.perf_counter() - t0)
    return code


if __name__ == "__main__":
    sys.exit(main())
