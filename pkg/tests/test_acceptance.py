"""End-to-end acceptance checks, one test per criterion.

Each test prints a PASS/FAIL line; the lines are repeated in the terminal
summary. The Abilene check is skipped (with a notice) unless the converted
measurements are present.
"""
import itertools
import os
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.optimize import linprog

from robustnet import cli
from robustnet.evaluation import UnmetDemandModel, evaluate, lambda_grid, metrics, scenario_unmet
from robustnet.lp import dualize_max, solve
from robustnet.network import abilene, build_path_set
from robustnet.robust import build_affine, build_discrete, optimal_cost, plan_affine, plan_discrete, plan_nominal
from robustnet.scenarios import load_scenarios, quantile_filter
from robustnet.synthetic import make_demands, make_network
from robustnet.uncertainty import DiscreteSet, HyperplaneConfig, Polyhedron, build_polyhedron, kmeans, lloyd

from conftest import D1, D2, triangle

RECORDS = []  # every EvalRecord produced here, for the metric-ordering check


@pytest.fixture(scope="module")
def six_node():
    net = make_network(6, 9, seed=1)
    paths = build_path_set(net)
    train = make_demands(net, 200, seed=2, tag="train")
    return net, paths, train


def test_criterion_01_triangle_discrete(criterion):
    with criterion(1, "triangle discrete model costs 3.5 and routes both scenarios") as note:
        t0 = time.perf_counter()
        net = triangle()
        paths = build_path_set(net)
        plan = plan_discrete(net, paths, DiscreteSet(np.vstack([D1, D2])), "simplex")
        model = UnmetDemandModel(net, paths, "simplex")
        unmet = [model(plan.x, d) for d in (D1, D2)]
        wall = time.perf_counter() - t0
        note(f"cost={plan.cost:.9f}, x={plan.x.round(6).tolist()}, unmet={unmet}, {wall:.3f}s")
        assert abs(plan.cost - 3.5) <= 1e-6
        # cut-condition bound: the three singleton cuts need 2+3+2, each edge crosses two cuts
        assert abs(plan.cost - (2 + 3 + 2) / 2) <= 1e-6
        assert max(unmet) <= 1e-9
        assert wall < 1.0


def test_criterion_02_zero_unmet_training(criterion, six_node):
    with criterion(2, "full-training discrete plan has zero unmet demand; no cheaper lambda < 1 does") as note:
        t0 = time.perf_counter()
        net, paths, train = six_node
        plan = plan_discrete(net, paths, DiscreteSet(train.demands), "highs")
        model = UnmetDemandModel(net, paths)
        at_one = scenario_unmet(model, plan.x, train)
        grid = lambda_grid()
        below = grid[grid < 1.0]
        records = evaluate(plan, [train], grid, net, paths)
        RECORDS.extend(records)
        worst_below = {r.lam: r.max for r in records if r.lam < 1.0}
        wall = time.perf_counter() - t0
        note(f"cost={plan.cost:.6g}, max unmet at 1: {at_one.max():.2e}, "
             f"min over lambda<1 of max unmet: {min(worst_below.values()):.4g}, {wall:.1f}s")
        assert at_one.max() <= 1e-6
        assert len(worst_below) == below.size == 20
        assert all(v > 1e-6 for v in worst_below.values())
        assert wall < 300


def test_criterion_03_conservativeness(criterion, six_node):
    with criterion(3, "affine over a covering polyhedron >= discrete; singleton affine = nominal") as note:
        net, paths, train = six_node
        poly = build_polyhedron(train, 5, HyperplaneConfig(seed=1))
        assert poly.contains_many(train.demands).all()
        affine, _ = plan_affine(net, paths, poly, "highs")
        discrete = plan_discrete(net, paths, DiscreteSet(train.demands), "highs")
        d = train.demands.mean(axis=0)
        single, _ = plan_affine(net, paths, Polyhedron.box(d, d), "highs")
        nominal = plan_nominal(net, paths, d, "highs")
        note(f"affine M={poly.M}: {affine.cost:.6g} >= discrete: {discrete.cost:.6g}; "
             f"singleton {single.cost:.9g} vs nominal {nominal.cost:.9g}")
        assert affine.cost >= discrete.cost - 1e-6 * (1 + discrete.cost)
        assert abs(single.cost - nominal.cost) <= 1e-6


def test_criterion_04_duality(criterion):
    with criterion(4, "dual bound equals primal max on 100 random polyhedra") as note:
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(100):
            kappa, M = int(rng.integers(1, 7)), int(rng.integers(0, 5))
            lower = rng.uniform(0, 2, kappa)
            upper = lower + rng.uniform(0.1, 3, kappa)
            inner = rng.uniform(lower, upper)
            V = rng.standard_normal((M, kappa))
            V /= np.linalg.norm(V, axis=1, keepdims=True)
            poly = Polyhedron(V, V @ inner + rng.uniform(0, 1, M), lower, upper, witness=inner)
            c = rng.standard_normal(kappa)
            res = linprog(-c, A_ub=V if M else None, b_ub=poly.b if M else None,
                          bounds=list(zip(lower, upper)), method="highs")
            primal = -res.fun
            dual = dualize_max(c, poly).minimize("simplex")
            worst = max(worst, abs(dual - primal) / max(1.0, abs(primal)))
        note(f"max relative gap {worst:.2e}")
        assert worst <= 1e-6


def test_criterion_05_monotonicity(criterion):
    with criterion(5, "unmet nonincreasing in lambda; affine cost down with rows; discrete cost up with scenarios") \
            as note:
        rng = np.random.default_rng(5)
        net = make_network(5, 7, seed=11)
        paths = build_path_set(net)
        data = make_demands(net, 80, seed=12).demands
        model = UnmetDemandModel(net, paths)
        grid = lambda_grid()
        for _ in range(20):
            x = rng.uniform(0, 60, net.n_edges)
            d = data[rng.integers(len(data))]
            vals = [model(lam * x, d) for lam in grid]
            assert all(b <= a + 1e-9 for a, b in zip(vals, vals[1:]))
        poly = build_polyhedron(data, 6, HyperplaneConfig(search_budget=2000, seed=3))
        aff = [plan_affine(net, paths, poly.prefix(m), "highs")[0].cost for m in range(poly.M + 1)]
        assert all(b <= a + 1e-6 * (1 + a) for a, b in zip(aff, aff[1:]))
        disc = [optimal_cost(build_discrete(net, paths, data[:k]), "highs") for k in range(1, 21)]
        assert all(b >= a - 1e-6 * (1 + a) for a, b in zip(disc, disc[1:]))
        note(f"affine costs {np.round(aff, 3).tolist()}; discrete K=1..20 from {disc[0]:.4g} to {disc[-1]:.4g}")


def _exhaustive_two_means(X):
    best = None
    for labels in itertools.product(range(2), repeat=len(X)):
        labels = np.array(labels)
        if len(set(labels)) < 2:
            continue
        C = np.array([X[labels == k].mean(axis=0) for k in range(2)])
        sse = ((X - C[labels]) ** 2).sum()
        if best is None or sse < best[0]:
            best = (sse, C)
    return best


def test_criterion_07_kmeans(criterion):
    with criterion(7, "k-means matches exhaustive oracle; SSE nonincreasing on 50 datasets") as note:
        X = np.array([[0.0, 0.0], [0.0, 2.0], [10.0, 10.0]])
        _, oracle = _exhaustive_two_means(X)
        got = kmeans(X, 2, seed=0).points
        assert sorted(map(tuple, got)) == sorted(map(tuple, oracle)) == [(0.0, 1.0), (10.0, 10.0)]
        iters = []
        for seed in range(50):
            rng = np.random.default_rng(1000 + seed)
            D = rng.gamma(2.0, 2.0, (int(rng.integers(20, 200)), int(rng.integers(2, 8))))
            _, _, hist = lloyd(D, int(rng.integers(2, 15)), seed)
            iters.append(len(hist))
            assert all(b <= a + 1e-9 * a for a, b in zip(hist, hist[1:]))
        note(f"Lloyd iterations per dataset: {min(iters)}..{max(iters)}")


def test_criterion_08_timing_ordering(criterion):
    with criterion(8, "discrete K=500 solves faster than affine M=5 (8 nodes, kappa=28)") as note:
        net = make_network(8, 12, seed=1)
        paths = build_path_set(net)
        assert paths.kappa == 28
        train = make_demands(net, 500, seed=2)
        disc = solve(build_discrete(net, paths, DiscreteSet(train.demands)), "highs")
        poly = build_polyhedron(train, 5, HyperplaneConfig(search_budget=2000, seed=1))
        assert poly.M == 5
        aff = solve(build_affine(net, paths, poly), "highs")
        note(f"discrete solve {disc.solve_time:.2f}s (obj {disc.objective:.6g}), "
             f"affine solve {aff.solve_time:.2f}s (obj {aff.objective:.6g})")
        assert disc.is_optimal and aff.is_optimal
        assert disc.solve_time < aff.solve_time


def _strip_timing(path: Path) -> bytes:
    """File bytes with wall-clock fields removed."""
    if path.suffix == ".json" and path.parent.name == "plans":
        import json
        data = json.loads(path.read_text())
        data.pop("build_s", None)
        data.pop("solve_s", None)
        return json.dumps(data, sort_keys=True).encode()
    if path.suffix == ".csv" and path.name in ("evaluation.csv", "timing.csv"):
        drop = {"wall_s", "build_s", "solve_s"}
        lines = path.read_text().splitlines()
        header = lines[0].split(",")
        keep = [i for i, h in enumerate(header) if h not in drop]
        return "\n".join(",".join(row.split(",")[i] for i in keep) for row in lines).encode()
    return path.read_bytes()


def _pipeline(tmp: Path, out: str):
    args = ["--network", str(tmp / "in" / "network.json"), "--train", str(tmp / "in" / "train.csv"),
            "--eval", f"month08={tmp / 'in' / 'eval.csv'}", "--out", str(tmp / out), "--K", "1,5",
            "--M", "0,2", "--search-budget", "500", "--seed", "42", "--lambda-step", "0.125",
            "--dump-scenarios", "--export-lp"]
    assert cli.main(["run", *args]) == 0
    return tmp / out


def test_criterion_09_determinism(criterion, tmp_path):
    with criterion(9, "two pipeline runs with one seed give byte-identical artifacts") as note:
        assert cli.main(["synth", "--nodes", "5", "--edges", "7", "--T", "120", "--seed", "8",
                         "--out", str(tmp_path / "in")]) == 0
        a, b = _pipeline(tmp_path, "run_a"), _pipeline(tmp_path, "run_b")
        files_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
        files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
        assert files_a == files_b
        differ = [str(f) for f in files_a if _strip_timing(a / f) != _strip_timing(b / f)]
        note(f"{len(files_a)} files compared, {len(differ)} differ")
        assert not differ, differ[:5]
        from robustnet.evaluation import read_records
        RECORDS.extend(read_records(a / "evaluation.csv"))


def test_criterion_06_metrics(criterion):
    # runs after criteria 2 and 9 (file order), so their records are included
    with criterion(6, "cvar75 of 1..20 is 18; avg <= cvar75 <= cvar95 <= max on every record") as note:
        m = metrics(range(1, 21))
        assert m["cvar75"] == 18
        bad = [r for r in RECORDS if not (r.avg <= r.cvar75 <= r.cvar95 <= r.max)]
        note(f"{len(RECORDS)} evaluation records checked")
        assert RECORDS and not bad


def _abilene_dir():
    env = os.environ.get("ROBUSTNET_ABILENE_DIR")
    root = Path(env) if env else Path(__file__).resolve().parents[1] / "data" / "abilene"
    return root if (root / "month07.csv").is_file() else None


def test_criterion_10_abilene(criterion, capsys):
    root = _abilene_dir()
    if root is None:
        line = ("[SKIP] criterion 10: Abilene measurements not found (data/abilene/month07.csv); "
                "see data/README.md for the download and conversion steps")
        from conftest import _emit
        _emit(capsys, line)
        pytest.skip(line)
    with criterion(10, "Abilene ingestion: 12 nodes, 15 edges, kappa 66, 8928 rows, 8750 after 98% cut") as note:
        net = abilene()
        month = load_scenarios(root / "month07.csv", net.kappa, "month07")
        kept = quantile_filter(month, 0.98)
        note(f"{month.T} rows, {kept.T} kept")
        assert (net.n_nodes, net.n_edges, net.kappa) == (12, 15, 66)
        assert month.T == 8928
        assert kept.T == 8750
