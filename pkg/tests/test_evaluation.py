import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from robustnet.evaluation import (
    EVAL_COLUMNS, EvalRecord, UnmetDemandModel, evaluate, lambda_grid, metrics, read_records, scale_plan,
    scenario_unmet, unmet_demand, write_records,
)
from robustnet.robust import CapacityPlan, plan_discrete
from robustnet.scenarios import ScenarioSet
from robustnet.uncertainty import DiscreteSet

from conftest import D1, D2


def test_metrics_examples():
    m = metrics(range(1, 21))
    assert m["cvar75"] == 18
    assert m["cvar95"] == 20 and m["max"] == 20 and m["avg"] == 10.5
    assert metrics([4.0] * 7) == {"avg": 4.0, "cvar75": 4.0, "cvar95": 4.0, "max": 4.0}
    assert metrics([2.5]) == {"avg": 2.5, "cvar75": 2.5, "cvar95": 2.5, "max": 2.5}
    # 0.05 * 100 must give a tail of exactly five values
    assert metrics(range(1, 101))["cvar95"] == np.mean(range(96, 101))
    with pytest.raises(ValueError):
        metrics([])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1e6, allow_nan=False), min_size=1, max_size=200))
def test_metric_ordering(values):
    m = metrics(values)
    tol = 1e-9 * (1 + m["max"])
    assert m["avg"] <= m["cvar75"] + tol <= m["cvar95"] + 2 * tol <= m["max"] + 3 * tol
    n = len(values)
    top = sorted(values, reverse=True)
    assert m["cvar75"] == pytest.approx(np.mean(top[:-(-n // 4)]))


def test_lambda_grid_and_scaling():
    g = lambda_grid()
    assert g.size == 41 and g[0] == 0.5 and g[-1] == 1.5
    assert np.allclose(np.diff(g), 1 / 40)
    plan = CapacityPlan(np.array([1.0, 2.0]), 5.0, "discrete", {"K": 3})
    same = scale_plan(plan, 1.0)
    assert np.array_equal(same.x, plan.x) and same.cost == plan.cost and same.plan_id == plan.plan_id
    half = scale_plan(plan, 0.5)
    assert np.array_equal(half.x, [0.5, 1.0]) and half.cost == 2.5 and half.lam == 0.5
    assert half.plan_id == "discrete_K3@0.5"
    with pytest.raises(ValueError):
        scale_plan(plan, -0.1)


def test_unmet_examples(tri):
    net, ps = tri
    assert unmet_demand(net, ps, np.zeros(3), D1) == pytest.approx(3.0)
    assert unmet_demand(net, ps, np.full(3, 1e6), D1) == 0
    # x in edge order {0,1}, {1,2}, {0,2}
    assert unmet_demand(net, ps, [1.5, 1.5, 0.5], D2) == pytest.approx(0.0, abs=1e-9)
    assert unmet_demand(net, ps, [1.5, 1.5, 0.5], D1, backend="highs") == pytest.approx(0.0, abs=1e-9)


def routable(net, ps, x, d):
    """Feasibility oracle: path flows f >= 0 with C f >= d and B f <= u + x."""
    C, B = ps.commodity_incidence().toarray(), ps.edge_incidence().toarray()
    res = linprog(np.zeros(ps.n_paths), A_ub=np.vstack([-C, B]), b_ub=np.r_[-d, net.capacities + x],
                  bounds=(0, None), method="highs")
    return res.status == 0


def test_unmet_zero_iff_nominal_feasible(small):
    net, ps, train = small
    rng = np.random.default_rng(0)
    model = UnmetDemandModel(net, ps, "highs")
    outcomes = set()
    for d in train.demands[:20]:
        x = rng.uniform(0, rng.uniform(30, 150), net.n_edges)
        feasible = routable(net, ps, x, d)
        assert (model(x, d) <= 1e-7) == feasible
        outcomes.add(feasible)
    assert outcomes == {True, False}


def test_monotone_in_lambda(small):
    net, ps, train = small
    rng = np.random.default_rng(1)
    model = UnmetDemandModel(net, ps, "highs")
    for _ in range(5):
        x = rng.uniform(0, 40, net.n_edges)
        d = train.demands[rng.integers(train.T)]
        vals = [model(lam * x, d) for lam in lambda_grid()]
        assert all(b <= a + 1e-7 for a, b in zip(vals, vals[1:]))


def test_evaluate_records_and_dumps(tmp_path, small):
    net, ps, train = small
    plan = plan_discrete(net, ps, DiscreteSet(train.demands), "highs")
    again = ScenarioSet(train.demands, train.timestamps, "copy")
    recs = evaluate(plan, [train, again], [1.0, 0.5], net, ps, "highs", dump_dir=tmp_path / "d")
    assert len(recs) == 4
    at1 = [r for r in recs if r.lam == 1.0]
    assert at1[0].max <= 1e-6
    assert (at1[0].avg, at1[0].max) == (at1[1].avg, at1[1].max)
    assert all(r.avg <= r.cvar75 <= r.cvar95 <= r.max for r in recs)
    dumps = sorted(p.name for p in (tmp_path / "d").iterdir())
    assert len(dumps) == 4 and dumps[0].startswith("discrete_K40__copy__lam0.5")
    assert evaluate(plan, [train], [], net, ps) == []


def test_parallel_matches_serial(small):
    net, ps, train = small
    model = UnmetDemandModel(net, ps, "highs")
    x = np.full(net.n_edges, 20.0)
    a = scenario_unmet(model, x, train, n_jobs=1, chunk=7)
    b = scenario_unmet(model, x, train, n_jobs=2, chunk=7)
    assert np.array_equal(a, b)


def test_records_csv(tmp_path):
    rec = EvalRecord("p", "discrete", "K=1", 1.0, "train", 3.0, 0.0, 0.0, 0.0, 0.0, 10, 0.1)
    path = tmp_path / "e.csv"
    write_records([rec], path)
    write_records([rec], path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(EVAL_COLUMNS) and len(lines) == 3
    assert read_records(path)[0] == rec
    path.write_text("plan_id,model\np,x\n")
    with pytest.raises(ValueError, match="missing columns"):
        read_records(path)


def test_dimension_mismatch(small):
    net, ps, train = small
    plan = CapacityPlan(np.zeros(net.n_edges), 0.0, "discrete", {"K": 1})
    bad = ScenarioSet(np.ones((2, 3)), None, "bad")
    with pytest.raises(ValueError, match="commodities"):
        evaluate(plan, [bad], [1.0], net, ps)
