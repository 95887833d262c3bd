"""Robust network capacity expansion from demand data."""
from .evaluation import EvalRecord, evaluate, lambda_grid, metrics, scale_plan, unmet_demand
from .network import Commodity, Edge, Network, PathSet, abilene, build_path_set, generate_commodities, load_network
from .planner import RobustCapacityPlanner
from .robust import (
    AffinePolicy, CapacityPlan, build_affine, build_discrete, build_nominal, plan_affine, plan_discrete,
    plan_nominal,
)
from .scenarios import ScenarioSet, load_scenarios, quantile_filter, total_demand
from .uncertainty import (
    DiscreteSet, HyperplaneConfig, HyperplanePolyhedron, KMeansScenarios, Polyhedron, build_polyhedron, kmeans,
)

__version__ = "0.1.0"

__all__ = [
    "EvalRecord", "evaluate", "lambda_grid", "metrics", "scale_plan", "unmet_demand", "Commodity", "Edge",
    "Network", "PathSet", "abilene", "build_path_set", "generate_commodities", "load_network",
    "RobustCapacityPlanner", "AffinePolicy", "CapacityPlan", "build_affine", "build_discrete", "build_nominal",
    "plan_affine", "plan_discrete", "plan_nominal", "ScenarioSet", "load_scenarios", "quantile_filter",
    "total_demand", "DiscreteSet", "HyperplaneConfig", "HyperplanePolyhedron", "KMeansScenarios", "Polyhedron",
    "build_polyhedron", "kmeans",
]
