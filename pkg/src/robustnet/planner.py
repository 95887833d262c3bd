"""Estimator front end: fit an uncertainty set on demand data, solve the
matching robust model, and score the resulting plan on new scenarios."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, clone
from sklearn.utils.validation import check_is_fitted

from .evaluation import UnmetDemandModel
from .network import Network, build_path_set
from .robust import plan_affine, plan_discrete
from .uncertainty import DiscreteSet, HyperplanePolyhedron, KMeansScenarios, Polyhedron
from .validation import check_demands


class RobustCapacityPlanner(BaseEstimator):
    """Robust capacity expansion for ``network``.

    Parameters
    ----------
    network : Network
    uncertainty : None, KMeansScenarios, HyperplanePolyhedron, DiscreteSet or Polyhedron
        ``None`` protects against every training row. Estimators are cloned
        and fitted on ``X``; prebuilt sets are used as they are.
    max_paths : int, None or "auto"
        Per-commodity path limit passed to path enumeration.
    backend : str
        LP backend name.
    sparsify : bool
        Restrict affine slopes to interacting commodities.

    Attributes
    ----------
    plan_ : CapacityPlan
    paths_ : PathSet
    uncertainty_set_ : DiscreteSet or Polyhedron
    policy_ : AffinePolicy or None
    """

    def __init__(self, network: Network, uncertainty=None, max_paths="auto", backend: str = "auto",
                 sparsify: bool = False):
        self.network = network
        self.uncertainty = uncertainty
        self.max_paths = max_paths
        self.backend = backend
        self.sparsify = sparsify

    def fit(self, X=None, y=None):
        self.paths_ = build_path_set(self.network, max_paths=self.max_paths)
        kappa = self.paths_.kappa
        unc = self.uncertainty
        if isinstance(unc, (DiscreteSet, Polyhedron)):
            uset = unc
        else:
            X = check_demands(X, kappa)
            if unc is None:
                uset = DiscreteSet(X)
            elif isinstance(unc, KMeansScenarios):
                uset = clone(unc).fit(X).to_discrete_set()
            elif isinstance(unc, HyperplanePolyhedron):
                uset = clone(unc).fit(X).polyhedron_
            else:
                raise TypeError(f"unsupported uncertainty specification {type(unc).__name__}")
        self.uncertainty_set_ = uset
        if isinstance(uset, DiscreteSet):
            self.plan_ = plan_discrete(self.network, self.paths_, uset, self.backend)
            self.policy_ = None
        else:
            seed = getattr(unc, "random_state", None)
            self.plan_, self.policy_ = plan_affine(self.network, self.paths_, uset, self.backend, seed,
                                                   self.sparsify)
        self.n_features_in_ = kappa
        return self

    def predict(self, X, lam: float = 1.0) -> np.ndarray:
        """Unmet demand of the (optionally scaled) plan for every row of ``X``."""
        check_is_fitted(self, "plan_")
        X = check_demands(X, self.n_features_in_)
        model = UnmetDemandModel(self.network, self.paths_, self.backend)
        x = self.plan_.x * lam
        return np.array([model(x, d) for d in X])

    def score(self, X, y=None) -> float:
        """Negative mean unmet demand (higher is better)."""
        return -float(np.mean(self.predict(X)))
