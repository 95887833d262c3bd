"""Discrete uncertainty sets from K-means clustering of demand scenarios."""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ..scenarios import ScenarioSet
from ..validation import check_demands, check_seed

MAX_ITER = 300
_CHUNK = 2048


@dataclass(frozen=True)
class DiscreteSet:
    """``K`` representative demand vectors, one per row of ``points``."""

    points: np.ndarray
    seed: int = 0
    source: str = ""
    labels: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, ndmin=2)
        if pts.shape[0] < 1:
            raise ValueError("a discrete set needs at least one scenario")
        if np.any(pts < 0):
            raise ValueError("scenario entries must be nonnegative")
        object.__setattr__(self, "points", pts)

    @property
    def K(self) -> int:
        return self.points.shape[0]

    @property
    def kappa(self) -> int:
        return self.points.shape[1]

    def save(self, path: Union[str, Path]) -> None:
        with Path(path).open("w", newline="") as fh:
            fh.write(f"# K={self.K} seed={self.seed} source={self.source}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"k{k}" for k in range(self.kappa)])
            for row in self.points:
                w.writerow([repr(float(v)) for v in row])

    @classmethod
    def load(cls, path: Union[str, Path]) -> "DiscreteSet":
        path = Path(path)
        lines = path.read_text().splitlines()
        m = re.match(r"#\s*K=(\d+)\s+seed=(\d+)\s+source=(.*)$", lines[0]) if lines else None
        if m is None:
            raise ValueError(f"{path}: line 1: expected '# K=<int> seed=<int> source=<tag>'")
        rows = [[float(v) for v in rec] for rec in csv.reader(lines[2:]) if rec]
        ds = cls(np.array(rows), int(m.group(2)), m.group(3))
        if ds.K != int(m.group(1)):
            raise ValueError(f"{path}: header says K={m.group(1)} but {ds.K} rows follow")
        return ds


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    return cdist(X, C, "sqeuclidean")


def _assign(X: np.ndarray, C: np.ndarray):
    """Nearest centroid per row (lowest index on ties) and the squared distance."""
    labels = np.empty(X.shape[0], dtype=np.int64)
    mind = np.empty(X.shape[0])
    for s in range(0, X.shape[0], _CHUNK):
        D = _sq_dists(X[s:s + _CHUNK], C)
        labels[s:s + _CHUNK] = D.argmin(axis=1)
        mind[s:s + _CHUNK] = D[np.arange(D.shape[0]), labels[s:s + _CHUNK]]
    return labels, mind


def kmeans_plusplus(X: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    T = X.shape[0]
    chosen = [int(rng.integers(T))]
    d2 = _sq_dists(X, X[chosen[0]][None, :]).ravel()
    for _ in range(1, K):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(T, p=d2 / total))
        else:
            # every remaining point coincides with a centre already chosen
            free = np.setdiff1d(np.arange(T), chosen)
            nxt = int(rng.choice(free))
        chosen.append(nxt)
        d2 = np.minimum(d2, _sq_dists(X, X[nxt][None, :]).ravel())
    return X[chosen].copy()


def lloyd(X: np.ndarray, K: int, seed: int = 0, max_iter: int = MAX_ITER):
    """K-means++ seeding followed by Lloyd iterations.

    Returns ``(centroids, labels, sse_history)`` where ``sse_history[i]`` is
    the within-cluster sum of squares right after the ``i``-th assignment.
    Stops when an assignment repeats or after ``max_iter`` assignments.
    """
    T = X.shape[0]
    if K < 1:
        raise ValueError(f"K must be at least 1, got {K}")
    if K > T:
        raise ValueError(f"K={K} exceeds the number of training scenarios T={T}")
    rng = np.random.default_rng(seed)
    C = kmeans_plusplus(X, K, rng)
    labels = None
    history = []
    for _ in range(max_iter):
        new_labels, mind = _assign(X, C)
        history.append(float(mind.sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        C = _update(X, labels, mind, C)
    return C, labels, history


def _update(X, labels, mind, C):
    K = C.shape[0]
    counts = np.bincount(labels, minlength=K)
    sums = np.zeros_like(C)
    np.add.at(sums, labels, X)
    newC = C.copy()
    nz = counts > 0
    newC[nz] = sums[nz] / counts[nz, None]
    empty = np.flatnonzero(~nz)
    if empty.size:
        # re-seed each empty cluster at the point farthest from its centroid
        far = mind.copy()
        for k in empty:
            i = int(np.argmax(far))
            newC[k] = X[i]
            far[i] = -1.0
    return newC


def kmeans(train: Union[ScenarioSet, np.ndarray], K: int, seed: int = 0,
           max_iter: int = MAX_ITER) -> DiscreteSet:
    """Cluster the training scenarios into ``K`` centroids."""
    X = check_demands(train)
    C, labels, _ = lloyd(X, K, seed, max_iter)
    source = train.tag if isinstance(train, ScenarioSet) else ""
    # means of nonnegative data are nonnegative up to roundoff
    return DiscreteSet(np.maximum(C, 0.0), seed, source, labels)


class KMeansScenarios(TransformerMixin, BaseEstimator):
    """Scenario reducer: ``fit`` clusters demand rows, ``transform`` maps rows
    to squared distances from the centroids.

    Attributes
    ----------
    cluster_centers_ : ndarray of shape (n_clusters, kappa)
    labels_ : ndarray of shape (T,)
    inertia_ : float
    sse_history_ : list of float
    n_iter_ : int
    """

    def __init__(self, n_clusters: int = 100, max_iter: int = MAX_ITER, random_state=None):
        self.n_clusters = n_clusters
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_demands(X)
        seed = check_seed(self.random_state)
        C, labels, history = lloyd(X, self.n_clusters, seed, self.max_iter)
        self.cluster_centers_ = np.maximum(C, 0.0)
        self.labels_ = labels
        self.sse_history_ = history
        self.inertia_ = history[-1]
        self.n_iter_ = len(history)
        self.n_features_in_ = X.shape[1]
        self.seed_ = seed
        return self

    def predict(self, X):
        check_is_fitted(self, "cluster_centers_")
        X = check_demands(X, self.n_features_in_)
        return _assign(X, self.cluster_centers_)[0]

    def transform(self, X):
        check_is_fitted(self, "cluster_centers_")
        X = check_demands(X, self.n_features_in_)
        return _sq_dists(X, self.cluster_centers_)

    def to_discrete_set(self, source: str = "") -> DiscreteSet:
        check_is_fitted(self, "cluster_centers_")
        return DiscreteSet(self.cluster_centers_, self.seed_, source, self.labels_)
