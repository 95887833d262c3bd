"""Polyhedral uncertainty sets from sequential hyperplane placement.

Synthetic noise points are generated around the training data, then
hyperplanes ``v.d <= b`` are placed one at a time so that training points
stay inside and noise points fall outside. Cutting off a training point
costs ``w`` and keeping a noise point costs 1; ``w`` starts high (outer
description of the data) and decays geometrically for later hyperplanes.
"""
from __future__ import annotations

import dataclasses
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..validation import check_demands, check_seed, check_vector

logger = logging.getLogger(__name__)


class EmptyPolyhedronError(ValueError):
    pass


@dataclass(frozen=True)
class HyperplaneConfig:
    noise_count: Optional[int] = None  # None: one noise point per training row
    amplify_range: tuple = (1.5, 3.0)
    swap_prob: float = 0.02
    w1: float = 100.0
    gamma: float = 0.8
    w_min: float = 1.0
    search_budget: int = 20_000
    seed: int = 0

    def __post_init__(self):
        lo, hi = (float(a) for a in self.amplify_range)
        object.__setattr__(self, "amplify_range", (lo, hi))
        if not (1.0 < lo <= hi):
            raise ValueError(f"amplify_range must satisfy 1 < low <= high, got {self.amplify_range}")
        if not 0.0 <= self.swap_prob <= 1.0:
            raise ValueError("swap_prob must lie in [0, 1]")
        if not self.w1 >= self.w_min >= 0.0:
            raise ValueError("penalties must satisfy w1 >= w_min >= 0")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if self.noise_count is not None and self.noise_count < 0:
            raise ValueError("noise_count must be nonnegative")
        if self.search_budget < 1:
            raise ValueError("search_budget must be positive")

    def weight(self, m: int) -> float:
        """Penalty for hyperplane ``m`` (1-based)."""
        return max(self.w_min, self.w1 * self.gamma ** (m - 1))


@dataclass(frozen=True)
class Polyhedron:
    """``{d : V d <= b, lower <= d <= upper}`` with per-row placement metadata."""

    V: np.ndarray
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    weights: np.ndarray = field(default=None)
    scores: np.ndarray = field(default=None)
    violation: np.ndarray = field(default=None)  # fraction of training points cut by each row
    witness: Optional[np.ndarray] = None

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float).ravel()
        upper = np.asarray(self.upper, dtype=float).ravel()
        kappa = lower.size
        V = np.asarray(self.V, dtype=float).reshape(-1, kappa)
        b = np.asarray(self.b, dtype=float).ravel()
        M = V.shape[0]
        if upper.shape != lower.shape or b.size != M:
            raise ValueError("inconsistent polyhedron dimensions")
        if np.any(lower > upper):
            raise EmptyPolyhedronError("lower bound exceeds upper bound")
        if M:
            norms = np.linalg.norm(V, axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-9):
                raise ValueError("hyperplane normals must have unit Euclidean norm")
        for name, val in (("weights", self.weights), ("scores", self.scores), ("violation", self.violation)):
            arr = np.full(M, np.nan) if val is None else np.asarray(val, dtype=float).ravel()
            if arr.size != M:
                raise ValueError(f"{name} must have one entry per row")
            object.__setattr__(self, name, arr)
        witness = np.clip((lower + upper) / 2, lower, upper) if self.witness is None else \
            np.asarray(self.witness, dtype=float).ravel()
        for name, val in (("V", V), ("b", b), ("lower", lower), ("upper", upper), ("witness", witness)):
            object.__setattr__(self, name, val)

    @property
    def M(self) -> int:
        return self.b.size

    @property
    def kappa(self) -> int:
        return self.lower.size

    def contains(self, d, tol: float = 1e-9) -> bool:
        d = check_vector(d, self.kappa)
        if np.any(d < self.lower - tol) or np.any(d > self.upper + tol):
            return False
        return bool(np.all(self.V @ d <= self.b + tol))

    def contains_many(self, D, tol: float = 1e-9) -> np.ndarray:
        D = np.asarray(D, dtype=float).reshape(-1, self.kappa)
        ok = np.all(D >= self.lower - tol, axis=1) & np.all(D <= self.upper + tol, axis=1)
        if self.M:
            ok &= np.all(D @ self.V.T <= self.b + tol, axis=1)
        return ok

    def is_nonempty(self) -> bool:
        return self.contains(self.witness, tol=1e-9)

    def prefix(self, m: int) -> "Polyhedron":
        """The polyhedron made of the first ``m`` rows (bounds unchanged)."""
        if not 0 <= m <= self.M:
            raise ValueError(f"prefix length {m} outside 0..{self.M}")
        return Polyhedron(self.V[:m], self.b[:m], self.lower, self.upper, self.weights[:m],
                          self.scores[:m], self.violation[:m], self.witness)

    @classmethod
    def box(cls, lower, upper, witness=None) -> "Polyhedron":
        lower = np.asarray(lower, dtype=float)
        return cls(np.zeros((0, lower.size)), np.zeros(0), lower, upper, witness=witness)

    def to_dict(self) -> dict:
        def num(x):
            return None if not math.isfinite(x) else float(x)

        return {
            "kappa": self.kappa,
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
            "witness": self.witness.tolist(),
            "rows": [
                {"v": self.V[i].tolist(), "b": float(self.b[i]), "weight": num(self.weights[i]),
                 "score": num(self.scores[i]), "violation": num(self.violation[i])}
                for i in range(self.M)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Polyhedron":
        kappa = int(data["kappa"])
        rows = data.get("rows", [])

        def col(key):
            return [np.nan if r.get(key) is None else r[key] for r in rows]

        V = np.array([r["v"] for r in rows], dtype=float).reshape(-1, kappa)
        return cls(V, [r["b"] for r in rows], data["lower"], data["upper"], col("weight"), col("score"),
                   col("violation"), data.get("witness"))

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Polyhedron":
        return cls.from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------- noise points

def generate_noise(train, cfg: HyperplaneConfig) -> np.ndarray:
    """Synthetic points that should end up outside the uncertainty set.

    Each point starts from a uniformly drawn training row. Every coordinate
    is, with probability ``swap_prob``, overwritten by the same coordinate of
    another random training row; then one uniformly chosen coordinate is
    multiplied by a factor drawn from ``amplify_range``.
    """
    X = check_demands(train)
    T, kappa = X.shape
    n = T if cfg.noise_count is None else cfg.noise_count
    rng = np.random.default_rng(cfg.seed)
    src = rng.integers(T, size=n)
    pts = X[src].copy()
    swap = rng.random((n, kappa)) < cfg.swap_prob
    donors = rng.integers(T, size=(n, kappa))
    rr, cc = np.nonzero(swap)
    pts[rr, cc] = X[donors[rr, cc], cc]
    coord = rng.integers(kappa, size=n)
    factor = rng.uniform(cfg.amplify_range[0], cfg.amplify_range[1], size=n)
    pts[np.arange(n), coord] *= factor
    return pts


# ------------------------------------------------------------ hyperplane score

def score_hyperplane(v, b: float, train, noise, w: float) -> float:
    """``w * #(train with v.d > b) + #(noise with v.d <= b)``."""
    v = np.asarray(v, dtype=float)
    train = np.asarray(train, dtype=float).reshape(-1, v.size)
    noise = np.asarray(noise, dtype=float).reshape(-1, v.size)
    return float(w * np.count_nonzero(train @ v > b) + np.count_nonzero(noise @ v <= b))


def best_offset(proj_train: np.ndarray, proj_noise: np.ndarray, w: float, b_min: float = -math.inf):
    """Exact minimiser of the score over ``b`` for fixed projections.

    Returns ``(score, b)``. Among equally good offsets the largest is taken;
    offsets are placed midway between neighbouring projections. ``b`` is
    never below ``b_min``.
    """
    nt, nn = proj_train.size, proj_noise.size
    vals = np.concatenate([proj_train, proj_noise])
    is_train = np.concatenate([np.ones(nt), np.zeros(nn)])
    order = np.argsort(vals, kind="stable")
    sv = vals[order]
    st = is_train[order]
    cum_t = np.cumsum(st)
    cum_n = np.arange(1, sv.size + 1) - cum_t
    # candidate j keeps the first j+1 sorted points inside; only at group ends
    last = np.ones(sv.size, dtype=bool)
    last[:-1] = sv[:-1] < sv[1:]
    j = np.flatnonzero(last)
    scores = w * (nt - cum_t[j]) + cum_n[j]
    nxt = np.append(sv[1:], np.inf)[j]
    b = np.where(np.isfinite(nxt), 0.5 * (sv[j] + nxt), sv[j])
    # all points outside
    lo_b = sv[0] - max(1.0, abs(sv[0])) if sv.size else 0.0
    scores = np.concatenate([[w * nt], scores])
    b = np.concatenate([[lo_b], b])
    if math.isfinite(b_min):
        ok = b >= b_min
        inside = vals <= b_min
        floor_score = w * np.count_nonzero(~inside[:nt]) + np.count_nonzero(inside[nt:])
        scores = np.append(scores[ok], floor_score)
        b = np.append(b[ok], b_min)
    best = scores.min()
    pick = np.flatnonzero(scores == best)
    i = pick[np.argmax(b[pick])]
    return float(scores[i]), float(b[i])


def fit_hyperplane(train, active_noise, w: float, cfg: HyperplaneConfig, anchor=None):
    """Search unit directions for the hyperplane with the lowest score.

    The search evaluates the ``kappa`` positive axis directions first, then a
    few random positive directions, and spends the rest of
    ``cfg.search_budget`` on simulated annealing over the sphere. For every
    candidate direction the offset is optimised exactly by
    :func:`best_offset`. If ``anchor`` is given, ``b`` is kept at or above
    ``v.anchor`` so the anchor point stays feasible.

    Returns ``(v, b, score)``.
    """
    X = check_demands(train)
    N = np.asarray(active_noise, dtype=float).reshape(-1, X.shape[1])
    if N.shape[0] == 0:
        raise ValueError("active noise pool is empty")
    kappa = X.shape[1]
    rng = np.random.default_rng(cfg.seed)
    budget = cfg.search_budget
    used = 0

    def evaluate(v):
        nonlocal used
        used += 1
        v = v / np.linalg.norm(v)
        floor = -math.inf if anchor is None else float(anchor @ v)
        s, b = best_offset(X @ v, N @ v, w, floor)
        return s, b, v

    best = None
    current = None
    for k in range(min(kappa, budget)):
        e = np.zeros(kappa)
        e[k] = 1.0
        cand = evaluate(e)
        if best is None or cand[0] < best[0]:
            best = cand
    n_random = min(kappa, max(0, (budget - used) // 10))
    for _ in range(n_random):
        cand = evaluate(np.abs(rng.standard_normal(kappa)) + 1e-12)
        if cand[0] < best[0]:
            best = cand
    current = best

    steps = budget - used
    if steps > 0:
        t0 = max(1.0, 0.05 * current[0])
        t1 = 1e-3
        s0, s1 = 0.5, 0.005
        for i in range(steps):
            frac = i / max(1, steps - 1)
            temp = t0 * (t1 / t0) ** frac
            sigma = s0 * (s1 / s0) ** frac
            v_new = current[2] + sigma * rng.standard_normal(kappa)
            if not np.any(v_new):
                continue
            cand = evaluate(v_new)
            delta = cand[0] - current[0]
            if delta <= 0 or rng.random() < math.exp(-delta / temp):
                current = cand
                if cand[0] < best[0]:
                    best = cand
    score, b, v = best
    return v, b, score


def build_polyhedron(train, M: int, cfg: HyperplaneConfig = HyperplaneConfig()) -> Polyhedron:
    """Bounding box of the training data cut by ``M`` sequentially placed hyperplanes.

    Noise points outside the box, or cut off by an earlier hyperplane, are
    dropped from the pool the next hyperplane is fitted against. Placement
    stops early (with a warning) once no noise point is left inside.
    """
    if M < 0:
        raise ValueError("M must be nonnegative")
    X = check_demands(train)
    lower, upper = X.min(axis=0), X.max(axis=0)
    witness = np.clip(X.mean(axis=0), lower, upper)
    if M == 0:
        return Polyhedron.box(lower, upper, witness)

    noise = generate_noise(X, cfg)
    box = Polyhedron.box(lower, upper, witness)
    active = noise[box.contains_many(noise, tol=0.0)] if noise.size else noise
    seeds = np.random.SeedSequence(cfg.seed).generate_state(M)

    V, bs, ws, scores, viol = [], [], [], [], []
    for m in range(1, M + 1):
        if active.shape[0] == 0:
            logger.warning("noise pool exhausted after %d hyperplanes; stopping early", m - 1)
            break
        w = cfg.weight(m)
        v, b, score = fit_hyperplane(X, active, w, dataclasses.replace(cfg, seed=int(seeds[m - 1])),
                                     anchor=witness)
        V.append(v)
        bs.append(b)
        ws.append(w)
        scores.append(score)
        viol.append(float(np.mean(X @ v > b)))
        active = active[active @ v <= b]
    return Polyhedron(np.array(V).reshape(-1, X.shape[1]), bs, lower, upper, ws, scores, viol, witness)


class HyperplanePolyhedron(BaseEstimator):
    """Estimator wrapper around :func:`build_polyhedron`.

    ``predict`` returns a boolean membership mask; ``decision_function``
    returns the largest constraint slack violation (``<= 0`` means inside).
    """

    def __init__(self, n_hyperplanes: int = 5, noise_count=None, amplify_range=(1.5, 3.0),
                 swap_prob: float = 0.02, w1: float = 100.0, gamma: float = 0.8, w_min: float = 1.0,
                 search_budget: int = 20_000, random_state=None):
        self.n_hyperplanes = n_hyperplanes
        self.noise_count = noise_count
        self.amplify_range = amplify_range
        self.swap_prob = swap_prob
        self.w1 = w1
        self.gamma = gamma
        self.w_min = w_min
        self.search_budget = search_budget
        self.random_state = random_state

    def config(self) -> HyperplaneConfig:
        return HyperplaneConfig(self.noise_count, tuple(self.amplify_range), self.swap_prob, self.w1,
                                self.gamma, self.w_min, self.search_budget, check_seed(self.random_state))

    def fit(self, X, y=None):
        X = check_demands(X)
        self.polyhedron_ = build_polyhedron(X, self.n_hyperplanes, self.config())
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "polyhedron_")
        X = check_demands(X, self.n_features_in_)
        P = self.polyhedron_
        parts = [P.lower - X, X - P.upper]
        if P.M:
            parts.append(X @ P.V.T - P.b)
        return np.max(np.hstack(parts), axis=1)

    def predict(self, X):
        return self.decision_function(X) <= 1e-9
