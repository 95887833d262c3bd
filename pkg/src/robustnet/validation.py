"""Input checks shared by the estimators."""
from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.utils import check_array

from .scenarios import ScenarioSet


def check_demands(X, kappa: Optional[int] = None, min_samples: int = 1) -> np.ndarray:
    """Return ``X`` as a float ``(T, kappa)`` array of nonnegative demands.

    Accepts anything array-like or a :class:`ScenarioSet`.
    """
    if isinstance(X, ScenarioSet):
        X = X.demands
    X = check_array(X, dtype=np.float64, ensure_min_samples=min_samples, ensure_all_finite=True)
    if np.any(X < 0):
        raise ValueError("demand values must be nonnegative")
    if kappa is not None and X.shape[1] != kappa:
        raise ValueError(f"X has {X.shape[1]} commodity columns, expected {kappa}")
    return X


def check_vector(d, kappa: int, name: str = "d") -> np.ndarray:
    d = np.asarray(d, dtype=float).ravel()
    if d.shape != (kappa,):
        raise ValueError(f"{name} must have length {kappa}, got {d.size}")
    return d


def check_seed(random_state) -> int:
    """Reduce a ``random_state`` argument to a plain integer seed."""
    if random_state is None:
        return 0
    if isinstance(random_state, (int, np.integer)):
        if random_state < 0:
            raise ValueError("seed must be nonnegative")
        return int(random_state)
    raise TypeError("random_state must be None or a nonnegative int")
