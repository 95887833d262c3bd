"""Demand scenario time series: loading, writing and outlier filtering."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np


class ScenarioFormatError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioSet:
    """``T`` demand vectors (rows) over ``kappa`` commodities (columns)."""

    demands: np.ndarray
    timestamps: tuple
    tag: str = ""

    def __post_init__(self):
        d = np.array(self.demands, dtype=float, copy=True)
        if d.ndim != 2:
            raise ScenarioFormatError(f"demands must be 2-D, got shape {d.shape}")
        if d.shape[0] < 1:
            raise ScenarioFormatError("scenario set is empty")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise ScenarioFormatError("demands must be finite and nonnegative")
        d.setflags(write=False)
        object.__setattr__(self, "demands", d)
        ts = tuple(str(t) for t in self.timestamps) if self.timestamps is not None else ()
        if not ts:
            ts = tuple(str(i) for i in range(d.shape[0]))
        if len(ts) != d.shape[0]:
            raise ScenarioFormatError(f"{len(ts)} timestamps for {d.shape[0]} rows")
        object.__setattr__(self, "timestamps", ts)

    @property
    def T(self) -> int:
        return self.demands.shape[0]

    @property
    def kappa(self) -> int:
        return self.demands.shape[1]

    def totals(self) -> np.ndarray:
        return self.demands.sum(axis=1)

    def subset(self, mask_or_index, tag: Optional[str] = None) -> "ScenarioSet":
        idx = np.arange(self.T)[mask_or_index]
        return ScenarioSet(self.demands[idx], tuple(self.timestamps[i] for i in idx),
                           self.tag if tag is None else tag)

    def __len__(self):
        return self.T


def total_demand(d) -> float:
    return float(np.sum(d))


def load_scenarios(path: Union[str, Path], expected_kappa: Optional[int] = None,
                   tag: Optional[str] = None) -> ScenarioSet:
    """Read the wide CSV format ``timestamp,k0,...,k{kappa-1}``."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ScenarioFormatError(f"{path}: empty file") from None
        if not header or header[0].strip() != "timestamp":
            raise ScenarioFormatError(f"{path}: line 1: header must start with 'timestamp'")
        kappa = len(header) - 1
        if expected_kappa is not None and kappa != expected_kappa:
            raise ScenarioFormatError(
                f"{path}: line 1: dimension mismatch, {kappa} commodity columns but {expected_kappa} expected")
        stamps, rows = [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or (len(rec) == 1 and not rec[0].strip()):
                continue
            if len(rec) != kappa + 1:
                raise ScenarioFormatError(f"{path}: line {lineno}: expected {kappa + 1} fields, got {len(rec)}")
            try:
                vals = [float(v) for v in rec[1:]]
            except ValueError as exc:
                raise ScenarioFormatError(f"{path}: line {lineno}: {exc}") from None
            bad = next((c for c, v in enumerate(vals) if not (v >= 0 and np.isfinite(v))), None)
            if bad is not None:
                raise ScenarioFormatError(f"{path}: line {lineno}: column k{bad} is negative or not finite")
            stamps.append(rec[0])
            rows.append(vals)
    if not rows:
        raise ScenarioFormatError(f"{path}: no data rows")
    return ScenarioSet(np.array(rows, dtype=float), tuple(stamps), tag if tag is not None else path.stem)


def save_scenarios(scenarios: ScenarioSet, path: Union[str, Path]) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp"] + [f"k{k}" for k in range(scenarios.kappa)])
        for ts, row in zip(scenarios.timestamps, scenarios.demands):
            w.writerow([ts] + [repr(float(v)) for v in row])


def quantile_cutoff(totals, q: float) -> float:
    """``q``-quantile of ``totals`` with linear interpolation between order statistics."""
    if not 0 < q <= 1:
        raise ValueError(f"q must lie in (0, 1], got {q}")
    return float(np.quantile(np.asarray(totals, dtype=float), q, method="linear"))


def threshold_filter(scenarios: ScenarioSet, cutoff: float) -> ScenarioSet:
    """Keep scenarios whose total demand is ``<= cutoff``, preserving order."""
    return scenarios.subset(scenarios.totals() <= cutoff)


def quantile_filter(scenarios: ScenarioSet, q: float) -> ScenarioSet:
    """Keep scenarios whose total demand is at most the ``q``-quantile of totals.

    The cutoff is recomputed from the input, so a second pass with ``q < 1``
    generally removes further rows; reuse :func:`quantile_cutoff` with
    :func:`threshold_filter` to apply one fixed cutoff repeatedly.
    """
    return threshold_filter(scenarios, quantile_cutoff(scenarios.totals(), q))


def concat(sets: Sequence[ScenarioSet], tag: str) -> ScenarioSet:
    return ScenarioSet(np.vstack([s.demands for s in sets]),
                       tuple(t for s in sets for t in s.timestamps), tag)
