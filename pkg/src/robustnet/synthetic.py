"""Small synthetic networks and traffic series for tests and demos."""
from __future__ import annotations

import datetime as dt

import numpy as np

from .network import Network, generate_commodities
from .scenarios import ScenarioSet


def make_network(n_nodes: int, n_edges: int, seed: int = 0, cost_range=(1.0, 1.0)) -> Network:
    """A ring on ``n_nodes`` nodes plus random chords, ``n_edges`` edges in total.

    Existing capacity is zero; unit costs are drawn from ``cost_range``
    (rounded to two decimals).
    """
    if n_nodes < 2:
        raise ValueError("need at least two nodes")
    ring = [(i, (i + 1) % n_nodes) for i in range(n_nodes)] if n_nodes > 2 else [(0, 1)]
    max_edges = n_nodes * (n_nodes - 1) // 2
    if not len(ring) <= n_edges <= max_edges:
        raise ValueError(f"n_edges must lie in [{len(ring)}, {max_edges}]")
    rng = np.random.default_rng(seed)
    present = {tuple(sorted(e)) for e in ring}
    chords = [(i, j) for i in range(n_nodes) for j in range(i + 1, n_nodes) if (i, j) not in present]
    pick = rng.choice(len(chords), size=n_edges - len(present), replace=False) if n_edges > len(present) else []
    pairs = sorted(present | {chords[int(c)] for c in pick})
    costs = np.round(rng.uniform(cost_range[0], cost_range[1], size=len(pairs)), 2)
    edges = tuple((k, i, j, 0.0, float(c)) for k, ((i, j), c) in enumerate(zip(pairs, costs)))
    return Network(tuple(f"n{i}" for i in range(n_nodes)), edges)


def make_demands(network: Network, T: int, seed: int = 0, tag: str = "synthetic", scale: float = 10.0,
                 start: str = "2004-07-01T00:00") -> ScenarioSet:
    """Gravity-model demand with a daily cycle, lognormal noise and rare spikes.

    Rows are 5-minute measurements starting at ``start``.
    """
    rng = np.random.default_rng(seed)
    weight = rng.uniform(0.5, 2.0, size=network.n_nodes)
    comms = generate_commodities(network)
    base = np.array([weight[c.i] * weight[c.j] for c in comms]) * scale
    t = np.arange(T)
    cycle = 1.0 + 0.5 * np.sin(2 * np.pi * t / 288.0)
    D = base[None, :] * cycle[:, None] * rng.lognormal(0.0, 0.3, size=(T, len(comms)))
    spikes = rng.random((T, len(comms))) < 0.01
    D[spikes] *= 3.0
    t0 = dt.datetime.fromisoformat(start)
    stamps = tuple((t0 + dt.timedelta(minutes=5 * i)).strftime("%Y-%m-%dT%H:%M") for i in range(T))
    return ScenarioSet(np.round(D, 6), stamps, tag)
