"""Undirected capacitated networks, commodities and simple-path sets."""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp


class NetworkValidationError(ValueError):
    pass


class NoPathError(ValueError):
    pass


class Edge(NamedTuple):
    id: int
    u: int
    v: int
    capacity: float = 0.0
    cost: float = 1.0


class Commodity(NamedTuple):
    id: int
    i: int
    j: int


@dataclass(frozen=True)
class Network:
    """Undirected graph with existing capacity ``u_e`` and unit cost ``c_e`` per edge.

    Nodes are ``0..n-1``; ``node_names`` are display labels only.
    """

    node_names: tuple
    edges: tuple

    def __post_init__(self):
        object.__setattr__(self, "node_names", tuple(str(n) for n in self.node_names))
        edges = tuple(Edge(int(e[0]), *sorted((int(e[1]), int(e[2]))), float(e[3]), float(e[4]))
                      for e in self.edges)
        object.__setattr__(self, "edges", edges)
        self.validate()

    def validate(self) -> None:
        n = len(self.node_names)
        if n == 0:
            raise NetworkValidationError("network has no nodes")
        seen = set()
        for pos, e in enumerate(self.edges):
            if e.id != pos:
                raise NetworkValidationError(f"edge ids must be dense 0..|E|-1; edge at position {pos} has id {e.id}")
            if e.u == e.v:
                raise NetworkValidationError(f"edge {e.id} is a self-loop on node {e.u}")
            if not (0 <= e.u < n and 0 <= e.v < n):
                raise NetworkValidationError(f"edge {e.id} endpoint out of range 0..{n - 1}")
            if (e.u, e.v) in seen:
                raise NetworkValidationError(f"duplicate edge {{{e.u},{e.v}}} (edge {e.id})")
            if not (e.capacity >= 0 and np.isfinite(e.capacity)):
                raise NetworkValidationError(f"edge {e.id} capacity must be finite and >= 0")
            if not (e.cost >= 0 and np.isfinite(e.cost)):
                raise NetworkValidationError(f"edge {e.id} cost must be finite and >= 0")
            seen.add((e.u, e.v))

    @property
    def n_nodes(self) -> int:
        return len(self.node_names)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def capacities(self) -> np.ndarray:
        return np.array([e.capacity for e in self.edges], dtype=float)

    @property
    def costs(self) -> np.ndarray:
        return np.array([e.cost for e in self.edges], dtype=float)

    @property
    def kappa(self) -> int:
        return self.n_nodes * (self.n_nodes - 1) // 2

    def with_capacities(self, capacities) -> "Network":
        caps = np.broadcast_to(np.asarray(capacities, dtype=float), (self.n_edges,))
        return Network(self.node_names, tuple(e._replace(capacity=float(c)) for e, c in zip(self.edges, caps)))

    def adjacency(self) -> list[list[tuple[int, int]]]:
        """Per node, ``(neighbour, edge id)`` pairs sorted by edge id."""
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.n_nodes)]
        for e in self.edges:
            adj[e.u].append((e.v, e.id))
            adj[e.v].append((e.u, e.id))
        for lst in adj:
            lst.sort(key=lambda t: t[1])
        return adj

    def to_dict(self) -> dict:
        return {
            "nodes": [{"id": i, "name": nm} for i, nm in enumerate(self.node_names)],
            "edges": [{"id": e.id, "u": e.u, "v": e.v, "capacity": e.capacity, "cost": e.cost}
                      for e in self.edges],
        }


def network_from_dict(data: dict, source: str = "<dict>") -> Network:
    try:
        nodes = data["nodes"]
        edges = data["edges"]
    except (KeyError, TypeError) as exc:
        raise NetworkValidationError(f"{source}: missing top-level field {exc}") from None
    names = []
    for pos, node in enumerate(nodes):
        try:
            nid = int(node["id"])
        except (KeyError, TypeError, ValueError):
            raise NetworkValidationError(f"{source}: nodes[{pos}] needs an integer 'id'") from None
        if nid != pos:
            raise NetworkValidationError(f"{source}: node ids must be dense 0..n-1; nodes[{pos}] has id {nid}")
        names.append(str(node.get("name", nid)))
    parsed = []
    for pos, edge in enumerate(edges):
        try:
            parsed.append((int(edge["id"]), int(edge["u"]), int(edge["v"]),
                           float(edge.get("capacity", 0.0)), float(edge.get("cost", 1.0))))
        except (KeyError, TypeError, ValueError) as exc:
            raise NetworkValidationError(f"{source}: edges[{pos}] field error: {exc}") from None
    return Network(tuple(names), tuple(parsed))


def load_network(path: Union[str, Path]) -> Network:
    """Read a network from the JSON format documented in the README."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise NetworkValidationError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return network_from_dict(data, str(path))


def save_network(network: Network, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(network.to_dict(), indent=1) + "\n")


def abilene() -> Network:
    """The 12-node, 15-edge Abilene backbone shipped with the package."""
    return load_network(Path(__file__).with_name("data") / "abilene.json")


def generate_commodities(network: Network) -> list[Commodity]:
    n = network.n_nodes
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    return [Commodity(k, i, j) for k, (i, j) in enumerate(pairs)]


def _hops_to(adj, target: int) -> np.ndarray:
    dist = np.full(len(adj), np.iinfo(np.int64).max, dtype=np.int64)
    dist[target] = 0
    queue = deque([target])
    while queue:
        a = queue.popleft()
        for b, _ in adj[a]:
            if dist[b] > dist[a] + 1:
                dist[b] = dist[a] + 1
                queue.append(b)
    return dist


def enumerate_paths(network: Network, commodity: Commodity, max_paths: Optional[int] = None,
                    adjacency=None) -> list[tuple[int, ...]]:
    """Simple paths between the commodity endpoints as edge-id tuples.

    Paths come in nondecreasing hop count; paths of equal length are ordered
    by their edge-id sequence. ``max_paths=None`` means no limit.
    """
    if max_paths is not None and max_paths < 1:
        raise ValueError("max_paths must be positive or None")
    adj = adjacency if adjacency is not None else network.adjacency()
    s, t = commodity.i, commodity.j
    dist = _hops_to(adj, t)
    if dist[s] >= network.n_nodes:
        raise NoPathError(f"commodity {commodity.id} {{{s},{t}}}: endpoints are disconnected")

    found: list[tuple[int, ...]] = []
    visited = [False] * network.n_nodes

    def extend(node, hops_left, trail, out):
        if node == t:
            if hops_left == 0:
                out.append(tuple(trail))
            return
        if dist[node] > hops_left:
            return
        visited[node] = True
        for nb, eid in adj[node]:
            if not visited[nb]:
                trail.append(eid)
                extend(nb, hops_left - 1, trail, out)
                trail.pop()
        visited[node] = False

    for hops in range(int(dist[s]), network.n_nodes):
        level: list[tuple[int, ...]] = []
        extend(s, hops, [], level)
        level.sort()
        found.extend(level)
        if max_paths is not None and len(found) >= max_paths:
            return found[:max_paths]
    return found


def default_path_limit(network: Network) -> Optional[int]:
    return None if network.n_edges <= 15 else 30


@dataclass(frozen=True)
class PathSet:
    """Candidate paths ``P_k`` for each commodity, plus incidence helpers.

    Paths are numbered globally in commodity order; ``offsets[k]`` is the
    first global index of commodity ``k``.
    """

    commodities: tuple
    paths: tuple  # per commodity: tuple of edge-id tuples
    n_edges: int
    max_paths: Optional[int] = None
    offsets: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        sizes = [len(p) for p in self.paths]
        object.__setattr__(self, "offsets", np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64))

    @property
    def kappa(self) -> int:
        return len(self.commodities)

    @property
    def n_paths(self) -> int:
        return int(self.offsets[-1])

    def sizes(self) -> np.ndarray:
        return np.diff(self.offsets)

    def path_commodity(self) -> np.ndarray:
        """Commodity index of every global path."""
        return np.repeat(np.arange(self.kappa), self.sizes())

    def commodity_incidence(self) -> sp.csr_matrix:
        """``kappa x P`` 0/1 matrix: path p belongs to commodity k."""
        P = self.n_paths
        return sp.csr_matrix((np.ones(P), (self.path_commodity(), np.arange(P))), shape=(self.kappa, P))

    def edge_incidence(self) -> sp.csr_matrix:
        """``|E| x P`` 0/1 matrix: path p uses edge e."""
        rows, cols = [], []
        p = 0
        for plist in self.paths:
            for path in plist:
                rows.extend(path)
                cols.extend([p] * len(path))
                p += 1
        return sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(self.n_edges, self.n_paths))

    def to_dict(self) -> dict:
        return {
            "n_edges": self.n_edges,
            "max_paths": self.max_paths,
            "commodities": [[c.i, c.j] for c in self.commodities],
            "paths": [[list(p) for p in plist] for plist in self.paths],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PathSet":
        comms = tuple(Commodity(k, int(i), int(j)) for k, (i, j) in enumerate(data["commodities"]))
        paths = tuple(tuple(tuple(int(e) for e in p) for p in plist) for plist in data["paths"])
        return cls(comms, paths, int(data["n_edges"]), data.get("max_paths"))

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), separators=(",", ":")) + "\n")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "PathSet":
        return cls.from_dict(json.loads(Path(path).read_text()))


_AUTO = "auto"


def build_path_set(network: Network, commodities: Optional[Sequence[Commodity]] = None,
                   max_paths: Union[int, None, str] = _AUTO) -> PathSet:
    if commodities is None:
        commodities = generate_commodities(network)
    limit = default_path_limit(network) if max_paths == _AUTO else max_paths
    adj = network.adjacency()
    paths = tuple(tuple(enumerate_paths(network, c, limit, adj)) for c in commodities)
    return PathSet(tuple(commodities), paths, network.n_edges, limit)
