"""Security graph model and path machinery.

A security graph is a directed graph of danger points between an origin ``O``
and a destination ``D``.  Every edge carries a positive travel time and every
node an attack success probability (zero at ``O`` and ``D``).
"""
from __future__ import annotations

import hashlib
import heapq
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path as FilePath
from typing import Hashable, Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

Node = Hashable

DEFAULT_MAX_PATHS = 10**6
_TIE_RTOL = 1e-12


class GraphValidationError(ValueError):
    """Raised when a security graph violates one or more model invariants."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class PathCountError(RuntimeError):
    """Raised when path enumeration exceeds the configured cap."""


class CertainInterdictionWarning(UserWarning):
    """Issued for interior nodes whose attack success probability is 1."""


@dataclass(frozen=True, eq=False)
class SecurityGraph:
    nodes: tuple
    origin: Node
    destination: Node
    travel_time: Mapping[tuple, float]
    attack_prob: Mapping[Node, float]
    successors: Mapping[Node, tuple] = field(init=False, repr=False)

    def __post_init__(self):
        nodes = tuple(sorted(self.nodes))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "travel_time", dict(self.travel_time))
        probs = {n: float(self.attack_prob.get(n, 0.0)) for n in nodes}
        object.__setattr__(self, "attack_prob", probs)
        succ: dict = {n: [] for n in nodes}
        for i, j in self.travel_time:
            succ.setdefault(i, []).append(j)
        object.__setattr__(self, "successors", {n: tuple(sorted(v)) for n, v in succ.items()})

    @classmethod
    def from_edges(cls, edges: Iterable[tuple], attack_prob: Mapping, origin, destination, nodes=None):
        """Build a graph from ``(i, j, time)`` triples."""
        times = {}
        seen = set()
        for i, j, t in edges:
            times[(i, j)] = float(t)
            seen.update((i, j))
        seen.update((origin, destination))
        if nodes is not None:
            seen.update(nodes)
        return cls(tuple(seen), origin, destination, times, dict(attack_prob))

    @property
    def edges(self) -> list[tuple]:
        return sorted(self.travel_time)

    def out_degree(self, n) -> int:
        return len(self.successors.get(n, ()))

    def t(self, i, j) -> float:
        return self.travel_time[(i, j)]

    def p(self, n) -> float:
        return self.attack_prob[n]

    def fingerprint(self) -> str:
        """Short content hash, stable across runs."""
        payload = json.dumps(graph_to_dict(self), sort_keys=True, default=str)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Path:
    """A simple O-to-D path together with its prefix travel times."""

    nodes: tuple
    prefix_times: Mapping[Node, float] = field(compare=False, hash=False, repr=False)

    def __contains__(self, n) -> bool:
        return n in self.prefix_times

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self) -> Iterator:
        return iter(self.nodes)

    @property
    def length(self) -> float:
        """Travel time from O to D along the path."""
        return self.prefix_times[self.nodes[-1]]

    def time_to(self, n) -> float:
        return self.prefix_times[n]

    @property
    def interior(self) -> tuple:
        return self.nodes[1:-1]

    def label(self) -> str:
        return ",".join(str(n) for n in self.nodes)


def make_path(graph: SecurityGraph, nodes: Sequence) -> Path:
    """Construct a :class:`Path` on ``graph`` from a node sequence."""
    nodes = tuple(nodes)
    if not nodes or nodes[0] != graph.origin or nodes[-1] != graph.destination:
        raise ValueError(f"path {nodes} must run from {graph.origin!r} to {graph.destination!r}")
    if len(set(nodes)) != len(nodes):
        raise ValueError(f"path {nodes} repeats a node")
    prefix = {nodes[0]: 0.0}
    total = 0.0
    for i, j in zip(nodes, nodes[1:]):
        if (i, j) not in graph.travel_time:
            raise ValueError(f"({i!r}, {j!r}) is not an edge")
        total += graph.travel_time[(i, j)]
        prefix[j] = total
    return Path(nodes, prefix)


def graph_violations(graph: SecurityGraph) -> list[str]:
    """List every invariant the graph violates (empty when valid)."""
    problems = []
    o, d = graph.origin, graph.destination
    node_set = set(graph.nodes)
    if o == d:
        problems.append("origin and destination must differ")
    for (i, j), t in graph.travel_time.items():
        if i not in node_set or j not in node_set:
            problems.append(f"edge ({i!r}, {j!r}) references an unknown node")
        if not (t > 0 and math.isfinite(t)):
            problems.append(f"travel time on ({i!r}, {j!r}) must be positive, got {t}")
        if i == j:
            problems.append(f"self loop at {i!r}")
    if graph.attack_prob.get(o, 0.0) != 0.0:
        problems.append("origin must be risk-free")
    if graph.attack_prob.get(d, 0.0) != 0.0:
        problems.append("destination must be risk-free")
    for n, p in graph.attack_prob.items():
        if not 0.0 <= p <= 1.0:
            problems.append(f"attack probability at {n!r} must lie in [0, 1], got {p}")
    if d not in _reachable(graph, o):
        problems.append(f"no directed path from {o!r} to {d!r}")
    return problems


def validate(graph: SecurityGraph) -> SecurityGraph:
    """Return ``graph`` unchanged if valid, else raise :class:`GraphValidationError`.

    Interior nodes with attack probability 1 are legal but trigger a
    :class:`CertainInterdictionWarning`: any path through them has infinite
    expected delivery time once they are attacked.
    """
    problems = graph_violations(graph)
    if problems:
        raise GraphValidationError(problems)
    certain = [n for n, p in graph.attack_prob.items() if p == 1.0]
    if certain:
        warnings.warn(f"nodes {certain} have attack probability 1", CertainInterdictionWarning, stacklevel=2)
    return graph


def _reachable(graph, start) -> set:
    seen = {start}
    stack = [start]
    while stack:
        for k in graph.successors.get(stack.pop(), ()):
            if k not in seen:
                seen.add(k)
                stack.append(k)
    return seen


def enumerate_paths(graph: SecurityGraph, max_paths: int = DEFAULT_MAX_PATHS) -> list[Path]:
    """All simple O-to-D paths, in lexicographic order of node sequence.

    Depth-first search with an on-path visited set.  Raises
    :class:`PathCountError` once more than ``max_paths`` paths are found.
    """
    cache = graph.__dict__.setdefault("_path_cache", {})
    if max_paths in cache:
        return cache[max_paths]

    o, d = graph.origin, graph.destination
    # prune branches that can never reach D
    can_reach_d = _coreachable(graph, d)
    found: list[Path] = []
    stack = [o]
    on_path = {o}
    times = [0.0]

    def dfs(u):
        for k in graph.successors.get(u, ()):
            if k in on_path or k not in can_reach_d:
                continue
            stack.append(k)
            times.append(times[-1] + graph.travel_time[(u, k)])
            if k == d:
                if len(found) >= max_paths:
                    raise PathCountError(f"more than {max_paths} O-to-D paths")
                found.append(Path(tuple(stack), dict(zip(stack, times))))
            else:
                on_path.add(k)
                dfs(k)
                on_path.discard(k)
            stack.pop()
            times.pop()

    if o == d:
        found.append(Path((o,), {o: 0.0}))
    else:
        dfs(o)
    cache[max_paths] = found
    return found


def _coreachable(graph, target) -> set:
    pred: dict = {}
    for i, j in graph.travel_time:
        pred.setdefault(j, []).append(i)
    seen = {target}
    stack = [target]
    while stack:
        for i in pred.get(stack.pop(), ()):
            if i not in seen:
                seen.add(i)
                stack.append(i)
    return seen


def count_policies(graph: SecurityGraph) -> int:
    """Number of deterministic path-selection policies: product of out-degrees over nodes other than D."""
    return math.prod(graph.out_degree(n) for n in graph.nodes if n != graph.destination)


def _distances_to(graph, target, banned=frozenset()) -> dict:
    pred: dict = {}
    for (i, j), t in graph.travel_time.items():
        pred.setdefault(j, []).append((i, t))
    dist = {target: 0.0}
    heap = [(0.0, 0, target)]
    counter = 1
    while heap:
        du, _, u = heapq.heappop(heap)
        if du > dist.get(u, math.inf):
            continue
        for i, t in pred.get(u, ()):
            if i in banned:
                continue
            nd = du + t
            if nd < dist.get(i, math.inf):
                dist[i] = nd
                heapq.heappush(heap, (nd, counter, i))
                counter += 1
    return dist


def _lexmin_shortest(graph, banned=frozenset()) -> Path | None:
    o, d = graph.origin, graph.destination
    if o in banned or d in banned:
        return None
    dist = _distances_to(graph, d, banned)
    if o not in dist:
        return None
    nodes = [o]
    u = o
    while u != d:
        # first successor (in node order) that stays on a shortest path
        for k in graph.successors[u]:
            if k in banned or k not in dist:
                continue
            via = graph.travel_time[(u, k)] + dist[k]
            if math.isclose(via, dist[u], rel_tol=_TIE_RTOL, abs_tol=1e-12):
                nodes.append(k)
                u = k
                break
        else:  # pragma: no cover - dist guarantees a successor exists
            raise RuntimeError("inconsistent shortest-path distances")
    return make_path(graph, nodes)


def shortest_path(graph: SecurityGraph) -> Path:
    """A shortest O-to-D path; ties go to the lexicographically smallest node sequence."""
    path = _lexmin_shortest(graph)
    if path is None:
        raise GraphValidationError([f"no directed path from {graph.origin!r} to {graph.destination!r}"])
    return path


def shortest_path_excluding(graph: SecurityGraph, n) -> Path | None:
    """Shortest O-to-D path avoiding node ``n``, or ``None`` when every path passes through it."""
    if n in (graph.origin, graph.destination):
        raise ValueError("the excluded node must be an interior node")
    return _lexmin_shortest(graph, frozenset([n]))


# --- instance files -------------------------------------------------------

class Instance(NamedTuple):
    graph: SecurityGraph
    rehandling_time: float
    metadata: dict


def _parse_node(raw, lookup):
    if raw in lookup:
        return lookup[raw]
    key = str(raw)
    if key in lookup:
        return lookup[key]
    raise GraphValidationError([f"unknown node {raw!r}"])


def graph_from_dict(data: Mapping) -> Instance:
    """Build an :class:`Instance` from the JSON instance schema."""
    nodes = list(data["nodes"])
    lookup = {n: n for n in nodes}
    lookup.update({str(n): n for n in nodes})
    origin = _parse_node(data["origin"], lookup)
    destination = _parse_node(data["destination"], lookup)
    edges = [(_parse_node(e["from"], lookup), _parse_node(e["to"], lookup), e["time"]) for e in data["edges"]]
    probs = {_parse_node(k, lookup): float(v) for k, v in data.get("attack_prob", {}).items()}
    graph = SecurityGraph.from_edges(edges, probs, origin, destination, nodes=nodes)
    t_a = float(data.get("rehandling_time", 0.0))
    if not (t_a >= 0 and math.isfinite(t_a)):
        raise GraphValidationError([f"rehandling time must be nonnegative, got {t_a}"])
    meta = {k: v for k, v in data.items() if k not in {"nodes", "origin", "destination", "edges", "attack_prob", "rehandling_time"}}
    return Instance(graph, t_a, meta)


def graph_to_dict(graph: SecurityGraph, rehandling_time: float | None = None) -> dict:
    out = {
        "nodes": list(graph.nodes),
        "origin": graph.origin,
        "destination": graph.destination,
        "edges": [{"from": i, "to": j, "time": graph.travel_time[(i, j)]} for i, j in graph.edges],
        "attack_prob": {str(n): p for n, p in graph.attack_prob.items()},
    }
    if rehandling_time is not None:
        out["rehandling_time"] = rehandling_time
    return out


def load_instance(path, validate_graph: bool = True) -> Instance:
    """Read an instance JSON file; validates the graph unless told otherwise."""
    with open(path) as fh:
        inst = graph_from_dict(json.load(fh))
    if validate_graph:
        validate(inst.graph)
    return inst


def reference_instance() -> Instance:
    """The ten-node, eighteen-edge benchmark instance shipped with the package."""
    return load_instance(FilePath(__file__).parent / "instances" / "reference.json")


def path_by_label(graph: SecurityGraph, label: str | Sequence) -> Path:
    """Resolve ``"3,5,8"`` (interior nodes) or a full node sequence to a :class:`Path`."""
    if isinstance(label, str):
        lookup = {str(n): n for n in graph.nodes}
        seq = [lookup[s.strip()] for s in label.split(",") if s.strip()]
    else:
        seq = list(label)
    if not seq or seq[0] != graph.origin:
        seq = [graph.origin] + seq
    if seq[-1] != graph.destination:
        seq = seq + [graph.destination]
    return make_path(graph, seq)


# --- generators -----------------------------------------------------------

def phase_connected_graph(phase_sizes: Sequence[int], times=None, probs=None, rng=None) -> SecurityGraph:
    """Layered graph whose consecutive phases are complete bipartite.

    The first and last phases must contain exactly one node (O and D).
    Nodes are numbered 1..N phase by phase.  Missing travel times are drawn
    uniformly from [2, 8] and attack probabilities uniformly from [0.1, 0.9].
    """
    if phase_sizes[0] != 1 or phase_sizes[-1] != 1:
        raise ValueError("first and last phases must be singletons")
    rng = np.random.default_rng(rng)
    layers = []
    nxt = 1
    for size in phase_sizes:
        layers.append(list(range(nxt, nxt + size)))
        nxt += size
    pairs = [(i, j) for a, b in zip(layers, layers[1:]) for i in a for j in b]
    if times is None:
        times = rng.uniform(2, 8, size=len(pairs)).round(2)
    edges = [(i, j, float(t)) for (i, j), t in zip(pairs, times)]
    o, d = layers[0][0], layers[-1][0]
    interior = [n for layer in layers[1:-1] for n in layer]
    if probs is None:
        probs = dict(zip(interior, rng.uniform(0.1, 0.9, size=len(interior)).round(2)))
    probs = {n: float(probs.get(n, 0.0)) for n in range(1, nxt)}
    probs[o] = probs[d] = 0.0
    return SecurityGraph.from_edges(edges, probs, o, d)


def random_security_graph(n_nodes: int, rng=None, edge_prob: float = 0.35, p_range=(0.05, 0.9),
                          t_range=(1.0, 8.0)) -> SecurityGraph:
    """Random DAG on nodes ``0..n_nodes-1`` with O = 0 and D = n_nodes - 1.

    A backbone 0 -> 1 -> ... -> D guarantees connectivity; the remaining
    forward edges appear independently with probability ``edge_prob``.
    """
    rng = np.random.default_rng(rng)
    edges = []
    for i in range(n_nodes - 1):
        for j in range(i + 1, n_nodes):
            if j == i + 1 or rng.random() < edge_prob:
                edges.append((i, j, float(rng.uniform(*t_range))))
    probs = {n: float(rng.uniform(*p_range)) for n in range(1, n_nodes - 1)}
    probs[0] = probs[n_nodes - 1] = 0.0
    return SecurityGraph.from_edges(edges, probs, 0, n_nodes - 1)
