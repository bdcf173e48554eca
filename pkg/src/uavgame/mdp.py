"""Mixed interdiction as a Markov decision process.

States are graph nodes.  Attempting to move from ``i`` to ``k`` lands at
``k`` with probability ``1 - x_k p_k`` and costs ``t(i, k)``; otherwise the
UAV is knocked back to the origin at cost ``t(i, k) + t_a``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from ._util import first_argmin, near
from .graph import Path, SecurityGraph, _coreachable, _distances_to, count_policies, enumerate_paths, make_path

DIVERGENCE_GUARD = 1e-12


class NotPathInducingError(ValueError):
    """The policy walk from the origin revisits a node before reaching D."""


class PolicyIterationError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class MixedInterdiction:
    """Probability vector over nodes, renormalised on construction."""

    probs: Mapping

    def __post_init__(self):
        probs = {n: float(v) for n, v in dict(self.probs).items()}
        if any(v < 0 or not math.isfinite(v) for v in probs.values()):
            raise ValueError("interdiction probabilities must be finite and nonnegative")
        total = math.fsum(probs.values())
        if total <= 0:
            raise ValueError("interdiction probabilities must have positive total mass")
        object.__setattr__(self, "probs", {n: v / total for n, v in probs.items()})

    def __getitem__(self, n) -> float:
        return self.probs.get(n, 0.0)

    @classmethod
    def pure(cls, n) -> "MixedInterdiction":
        return cls({n: 1.0})

    @classmethod
    def uniform(cls, nodes) -> "MixedInterdiction":
        return cls({n: 1.0 for n in nodes})

    @classmethod
    def from_array(cls, nodes, weights) -> "MixedInterdiction":
        return cls(dict(zip(nodes, np.asarray(weights, dtype=float))))

    def as_array(self, nodes) -> np.ndarray:
        return np.array([self[n] for n in nodes])

    def support(self, tol: float = 0.0) -> list:
        return sorted(n for n, v in self.probs.items() if v > tol)

    def to_dict(self) -> dict:
        return {n: self.probs[n] for n in sorted(self.probs)}


def interdiction_rates(graph: SecurityGraph, x: MixedInterdiction) -> dict:
    """Per-node probability ``x_n p_n`` that a UAV arriving at ``n`` is knocked back."""
    return {n: x[n] * graph.attack_prob[n] for n in graph.nodes}


@dataclass(frozen=True)
class Policy:
    next: Mapping

    def induced_path(self, graph: SecurityGraph) -> Path:
        nodes = [graph.origin]
        seen = {graph.origin}
        u = graph.origin
        while u != graph.destination:
            if u not in self.next:
                raise NotPathInducingError(f"policy has no action at {u!r}")
            u = self.next[u]
            if u in seen:
                raise NotPathInducingError(f"policy walk from the origin cycles at {u!r}")
            seen.add(u)
            nodes.append(u)
        return make_path(graph, nodes)

    @classmethod
    def from_path(cls, graph: SecurityGraph, h: Path) -> "Policy":
        """Policy following ``h``, with shortest-route actions everywhere else."""
        nxt = dict(_shortest_route_policy(graph))
        nxt.update(zip(h.nodes, h.nodes[1:]))
        return cls(nxt)


@dataclass(frozen=True)
class StateValues:
    """Expected remaining delivery time per visited state (``D`` maps to 0)."""

    value: Mapping
    origin_node: object

    def __getitem__(self, n) -> float:
        return self.value[n]

    def __contains__(self, n) -> bool:
        return n in self.value

    @property
    def origin(self) -> float:
        return self.value[self.origin_node]


def transition_prob(graph: SecurityGraph, x: MixedInterdiction, i, k, j) -> float:
    if (i, k) not in graph.travel_time:
        raise ValueError(f"{k!r} is not an outgoing neighbour of {i!r}")
    o = graph.origin
    if k == o:
        return 1.0 if j == o else 0.0
    a = x[k] * graph.attack_prob[k]
    if j == k:
        return 1.0 - a
    if j == o:
        return a
    return 0.0


def step_cost(graph: SecurityGraph, t_a: float, i, k, j) -> float:
    if (i, k) not in graph.travel_time:
        raise ValueError(f"{k!r} is not an outgoing neighbour of {i!r}")
    t = graph.travel_time[(i, k)]
    if j == k:
        return t
    if j == graph.origin:
        return t + t_a
    raise ValueError(f"transition {i!r} -> {j!r} is impossible when attempting {k!r}")


def origin_value_closed_form(graph: SecurityGraph, t_a: float, x: MixedInterdiction, h: Path) -> float:
    """Expected delivery time of path ``h`` under mixed interdiction ``x``.

    Evaluates the nested bracket expression from the innermost term (the
    first hop out of O) outwards::

        B_1 = g(O, n1) / (1 - a_n1)
        B_j = (g(v_{j-2}, v_{j-1}, v_j) + B_{j-1}) / (1 - a_vj)
        E   = t(n_m, D) + B_{m+1}

    with ``a_n = x_n p_n``, ``g(m, n) = a_n (t(m, n) + t_a)`` and
    ``g(k, m, n) = g(m, n) + t(k, m)``.  Any ``1 - a_n`` at or below 1e-12
    makes the path's value infinite.
    """
    v = h.nodes
    if len(v) == 1:
        return 0.0
    a = [x[n] * graph.attack_prob[n] for n in v]
    if any(1.0 - ai <= DIVERGENCE_GUARD for ai in a[1:]):
        return math.inf
    te = [0.0] + [graph.travel_time[(i, j)] for i, j in zip(v, v[1:])]
    bracket = 0.0
    for j in range(1, len(v)):
        g = a[j] * (te[j] + t_a) + te[j - 1]
        bracket = (g + bracket) / (1.0 - a[j])
    return te[-1] + bracket


def policy_evaluate(graph: SecurityGraph, t_a: float, x: MixedInterdiction, policy: Policy) -> StateValues:
    """Values of the states on the policy's induced path.

    The origin value comes from the closed form; the remaining nodes are
    filled in backwards from ``D`` using the two-node recursion.  States off
    the induced path are never visited and carry no value.
    """
    h = policy.induced_path(graph)
    e0 = origin_value_closed_form(graph, t_a, x, h)
    values = {graph.destination: 0.0}
    nodes = h.nodes
    for i, j in reversed(list(zip(nodes[1:], nodes[2:]))):
        values[i] = _lookahead(graph, t_a, x, i, j, values[j], e0)
    values[graph.origin] = e0
    return StateValues(values, graph.origin)


def _lookahead(graph, t_a, x, i, k, value_k, value_o) -> float:
    a = x[k] * graph.attack_prob[k] if k != graph.origin else 0.0
    t = graph.travel_time[(i, k)]
    if a == 0.0:
        return t + value_k
    if a >= 1.0:
        return t + t_a + value_o
    return (1.0 - a) * (t + value_k) + a * (t + t_a + value_o)


def _shortest_route_policy(graph: SecurityGraph, banned=frozenset()) -> dict:
    """Next hop along a lexicographically-first shortest route to D, for every node that can reach D."""
    dist = _distances_to(graph, graph.destination, banned)
    nxt = {}
    for u in graph.nodes:
        if u == graph.destination or u not in dist or u in banned:
            continue
        for k in graph.successors[u]:
            if k in dist and k not in banned and near(graph.travel_time[(u, k)] + dist[k], dist[u]):
                nxt[u] = k
                break
    return nxt


def _policy_values(graph, t_a, x, nxt, e0) -> dict:
    """Exact value of every state under ``nxt`` given the restart value ``e0``."""
    values = {graph.destination: 0.0, graph.origin: e0}

    def resolve(s):
        trail = []
        u = s
        while u not in values:
            if u in trail:
                for w in trail:
                    values[w] = math.inf
                return
            trail.append(u)
            u = nxt[u]
        for w in reversed(trail):
            values[w] = _lookahead(graph, t_a, x, w, nxt[w], values[nxt[w]], e0)

    for s in nxt:
        resolve(s)
    return values


def policy_iteration(graph: SecurityGraph, t_a: float, x: MixedInterdiction, max_iter: int | None = None):
    """Optimal operator policy for the MDP induced by ``x``.

    Starts from the shortest-route policy over nodes that are not certainly
    interdicted, evaluates every state exactly, and switches a state's action
    only on strict improvement of the one-step lookahead.  Returns
    ``(policy, values)`` where ``values`` cover the induced path.
    """
    rates = interdiction_rates(graph, x)
    unsafe = frozenset(n for n, a in rates.items() if 1.0 - a <= DIVERGENCE_GUARD and n != graph.origin)
    nxt = _shortest_route_policy(graph, unsafe)
    if graph.origin not in nxt:
        # every route crosses a certainly-interdicted node
        nxt = _shortest_route_policy(graph)
        policy = Policy(nxt)
        h = policy.induced_path(graph)
        values = {n: math.inf for n in h.nodes[:-1]}
        values[graph.destination] = 0.0
        return policy, StateValues(values, graph.origin)
    live = _coreachable(graph, graph.destination)
    actions = {u: [k for k in graph.successors[u] if k in live] for u in graph.nodes if u in live and u != graph.destination}
    for u, ks in actions.items():
        nxt.setdefault(u, ks[0])
    if max_iter is None:
        max_iter = max(count_policies(graph), 1) + 1

    for _ in range(max_iter):
        h = Policy(nxt).induced_path(graph)
        e0 = origin_value_closed_form(graph, t_a, x, h)
        values = _policy_values(graph, t_a, x, nxt, e0)
        changed = False
        new = dict(nxt)
        for u, ks in actions.items():
            q = [_lookahead(graph, t_a, x, u, k, values[k], e0) for k in ks]
            current = q[ks.index(nxt[u])]
            best = first_argmin(q)
            if q[best] < current and not near(q[best], current):
                new[u] = ks[best]
                changed = True
        if not changed:
            policy = Policy(nxt)
            return policy, policy_evaluate(graph, t_a, x, policy)
        nxt = new
    raise PolicyIterationError(f"no convergence within {max_iter} iterations")


class PathTable:
    """All O-to-D paths of a graph packed into arrays for vectorised evaluation.

    Paths are right-aligned on ``D`` and left-padded with zero-time, zero-risk
    hops, which leaves the nested closed form unchanged.
    """

    def __init__(self, graph: SecurityGraph, paths=None):
        self.graph = graph
        self.paths = list(enumerate_paths(graph) if paths is None else paths)
        self.index = {n: i for i, n in enumerate(graph.nodes)}
        width = max(len(h.nodes) for h in self.paths)
        n_paths = len(self.paths)
        # column j holds hop into v_j; column 0 is the origin slot
        self.node_idx = np.full((n_paths, width), -1, dtype=int)
        self.hop_time = np.zeros((n_paths, width))
        for r, h in enumerate(self.paths):
            off = width - len(h.nodes)
            self.node_idx[r, off:] = [self.index[n] for n in h.nodes]
            self.hop_time[r, off + 1:] = [graph.travel_time[e] for e in zip(h.nodes, h.nodes[1:])]
        self.mask = self.node_idx >= 0
        self.lengths = np.array([h.length for h in self.paths])
        self.p = np.array([graph.attack_prob[n] for n in graph.nodes])

    def rates(self, x_vec: np.ndarray) -> np.ndarray:
        """Per-path, per-position interdiction rates ``x_n p_n`` (0 on padding)."""
        a = np.where(self.mask, (x_vec * self.p)[np.where(self.mask, self.node_idx, 0)], 0.0)
        # a knock-back lands on the origin, so its slot never interdicts
        a[np.arange(len(a)), np.argmax(self.mask, axis=1)] = 0.0
        return a

    def origin_values(self, x_vec: np.ndarray, t_a: float) -> np.ndarray:
        a = self.rates(x_vec)
        te = self.hop_time
        bracket = np.zeros(len(a))
        with np.errstate(divide="ignore", invalid="ignore"):
            for j in range(1, te.shape[1]):
                g = a[:, j] * (te[:, j] + t_a) + te[:, j - 1]
                bracket = (g + bracket) / (1.0 - a[:, j])
        vals = te[:, -1] + bracket
        vals[np.any(1.0 - a[:, 1:] <= DIVERGENCE_GUARD, axis=1)] = math.inf
        return vals


def _x_vector(graph, x) -> np.ndarray:
    return np.array([x[n] for n in graph.nodes])


def all_paths_best_response(graph: SecurityGraph, t_a: float, x: MixedInterdiction) -> tuple[Path, float]:
    """Scan every O-to-D path with the closed form and return the minimiser.

    Ties resolve to the lexicographically first path.  When every path is
    infinite the first path is returned with value ``inf``.
    """
    paths = enumerate_paths(graph)
    values = [origin_value_closed_form(graph, t_a, x, h) for h in paths]
    i = first_argmin(values)
    return paths[i], values[i]


def linear_system_values(graph: SecurityGraph, t_a: float, x: MixedInterdiction, h: Path) -> dict:
    """Solve the path's consecutive-value recursion as one dense linear system.

    Independent of the nested closed form; used as a cross-check.
    """
    nodes = h.nodes[:-1]
    idx = {n: i for i, n in enumerate(nodes)}
    m = len(nodes)
    A = np.eye(m)
    b = np.zeros(m)
    o = idx[graph.origin]
    for i, j in zip(h.nodes, h.nodes[1:]):
        r = idx[i]
        a = x[j] * graph.attack_prob[j]
        t = graph.travel_time[(i, j)]
        b[r] = t + a * t_a
        if j in idx:
            A[r, idx[j]] -= 1.0 - a
        A[r, o] -= a
    sol = np.linalg.solve(A, b)
    out = {n: float(sol[idx[n]]) for n in nodes}
    out[graph.destination] = 0.0
    return out
