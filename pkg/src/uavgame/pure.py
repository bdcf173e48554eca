"""Pure-strategy interdiction game.

The interdictor sits at a single node ``n``; the operator picks a path ``h``.
Each successful attack sends the UAV back to the origin after the
re-handling delay ``t_a``, so the delivery time is geometric in the number
of failed traversals of ``n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._util import first_argmax, first_argmin
from .graph import Path, SecurityGraph, enumerate_paths, shortest_path, shortest_path_excluding


@dataclass(frozen=True)
class PureStrategyPair:
    interdiction_node: object
    path: Path


@dataclass(frozen=True)
class GeometricProspect:
    """Delivery times ``base_time + k * penalty_step`` with probability ``retry_prob**k * (1 - retry_prob)``."""

    base_time: float
    penalty_step: float
    retry_prob: float

    def __post_init__(self):
        if not 0.0 <= self.retry_prob < 1.0:
            raise ValueError(f"retry probability must lie in [0, 1), got {self.retry_prob}")
        if self.penalty_step < 0:
            raise ValueError("penalty step must be nonnegative")

    def outcomes(self, k_max: int) -> tuple[np.ndarray, np.ndarray]:
        """The first ``k_max + 1`` outcomes and their probabilities."""
        k = np.arange(k_max + 1)
        times = self.base_time + k * self.penalty_step
        probs = self.retry_prob**k * (1.0 - self.retry_prob)
        return times, probs

    def partial_mass(self, k_max: int) -> float:
        return 1.0 - self.retry_prob ** (k_max + 1)

    @property
    def mean(self) -> float:
        p = self.retry_prob
        return self.base_time + p / (1.0 - p) * self.penalty_step


def geometric_prospect(graph: SecurityGraph, t_a: float, n, h: Path) -> GeometricProspect:
    """Prospect induced by interdiction at ``n`` when the UAV flies ``h``.

    If ``n`` is off the path (or safe) the prospect is the sure outcome ``f^h(D)``.
    """
    p = graph.attack_prob[n] if n in h else 0.0
    step = h.time_to(n) + t_a if n in h else 0.0
    return GeometricProspect(h.length, step, p)


def expected_delivery_time(graph: SecurityGraph, t_a: float, n, h: Path) -> float:
    if n not in h:
        return h.length
    p = graph.attack_prob[n]
    if p == 0.0:
        return h.length
    if p >= 1.0:
        return math.inf
    return p / (1.0 - p) * (h.time_to(n) + t_a) + h.length


def best_response(graph: SecurityGraph, t_a: float, n) -> Path:
    """Operator's optimal path against an interdictor fixed at ``n``."""
    paths = enumerate_paths(graph)
    return paths[first_argmin(expected_delivery_time(graph, t_a, n, h) for h in paths)]


@dataclass(frozen=True)
class Equilibrium:
    node: object
    path: Path
    value: float
    candidates: dict


def solve_SE(graph: SecurityGraph, t_a: float) -> Equilibrium:
    """Stackelberg equilibrium under pure interdiction, in closed form.

    Only nodes of the shortest path ``h_s`` are worth attacking.  Those for
    which the operator still prefers ``h_s`` (the non-deviation set) compete
    on the attacked expected time; the rest compete on the length of the
    detour ``h_n`` they force.  The better of the two champions wins, with
    ties going to the detour champion.
    """
    h_s = shortest_path(graph)
    stay, detour = {}, {}
    detours = {}
    for n in sorted(h_s.nodes):
        attacked = expected_delivery_time(graph, t_a, n, h_s)
        h_n = None if n in (graph.origin, graph.destination) else shortest_path_excluding(graph, n)
        alt = math.inf if h_n is None else h_n.length
        detours[n] = h_n
        if attacked <= alt:
            stay[n] = attacked
        else:
            detour[n] = alt

    n1 = n2 = None
    if stay:
        keys = list(stay)
        n1 = keys[first_argmax(stay[k] for k in keys)]
    if detour:
        keys = list(detour)
        n2 = keys[first_argmax(detour[k] for k in keys)]

    if n2 is None or (n1 is not None and stay[n1] > detour[n2]):
        node, path, value = n1, h_s, stay[n1]
    else:
        node, path, value = n2, detours[n2], detour[n2]
    return Equilibrium(node, path, value, {"n1": n1, "n2": n2, "non_deviation_set": sorted(stay)})


def brute_force_SE(graph: SecurityGraph, t_a: float) -> tuple:
    """Leader scan over every node: ``max_n min_h E_d(n, h)``; returns ``(n, h, value)``."""
    best = None
    for n in graph.nodes:
        h = best_response(graph, t_a, n)
        v = expected_delivery_time(graph, t_a, n, h)
        if best is None or v > best[2]:
            best = (n, h, v)
    return best
