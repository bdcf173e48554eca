"""Equilibria when both players value delivery-time prospects with CPT."""
from __future__ import annotations

import math
from dataclasses import dataclass, field


from ._util import first_argmax, first_argmin
from .cpt import (DivergentProspectError, MixedValuator, PTParams, Role, TruncationConfig, valuation_mixed,
                  valuation_pure_I, valuation_pure_U, value_fn)
from .graph import Path, SecurityGraph, enumerate_paths, shortest_path, shortest_path_excluding
from .mdp import MixedInterdiction, all_paths_best_response, origin_value_closed_form
from .pure import expected_delivery_time
from .search import SearchConfig, SearchResult, _search_dim, pattern_search_max


@dataclass(frozen=True)
class PTGameSpec:
    graph: SecurityGraph
    t_a: float
    params_I: PTParams = PTParams()
    params_U: PTParams = PTParams()
    trunc: TruncationConfig = TruncationConfig()

    def V_I(self, n, h: Path) -> float:
        return valuation_pure_I(self.graph, self.t_a, self.params_I, n, h, self.trunc)

    def V_U(self, n, h: Path) -> float:
        return valuation_pure_U(self.graph, self.t_a, self.params_U, n, h, self.trunc)


def _safe(fn, *args):
    """Valuation that maps a divergent prospect to +inf (worst for the operator, best for the interdictor)."""
    try:
        return fn(*args)
    except DivergentProspectError:
        return math.inf


def rho_PT(spec: PTGameSpec, n) -> Path:
    """Operator's PT reaction to pure interdiction at ``n``: the path minimising its valuation."""
    paths = enumerate_paths(spec.graph)
    return paths[first_argmin(_safe(spec.V_U, n, h) for h in paths)]


@dataclass(frozen=True)
class PTEquilibrium:
    node: object
    path: Path
    value_I: float
    expected_time: float
    candidates: dict = field(default_factory=dict)


def solve_SE_PT(spec: PTGameSpec) -> PTEquilibrium:
    """Pure equilibrium of the PT game from the shortest-path split.

    Nodes of the shortest path ``h_s`` are split by whether the operator,
    valuing prospects with its own parameters, still prefers the attacked
    ``h_s`` to the sure detour ``h_n``.  The interdictor's best node in each
    group is compared by its valuation against the operator's actual
    reaction; equal valuations go to the detour champion.
    """
    g = spec.graph
    h_s = shortest_path(g)
    stay, leave, detours = {}, {}, {}
    for n in sorted(h_s.nodes):
        h_n = None if n in (g.origin, g.destination) else shortest_path_excluding(g, n)
        detours[n] = h_n
        attacked_U = _safe(spec.V_U, n, h_s)
        detour_U = math.inf if h_n is None else value_fn(spec.params_U, Role.MINIMIZER, h_n.length)
        if attacked_U <= detour_U:
            stay[n] = _safe(spec.V_I, n, h_s)
        else:
            leave[n] = value_fn(spec.params_I, Role.MAXIMIZER, h_n.length)

    m1 = m2 = None
    if stay:
        keys = list(stay)
        m1 = keys[first_argmax(stay[k] for k in keys)]
    if leave:
        keys = list(leave)
        m2 = keys[first_argmax(leave[k] for k in keys)]

    def reacted(m):
        return _safe(spec.V_I, m, rho_PT(spec, m))

    if m2 is None or (m1 is not None and reacted(m1) > reacted(m2)):
        node, path = m1, h_s
    else:
        node, path = m2, detours[m2]
    value = _safe(spec.V_I, node, path)
    return PTEquilibrium(node, path, value, expected_delivery_time(g, spec.t_a, node, path),
                         {"m1": m1, "m2": m2, "no_deviation_set": sorted(stay)})


def brute_force_SE_PT(spec: PTGameSpec) -> tuple:
    """Leader scan ``max_n V_I(n, rho_PT(n))``; returns ``(n, h, value)``."""
    best = None
    for n in spec.graph.nodes:
        h = rho_PT(spec, n)
        v = _safe(spec.V_I, n, h)
        if best is None or v > best[2]:
            best = (n, h, v)
    return best


class _Reactions:
    """Cached operator and interdictor valuators for one spec."""

    def __init__(self, spec: PTGameSpec):
        self.spec = spec
        self.paths = enumerate_paths(spec.graph)
        self.xi_U = MixedValuator(spec.graph, spec.t_a, spec.params_U, Role.MINIMIZER, spec.trunc)
        self.xi_I = MixedValuator(spec.graph, spec.t_a, spec.params_I, Role.MAXIMIZER, spec.trunc)

    def respond(self, x: MixedInterdiction) -> tuple[Path, float]:
        vals = [self.xi_U(x, h) for h in self.paths]
        i = first_argmin(vals)
        return self.paths[i], vals[i]


def rho_PT_mixed(spec: PTGameSpec, x: MixedInterdiction) -> Path:
    """Operator's PT reaction to mixed interdiction: all-paths scan on its valuation."""
    paths = enumerate_paths(spec.graph)
    vals = [_safe(valuation_mixed, spec.params_U, Role.MINIMIZER, spec.graph, spec.t_a, x, h) for h in paths]
    return paths[first_argmin(vals)]


@dataclass(frozen=True)
class MSEPTResult:
    x: MixedInterdiction
    path: Path
    xi_I: float
    expected_time: float
    xi_U: float
    search: SearchResult = field(repr=False, default=None)


def solve_MSE_PT(spec: PTGameSpec, config: SearchConfig = SearchConfig()) -> MSEPTResult:
    """Achievable mixed equilibrium of the PT game.

    The interdictor's objective at ``x`` is its own valuation of the path the
    operator picks by PT reaction.  Also reports the true expected delivery
    time of the resulting pair.
    """
    react = _Reactions(spec)

    def leader_value(x):
        h, _ = react.respond(x)
        return react.xi_I(x, h)

    dim = _search_dim(spec.graph)
    res = pattern_search_max(leader_value, dim, config, vertices=shortest_path(spec.graph).nodes)
    h, xi_u = react.respond(res.x_best)
    expected = origin_value_closed_form(spec.graph, spec.t_a, res.x_best, h)
    return MSEPTResult(res.x_best, h, res.objective_best, expected, xi_u, res)


def rational_response(spec: PTGameSpec, x: MixedInterdiction) -> tuple[Path, float]:
    """Fully rational operator reply to ``x``: the path minimising expected delivery time."""
    return all_paths_best_response(spec.graph, spec.t_a, x)


def mixed_valuation_U(spec: PTGameSpec, x: MixedInterdiction, h: Path) -> float:
    return _safe(valuation_mixed, spec.params_U, Role.MINIMIZER, spec.graph, spec.t_a, x, h)
