"""Derivative-free pattern search over the interdiction simplex."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import SecurityGraph, shortest_path
from .mdp import MixedInterdiction, PathTable

SIMPLEX_TOL = 1e-9


class SearchError(RuntimeError):
    pass


@dataclass(frozen=True)
class SearchConfig:
    initial_mesh: float = 0.25
    contraction_factor: float = 0.5
    min_mesh: float = 1e-4
    max_evals: int = 20000
    restarts: int = 8
    rng_seed: int = 0

    def __post_init__(self):
        if not self.initial_mesh > 0:
            raise ValueError("initial_mesh must be positive")
        if not 0.0 < self.contraction_factor < 1.0:
            raise ValueError("contraction_factor must lie in (0, 1)")
        if not 0.0 < self.min_mesh < self.initial_mesh:
            raise ValueError("min_mesh must be positive and below initial_mesh")
        if self.max_evals < 1:
            raise ValueError("max_evals must be at least 1")
        if self.restarts < 0:
            raise ValueError("restarts must be nonnegative")

    def to_dict(self) -> dict:
        return {"initial_mesh": self.initial_mesh, "contraction_factor": self.contraction_factor,
                "min_mesh": self.min_mesh, "max_evals": self.max_evals, "restarts": self.restarts,
                "rng_seed": self.rng_seed}


@dataclass(frozen=True)
class SearchResult:
    x_best: MixedInterdiction
    objective_best: float
    evals_used: int
    converged: bool
    runs: list = field(default_factory=list, repr=False)


def restart_points(dim: list, config: SearchConfig, vertices=()) -> list[np.ndarray]:
    """Starting points: the given simplex vertices, then ``config.restarts`` uniform samples.

    Samples are drawn sequentially from ``rng_seed`` so a larger restart
    count only appends points.
    """
    pos = {n: i for i, n in enumerate(dim)}
    starts = []
    for v in vertices:
        if v in pos:
            z = np.zeros(len(dim))
            z[pos[v]] = 1.0
            starts.append(z)
    rng = np.random.default_rng(config.rng_seed)
    for _ in range(config.restarts):
        starts.append(rng.dirichlet(np.ones(len(dim))))
    if not starts:
        starts.append(np.full(len(dim), 1.0 / len(dim)))
    return starts


def _check_simplex(z: np.ndarray):
    if np.any(z < -SIMPLEX_TOL) or abs(z.sum() - 1.0) > SIMPLEX_TOL:
        raise AssertionError(f"search left the simplex: {z}")


def _local_search(f, z, config, budget):
    """One opportunistic pattern-search run from ``z``; returns (z, value, evals, converged)."""
    d = len(z)
    pairs = [(a, b) for a in range(d) for b in range(d) if a != b]
    fz = f(z)
    evals = 1
    mesh = config.initial_mesh
    lead = 0
    while mesh >= config.min_mesh and evals < budget:
        improved = False
        for r in range(len(pairs)):
            k = (lead + r) % len(pairs)
            a, b = pairs[k]
            step = min(mesh, z[a])
            if step <= 0.0:
                continue
            y = z.copy()
            y[a] -= step
            y[b] += step
            y[a] = max(y[a], 0.0)
            fy = f(y)
            evals += 1
            if fy > fz:
                z, fz, lead, improved = y, fy, k, True
                break
            if evals >= budget:
                break
        if not improved:
            mesh *= config.contraction_factor
    return z, fz, evals, mesh < config.min_mesh


def pattern_search_max(objective, dim, config: SearchConfig = SearchConfig(), vertices=(), callback=None) -> SearchResult:
    """Maximise ``objective(MixedInterdiction)`` over distributions on the nodes ``dim``.

    Poll directions move mass between two coordinates, so every iterate is
    feasible.  The mesh is kept after a successful poll and contracted after a
    failed sweep.  Each start point gets its own budget of ``max_evals``
    evaluations.  ``callback`` sees every raw probability vector evaluated.
    """
    dim = list(dim)
    if not dim:
        raise ValueError("search needs at least one node")

    def f(z):
        _check_simplex(z)
        if callback is not None:
            callback(z)
        val = objective(MixedInterdiction.from_array(dim, z))
        return -math.inf if math.isnan(val) else val

    runs = []
    best = None
    total = 0
    for z0 in restart_points(dim, config, vertices):
        z, fz, used, conv = _local_search(f, z0, config, config.max_evals)
        total += used
        runs.append((z, fz, conv))
        if best is None or fz > best[1]:
            best = (z, fz, conv)
    if best[1] == -math.inf:
        raise SearchError("objective is -inf at every evaluated point")
    return SearchResult(MixedInterdiction.from_array(dim, best[0]), best[1], total, best[2], runs)


def risky_nodes(graph: SecurityGraph) -> list:
    """Nodes an interdictor can actually hurt: positive attack probability."""
    return [n for n in graph.nodes if graph.attack_prob[n] > 0.0]


def _search_dim(graph):
    dim = risky_nodes(graph)
    return dim if dim else [graph.origin]


def solve_MSE(graph: SecurityGraph, t_a: float, config: SearchConfig = SearchConfig()):
    """Achievable mixed-interdiction equilibrium ``(x, h, E)`` for rational players.

    The leader objective is the follower's best-response origin value; the
    search runs over risky nodes only, starting from the vertices on the
    shortest path plus random restarts.
    """
    from .mdp import all_paths_best_response

    dim = _search_dim(graph)
    table = PathTable(graph)
    pos = np.array([graph.nodes.index(n) for n in dim])

    def leader_value(x: MixedInterdiction) -> float:
        vec = np.zeros(len(graph.nodes))
        vec[pos] = x.as_array(dim)
        return float(np.min(table.origin_values(vec, t_a)))

    res = pattern_search_max(leader_value, dim, config, vertices=shortest_path(graph).nodes)
    h, value = all_paths_best_response(graph, t_a, res.x_best)
    return res.x_best, h, value, res
