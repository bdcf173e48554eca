"""Independent reference computations used by the tests.

Nothing here calls into the package's numerical kernels: each oracle
re-derives its quantity from first principles with plain Python, mpmath,
or a dense linear solve.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction

import mpmath
import numpy as np


def hp_weight(gamma, eta, dps=50):
    """Probability weighting in 50-digit arithmetic."""
    with mpmath.workdps(dps):
        eta = mpmath.mpf(eta)
        g = mpmath.mpf(gamma)
        if eta == 0:
            return mpmath.mpf(0)
        return eta**g / (eta**g + (1 - eta) ** g) ** (1 / g)


def hp_value(R, lam, beta_plus, beta_minus, role, phi, dps=50):
    with mpmath.workdps(dps):
        d = mpmath.mpf(phi) - mpmath.mpf(R)
        if role == "max":
            return d ** mpmath.mpf(beta_plus) if d >= 0 else -mpmath.mpf(lam) * (-d) ** mpmath.mpf(beta_minus)
        return mpmath.mpf(lam) * d ** mpmath.mpf(beta_minus) if d > 0 else -((-d) ** mpmath.mpf(beta_plus))


def textbook_cpt(R, lam, bp, bm, gp, gm, role, pairs):
    """Rank-dependent valuation written out directly from the definition.

    Outcomes are valued, ranked by value, split into gains and losses, and
    each gain gets ``w+(P(value >= v)) - w+(P(value > v))`` while each loss
    gets ``w-(P(value <= v)) - w-(P(value < v))``.  For the minimiser the
    ranking uses the negated value (lower is better) and the sign is kept.
    Cumulative probabilities are exact rationals, renormalised to total one.
    """
    merged = {}
    for t, q in pairs:
        merged[t] = merged.get(t, 0) + Fraction(q)
    mass = sum(merged.values())
    vals = [(float(hp_value(R, lam, bp, bm, role, t)), q / mass) for t, q in merged.items()]
    util = [((v if role == "max" else -v), v, q) for v, q in vals]

    def weight(gamma, frac):
        return hp_weight(gamma, mpmath.mpf(frac.numerator) / frac.denominator)

    util.sort()
    below = [Fraction(0)]  # below[i] = P(utility < util[i]); utilities are distinct after merging
    for _, _, q in util:
        below.append(below[-1] + q)
    total = mpmath.mpf(0)
    with mpmath.workdps(50):
        for i, (u, v, q) in enumerate(util):
            if u >= 0:
                w = weight(gp, 1 - below[i]) - weight(gp, 1 - below[i + 1])
            else:
                w = weight(gm, below[i + 1]) - weight(gm, below[i])
            total += w * v
    return float(total)


def geometric_outcomes(base, step, p, K):
    """First ``K`` outcomes of a single-node retry prospect, tail mass folded into the last."""
    pairs = [(base + k * step, (p**k) * (1 - p)) for k in range(K)]
    pairs[-1] = (pairs[-1][0], pairs[-1][1] + p**K)
    return pairs


def retry_chain_distribution(rates, penalties, base, K):
    """Outcome distribution of the mixed retry walk by dynamic programming.

    ``reach[k]`` is the probability of having accumulated knock-back counts
    ``k`` (a tuple) and starting a new attempt.  Each attempt either fails at
    the first node whose independent draw hits, or clears all nodes.  Built
    attempt by attempt up to ``K`` total failures, never using a closed-form
    coefficient.
    """
    m = len(rates)
    hit = []
    clear = 1.0
    for a in rates:
        hit.append(clear * a)
        clear *= 1 - a
    reach = {tuple([0] * m): 1.0}
    out = {}
    for total in range(K + 1):
        layer = {k: v for k, v in reach.items() if sum(k) == total}
        for k, prob in layer.items():
            t = base + sum(kj * c for kj, c in zip(k, penalties))
            out[t] = out.get(t, 0.0) + prob * clear
            if total < K:
                for j in range(m):
                    nxt = list(k)
                    nxt[j] += 1
                    nxt = tuple(nxt)
                    reach[nxt] = reach.get(nxt, 0.0) + prob * hit[j]
    return out, 1.0 - sum(out.values())


def dense_path_values(graph, t_a, x, nodes):
    """Expected remaining delivery time from every node of a path by a dense linear solve.

    Unknowns are the values at each path node.  At node ``v_i`` the UAV
    flies to ``v_{i+1}``; with probability ``a`` it is knocked back to the
    origin after the re-handling delay.
    """
    n = len(nodes)
    A = np.eye(n)
    b = np.zeros(n)
    for i in range(n - 1):
        nxt = nodes[i + 1]
        t = graph.travel_time[(nodes[i], nxt)]
        a = 0.0 if nxt in (nodes[0], nodes[-1]) else x[nxt] * graph.attack_prob[nxt]
        b[i] = t + a * t_a
        if i + 1 < n - 1:
            A[i, i + 1] -= 1 - a
        A[i, 0] -= a
    vals = np.linalg.solve(A, b)
    return dict(zip(nodes, vals))


def all_simple_paths(graph):
    """Every simple O-to-D path by breadth-first extension (no pruning, no ordering assumptions)."""
    out = []
    frontier = [(graph.origin,)]
    while frontier:
        new = []
        for p in frontier:
            for (i, j) in graph.travel_time:
                if i == p[-1] and j not in p:
                    q = p + (j,)
                    (out if j == graph.destination else new).append(q)
        frontier = new
    return sorted(out)


def simplex_grid(nodes, step):
    """All distributions on ``nodes`` with coordinates on a ``step`` grid."""
    n = int(round(1 / step))
    for comp in itertools.product(range(n + 1), repeat=len(nodes) - 1):
        if sum(comp) <= n:
            yield dict(zip(nodes, [c * step for c in comp] + [(n - sum(comp)) * step]))


def path_expectation(graph, t_a, x, nodes):
    return dense_path_values(graph, t_a, x, nodes)[nodes[0]]


def grid_mse(graph, t_a, nodes, step):
    """Best leader value over a simplex grid, follower minimising expected time by exhaustive scan."""
    paths = all_simple_paths(graph)
    best = -math.inf
    for x in simplex_grid(nodes, step):
        v = min(path_expectation(graph, t_a, _Getter(x), p) for p in paths)
        best = max(best, v)
    return best


class _Getter(dict):
    def __getitem__(self, k):
        return self.get(k, 0.0)


def as_getter(d):
    return _Getter(d)
