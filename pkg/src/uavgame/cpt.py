"""Cumulative prospect theory valuations of delivery-time prospects.

Two roles appear.  The interdictor is a *maximizer*: delivery times above
its reference point are gains.  The operator is a *minimizer*: delivery
times above its reference point are losses and carry a positive valuation
that it tries to drive down.  Internally a minimizer's outcome is scored with
the utility ``-v_U(phi)`` and the usual rank-dependent machinery is applied;
the result is negated back.
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .graph import Path, SecurityGraph
from .mdp import MixedInterdiction


class DivergentProspectError(ValueError):
    """The UAV is knocked back with certainty, so the prospect never terminates."""


class TruncationError(RuntimeError):
    """The requested series tolerance cannot be met within the configured caps."""


class Role(str, enum.Enum):
    MAXIMIZER = "maximizer"
    MINIMIZER = "minimizer"

    @classmethod
    def parse(cls, role) -> "Role":
        if isinstance(role, Role):
            return role
        aliases = {"i": cls.MAXIMIZER, "interdictor": cls.MAXIMIZER, "u": cls.MINIMIZER, "operator": cls.MINIMIZER}
        key = str(role).lower()
        return aliases.get(key) or cls(key)


INTERDICTOR = Role.MAXIMIZER
OPERATOR = Role.MINIMIZER


@dataclass(frozen=True)
class PTParams:
    R: float = 0.0
    lam: float = 1.0
    beta_plus: float = 1.0
    beta_minus: float = 1.0
    gamma_plus: float = 1.0
    gamma_minus: float = 1.0

    def __post_init__(self):
        for name in ("beta_plus", "beta_minus", "gamma_plus", "gamma_minus"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")
        if not self.lam > 0:
            raise ValueError(f"loss multiplier must be positive, got {self.lam}")

    @classmethod
    def rational(cls) -> "PTParams":
        return cls()

    @classmethod
    def symmetric(cls, R: float, lam: float, beta: float, gamma: float) -> "PTParams":
        return cls(R, lam, beta, beta, gamma, gamma)

    @classmethod
    def from_dict(cls, d: dict) -> "PTParams":
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        if "beta" in d:
            d.setdefault("beta_plus", d["beta"])
            d.setdefault("beta_minus", d.pop("beta"))
        if "gamma" in d:
            d.setdefault("gamma_plus", d["gamma"])
            d.setdefault("gamma_minus", d.pop("gamma"))
        return cls(**{k: float(v) for k, v in d.items()})

    def to_dict(self) -> dict:
        return {"R": self.R, "lambda": self.lam, "beta_plus": self.beta_plus, "beta_minus": self.beta_minus,
                "gamma_plus": self.gamma_plus, "gamma_minus": self.gamma_minus}

    def replace(self, **changes) -> "PTParams":
        d = {"R": self.R, "lam": self.lam, "beta_plus": self.beta_plus, "beta_minus": self.beta_minus,
             "gamma_plus": self.gamma_plus, "gamma_minus": self.gamma_minus}
        d.update(changes)
        return PTParams(**d)


@dataclass(frozen=True)
class TruncationConfig:
    """Series truncation controls.

    ``epsilon`` bounds the probability mass (and, where affordable, the
    weighted tail) left out of an infinite prospect.  ``k_max`` caps the
    knock-back count needed to reach that mass in a mixed prospect and
    ``max_outcomes`` the size of its enumeration.  ``refine_outcomes`` is the
    outcome budget for enumerating further to shrink the weighted tail, and
    ``series_cap`` limits the terms of a single-node series.
    """

    epsilon: float = 1e-8
    k_max: int = 200
    max_outcomes: int = 5_000_000
    refine_outcomes: int = 50_000
    series_cap: int = 1_000_000

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.k_max < 1:
            raise ValueError("k_max must be at least 1")


@dataclass(frozen=True, eq=False)
class Prospect:
    """Distinct outcomes in ascending order with their probabilities.

    ``truncation_tail`` is the probability mass of outcomes beyond the
    enumerated ones (all larger than the last listed outcome).
    """

    outcomes: np.ndarray
    probs: np.ndarray
    truncation_tail: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        t = np.asarray(self.outcomes, dtype=float).ravel()
        q = np.asarray(self.probs, dtype=float).ravel()
        if t.shape != q.shape:
            raise ValueError("outcomes and probabilities differ in length")
        if np.any(q < 0):
            raise ValueError("probabilities must be nonnegative")
        t, q = merge_outcomes(t, q)
        keep = q > 0
        object.__setattr__(self, "outcomes", t[keep])
        object.__setattr__(self, "probs", q[keep])
        total = float(np.sum(self.probs)) + self.truncation_tail
        if self.truncation_tail < 0 or abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total}, expected 1")

    @classmethod
    def sure(cls, outcome: float) -> "Prospect":
        return cls(np.array([outcome]), np.array([1.0]))

    @classmethod
    def from_pairs(cls, pairs, truncation_tail: float = 0.0) -> "Prospect":
        pairs = list(pairs)
        return cls(np.array([p[0] for p in pairs], dtype=float), np.array([p[1] for p in pairs], dtype=float),
                   truncation_tail)

    def __len__(self) -> int:
        return len(self.outcomes)

    @property
    def mean(self) -> float:
        return float(np.dot(self.outcomes, self.probs))


def merge_outcomes(times: np.ndarray, probs: np.ndarray, rtol: float = 1e-11):
    """Sort outcomes and merge (near-)equal ones, summing their probabilities."""
    if len(times) == 0:
        return times, probs
    order = np.argsort(times, kind="stable")
    t = times[order]
    q = probs[order]
    gap = np.diff(t) > rtol * np.maximum(1.0, np.abs(t[1:]))
    starts = np.concatenate(([0], np.flatnonzero(gap) + 1))
    return t[starts], np.add.reduceat(q, starts)


def value_fn(params: PTParams, role, phi):
    """Reference-dependent value of delivery time(s) ``phi`` for the given role.

    Maximizer: ``(phi - R)**beta+`` at or above ``R``, ``-lam * (R - phi)**beta-`` below.
    Minimizer: ``lam * (phi - R)**beta-`` above ``R``, ``-(R - phi)**beta+`` at or below.
    """
    role = Role.parse(role)
    phi = np.asarray(phi, dtype=float)
    d = phi - params.R
    if role is Role.MAXIMIZER:
        out = np.where(d >= 0, np.abs(d) ** params.beta_plus, -params.lam * np.abs(d) ** params.beta_minus)
    else:
        out = np.where(d > 0, params.lam * np.abs(d) ** params.beta_minus, -np.abs(d) ** params.beta_plus)
    return out if out.ndim else float(out)


def weight_fn(gamma: float, eta):
    """Inverse-S probability weighting ``eta^g / (eta^g + (1 - eta)^g)^(1/g)``."""
    eta = np.clip(np.asarray(eta, dtype=float), 0.0, 1.0)
    if gamma == 1.0:
        return eta if eta.ndim else float(eta)
    with np.errstate(divide="ignore", invalid="ignore"):
        num = eta**gamma
        out = num / (num + (1.0 - eta) ** gamma) ** (1.0 / gamma)
    out = np.where(eta <= 0.0, 0.0, np.where(eta >= 1.0, 1.0, out))
    return out if out.ndim else float(out)


def decision_weights(params: PTParams, role, prospect: Prospect) -> tuple[np.ndarray, np.ndarray]:
    """Rank-dependent decision weights and values, aligned with ``prospect.outcomes``.

    Any truncation tail is folded into the largest outcome first.  Equal
    outcomes need not be merged: adjacent ranks telescope to the same total.
    """
    role = Role.parse(role)
    t = prospect.outcomes
    q = prospect.probs.copy()
    if prospect.truncation_tail > 0:
        q[-1] += prospect.truncation_tail
    values = value_fn(params, role, t)
    # outcomes are sorted by time; utility rises with time for the maximizer and falls for the minimizer
    step = 1 if role is Role.MAXIMIZER else -1
    us, qs = (values if step == 1 else -values)[::step], q[::step]
    qs = qs / qs.sum()
    head = np.cumsum(qs)  # P(outcome at least as bad)
    tail = np.concatenate((np.cumsum(qs[::-1])[::-1], [0.0]))  # P(at least as good)
    # the weighting function is infinitely steep at 1, so rounding in the full mass must not leak in
    head[-1] = tail[0] = 1.0
    gains = us >= 0
    w = np.empty(len(us))
    gi = np.flatnonzero(gains)
    li = np.flatnonzero(~gains)
    w[gi] = weight_fn(params.gamma_plus, tail[gi]) - weight_fn(params.gamma_plus, tail[gi + 1])
    prev = np.concatenate(([0.0], head[:-1]))
    w[li] = weight_fn(params.gamma_minus, head[li]) - weight_fn(params.gamma_minus, prev[li])
    return w[::step], values


def prospect_value(params: PTParams, role, prospect: Prospect) -> float:
    """Cumulative prospect theory valuation of ``prospect``.

    Gains are weighted from the best outcome inwards with the ``gamma_plus``
    weighting function, losses from the worst outcome inwards with
    ``gamma_minus``.  For the minimizer the sign convention of its value
    function is kept, so larger means worse.
    """
    if len(prospect) == 0:
        raise ValueError("empty prospect")
    weights, values = decision_weights(params, role, prospect)
    return float(np.dot(weights, values))


# --- single-node (geometric) prospects ----------------------------------------

def _tail_cutoff(start: int, ratio: float, offset: float, step: float, scale: float, eps: float, cap: int) -> int:
    """Smallest ``K >= start`` with ``scale * sum_{k>=K} (1 + |offset| + k*step) * ratio**k < eps``."""
    if ratio <= 0.0:
        return start
    if ratio >= 1.0:
        raise TruncationError("series ratio is not below one")
    c = 1.0 + abs(offset)
    lr = math.log(ratio)
    one = 1.0 - ratio

    def bound(K):
        rk = math.exp(K * lr)
        return scale * (c * rk / one + step * rk * (K * one + ratio) / one**2)

    if bound(start) < eps:
        return start
    lo, hi = start, max(start + 1, 2 * start + 16)
    while bound(hi) >= eps:
        lo, hi = hi, 2 * hi
        if hi > 4 * cap:
            break
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if bound(mid) < eps:
            hi = mid
        else:
            lo = mid
    if hi > cap:
        raise TruncationError(f"series needs {hi} terms, above the cap of {cap}")
    return hi


def _one_minus_pow(p, k):
    """``1 - p**k`` without cancellation."""
    return -np.expm1(k * math.log(p))


def series_cutoff(params: PTParams, role, base: float, step: float, p: float, trunc: TruncationConfig) -> int:
    """Number of terms kept when summing the single-node valuation series."""
    role = Role.parse(role)
    d0 = base - params.R
    if role is Role.MAXIMIZER:
        n_head = 0 if d0 >= 0 else int(min(trunc.series_cap, math.floor(-d0 / step) + 1)) if step > 0 else trunc.series_cap
        gamma, scale = params.gamma_plus, 1.0
    else:
        n_head = 0 if d0 > 0 else int(min(trunc.series_cap, math.floor(-d0 / step) + 1)) if step > 0 else trunc.series_cap
        gamma, scale = params.gamma_minus, params.lam
    return _tail_cutoff(n_head, p**gamma, d0, step, scale, trunc.epsilon, trunc.series_cap)


def _pure_terms(graph, t_a, n, h):
    if n not in h or graph.attack_prob[n] == 0.0:
        return h.length, 0.0, 0.0
    p = graph.attack_prob[n]
    if p >= 1.0:
        raise DivergentProspectError(f"node {n!r} interdicts with certainty: divergent prospect")
    return h.length, h.time_to(n) + t_a, p


def valuation_pure_I(graph: SecurityGraph, t_a: float, params: PTParams, n, h: Path,
                     trunc: TruncationConfig = TruncationConfig(), n_terms: int | None = None) -> float:
    """Interdictor's valuation of the pure pair ``(n, h)``.

    Losses (delivery times below ``R``) form a finite head of the geometric
    prospect, weighted through ``1 - p**k``; gains form an infinite tail
    weighted through ``p**k`` and summed until the tail bound drops below
    ``trunc.epsilon``.  ``n_terms`` overrides the automatic cutoff.
    """
    base, step, p = _pure_terms(graph, t_a, n, h)
    if p == 0.0:
        return value_fn(params, Role.MAXIMIZER, base)
    K = series_cutoff(params, Role.MAXIMIZER, base, step, p, trunc) if n_terms is None else n_terms
    k = np.arange(K)
    delta = base + k * step - params.R
    loss = delta < 0
    kl, kg = k[loss], k[~loss]
    w_minus = weight_fn(params.gamma_minus, _one_minus_pow(p, kl + 1)) - weight_fn(params.gamma_minus, _one_minus_pow(p, kl))
    losses = -params.lam * (-delta[loss]) ** params.beta_minus * w_minus
    w_plus = weight_fn(params.gamma_plus, p**kg) - weight_fn(params.gamma_plus, p ** (kg + 1))
    gains = delta[~loss] ** params.beta_plus * w_plus
    return float(math.fsum(losses) + math.fsum(gains))


def valuation_pure_U(graph: SecurityGraph, t_a: float, params: PTParams, n, h: Path,
                     trunc: TruncationConfig = TruncationConfig(), n_terms: int | None = None) -> float:
    """Operator's valuation of the pure pair ``(n, h)`` (lower is better).

    Gains (delivery times at or below ``R``) form a finite head weighted
    through ``1 - p**k``; losses form the infinite tail weighted through
    ``p**k`` and scaled by the loss multiplier.
    """
    base, step, p = _pure_terms(graph, t_a, n, h)
    if p == 0.0:
        return value_fn(params, Role.MINIMIZER, base)
    K = series_cutoff(params, Role.MINIMIZER, base, step, p, trunc) if n_terms is None else n_terms
    k = np.arange(K)
    delta = base + k * step - params.R
    gain = delta <= 0
    kg, kl = k[gain], k[~gain]
    w_plus = weight_fn(params.gamma_plus, _one_minus_pow(p, kg + 1)) - weight_fn(params.gamma_plus, _one_minus_pow(p, kg))
    gains = -((-delta[gain]) ** params.beta_plus) * w_plus
    w_minus = weight_fn(params.gamma_minus, p**kl) - weight_fn(params.gamma_minus, p ** (kl + 1))
    losses = params.lam * delta[~gain] ** params.beta_minus * w_minus
    return float(math.fsum(gains) + math.fsum(losses))


def valuation_pure(graph, t_a, params, role, n, h, trunc: TruncationConfig = TruncationConfig()) -> float:
    role = Role.parse(role)
    fn = valuation_pure_I if role is Role.MAXIMIZER else valuation_pure_U
    return fn(graph, t_a, params, n, h, trunc)


# --- mixed prospects ------------------------------------------------------------

def _path_risks(graph, t_a, x, h):
    """Interior nodes of ``h`` with positive knock-back rate: (rates, penalties)."""
    rates, penalties = [], []
    for n in h.interior:
        a = x[n] * graph.attack_prob[n]
        if a > 0.0:
            if 1.0 - a <= 1e-12:
                raise DivergentProspectError(f"node {n!r} interdicts with certainty: divergent prospect")
            rates.append(a)
            penalties.append(h.time_to(n) + t_a)
    return rates, penalties


@functools.lru_cache(maxsize=None)
def _budget_cutoff(m: int, budget: int) -> int:
    """Largest ``K`` whose enumeration over ``m`` nodes holds at most ``budget`` outcomes."""
    K = 0
    while math.comb(K + 1 + m, m) <= budget:
        K += 1
    return K


def mixed_cutoff(rates, penalties, base: float, trunc: TruncationConfig, params: PTParams | None = None) -> int:
    """Largest total knock-back count to enumerate.

    The total number of knock-backs is geometric with ratio
    ``F = 1 - prod(1 - a)``, so stopping at ``K`` leaves mass ``F**(K+1)``.
    The smallest ``K`` leaving at most ``trunc.epsilon`` is mandatory.  When
    ``params`` are given the enumeration is extended, within the
    ``trunc.refine_outcomes`` budget, until the probability-weighted tail
    (weights bounded by ``mass**gamma``) also drops below ``epsilon``.
    """
    F = 1.0 - math.prod(1.0 - a for a in rates)
    if F <= 0.0:
        return 0
    K = max(int(math.ceil(math.log(trunc.epsilon) / math.log(F))) - 1, 0)
    if F ** (K + 1) > trunc.epsilon:
        K += 1
    if K > trunc.k_max:
        raise TruncationError(f"truncation insufficient: {K} knock-backs needed, k_max is {trunc.k_max}")
    if params is None:
        return K
    budget = _budget_cutoff(len(rates), trunc.refine_outcomes)
    if budget <= K:
        return K
    gamma = min(params.gamma_plus, params.gamma_minus)
    try:
        weighted = _tail_cutoff(0, F**gamma, base - params.R, max(penalties), max(params.lam, 1.0),
                                trunc.epsilon, budget)
    except TruncationError:
        weighted = budget
    return max(K, weighted)


def _enumerate_counts(rates, penalties, base, K):
    """All knock-back count vectors with total at most ``K``: (times, probabilities)."""
    lg = gammaln(np.arange(1, K + 2))  # lg[s] = log(s!)
    surv = 1.0
    s = np.zeros(1, dtype=np.int64)
    times = np.array([base])
    logw = np.zeros(1)
    for a, c in zip(rates, penalties):
        log_xi = math.log(surv * a)
        surv *= 1.0 - a
        reps = K - s + 1
        parent = np.repeat(np.arange(len(s)), reps)
        offsets = np.cumsum(reps) - reps
        k = np.arange(parent.size) - np.repeat(offsets, reps)
        s_parent = s[parent]
        s = s_parent + k
        # multinomial coefficient built up as a product of binomials
        logw = logw[parent] + k * log_xi + lg[s] - lg[s_parent] - lg[k]
        times = times[parent] + k * c
    return times, np.exp(logw + math.log(surv)), 1.0 - surv


def build_mixed_prospect(graph: SecurityGraph, t_a: float, x: MixedInterdiction, h: Path,
                         trunc: TruncationConfig = TruncationConfig(), params: PTParams | None = None) -> Prospect:
    """Delivery-time prospect of path ``h`` under mixed interdiction ``x``.

    Enumerates knock-back count vectors ``(k_1, ..., k_m)`` over the risky
    interior nodes with total at most the cutoff ``K``.  The outcome is
    ``f(D) + sum_j k_j (f(n_j) + t_a)``; its probability is the chance of
    one particular failure ordering times the number of orderings (a
    multinomial coefficient), times the final clean run.  Passing the
    valuing player's ``params`` lengthens the enumeration for accuracy of
    probability-weighted valuations (see :func:`mixed_cutoff`).
    """
    rates, penalties = _path_risks(graph, t_a, x, h)
    base = h.length
    if not rates:
        return Prospect.sure(base)
    K = mixed_cutoff(rates, penalties, base, trunc, params)
    size = math.comb(K + len(rates), len(rates))
    if size > trunc.max_outcomes:
        raise TruncationError(f"truncation insufficient: enumeration would hold {size} outcomes")
    times, probs, F = _enumerate_counts(rates, penalties, base, K)
    return Prospect(times, probs, F ** (K + 1), meta={"K": K, "failure_prob": F})


def valuation_mixed(params: PTParams, role, graph: SecurityGraph, t_a: float, x: MixedInterdiction, h: Path,
                    trunc: TruncationConfig = TruncationConfig()) -> float:
    """PT valuation of the pair ``(x, h)`` for the given role."""
    prospect = build_mixed_prospect(graph, t_a, x, h, trunc, params)
    return prospect_value(params, role, prospect)


class MixedValuator:
    """Memoised ``valuation_mixed`` for repeated calls inside a search.

    A path's valuation only depends on the knock-back rates along that path,
    so results are cached per (path, rates) key.
    """

    def __init__(self, graph: SecurityGraph, t_a: float, params: PTParams, role,
                 trunc: TruncationConfig = TruncationConfig(), maxsize: int = 200_000):
        self.graph, self.t_a, self.params = graph, t_a, params
        self.role = Role.parse(role)
        self.trunc = trunc
        self.maxsize = maxsize
        self._cache: dict = {}

    def __call__(self, x: MixedInterdiction, h: Path) -> float:
        key = (h.nodes, tuple(x[n] * self.graph.attack_prob[n] for n in h.interior))
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        try:
            val = valuation_mixed(self.params, self.role, self.graph, self.t_a, x, h, self.trunc)
        except DivergentProspectError:
            # endless delivery: worst case for the operator, best for the interdictor
            val = math.inf
        if len(self._cache) >= self.maxsize:
            self._cache.clear()
        self._cache[key] = val
        return val
