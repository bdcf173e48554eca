"""Monte Carlo simulation of UAV deliveries under interdiction.

Each trial walks the path from the origin.  At every interior node the
attack is drawn independently with probability ``x_n * p_n``; a hit costs
the time flown so far plus the re-handling delay and restarts the walk.

Trials are split into fixed-size blocks, each with its own random stream
spawned from the seed, so the result does not depend on how many worker
threads process the blocks.
"""
from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .graph import Path, SecurityGraph
from .mdp import MixedInterdiction

BLOCK_SIZE = 1 << 16


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimulationReport:
    trials: int
    mean_delivery_time: float
    std_error: float
    histogram: dict = field(repr=False)
    truncated_runs: int = 0

    @property
    def completed(self) -> int:
        return self.trials - self.truncated_runs

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "completed": self.completed,
            "truncated_runs": self.truncated_runs,
            "mean_delivery_time": self.mean_delivery_time,
            "std_error": self.std_error,
            "histogram": {repr(float(k)): v for k, v in sorted(self.histogram.items())},
        }


def _simulate_block(rates, penalties, base, n, step_cap, seed_seq):
    rng = np.random.default_rng(seed_seq)
    m = len(rates)
    counts = np.zeros((n, m), dtype=np.int64)
    if m == 0:
        return counts, np.ones(n, dtype=bool)
    failures = np.zeros(n, dtype=np.int64)
    active = np.arange(n)
    done = np.zeros(n, dtype=bool)
    while active.size:
        hit = rng.random((active.size, m)) < rates
        knocked = hit.any(axis=1)
        where = np.argmax(hit, axis=1)
        done[active[~knocked]] = True
        ka, kw = active[knocked], where[knocked]
        np.add.at(counts, (ka, kw), 1)
        failures[ka] += 1
        active = ka[failures[ka] < step_cap]
    return counts, done


def simulate_delivery(graph: SecurityGraph, t_a: float, x: MixedInterdiction, h: Path, trials: int, seed: int,
                      step_cap: int = 10_000, workers: int = 1) -> SimulationReport:
    """Simulate ``trials`` deliveries along ``h`` and summarise the delivery times."""
    if trials < 1:
        raise ValueError("trials must be positive")
    rates, penalties = [], []
    for n in h.interior:
        a = x[n] * graph.attack_prob[n]
        if a > 0.0:
            rates.append(a)
            penalties.append(h.time_to(n) + t_a)
    rates = np.array(rates)
    penalties = np.array(penalties)
    base = h.length

    sizes = [BLOCK_SIZE] * (trials // BLOCK_SIZE)
    if trials % BLOCK_SIZE:
        sizes.append(trials % BLOCK_SIZE)
    streams = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(rates, penalties, base, s, step_cap, ss) for s, ss in zip(sizes, streams)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            blocks = list(pool.map(lambda j: _simulate_block(*j), jobs))
    else:
        blocks = [_simulate_block(*j) for j in jobs]

    hist = Counter()
    count, mean, m2 = 0, 0.0, 0.0
    for counts, done in blocks:
        times = base + counts[done] @ penalties if len(penalties) else np.full(int(done.sum()), base)
        nb = times.size
        if nb == 0:
            continue
        # combine block statistics (Chan et al. parallel variance update), in block order
        bm = float(np.mean(times))
        bm2 = float(np.sum((times - bm) ** 2))
        delta = bm - mean
        total = count + nb
        mean += delta * nb / total
        m2 += bm2 + delta * delta * count * nb / total
        count = total
        keys, freq = np.unique(np.round(times, 9), return_counts=True)
        hist.update(dict(zip(keys.tolist(), freq.tolist())))
    if count == 0:
        raise SimulationError("every run hit the step cap")
    std = math.sqrt(m2 / (count - 1)) if count > 1 else 0.0
    histogram = {k: v / count for k, v in sorted(hist.items())}
    return SimulationReport(trials, mean, std / math.sqrt(count), histogram, trials - count)
