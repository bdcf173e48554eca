"""Walk through the fully rational game on the bundled ten-node instance.

Run with ``python3 demos/pure_and_mixed_interdiction.py``.  Takes a few seconds.
"""
import numpy as np

from uavgame import (MixedInterdiction, SearchConfig, all_paths_best_response, enumerate_paths, reference_instance,
                     shortest_path, simulate_delivery, solve_MSE, solve_SE)
from uavgame.mdp import PathTable

inst = reference_instance()
g, t_a = inst.graph, inst.rehandling_time
paths = enumerate_paths(g)


def label(h):
    return f"route {paths.index(h) + 1} {h.interior}"


print(f"{len(g.nodes)} nodes, {len(paths)} routes, re-handling delay {t_a}")
h_s = shortest_path(g)
print(f"shortest: {label(h_s)}, length {h_s.length:.2f}\n")

# Pure interdiction: one node, chosen knowing the operator will reroute.
eq = solve_SE(g, t_a)
print(f"pure equilibrium: attack node {eq.node}, operator flies {label(eq.path)}, expected time {eq.value:.2f}")
print(f"  nodes where the operator keeps the shortest route: {eq.candidates['non_deviation_set']}\n")

# Mixed interdiction: a distribution over nodes.
x, h, value, res = solve_MSE(g, t_a, SearchConfig(restarts=3))
print("mixed equilibrium (pattern search):")
for n in sorted(x.support(), key=lambda n: -x[n]):
    print(f"  node {n}: {x[n]:.3f}")
print(f"  operator flies {label(h)}, expected time {value:.4f}, {res.evals_used} evaluations")

# Several routes tie at the optimum; the interdictor makes the operator indifferent.
vals = PathTable(g).origin_values(np.array([x[n] for n in g.nodes]), t_a)
order = np.argsort(vals)[:5]
print("  closest routes:", ", ".join(f"{i + 1}: {vals[i]:.4f}" for i in order))

# A hand-picked strategy on three nodes, for comparison.
alt = MixedInterdiction({5: 0.48, 8: 0.31, 9: 0.21})
h_alt, v_alt = all_paths_best_response(g, t_a, alt)
print(f"\nthree-node strategy 5/8/9 = .48/.31/.21: operator flies {label(h_alt)}, expected time {v_alt:.4f}")

rep = simulate_delivery(g, t_a, alt, h_alt, 500_000, seed=1)
print(f"  simulated: {rep.mean_delivery_time:.4f} +/- {rep.std_error:.4f}")
