"""How behavioural valuations change who attacks where and which route is flown.

Both players value delivery-time lotteries relative to a reference time R,
weigh losses more than gains, and distort probabilities.  Run with
``python3 demos/prospect_theory_players.py``.  The mixed search here uses a
small budget so the script finishes in well under a minute; the sweeps in the
CLI use the full default search.
"""
from uavgame import (MixedInterdiction, PTGameSpec, PTParams, SearchConfig, enumerate_paths, reference_instance,
                     shortest_path, solve_MSE_PT, solve_SE, solve_SE_PT, valuation_pure_U, weight_fn)
from uavgame.ptgame import mixed_valuation_U, rational_response

inst = reference_instance()
g, t_a = inst.graph, inst.rehandling_time
paths = enumerate_paths(g)
h_s = shortest_path(g)

print("probability weighting at gamma 0.5 (small chances loom large, near-certainties shrink):")
for eta in (0.01, 0.1, 0.5, 0.9, 0.99):
    print(f"  w({eta}) = {weight_fn(0.5, eta):.3f}")

behavioural = PTParams.symmetric(R=20.0, lam=2.5, beta=0.6, gamma=0.5)
spec = PTGameSpec(g, t_a, behavioural, behavioural)

# The operator's valuation of flying the shortest route while node 8 is attacked.
print(f"\noperator's valuation of the shortest route under attack at node 8: "
      f"{valuation_pure_U(g, t_a, behavioural, 8, h_s):.3f} (lower is better)")

pt = solve_SE_PT(spec)
print(f"\npure equilibrium with behavioural players: node {pt.node}, route {paths.index(pt.path) + 1}, "
      f"expected time {pt.expected_time:.2f}")
print(f"  rational players for comparison: {solve_SE(g, t_a).value:.2f}")

res = solve_MSE_PT(spec, SearchConfig(restarts=0, max_evals=400))
print("\nmixed equilibrium with behavioural players (small search):")
print("  x =", {n: round(res.x[n], 3) for n in res.x.support()})
print(f"  operator flies route {paths.index(res.path) + 1}, expected time {res.expected_time:.3f}")

h_r, e_r = rational_response(spec, res.x)
print(f"  a rational operator facing the same x would fly route {paths.index(h_r) + 1}: {e_r:.3f}")
print(f"  operator's valuation of its route {res.xi_U:.3f} vs the shortest route "
      f"{mixed_valuation_U(spec, res.x, h_s):.3f}")

# A pure strategy seen through the mixed machinery gives the same valuation.
x8 = MixedInterdiction.pure(8)
print(f"\nconsistency: pure node 8 through the mixed prospect "
      f"{mixed_valuation_U(spec, x8, h_s):.6f} vs closed series {valuation_pure_U(g, t_a, behavioural, 8, h_s):.6f}")
