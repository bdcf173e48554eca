import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uavgame.cpt import PTParams, Role, valuation_mixed, valuation_pure_I, valuation_pure_U
from uavgame.graph import SecurityGraph, enumerate_paths, random_security_graph, shortest_path
from uavgame.mdp import MixedInterdiction, all_paths_best_response, origin_value_closed_form
from uavgame.pure import best_response, expected_delivery_time, solve_SE
from uavgame.ptgame import (PTGameSpec, brute_force_SE_PT, mixed_valuation_U, rational_response, rho_PT,
                            rho_PT_mixed, solve_MSE_PT, solve_SE_PT)
from uavgame.search import SearchConfig

SIXTH = PTParams.symmetric(20.0, 2.5, 0.6, 0.5)
RATIONAL = PTParams.rational()

params_st = st.builds(PTParams, st.floats(0, 40), st.floats(1.0, 4.0), st.floats(0.3, 1.0), st.floats(0.3, 1.0),
                      st.floats(0.3, 1.0), st.floats(0.3, 1.0))


def test_rational_reaction_matches_pure_game(ref_graph):
    spec = PTGameSpec(ref_graph, 5.0, RATIONAL, RATIONAL)
    for n in ref_graph.nodes:
        h = rho_PT(spec, n)
        assert expected_delivery_time(ref_graph, 5.0, n, h) == pytest.approx(
            expected_delivery_time(ref_graph, 5.0, n, best_response(ref_graph, 5.0, n)), rel=1e-9)


@settings(max_examples=30)
@given(st.integers(3, 9), st.integers(0, 10_000), st.floats(0, 10))
def test_rational_pt_equilibrium_is_the_pure_equilibrium(n, seed, t_a):
    g = random_security_graph(n, seed, p_range=(0.05, 0.8))
    eq = solve_SE_PT(PTGameSpec(g, t_a, RATIONAL, RATIONAL))
    assert eq.value_I == pytest.approx(solve_SE(g, t_a).value, rel=1e-6)


@settings(max_examples=30)
@given(params_st, st.integers(3, 8), st.integers(0, 10_000), st.floats(0, 10))
def test_reaction_is_argmin_of_operator_valuation(params, n, seed, t_a):
    g = random_security_graph(n, seed, p_range=(0.05, 0.8))
    spec = PTGameSpec(g, t_a, params, params)
    for node in g.nodes:
        h = rho_PT(spec, node)
        vals = [spec.V_U(node, q) for q in enumerate_paths(g)]
        assert spec.V_U(node, h) == min(vals)


@settings(max_examples=60)
@given(params_st, params_st, st.integers(3, 9), st.integers(0, 10_000), st.floats(0, 10))
def test_pt_equilibrium_matches_leader_scan(p_I, p_U, n, seed, t_a):
    g = random_security_graph(n, seed, p_range=(0.05, 0.8))
    spec = PTGameSpec(g, t_a, p_I, p_U)
    eq = solve_SE_PT(spec)
    _, _, v = brute_force_SE_PT(spec)
    assert eq.value_I == pytest.approx(v, abs=1e-6)


def test_reference_pt_equilibrium(ref_graph):
    spec = PTGameSpec(ref_graph, 5.0, SIXTH, SIXTH)
    eq = solve_SE_PT(spec)
    n, h, v = brute_force_SE_PT(spec)
    assert eq.value_I == pytest.approx(v, abs=1e-6)
    assert eq.expected_time == pytest.approx(expected_delivery_time(ref_graph, 5.0, eq.node, eq.path))


def test_certain_interdiction_is_best_for_interdictor():
    g = SecurityGraph.from_edges([(0, 1, 1.0), (1, 2, 1.0)], {0: 0, 1: 1.0, 2: 0}, 0, 2)
    spec = PTGameSpec(g, 1.0, SIXTH, SIXTH)
    eq = solve_SE_PT(spec)
    assert eq.node == 1 and math.isinf(eq.value_I)


def random_mixed(graph, rng):
    return MixedInterdiction(dict(zip(graph.nodes, rng.dirichlet(np.ones(len(graph.nodes))))))


def test_mixed_reaction_rational_matches_expected_time(ref_graph):
    spec = PTGameSpec(ref_graph, 5.0, RATIONAL, RATIONAL)
    rng = np.random.default_rng(11)
    for _ in range(5):
        x = random_mixed(ref_graph, rng)
        h = rho_PT_mixed(spec, x)
        _, v = all_paths_best_response(ref_graph, 5.0, x)
        assert origin_value_closed_form(ref_graph, 5.0, x, h) == pytest.approx(v, rel=1e-6)


def test_rational_reply_never_slower_than_pt_reply(ref_graph):
    spec = PTGameSpec(ref_graph, 5.0, SIXTH, SIXTH)
    rng = np.random.default_rng(12)
    for _ in range(5):
        x = random_mixed(ref_graph, rng)
        h_pt = rho_PT_mixed(spec, x)
        h_r, e_r = rational_response(spec, x)
        assert e_r <= origin_value_closed_form(ref_graph, 5.0, x, h_pt) + 1e-12


def test_pt_reply_valued_no_worse_than_shortest_route(ref_graph):
    # the operator's own valuation of its reply never exceeds that of the shortest route
    spec = PTGameSpec(ref_graph, 5.0, SIXTH, SIXTH)
    rng = np.random.default_rng(13)
    h_s = shortest_path(ref_graph)
    for _ in range(5):
        x = random_mixed(ref_graph, rng)
        h = rho_PT_mixed(spec, x)
        assert mixed_valuation_U(spec, x, h) <= mixed_valuation_U(spec, x, h_s)


def test_pure_x_mixed_reaction_agrees_with_pure_reaction(ref_graph):
    spec = PTGameSpec(ref_graph, 5.0, SIXTH, SIXTH)
    for n in (3, 5, 8):
        h_mixed = rho_PT_mixed(spec, MixedInterdiction.pure(n))
        assert spec.V_U(n, h_mixed) == pytest.approx(spec.V_U(n, rho_PT(spec, n)), abs=1e-6)


def test_mse_pt_small_search(ref_graph):
    spec = PTGameSpec(ref_graph, 5.0, SIXTH, SIXTH)
    res = solve_MSE_PT(spec, SearchConfig(restarts=0, max_evals=300))
    x, h = res.x, res.path
    assert h == rho_PT_mixed(spec, x)
    assert res.xi_I == pytest.approx(valuation_mixed(SIXTH, Role.MAXIMIZER, ref_graph, 5.0, x, h), rel=1e-12)
    assert res.xi_U == pytest.approx(valuation_mixed(SIXTH, Role.MINIMIZER, ref_graph, 5.0, x, h), rel=1e-12)
    assert res.expected_time == pytest.approx(origin_value_closed_form(ref_graph, 5.0, x, h), rel=1e-12)
    # at least as good for the interdictor as every pure starting point it tried
    for n in shortest_path(ref_graph).nodes:
        h_n = rho_PT_mixed(spec, MixedInterdiction.pure(n))
        assert res.xi_I >= valuation_mixed(SIXTH, Role.MAXIMIZER, ref_graph, 5.0, MixedInterdiction.pure(n), h_n) - 1e-9


def test_divergent_mixed_valuation_is_infinite():
    g = SecurityGraph.from_edges([(0, 1, 1.0), (1, 2, 1.0)], {0: 0, 1: 1.0, 2: 0}, 0, 2)
    spec = PTGameSpec(g, 1.0, SIXTH, SIXTH)
    h = enumerate_paths(g)[0]
    assert math.isinf(mixed_valuation_U(spec, MixedInterdiction.pure(1), h))


def test_pure_valuations_on_spec_match_module_functions(ref_graph, ref_paths):
    spec = PTGameSpec(ref_graph, 5.0, SIXTH, SIXTH)
    h = ref_paths[7]
    assert spec.V_I(8, h) == valuation_pure_I(ref_graph, 5.0, SIXTH, 8, h)
    assert spec.V_U(8, h) == valuation_pure_U(ref_graph, 5.0, SIXTH, 8, h)
