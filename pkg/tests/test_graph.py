import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import all_simple_paths
from uavgame.graph import (CertainInterdictionWarning, GraphValidationError, PathCountError, SecurityGraph,
                           count_policies, enumerate_paths, graph_from_dict, graph_to_dict, load_instance,
                           make_path, path_by_label, phase_connected_graph, random_security_graph, shortest_path,
                           shortest_path_excluding, validate)


def line_graph(times=(1.0, 2.0, 3.0), probs=(0.0, 0.5, 0.2, 0.0)):
    edges = [(i, i + 1, t) for i, t in enumerate(times)]
    return SecurityGraph.from_edges(edges, dict(enumerate(probs)), 0, len(times))


def test_reference_instance_shape(ref_graph, ref_paths):
    assert len(ref_graph.nodes) == 10
    assert len(ref_graph.edges) == 18
    assert len(ref_paths) == 18
    assert count_policies(ref_graph) == 216


def test_reference_path_numbering_matches_enumeration(ref, ref_paths):
    labels = ref.metadata["path_labels"]
    for num, interior in labels.items():
        assert list(ref_paths[int(num) - 1].interior) == interior


def test_reference_path_lengths(ref_graph):
    # the three shortest routes, in order
    assert path_by_label(ref_graph, "3,5,8").length == pytest.approx(16.76)
    assert path_by_label(ref_graph, "3,6,8").length == pytest.approx(17.16)
    assert path_by_label(ref_graph, "3,5,9").length == pytest.approx(17.68)
    assert shortest_path(ref_graph).interior == (3, 5, 8)


def test_reference_riskiest_nodes(ref_graph):
    ranked = sorted(ref_graph.nodes, key=lambda n: -ref_graph.attack_prob[n])
    assert ranked[:3] == [8, 5, 3]


def test_phase_graph_counts():
    g = phase_connected_graph([1, 3, 2, 3, 1], rng=0)
    assert len(enumerate_paths(g)) == 18
    assert count_policies(g) == 216


@given(st.lists(st.integers(1, 3), min_size=1, max_size=4))
def test_phase_graph_path_count_is_layer_product(inner):
    g = phase_connected_graph([1, *inner, 1], rng=1)
    assert len(enumerate_paths(g)) == math.prod(inner)


@given(st.integers(3, 9), st.integers(0, 10_000))
def test_enumeration_matches_breadth_first_oracle(n, seed):
    g = random_security_graph(n, seed)
    got = [h.nodes for h in enumerate_paths(g)]
    assert got == all_simple_paths(g)
    assert got == sorted(got)


@given(st.integers(3, 9), st.integers(0, 10_000))
def test_shortest_path_is_minimum_over_all_paths(n, seed):
    g = random_security_graph(n, seed)
    paths = enumerate_paths(g)
    best = min(h.length for h in paths)
    assert shortest_path(g).length == pytest.approx(best, abs=1e-12)


@given(st.integers(4, 9), st.integers(0, 10_000))
def test_shortest_path_excluding_avoids_node(n, seed):
    g = random_security_graph(n, seed)
    for v in g.nodes:
        if v in (g.origin, g.destination):
            continue
        h = shortest_path_excluding(g, v)
        avoiding = [p for p in enumerate_paths(g) if v not in p]
        if not avoiding:
            assert h is None
        else:
            assert v not in h
            assert h.length == pytest.approx(min(p.length for p in avoiding), abs=1e-12)


def test_shortest_path_excluding_rejects_endpoints(ref_graph):
    with pytest.raises(ValueError):
        shortest_path_excluding(ref_graph, ref_graph.origin)


def test_lexicographic_tie_break():
    g = SecurityGraph.from_edges([(0, 1, 1.0), (0, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)],
                                 {0: 0, 1: 0.1, 2: 0.1, 3: 0}, 0, 3)
    assert shortest_path(g).nodes == (0, 1, 3)


def test_validation_collects_violations():
    g = SecurityGraph.from_edges([(0, 1, -1.0), (1, 2, 1.0), (2, 1, 1.0)], {0: 0.2, 1: 1.5, 2: 0}, 0, 2)
    with pytest.raises(GraphValidationError) as err:
        validate(g)
    assert len(err.value.violations) >= 3


def test_unreachable_destination_rejected():
    g = SecurityGraph.from_edges([(0, 1, 1.0)], {0: 0, 1: 0, 2: 0}, 0, 2, nodes=[0, 1, 2])
    with pytest.raises(GraphValidationError):
        validate(g)


def test_certain_interdiction_warns():
    g = line_graph(probs=(0.0, 1.0, 0.2, 0.0))
    with pytest.warns(CertainInterdictionWarning):
        validate(g)


def test_path_count_guard():
    g = phase_connected_graph([1, 4, 4, 4, 1], rng=0)
    with pytest.raises(PathCountError):
        enumerate_paths(g, max_paths=10)


def test_path_prefix_times():
    g = line_graph()
    h = make_path(g, [0, 1, 2, 3])
    assert h.time_to(2) == pytest.approx(3.0)
    assert h.length == pytest.approx(6.0)
    assert h.interior == (1, 2)


def test_make_path_rejects_missing_edge():
    g = line_graph()
    with pytest.raises(ValueError):
        make_path(g, [0, 2, 3])


def test_instance_round_trip(tmp_path, ref):
    data = graph_to_dict(ref.graph, ref.rehandling_time)
    f = tmp_path / "inst.json"
    f.write_text(json.dumps(data))
    back = load_instance(f)
    assert back.graph.fingerprint() == ref.graph.fingerprint()
    assert back.rehandling_time == ref.rehandling_time


def test_instance_with_string_nodes():
    inst = graph_from_dict({"nodes": ["O", "a", "D"], "origin": "O", "destination": "D",
                            "edges": [{"from": "O", "to": "a", "time": 1}, {"from": "a", "to": "D", "time": 2}],
                            "attack_prob": {"a": 0.3}, "rehandling_time": 4})
    assert [h.nodes for h in enumerate_paths(inst.graph)] == [("O", "a", "D")]
    assert inst.graph.attack_prob["O"] == 0.0


def test_random_graph_is_valid():
    for seed in range(20):
        validate(random_security_graph(8, np.random.default_rng(seed)))
