"""Graph builders, energies, configuration predicates, serialization."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mrflearn.models import (ColoringModel, CubeWalkModel, Graph, IsingModel,
                             check_configuration, complete_graph, cycle_graph,
                             dumps_model, erdos_renyi_graph, grid_graph,
                             hamiltonian, hamming_distance, is_valid_coloring,
                             load_model, loads_model, log_stationary_weight,
                             make_graph, model_hash, path_graph, save_model)


def edge_count(g: Graph) -> int:
    return len(g.edges)


def single_edge_graph():
    return Graph(2, ((0, 1),))


# ---- hamiltonian -----------------------------------------------------------


def test_hamiltonian_single_edge_aligned():
    m = IsingModel(graph=single_edge_graph(), beta=1.0)
    assert hamiltonian(m, np.array([1, 1], dtype=np.int8)) == -1.0


def test_hamiltonian_single_edge_misaligned():
    m = IsingModel(graph=single_edge_graph(), beta=1.0)
    assert hamiltonian(m, np.array([1, -1], dtype=np.int8)) == 1.0


def test_hamiltonian_four_cycle_all_up():
    m = IsingModel(graph=cycle_graph(4), beta=0.5)
    assert hamiltonian(m, np.ones(4, dtype=np.int8)) == -2.0


def test_hamiltonian_with_field():
    # B couples to the sum of spins: H = -sum beta s_i s_j - B sum s_i
    m = IsingModel(graph=single_edge_graph(), beta=0.0, external_field=0.3)
    x = np.array([1, -1], dtype=np.int8)
    assert hamiltonian(m, x) == pytest.approx(0.0)
    assert hamiltonian(m, np.ones(2, dtype=np.int8)) == pytest.approx(-0.6)


# ---- stationary weights and validity ---------------------------------------


def test_log_weight_uniform_at_beta_zero():
    m = IsingModel(graph=cycle_graph(5), beta=0.0)
    for x in (np.ones(5, dtype=np.int8), -np.ones(5, dtype=np.int8)):
        assert log_stationary_weight(m, x) == 0.0


def test_log_weight_coloring_cases():
    tri = ColoringModel(graph=cycle_graph(3), q=3)
    assert log_stationary_weight(tri, np.array([0, 1, 2], dtype=np.int8)) == 0.0
    bad = np.array([0, 0, 1], dtype=np.int8)
    assert log_stationary_weight(tri, bad) == -np.inf
    assert not is_valid_coloring(tri, bad)
    assert is_valid_coloring(tri, np.array([2, 0, 1], dtype=np.int8))


def test_check_configuration_shape_and_alphabet():
    m = IsingModel(graph=cycle_graph(4), beta=0.1)
    with pytest.raises(ValueError):
        check_configuration(m, np.ones(3, dtype=np.int8))
    with pytest.raises(ValueError):
        check_configuration(m, np.array([1, 1, 0, 1], dtype=np.int8))
    c = ColoringModel(graph=cycle_graph(4), q=3)
    with pytest.raises(ValueError):
        check_configuration(c, np.array([0, 1, 0, 3], dtype=np.int8))


def test_hamming_distance():
    x = np.array([1, 1], dtype=np.int8)
    assert hamming_distance(x, x) == 0
    assert hamming_distance(x, np.array([-1, 1], dtype=np.int8)) == 1
    a = np.array([0, 1, 2, 3, 4], dtype=np.int8)
    assert hamming_distance(a, a[::-1].copy()) == 4  # middle element equal
    assert hamming_distance(a, (a + 1) % 5) == 5
    with pytest.raises(ValueError):
        hamming_distance(x, np.ones(3, dtype=np.int8))


# ---- graph builders ---------------------------------------------------------


def test_builder_edge_counts():
    assert edge_count(cycle_graph(11)) == 11
    assert edge_count(complete_graph(11)) == 55
    assert edge_count(path_graph(7)) == 6
    assert edge_count(grid_graph(2, 3)) == 7
    assert edge_count(grid_graph(3, 3)) == 12


def test_cycle_rejects_tiny_n():
    with pytest.raises(ValueError):
        cycle_graph(2)


def test_make_graph_dispatch_and_errors():
    g = make_graph("cycle", n=5)
    assert edge_count(g) == 5
    with pytest.raises(ValueError):
        make_graph("torus", n=5)
    with pytest.raises(ValueError):
        make_graph("grid", n=5)  # missing rows/cols


def test_erdos_renyi_deterministic_and_binomial():
    g1 = erdos_renyi_graph(11, 0.3, seed=4)
    g2 = erdos_renyi_graph(11, 0.3, seed=4)
    assert g1.edges == g2.edges
    assert erdos_renyi_graph(11, 0.3, seed=5).edges != g1.edges
    counts = [edge_count(erdos_renyi_graph(11, 0.3, seed=s))
              for s in range(200)]
    mean = float(np.mean(counts))
    # per-draw binomial sigma over 55 possible edges
    sigma = math.sqrt(55 * 0.3 * 0.7)
    assert abs(mean - 16.5) < 4 * sigma / math.sqrt(200)
    with pytest.raises(ValueError):
        erdos_renyi_graph(5, 1.5, seed=0)


def test_neighbor_structure_consistency():
    g = grid_graph(3, 4)
    for i in range(g.n):
        nbrs = g.nbr_idx[g.nbr_offsets[i]:g.nbr_offsets[i + 1]]
        for j in nbrs:
            back = g.nbr_idx[g.nbr_offsets[j]:g.nbr_offsets[j + 1]]
            assert i in back


# ---- model parameters -------------------------------------------------------


def test_scalar_beta_broadcast():
    m = IsingModel(graph=cycle_graph(4), beta=0.7)
    assert all(b == 0.7 for _, b in zip(m.graph.edges, m.edge_betas))


def test_edge_beta_mapping_must_cover_edges():
    g = cycle_graph(3)
    betas = {(0, 1): 0.1, (1, 2): 0.2, (0, 2): 0.3}
    m = IsingModel(graph=g, beta=betas)
    assert sorted(m.edge_betas) == [0.1, 0.2, 0.3]
    with pytest.raises(ValueError):
        IsingModel(graph=g, beta={(0, 1): 0.1})
    with pytest.raises(ValueError):
        IsingModel(graph=g, beta={**betas, (0, 9): 1.0})


def test_coloring_q_validation():
    with pytest.raises(ValueError):
        ColoringModel(graph=cycle_graph(3), q=0)


def test_alphabet_sizes():
    assert IsingModel(graph=cycle_graph(3)).alphabet_size == 2
    assert ColoringModel(graph=cycle_graph(3), q=5).alphabet_size == 5
    assert CubeWalkModel(n=6).alphabet_size == 2
    assert CubeWalkModel(n=6).n == 6


# ---- serialization ----------------------------------------------------------


def test_ising_text_round_trip():
    g = cycle_graph(5)
    m = IsingModel(graph=g, beta={e: 0.1 * (i + 1) for i, e in enumerate(g.edges)},
                   external_field=-0.25)
    m2 = loads_model(dumps_model(m))
    assert isinstance(m2, IsingModel)
    assert m2.graph.edges == m.graph.edges
    np.testing.assert_allclose(m2.edge_betas, m.edge_betas)
    assert m2.external_field == m.external_field


def test_coloring_text_round_trip():
    m = ColoringModel(graph=grid_graph(2, 3), q=4)
    m2 = loads_model(dumps_model(m))
    assert isinstance(m2, ColoringModel)
    assert m2.q == 4
    assert m2.graph.edges == m.graph.edges


def test_save_load_file(tmp_path):
    m = IsingModel(graph=complete_graph(4), beta=0.3)
    p = tmp_path / "m.txt"
    save_model(m, p)
    m2 = load_model(p)
    assert hamiltonian(m2, np.ones(4, dtype=np.int8)) == hamiltonian(
        m, np.ones(4, dtype=np.int8))


def test_model_hash_distinguishes_parameters():
    a = IsingModel(graph=cycle_graph(6), beta=0.1)
    b = IsingModel(graph=cycle_graph(6), beta=0.2)
    assert model_hash(a) == model_hash(IsingModel(graph=cycle_graph(6), beta=0.1))
    assert model_hash(a) != model_hash(b)


def test_loads_rejects_garbage():
    with pytest.raises(ValueError):
        loads_model("not a model dump\n")


# ---- properties -------------------------------------------------------------


@given(st.integers(min_value=3, max_value=9), st.integers(min_value=0, max_value=50))
@settings(max_examples=60, deadline=None)
def test_round_trip_random_er_models(n, seed):
    g = erdos_renyi_graph(n, 0.4, seed=seed)
    m = IsingModel(graph=g, beta=0.37, external_field=0.05)
    m2 = loads_model(dumps_model(m))
    x = np.where(np.arange(n) % 2 == 0, 1, -1).astype(np.int8)
    assert hamiltonian(m2, x) == pytest.approx(hamiltonian(m, x), abs=1e-12)


@given(st.integers(min_value=1, max_value=20))
@settings(max_examples=30, deadline=None)
def test_hamming_symmetric(n):
    rng = np.random.default_rng(n)
    x = rng.integers(0, 3, size=n).astype(np.int8)
    y = rng.integers(0, 3, size=n).astype(np.int8)
    assert hamming_distance(x, y) == hamming_distance(y, x)
    assert hamming_distance(x, y) <= n
