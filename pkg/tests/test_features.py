"""Walk-averaged feature estimation: sample counts, time grids, matrices."""

import numpy as np
import pytest

from mrflearn import IsingModel, ColoringModel, cycle_graph
from mrflearn.basis import conjunction_family, parity_family
from mrflearn.chain import ChainOracle
from mrflearn.errors import SizeCapExceeded
from mrflearn.features import (
    FeatureConfig,
    build_feature_set,
    default_times,
    estimate_phi,
    feature_descriptors,
    geometric_times,
    hoeffding_T,
    load_feature_set,
    save_feature_set,
)
from mrflearn.rng import RngStream
from mrflearn.spectral import (
    enumerate_support,
    exact_Pt_g,
    exact_transition_matrix,
)


# ---------------------------------------------------------------------------
# sample-count rule and time grids
# ---------------------------------------------------------------------------


def test_hoeffding_T_frozen_values():
    assert hoeffding_T(0.05, 0.01, 10**6) == 7369
    assert hoeffding_T(0.1, 0.01, 10**6) == 1843
    # ln(universe / delta) = 1 and eps2 = 1 collapse to a single walk
    assert hoeffding_T(1.0, 1 / np.e, 1) == 1


def test_hoeffding_T_monotonicity():
    base = hoeffding_T(0.05, 0.01, 1000)
    assert hoeffding_T(0.05, 0.01, 10_000) > base
    assert hoeffding_T(0.05, 0.001, 1000) > base
    assert hoeffding_T(0.1, 0.01, 1000) < base


def test_hoeffding_T_validation():
    with pytest.raises(ValueError, match="eps2"):
        hoeffding_T(0.0, 0.01, 10)
    with pytest.raises(ValueError, match="eps2"):
        hoeffding_T(2.5, 0.01, 10)
    with pytest.raises(ValueError, match="delta"):
        hoeffding_T(0.1, 1.0, 10)
    with pytest.raises(ValueError, match="universe"):
        hoeffding_T(0.1, 0.01, 0)


def test_time_grids():
    assert default_times(3) == (0, 1, 2, 3)
    assert geometric_times(30) == (0, 1, 2, 4, 8, 16, 30)
    assert geometric_times(8) == (0, 1, 2, 4, 8)
    assert geometric_times(1) == (0, 1)
    assert geometric_times(0) == (0,)
    with pytest.raises(ValueError):
        geometric_times(-1)


def test_feature_config_normalizes_times():
    cfg = FeatureConfig(tau_max=5, T=10)
    assert cfg.times == (0, 1, 2, 3, 4, 5)
    cfg = FeatureConfig(tau_max=5, T=10, times=(3, 0, 3, 5))
    assert cfg.times == (0, 3, 5)
    with pytest.raises(ValueError, match="times"):
        FeatureConfig(tau_max=5, T=10, times=(0, 6))
    with pytest.raises(ValueError, match="tau_max"):
        FeatureConfig(tau_max=-1, T=10)
    with pytest.raises(ValueError, match="T"):
        FeatureConfig(tau_max=2, T=0)


def test_feature_descriptors_layout():
    assert feature_descriptors((0, 2), 3) == (
        "0:0", "0:1", "0:2", "2:0", "2:1", "2:2",
    )


# ---------------------------------------------------------------------------
# single-cell estimates
# ---------------------------------------------------------------------------


def test_estimate_phi_exact_at_time_zero():
    model = IsingModel(graph=cycle_graph(6), beta=0.4)
    oracle = ChainOracle(model)
    g = parity_family(6, 2)[9]
    x = np.array([1, -1, 1, 1, -1, -1], dtype=np.int8)
    v = estimate_phi(oracle, g, x, 0, 1, RngStream(3))
    assert v == float(g(x[None, :])[0])


def test_estimate_phi_constant_function():
    model = IsingModel(graph=cycle_graph(5), beta=0.2)
    oracle = ChainOracle(model)
    one = parity_family(5, 0)[0]
    x = np.ones(5, dtype=np.int8)
    for t in (0, 3, 9):
        assert estimate_phi(oracle, one, x, t, 50, RngStream(4)) == 1.0


def test_estimate_phi_deterministic_in_stream():
    model = ColoringModel(graph=cycle_graph(5), q=4)
    oracle = ChainOracle(model)
    sup = enumerate_support(model)
    pi = np.full(sup.size, 1.0 / sup.size)
    from mrflearn.basis import local_indicator_family

    g = local_indicator_family(model, 1, support=sup, pi=pi)[0]
    x = sup.configs[7]
    a = estimate_phi(oracle, g, x, 4, 200, RngStream(11))
    b = estimate_phi(oracle, g, x, 4, 200, RngStream(11))
    c = estimate_phi(oracle, g, x, 4, 200, RngStream(12))
    assert a == b
    assert a != c


def test_estimate_phi_tracks_exact_smoothing():
    # T = 10^4 walks: Hoeffding puts every deviation under 0.05 with
    # failure odds ~ 4e-4 over the 60 fixed streams checked here
    model = IsingModel(graph=cycle_graph(6), beta=0.1)
    oracle = ChainOracle(model)
    sup = enumerate_support(model)
    P = exact_transition_matrix(model, sup)
    g = parity_family(6, 1)[3]
    gvals = g(sup.configs)
    x = sup.configs[17]
    exact = exact_Pt_g(P, gvals, 10)[17]
    errs = [
        abs(estimate_phi(oracle, g, x, 10, 10_000, RngStream(1000 + k)) - exact)
        for k in range(60)
    ]
    assert max(errs) <= 0.05
    # and the estimator is unbiased enough for the mean to sit much closer
    assert abs(np.mean(errs)) <= 0.02


# ---------------------------------------------------------------------------
# feature matrices
# ---------------------------------------------------------------------------


def _small_setup():
    model = IsingModel(graph=cycle_graph(5), beta=0.2)
    fam = conjunction_family(5, 1)
    X = enumerate_support(model).configs[::3]
    return model, fam, X


def test_feature_matrix_time_zero_is_family_values():
    model, fam, X = _small_setup()
    cfg = FeatureConfig(tau_max=0, T=5)
    fs = build_feature_set(model, fam, X, cfg, 42)
    assert np.array_equal(fs.matrix, fam.evaluate_matrix(X))


def test_feature_matrix_shape_and_descriptors():
    model, fam, X = _small_setup()
    cfg = FeatureConfig(tau_max=4, T=30, times=(0, 2, 4))
    fs = build_feature_set(model, fam, X, cfg, 42)
    assert fs.matrix.shape == (len(X), 3 * len(fam))
    assert fs.descriptors == feature_descriptors((0, 2, 4), len(fam))
    assert fs.num_examples == len(X)
    # the t = 0 block stays exact inside a mixed grid
    assert np.array_equal(fs.matrix[:, : len(fam)], fam.evaluate_matrix(X))


def test_feature_matrix_bit_reproducible():
    model, fam, X = _small_setup()
    cfg = FeatureConfig(tau_max=3, T=40)
    a = build_feature_set(model, fam, X, cfg, 7)
    b = build_feature_set(model, fam, X, cfg, 7)
    assert np.array_equal(a.matrix, b.matrix)
    c = build_feature_set(model, fam, X, cfg, 8)
    assert not np.array_equal(a.matrix, c.matrix)


def test_feature_matrix_workers_do_not_change_values():
    model, fam, X = _small_setup()
    cfg = FeatureConfig(tau_max=3, T=25)
    a = build_feature_set(model, fam, X, cfg, 7, workers=1)
    b = build_feature_set(model, fam, X, cfg, 7, workers=3)
    assert np.array_equal(a.matrix, b.matrix)


def test_feature_matrix_cells_match_single_estimates():
    model, fam, X = _small_setup()
    cfg = FeatureConfig(tau_max=2, T=15, times=(0, 2))
    fs = build_feature_set(model, fam, X, cfg, 99)
    oracle = ChainOracle(model)
    master = RngStream(99)
    for i in (0, 3):
        stream = master.derive(i)
        for m in (0, 4):
            want = estimate_phi(oracle, fam[m], X[i], 2, 15, stream)
            assert fs.column(2, m)[i] == want


def test_feature_matrix_validation():
    model, fam, X = _small_setup()
    cfg = FeatureConfig(tau_max=1, T=5)
    with pytest.raises(ValueError, match="columns"):
        build_feature_set(model, fam, X[:, :4], cfg, 1)
    tiny = FeatureConfig(tau_max=3, T=5, column_cap=10)
    with pytest.raises(SizeCapExceeded, match="cap is 10"):
        build_feature_set(model, fam, X, tiny, 1)


def test_feature_matrix_rejects_improper_coloring_examples():
    model = ColoringModel(graph=cycle_graph(4), q=3)
    fam = conjunction_family(4, 1)
    bad = np.array([[0, 0, 1, 2]], dtype=np.int8)
    with pytest.raises(ValueError, match="proper"):
        build_feature_set(model, fam, bad, FeatureConfig(tau_max=1, T=5), 1)


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


def test_feature_set_roundtrip(tmp_path):
    model, fam, X = _small_setup()
    cfg = FeatureConfig(tau_max=2, T=20)
    fs = build_feature_set(model, fam, X, cfg, 5)
    path = tmp_path / "features.csv"
    save_feature_set(fs, path)
    matrix, descriptors, manifest = load_feature_set(path)
    assert np.array_equal(matrix, fs.matrix)  # 17 digits round-trip exactly
    assert descriptors == fs.descriptors
    assert manifest["master_seed"] == 5
    assert manifest["T"] == 20
    assert manifest["times"] == [0, 1, 2]
    assert manifest["model_digest"] == fs.model_digest


def test_feature_set_load_errors(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("nope,0:0\n")
    with pytest.raises(ValueError, match="example"):
        load_feature_set(path)
    path.write_text("example,0:0,0:1\n0,1.0\n")
    with pytest.raises(ValueError, match="width"):
        load_feature_set(path)


def test_feature_set_load_without_manifest(tmp_path):
    path = tmp_path / "features.csv"
    path.write_text("example,0:0\n0,0.25\n1,-1\n")
    matrix, descriptors, manifest = load_feature_set(path)
    assert manifest is None
    assert matrix.shape == (2, 1) and descriptors == ("0:0",)
