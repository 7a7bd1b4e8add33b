import copy

import numpy as np
import pytest

from riskstudio.errors import BadParam, DegenerateInput, ShapeMismatch
from riskstudio.preprocess import StageConfig, apply_stage, fit_stage


def test_minmax_maps_to_unit_interval():
    m = np.array([[0.0], [5.0], [10.0]])
    s = fit_stage(m, StageConfig(scaler="minmax"))
    assert apply_stage(s, m)[:, 0].tolist() == [0.0, 0.5, 1.0]


def test_minmax_constant_column_maps_to_zero_everywhere():
    m = np.array([[3.0, 1.0], [3.0, 2.0]])
    s = fit_stage(m, StageConfig(scaler="minmax"))
    out = apply_stage(s, np.array([[99.0, 1.5]]))
    assert out[0, 0] == 0.0


def test_variance_threshold_drops_constant_column():
    m = np.array([[1.0, 0.0], [1.0, 1.0], [1.0, 2.0]])
    s = fit_stage(m, StageConfig(dimred="variance_threshold", dimred_param=0.0))
    out = apply_stage(s, m)
    assert out.shape == (3, 1)
    assert out[:, 0].tolist() == [0.0, 1.0, 2.0]


def test_identity_stage():
    rng = np.random.default_rng(0)
    m = rng.normal(size=(6, 3))
    s = fit_stage(m, StageConfig())
    assert np.array_equal(apply_stage(s, m), m)


def test_standard_scaler_self_statistics():
    rng = np.random.default_rng(1)
    m = rng.normal(loc=3.0, scale=2.0, size=(50, 4))
    s = fit_stage(m, StageConfig(scaler="standard"))
    out = apply_stage(s, m)
    assert np.abs(out.mean(axis=0)).max() < 1e-10
    assert np.abs(out.std(axis=0) - 1).max() < 1e-10


def test_row_l2():
    s = fit_stage(np.array([[3.0, 4.0], [1.0, 0.0]]), StageConfig(scaler="row_l2"))
    out = apply_stage(s, np.array([[3.0, 4.0]]))
    assert out[0].tolist() == [0.6, 0.8]


def test_maxabs():
    m = np.array([[-4.0], [2.0]])
    s = fit_stage(m, StageConfig(scaler="maxabs"))
    assert apply_stage(s, m)[:, 0].tolist() == [-1.0, 0.5]


class TestPca:
    def test_full_rank_reconstruction_matches_eigendecomposition(self):
        rng = np.random.default_rng(2)
        m = rng.normal(size=(10, 3))
        s = fit_stage(m, StageConfig(dimred="pca", dimred_param=3))
        projected = apply_stage(s, m)
        basis = s.dimred_state["basis"]
        mean = s.dimred_state["mean"]
        reconstructed = projected @ basis.T + mean
        assert np.abs(reconstructed - m).max() < 1e-8
        # independent oracle: eigendecomposition of the covariance matrix
        centered = m - m.mean(axis=0)
        evals, evecs = np.linalg.eigh(centered.T @ centered / (len(m) - 1))
        proj_oracle = centered @ evecs
        assert np.allclose(np.abs(projected), np.abs(proj_oracle[:, ::-1]),
                           atol=1e-8)

    def test_basis_orthonormal(self):
        rng = np.random.default_rng(3)
        m = rng.normal(size=(40, 6))
        s = fit_stage(m, StageConfig(dimred="pca", dimred_param=4))
        b = s.dimred_state["basis"]
        assert np.abs(b.T @ b - np.eye(4)).max() < 1e-8

    def test_deterministic_sign_convention(self):
        rng = np.random.default_rng(4)
        m = rng.normal(size=(30, 3))
        s = fit_stage(m, StageConfig(dimred="pca", dimred_param=3))
        basis = s.dimred_state["basis"]
        for c in range(3):
            i = np.argmax(np.abs(basis[:, c]))
            assert basis[i, c] > 0

    def test_zero_variance_matrix_rejected(self):
        with pytest.raises(DegenerateInput):
            fit_stage(np.ones((5, 2)), StageConfig(dimred="pca", dimred_param=1))

    def test_too_many_components(self):
        with pytest.raises(BadParam):
            fit_stage(np.random.default_rng(0).normal(size=(5, 2)),
                      StageConfig(dimred="pca", dimred_param=3))


def test_quantile_uniform_ks_distance():
    rng = np.random.default_rng(5)
    n = 100
    m = rng.normal(size=(n, 1))
    s = fit_stage(m, StageConfig(scaler="quantile_uniform"))
    out = np.sort(apply_stage(s, m)[:, 0])
    assert out.min() >= 0.0 and out.max() <= 1.0
    # Kolmogorov distance between the empirical cdf and uniform
    grid = np.concatenate([out, np.linspace(0, 1, 101)])
    ks = max(abs((out <= g).mean() - g) for g in grid)
    assert ks <= 1.0 / n + 1e-12


def test_quantile_uniform_clips_unseen_extremes():
    m = np.linspace(0, 1, 20).reshape(-1, 1)
    s = fit_stage(m, StageConfig(scaler="quantile_uniform"))
    out = apply_stage(s, np.array([[-5.0], [5.0]]))
    assert out[0, 0] == 0.0
    assert out[1, 0] == 1.0


def test_apply_never_mutates_stage():
    rng = np.random.default_rng(6)
    m = rng.normal(size=(20, 3))
    s = fit_stage(m, StageConfig(scaler="standard", dimred="pca", dimred_param=2))
    snapshot = copy.deepcopy(s.scaler_state), copy.deepcopy(s.dimred_state)
    apply_stage(s, rng.normal(size=(7, 3)))
    assert np.array_equal(snapshot[0]["mean"], s.scaler_state["mean"])
    assert np.array_equal(snapshot[1]["basis"], s.dimred_state["basis"])


def test_shape_mismatch():
    s = fit_stage(np.random.default_rng(0).normal(size=(5, 3)), StageConfig())
    with pytest.raises(ShapeMismatch):
        apply_stage(s, np.zeros((2, 4)))
