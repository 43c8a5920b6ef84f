import numpy as np
import pytest
from sklearn.base import clone

from densecorr.errors import DegenerateInput
from densecorr.mds import SmacofEmbedding, classical_mds, raw_stress


def pairwise(X):
    diff = X[:, None, :] - X[None, :, :]
    return np.sqrt((diff**2).sum(axis=2))


def procrustes_residual(A, B):
    """Residual after optimally rotating/reflecting B onto A (both centered)."""
    A = A - A.mean(axis=0)
    B = B - B.mean(axis=0)
    u, _, vt = np.linalg.svd(B.T @ A)
    R = u @ vt
    return float(np.linalg.norm(B @ R - A))


class TestSmacofEmbedding:
    def test_single_point(self):
        est = SmacofEmbedding().fit(np.zeros((1, 1)))
        np.testing.assert_array_equal(est.embedding_, np.zeros((1, 2)))

    def test_collinear_exact(self):
        D = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]])
        est = SmacofEmbedding().fit(D)
        assert est.stress_ < 1e-9
        gaps = np.linalg.norm(np.diff(est.embedding_, axis=0), axis=1)
        np.testing.assert_allclose(gaps, [1.0, 1.0], atol=1e-6)

    def test_equilateral(self):
        D = np.ones((3, 3)) - np.eye(3)
        emb = SmacofEmbedding().fit_transform(D)
        dist = pairwise(emb)
        off = dist[~np.eye(3, dtype=bool)]
        np.testing.assert_allclose(off, 1.0, atol=1e-6)

    def test_all_zero_matrix_rejected(self):
        with pytest.raises(DegenerateInput):
            SmacofEmbedding().fit(np.zeros((3, 3)))

    def test_asymmetric_rejected(self):
        D = np.array([[0.0, 1.0], [2.0, 0.0]])
        with pytest.raises(DegenerateInput):
            SmacofEmbedding().fit(D)

    def test_nonzero_diagonal_rejected(self):
        D = np.array([[0.5, 1.0], [1.0, 0.0]])
        with pytest.raises(DegenerateInput):
            SmacofEmbedding().fit(D)

    def test_stress_monotone_on_random_inputs(self, rng):
        for _ in range(10):
            pts = rng.random((12, 3))
            D = pairwise(pts) * (1.0 + 0.2 * rng.random())
            est = SmacofEmbedding().fit(D)
            hist = np.asarray(est.stress_history_)
            assert (np.diff(hist) <= 1e-10 * np.maximum(hist[:-1], 1.0)).all()
            assert est.stress_ == hist[-1]

    def test_deterministic(self, rng):
        D = pairwise(rng.random((15, 3)))
        a = SmacofEmbedding().fit_transform(D)
        b = SmacofEmbedding().fit_transform(D)
        np.testing.assert_array_equal(a, b)

    def test_sklearn_protocol(self):
        est = SmacofEmbedding(max_iter=50, tol=1e-7)
        params = est.get_params()
        assert params == {"n_components": 2, "max_iter": 50, "tol": 1e-7}
        cloned = clone(est)
        assert cloned.get_params() == params

    def test_classical_init_recovers_planar_configs(self, rng):
        pts = rng.random((10, 2)) * 3.0
        D = pairwise(pts)
        emb = classical_mds(D)
        assert raw_stress(emb, D) < 1e-16 * (D**2).sum()
