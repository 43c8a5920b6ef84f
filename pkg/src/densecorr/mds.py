"""Stress-majorization embedding of geodesic distance matrices.

``SmacofEmbedding`` follows the scikit-learn estimator protocol
(``fit`` / ``fit_transform`` / ``get_params``) so chart unwrapping can
sit inside ordinary sklearn pipelines. The solver is classical MDS
(double-centered Gram matrix, top spectral directions) refined by
SMACOF majorization, which guarantees a monotonically non-increasing
raw stress

    stress(X) = sum_{i<j} (||x_i - x_j|| - d_ij)^2

and therefore gives every run a checkable convergence trace.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .errors import DegenerateInput, NumericalFailure

_EPS = np.finfo(np.float64).eps


def _validate_distances(D: np.ndarray) -> np.ndarray:
    D = np.asarray(D, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise DegenerateInput(f"distance matrix must be square, got {D.shape}")
    if not np.isfinite(D).all():
        raise DegenerateInput("distance matrix has non-finite entries")
    if not np.allclose(D, D.T, rtol=0, atol=1e-9):
        raise DegenerateInput("distance matrix is not symmetric")
    if np.abs(np.diagonal(D)).max(initial=0.0) > 1e-12:
        raise DegenerateInput("distance matrix diagonal is not zero")
    return D


def classical_mds(D: np.ndarray, n_components: int = 2) -> np.ndarray:
    """Spectral embedding of the double-centered squared-distance matrix.

    Columns beyond the available positive eigenvalues are zero (e.g. a
    perfectly collinear configuration embeds on one axis).
    """
    n = len(D)
    J = np.eye(n) - np.full((n, n), 1.0 / n)
    B = -0.5 * J @ (D**2) @ J
    try:
        evals, evecs = np.linalg.eigh(B)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigendecomposition failed: {exc}") from exc
    order = np.argsort(evals)[::-1]
    X = np.zeros((n, n_components))
    for col, k in enumerate(order[:n_components]):
        if evals[k] > 0:
            X[:, col] = evecs[:, k] * np.sqrt(evals[k])
    return X


def raw_stress(X: np.ndarray, D: np.ndarray) -> float:
    diff = X[:, None, :] - X[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2))
    resid = dist - D
    return float((resid[np.triu_indices(len(D), k=1)] ** 2).sum())


class SmacofEmbedding(BaseEstimator):
    """Metric MDS via SMACOF with a classical-MDS start.

    Parameters
    ----------
    n_components : target dimensionality (2 for UV charts).
    max_iter : majorization iteration cap.
    tol : stop when the relative stress decrease falls below this.

    Attributes (after ``fit``)
    --------------------------
    embedding_ : (n, n_components) coordinates.
    stress_ : final raw stress.
    stress_history_ : stress after the init and each accepted iteration;
        non-increasing by construction.
    n_iter_ : majorization steps actually run.
    """

    def __init__(self, n_components: int = 2, max_iter: int = 300, tol: float = 1e-9):
        self.n_components = n_components
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y=None):
        D = _validate_distances(X)
        n = len(D)
        if n == 1:
            self.embedding_ = np.zeros((1, self.n_components))
            self.stress_ = 0.0
            self.stress_history_ = [0.0]
            self.n_iter_ = 0
            return self
        if D.max() <= 0.0:
            raise DegenerateInput("all distances are zero for n >= 2 points")

        Z = classical_mds(D, self.n_components)
        stress = raw_stress(Z, D)
        history = [stress]
        it = 0
        for it in range(1, self.max_iter + 1):
            Z_next = self._guttman_step(Z, D)
            stress_next = raw_stress(Z_next, D)
            if stress_next > stress + 1e-10 * max(1.0, stress):
                raise NumericalFailure(
                    f"stress increased at iteration {it}: "
                    f"{stress} -> {stress_next}"
                )
            Z = Z_next
            history.append(stress_next)
            if stress <= _EPS or (stress - stress_next) < self.tol * stress:
                stress = stress_next
                break
            stress = stress_next

        self.embedding_ = Z
        self.stress_ = stress
        self.stress_history_ = history
        self.n_iter_ = it
        return self

    def fit_transform(self, X, y=None) -> np.ndarray:
        return self.fit(X, y).embedding_

    @staticmethod
    def _guttman_step(Z: np.ndarray, D: np.ndarray) -> np.ndarray:
        # B(Z) Z / n with b_ij = -d_ij/||z_i - z_j|| (0 where coincident)
        n = len(D)
        diff = Z[:, None, :] - Z[None, :, :]
        dist = np.sqrt((diff**2).sum(axis=2))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dist > 0, D / np.where(dist > 0, dist, 1.0), 0.0)
        B = -ratio
        B[np.arange(n), np.arange(n)] = ratio.sum(axis=1)
        return (B @ Z) / n
