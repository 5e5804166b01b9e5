"""Principal-component subspace over word descriptors.

Fits mean, covariance, and an eigenbasis of the descriptor cloud; selects a
retained dimension from a variance target; projects descriptors into the
subspace, optionally whitening each coordinate by 1/sqrt(eigenvalue) so that
Euclidean distance in the subspace equals Mahalanobis distance in the
original space when all dimensions are kept.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSpectrumError,
    DimensionError,
    InsufficientDataError,
    ModeError,
    NumericalError,
    RangeError,
    SymmetryError,
)

# Relative cutoff below which trailing eigenvalues are treated as noise and
# never retained, independent of the variance target.
RETENTION_FLOOR = 1e-12
# Regularizer inside whitening scales, relative to the largest eigenvalue.
EPSILON_FACTOR = 1e-8

_SYMMETRY_TOL = 1e-9
_OFFDIAG_TOL = 1e-12
_MAX_SWEEPS = 60


@dataclass(frozen=True, eq=False)
class PcaModel:
    """A fitted subspace: centering mean, spectrum, and retained basis.

    ``basis`` holds the retained eigenvectors as orthonormal rows (m x n);
    ``whitening_scales[i] = 1 / sqrt(eigenvalues[i] + epsilon)``. ``whiten``
    records whether projections apply those scales.
    """

    mean: np.ndarray
    eigenvalues: np.ndarray
    basis: np.ndarray
    m: int
    whitening_scales: np.ndarray
    epsilon: float
    whiten: bool

    def __post_init__(self):
        if self.basis.shape != (self.m, self.mean.size):
            raise DimensionError("basis shape does not match retained dimension")
        if self.whitening_scales.shape != (self.m,):
            raise DimensionError("whitening scales length must equal m")
        if not np.all(np.isfinite(self.whitening_scales)):
            raise RangeError("whitening scales must be finite")

    @property
    def source_dim(self) -> int:
        return self.mean.size

    def __eq__(self, other):
        if not isinstance(other, PcaModel):
            return NotImplemented
        return (
            self.m == other.m
            and self.whiten == other.whiten
            and self.epsilon == other.epsilon
            and np.array_equal(self.mean, other.mean)
            and np.array_equal(self.eigenvalues, other.eigenvalues)
            and np.array_equal(self.basis, other.basis)
            and np.array_equal(self.whitening_scales, other.whitening_scales)
        )


def compute_covariance(samples) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and population covariance (1/N normalization).

    With the 1/N convention, the mean squared reconstruction error over the
    fitting set equals the tail eigenvalue sum exactly.
    """
    X = np.asarray(samples, dtype=float)
    if X.ndim != 2:
        raise DimensionError("samples must form a 2-D array")
    if X.shape[0] < 2:
        raise InsufficientDataError("need at least 2 samples for covariance")
    mean = X.mean(axis=0)
    centered = X - mean
    cov = centered.T @ centered / X.shape[0]
    return mean, (cov + cov.T) / 2.0


def _jacobi(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi rotations on a symmetric matrix.

    Returns (eigenvalues, eigenvectors-as-columns), unsorted. Converged when
    every off-diagonal magnitude falls below 1e-12 times the largest
    diagonal magnitude.
    """
    a = matrix.astype(float).copy()
    n = a.shape[0]
    vecs = np.eye(n)
    if n == 1:
        return np.diag(a).copy(), vecs

    for _ in range(_MAX_SWEEPS):
        scale = float(np.max(np.abs(np.diag(a))))
        upper = np.triu(a, k=1)
        if np.max(np.abs(upper)) <= _OFFDIAG_TOL * scale:
            return np.diag(a).copy(), vecs
        skip = _OFFDIAG_TOL * scale
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= skip:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.hypot(theta, 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.hypot(t, 1.0)
                s = t * c
                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                vec_p, vec_q = vecs[:, p].copy(), vecs[:, q].copy()
                vecs[:, p] = c * vec_p - s * vec_q
                vecs[:, q] = s * vec_p + c * vec_q
    raise NumericalError("Jacobi iteration did not converge")


def eigendecompose(matrix) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and eigenvectors (columns) of a symmetric matrix.

    Eigenvectors are orthonormal; each is signed so its largest-magnitude
    component is positive, making fitted models reproducible.
    """
    R = np.asarray(matrix, dtype=float)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise DimensionError("matrix must be square")
    if R.size and np.max(np.abs(R - R.T)) > _SYMMETRY_TOL:
        raise SymmetryError("matrix is not symmetric")

    values, vectors = _jacobi(R)
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = vectors[:, order]
    for j in range(vectors.shape[1]):
        k = int(np.argmax(np.abs(vectors[:, j])))
        if vectors[k, j] < 0:
            vectors[:, j] = -vectors[:, j]
    return values, vectors


def select_dimension(eigenvalues, variance_target: float, fixed_m: int | None = None) -> int:
    """Smallest m whose leading eigenvalues reach the variance target.

    Eigenvalues below ``1e-12 * largest`` are never retained, regardless of
    the target; a fixed override is honored up to that same cap.
    """
    values = np.asarray(eigenvalues, dtype=float)
    if np.any(values < 0) or np.any(np.diff(values) > 0):
        raise RangeError("eigenvalues must be non-negative and descending")
    total = values.sum()
    if total <= 0.0:
        raise DegenerateSpectrumError("all eigenvalues are zero")
    retained_cap = int(np.sum(values > RETENTION_FLOOR * values[0]))
    if fixed_m is not None:
        if fixed_m < 1:
            raise RangeError("fixed dimension must be >= 1")
        return min(fixed_m, retained_cap)
    if not 0.0 < variance_target <= 1.0:
        raise RangeError("variance target must lie in (0, 1]")
    ratios = np.cumsum(values) / total
    m = int(np.searchsorted(ratios, variance_target - 1e-15)) + 1
    return min(m, retained_cap)


def fit_pca(
    descriptors,
    variance_target: float = 0.95,
    fixed_m: int | None = None,
    whiten: bool = True,
) -> PcaModel:
    """Fit a subspace model on a descriptor set.

    Chains covariance, eigendecomposition, and dimension selection; the
    whitening regularizer is 1e-8 times the largest eigenvalue.
    """
    mean, cov = compute_covariance(descriptors)
    values, vectors = eigendecompose(cov)
    values = np.maximum(values, 0.0)
    # Variance at the level of centering round-off is indistinguishable from
    # an all-identical sample.
    spread = float(np.max(np.abs(np.asarray(descriptors, dtype=float) - mean)))
    if values[0] <= (1e-12 * max(1.0, spread)) ** 2:
        raise DegenerateSpectrumError("descriptor set has no usable variance")
    m = select_dimension(values, variance_target, fixed_m=fixed_m)
    epsilon = EPSILON_FACTOR * values[0]
    scales = 1.0 / np.sqrt(values[:m] + epsilon)
    return PcaModel(
        mean=mean,
        eigenvalues=values,
        basis=vectors[:, :m].T.copy(),
        m=m,
        whitening_scales=scales,
        epsilon=float(epsilon),
        whiten=whiten,
    )


def project(model: PcaModel, x) -> np.ndarray:
    """Map original-space vectors into the retained subspace.

    Accepts a single vector or a stack of rows. Whitening scales are applied
    when the model was fitted with whitening enabled.
    """
    arr = np.asarray(x, dtype=float)
    if arr.shape[-1] != model.source_dim:
        raise DimensionError(
            f"expected dimension {model.source_dim}, got {arr.shape[-1]}"
        )
    projected = (arr - model.mean) @ model.basis.T
    if model.whiten:
        projected = projected * model.whitening_scales
    return projected


def reconstruct(model: PcaModel, y) -> np.ndarray:
    """Map subspace coordinates back to an original-space approximation.

    Inverts whatever ``project`` produced: whitened coordinates are unscaled
    first when the model whitens.
    """
    arr = np.asarray(y, dtype=float)
    if arr.shape[-1] != model.m:
        raise DimensionError(f"expected dimension {model.m}, got {arr.shape[-1]}")
    if model.whiten:
        arr = arr / model.whitening_scales
    return arr @ model.basis + model.mean


def reconstruction_error(model: PcaModel) -> float:
    """Expected squared loss of the truncation: the tail eigenvalue sum."""
    return float(model.eigenvalues[model.m :].sum())


def whitened_distance(model: PcaModel, x1, x2) -> float:
    """Euclidean distance between whitened projections of two vectors.

    With all dimensions retained and a vanishing regularizer this equals the
    Mahalanobis distance in the original space.
    """
    if not model.whiten:
        raise ModeError("model was fitted without whitening")
    return float(np.linalg.norm(project(model, x1) - project(model, x2)))
