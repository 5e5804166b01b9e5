"""Covariance, eigendecomposition, projection, and whitening checks.

The eigensolver is verified against numpy.linalg.eigh, and whitened
distances against an explicit covariance-inverse computation; both oracles
are independent of the code under test.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wordspot.errors import (
    DegenerateSpectrumError,
    InsufficientDataError,
    ModeError,
    RangeError,
    SymmetryError,
)
from wordspot.subspace import (
    PcaModel,
    compute_covariance,
    eigendecompose,
    fit_pca,
    project,
    reconstruct,
    reconstruction_error,
    select_dimension,
    whitened_distance,
)


def random_psd(rng, n):
    A = rng.normal(size=(n, n))
    return (A @ A.T) / n


class TestCovariance:
    def test_repeated_vector_zero_covariance(self):
        v = np.array([1.0, 2.0, 3.0])
        mean, cov = compute_covariance([v, v])
        np.testing.assert_array_equal(mean, v)
        np.testing.assert_array_equal(cov, np.zeros((3, 3)))

    def test_antipodal_pair(self):
        v = np.array([1.0, -2.0, 0.5])
        mean, cov = compute_covariance([v, -v])
        np.testing.assert_allclose(mean, 0.0, atol=1e-15)
        np.testing.assert_allclose(cov, np.outer(v, v), atol=1e-15)

    def test_hand_expansion_2d(self):
        mean, cov = compute_covariance([[1.0, 1.0], [-1.0, -1.0]])
        np.testing.assert_allclose(cov, [[1.0, 1.0], [1.0, 1.0]], atol=1e-15)

    def test_population_normalization(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(40, 5))
        _, cov = compute_covariance(X)
        centered = X - X.mean(axis=0)
        np.testing.assert_allclose(cov, centered.T @ centered / 40, atol=1e-12)

    def test_single_sample_rejected(self):
        with pytest.raises(InsufficientDataError):
            compute_covariance([[1.0, 2.0]])


class TestEigendecompose:
    def test_identity(self):
        values, vectors = eigendecompose(np.eye(3))
        np.testing.assert_allclose(values, [1.0, 1.0, 1.0])
        np.testing.assert_allclose(vectors @ vectors.T, np.eye(3), atol=1e-12)

    def test_diagonal(self):
        values, vectors = eigendecompose(np.diag([2.0, 1.0]))
        np.testing.assert_allclose(values, [2.0, 1.0])
        np.testing.assert_allclose(np.abs(vectors), np.eye(2), atol=1e-12)

    def test_rank_one_hand_case(self):
        values, vectors = eigendecompose([[1.0, 1.0], [1.0, 1.0]])
        np.testing.assert_allclose(values, [2.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(vectors[:, 0], np.full(2, 1 / np.sqrt(2)), atol=1e-12)

    def test_asymmetric_rejected(self):
        with pytest.raises(SymmetryError):
            eigendecompose([[1.0, 0.5], [0.0, 1.0]])

    def test_sign_convention(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            values, vectors = eigendecompose(random_psd(rng, 6))
            for j in range(6):
                k = int(np.argmax(np.abs(vectors[:, j])))
                assert vectors[k, j] > 0

    def test_against_numpy_eigh(self):
        rng = np.random.default_rng(7)
        for n in (2, 5, 10, 25):
            R = random_psd(rng, n)
            values, vectors = eigendecompose(R)
            ref = np.sort(np.linalg.eigvalsh(R))[::-1]
            np.testing.assert_allclose(values, ref, atol=1e-9 * max(1.0, ref[0]))
            # Spectral reconstruction and orthonormality at spec tolerances.
            recon = vectors @ np.diag(values) @ vectors.T
            assert np.max(np.abs(recon - R)) <= 1e-8 * max(1.0, values[0])
            gram = vectors.T @ vectors
            assert np.max(np.abs(gram - np.eye(n))) <= 1e-9

    def test_trace_conservation(self):
        rng = np.random.default_rng(8)
        for n in (3, 8, 20):
            R = random_psd(rng, n)
            values, _ = eigendecompose(R)
            assert abs(values.sum() - np.trace(R)) <= 1e-8 * abs(np.trace(R))


class TestSelectDimension:
    def test_full_variance_keeps_everything(self):
        assert select_dimension([3.0, 2.0, 1.0], 1.0) == 3

    def test_nine_one_split(self):
        assert select_dimension([9.0, 1.0], 0.9) == 1

    def test_flat_spectrum(self):
        assert select_dimension([1.0, 1.0, 1.0, 1.0], 0.5) == 2

    def test_fixed_override(self):
        assert select_dimension([5.0, 3.0, 1.0], 0.5, fixed_m=3) == 3

    def test_fixed_override_capped_by_floor(self):
        values = [1.0, 1e-20, 1e-21]
        assert select_dimension(values, 0.5, fixed_m=3) == 1

    def test_all_zero_rejected(self):
        with pytest.raises(DegenerateSpectrumError):
            select_dimension([0.0, 0.0], 0.9)

    def test_bad_target_rejected(self):
        with pytest.raises(RangeError):
            select_dimension([1.0], 0.0)


class TestFitAndProject:
    def test_identical_descriptors_degenerate(self):
        X = np.tile(np.linspace(0, 1, 93), (5, 1))
        with pytest.raises(DegenerateSpectrumError):
            fit_pca(X)

    def test_two_informative_components(self):
        rng = np.random.default_rng(9)
        X = np.tile(np.linspace(0, 1, 93), (60, 1))
        X[:, 4] += rng.normal(0, 0.2, size=60)
        X[:, 50] += rng.normal(0, 0.1, size=60)
        model = fit_pca(X, variance_target=0.999)
        assert model.m == 2

    def test_projection_centering(self):
        rng = np.random.default_rng(10)
        X = rng.random((30, 93))
        model = fit_pca(X, variance_target=0.9, whiten=False)
        np.testing.assert_allclose(project(model, model.mean), 0.0, atol=1e-12)

    def test_full_basis_isometry_without_whitening(self):
        rng = np.random.default_rng(11)
        X = rng.normal(size=(80, 6))
        model = fit_pca(X, variance_target=1.0, whiten=False)
        assert model.m == 6
        for _ in range(5):
            x = rng.normal(size=6)
            assert np.isclose(
                np.linalg.norm(project(model, x)), np.linalg.norm(x - model.mean)
            )

    def test_projection_matches_dense_multiply(self):
        rng = np.random.default_rng(12)
        X = rng.random((50, 93))
        model = fit_pca(X, variance_target=0.9)
        x = rng.random(93)
        expected = (model.basis @ (x - model.mean)) * model.whitening_scales
        np.testing.assert_allclose(project(model, x), expected, atol=1e-12)

    def test_roundtrip_full_basis(self):
        rng = np.random.default_rng(13)
        X = rng.normal(size=(40, 7))
        for whiten in (False, True):
            model = fit_pca(X, variance_target=1.0, whiten=whiten)
            x = rng.normal(size=7)
            np.testing.assert_allclose(
                reconstruct(model, project(model, x)), x, atol=1e-9
            )

    def test_zero_coordinates_reconstruct_mean(self):
        rng = np.random.default_rng(14)
        model = fit_pca(rng.normal(size=(40, 5)), variance_target=0.8, whiten=False)
        np.testing.assert_allclose(
            reconstruct(model, np.zeros(model.m)), model.mean, atol=1e-12
        )

    def test_truncation_residual_orthogonal_to_basis(self):
        rng = np.random.default_rng(15)
        X = rng.normal(size=(60, 9))
        model = fit_pca(X, variance_target=0.6, whiten=False)
        assert model.m < 9
        x = rng.normal(size=9)
        residual = x - reconstruct(model, project(model, x))
        for row in model.basis:
            assert abs(np.dot(residual, row)) <= 1e-9

    def test_basis_rows_orthonormal(self):
        rng = np.random.default_rng(16)
        model = fit_pca(rng.random((100, 93)), variance_target=0.95)
        gram = model.basis @ model.basis.T
        assert np.max(np.abs(gram - np.eye(model.m))) <= 1e-9


class TestReconstructionError:
    def test_full_retention_zero_error(self):
        rng = np.random.default_rng(17)
        model = fit_pca(rng.normal(size=(50, 5)), variance_target=1.0)
        assert reconstruction_error(model) == 0.0

    def test_tail_sum_by_construction(self):
        rng = np.random.default_rng(18)
        model = fit_pca(rng.normal(size=(50, 6)), variance_target=0.5)
        assert reconstruction_error(model) == model.eigenvalues[model.m :].sum()

    def test_equals_empirical_mean_squared_error(self):
        rng = np.random.default_rng(19)
        X = rng.normal(size=(120, 5)) @ np.diag([3.0, 2.0, 1.0, 0.5, 0.1])
        mean, cov = compute_covariance(X)
        values, vectors = eigendecompose(cov)
        for m in range(1, 6):
            basis = vectors[:, :m].T
            model = PcaModel(
                mean=mean,
                eigenvalues=values,
                basis=basis,
                m=m,
                whitening_scales=np.ones(m),
                epsilon=0.0,
                whiten=False,
            )
            recon = reconstruct(model, project(model, X))
            empirical = float(np.mean(np.sum((X - recon) ** 2, axis=1)))
            predicted = reconstruction_error(model)
            assert empirical == pytest.approx(predicted, rel=1e-8, abs=1e-12)

    def test_monotone_in_retained_dimension(self):
        rng = np.random.default_rng(20)
        X = rng.normal(size=(80, 8))
        mean, cov = compute_covariance(X)
        values, vectors = eigendecompose(cov)
        errors = [values[m:].sum() for m in range(1, 9)]
        assert all(a >= b - 1e-12 for a, b in zip(errors, errors[1:]))


class TestWhitenedDistance:
    def test_identical_points(self):
        rng = np.random.default_rng(21)
        model = fit_pca(rng.normal(size=(50, 4)), variance_target=1.0)
        x = rng.normal(size=4)
        assert whitened_distance(model, x, x) == 0.0

    def test_requires_whitening(self):
        rng = np.random.default_rng(22)
        model = fit_pca(rng.normal(size=(50, 4)), variance_target=1.0, whiten=False)
        with pytest.raises(ModeError):
            whitened_distance(model, np.zeros(4), np.ones(4))

    def test_identity_covariance_is_euclidean(self):
        rng = np.random.default_rng(23)
        # Build a sample whose population covariance is exactly identity.
        X = rng.normal(size=(200, 4))
        X -= X.mean(axis=0)
        _, cov = compute_covariance(X)
        X = X @ np.linalg.inv(np.linalg.cholesky(cov)).T
        _, check = compute_covariance(X)
        np.testing.assert_allclose(check, np.eye(4), atol=1e-10)
        model = fit_pca(X, variance_target=1.0)
        x1, x2 = rng.normal(size=4), rng.normal(size=4)
        assert whitened_distance(model, x1, x2) == pytest.approx(
            np.linalg.norm(x1 - x2), rel=1e-6
        )

    def test_matches_explicit_inverse_mahalanobis(self):
        rng = np.random.default_rng(24)
        for n in (4, 6, 10):
            # Well-conditioned mixing so the whitening regularizer stays
            # far below the 1e-6 comparison tolerance.
            q, _ = np.linalg.qr(rng.normal(size=(n, n)))
            A = q @ np.diag(np.linspace(1.0, 2.0, n))
            X = rng.normal(size=(600, n)) @ A + rng.normal(size=n)
            model = fit_pca(X, variance_target=1.0)
            assert model.m == n
            _, cov = compute_covariance(X)
            inv = np.linalg.inv(cov)
            for _ in range(5):
                x1, x2 = rng.normal(size=n), rng.normal(size=n)
                expected = float(np.sqrt((x1 - x2) @ inv @ (x1 - x2)))
                got = whitened_distance(model, x1, x2)
                assert got == pytest.approx(expected, rel=1e-6)


@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_trace_conservation_property(n, seed):
    R = random_psd(np.random.default_rng(seed), n)
    values, _ = eigendecompose(R)
    trace = np.trace(R)
    assert abs(values.sum() - trace) <= 1e-8 * max(1.0, abs(trace))
