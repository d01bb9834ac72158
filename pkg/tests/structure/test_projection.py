import numpy as np
import pytest

from latentlens.structure.projection import (
    EMBEDDING_COLUMNS,
    DegenerateDataError,
    DimensionError,
    embed_2d,
    embedding_coordinates,
    fit_lda_projection,
    fit_pca_basis,
)


@pytest.fixture
def three_classes():
    """Classes separated along the first axis only, with large nuisance variance on the second."""
    rng = np.random.default_rng(0)
    y = np.repeat([0, 1, 2], 60)
    X = np.column_stack([3.0 * y + 0.3 * rng.standard_normal(180), 5.0 * rng.standard_normal(180), rng.standard_normal(180)])
    return X, y


class TestLdaProjection:
    def test_top_direction_is_discriminative_axis(self, three_classes):
        X, y = three_classes
        basis = fit_lda_projection(X, y, 2)
        assert basis.rank == 2
        assert basis.kind == "lda"
        top = basis.matrix[:, 0] / np.linalg.norm(basis.matrix[:, 0])
        assert abs(top[0]) > 0.99
        assert np.all(np.diff(basis.eigenvalues) <= 0)

    def test_signs_are_canonical(self, three_classes):
        X, y = three_classes
        basis = fit_lda_projection(X, y, 1)
        column = basis.matrix[:, 0]
        assert column[np.argmax(np.abs(column))] > 0

    def test_rotation_equivariant(self, three_classes):
        X, y = three_classes
        rotation, _ = np.linalg.qr(np.random.default_rng(1).standard_normal((3, 3)))
        original = fit_lda_projection(X, y, 2)
        rotated = fit_lda_projection(X @ rotation.T, y, 2)
        np.testing.assert_allclose(rotated.eigenvalues, original.eigenvalues, rtol=1e-6)
        a, b = original.project(X), rotated.project(X @ rotation.T)
        signs = np.sign(np.sum(a * b, axis=0))
        np.testing.assert_allclose(b * signs, a, atol=1e-8)

    def test_identical_classes_have_null_eigenvalues(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((900, 3))
        y = np.repeat([0, 1, 2], 300)
        basis = fit_lda_projection(X, y, 2)
        assert np.all(basis.eigenvalues <= 0.05)
        assert np.all(basis.eigenvalues >= 0)

    def test_collinear_means_leave_a_null_eigenvalue(self):
        rng = np.random.default_rng(2)
        y = np.repeat([0, 1, 2], 80)
        X = np.column_stack([2.0 * y, np.zeros(240), np.zeros(240)]) + rng.standard_normal((240, 3))
        basis = fit_lda_projection(X, y, 2)
        assert basis.eigenvalues[0] > 1.0
        assert basis.eigenvalues[1] < 0.05 * basis.eigenvalues[0]
        assert np.all(basis.eigenvalues >= 0)

    @pytest.mark.parametrize("k", [0, 3])
    def test_rank_bounds(self, three_classes, k):
        X, y = three_classes
        with pytest.raises(DimensionError):
            fit_lda_projection(X, y, k)


class TestPcaBasis:
    def test_orthonormal_columns(self, three_classes):
        X, _ = three_classes
        basis = fit_pca_basis(X, 2)
        np.testing.assert_allclose(basis.matrix.T @ basis.matrix, np.eye(2), atol=1e-10)

    def test_needs_two_records(self):
        with pytest.raises(DegenerateDataError):
            fit_pca_basis(np.zeros((1, 3)), 1)

    def test_rank_bound(self):
        with pytest.raises(DimensionError):
            fit_pca_basis(np.random.default_rng(0).standard_normal((5, 2)), 3)


class TestEmbedding:
    def test_rank_one_is_zero_padded(self, three_classes):
        X, y = three_classes
        coords = embedding_coordinates(X, fit_lda_projection(X, y, 1))
        assert coords.shape == (180, 2)
        np.testing.assert_array_equal(coords[:, 1], 0.0)

    def test_higher_rank_is_reduced_to_two(self, three_classes):
        X, _ = three_classes
        coords = embedding_coordinates(X, fit_pca_basis(X, 3))
        assert coords.shape == (180, 2)

    def test_reference_fixes_the_reduction(self, three_classes):
        X, _ = three_classes
        basis = fit_pca_basis(X, 3)
        subset = X[::4]
        full = embedding_coordinates(X, basis)
        np.testing.assert_allclose(embedding_coordinates(subset, basis, reference=X), full[::4], atol=1e-10)

    def test_table_metadata(self, three_classes):
        X, y = three_classes
        table = embed_2d(X, fit_pca_basis(X, 2), y, level=2, space="sample")
        assert list(table.columns) == EMBEDDING_COLUMNS
        assert set(table["kind"]) == {"raw"}
        assert set(table["level"]) == {2}
        assert set(table["space"]) == {"sample"}

    def test_deterministic(self, three_classes):
        X, y = three_classes
        a = embed_2d(X, fit_lda_projection(X, y, 2), y)
        b = embed_2d(X, fit_lda_projection(X, y, 2), y)
        np.testing.assert_array_equal(a[["e0", "e1"]].to_numpy(), b[["e0", "e1"]].to_numpy())
