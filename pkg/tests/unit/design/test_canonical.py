import numpy as np
import pytest

from posikit.design.canonical import CanonicalForm, canonicalize, from_matrix
from posikit.design.matrix import DesignMatrix
from posikit.errors import DataError, InfeasibleError
from tests.unit.design_helper import random_matrix


@pytest.mark.parametrize('form', ['upper_triangular', 'symmetric'])
def test_gram_preserved(form):
    X = random_matrix(8, 4, seed=1)
    design = canonicalize(X, form)
    assert design.d == 4
    assert design.p == 4
    assert design.n == 8
    np.testing.assert_allclose(design.gram(), X.values.T @ X.values, atol=1e-10)
    np.testing.assert_allclose(design.basis.T @ design.basis, np.eye(4), atol=1e-12)
    np.testing.assert_allclose(design.basis @ design.values, X.values, atol=1e-10)


def test_upper_triangular_shape():
    design = canonicalize(random_matrix(6, 3, seed=2))
    assert design.form == CanonicalForm.upper_triangular
    np.testing.assert_allclose(np.tril(design.values, -1), 0, atol=1e-14)
    assert np.all(np.diag(design.values) > 0)
    assert design.is_classical


def test_symmetric_shape():
    design = canonicalize(random_matrix(6, 3, seed=2), 'symmetric')
    np.testing.assert_allclose(design.values, design.values.T, atol=1e-12)
    assert np.all(np.linalg.eigvalsh(design.values) > 0)


def test_rank_deficient():
    values = random_matrix(6, 3, seed=4).values
    X = DesignMatrix(np.hstack([values, values[:, :1] + values[:, 1:2]]))
    design = canonicalize(X)
    assert design.d == 3
    assert design.p == 4
    assert not design.is_classical
    np.testing.assert_allclose(design.gram(), X.values.T @ X.values, atol=1e-10)
    with pytest.raises(InfeasibleError):
        canonicalize(X, 'symmetric')


def test_reduce_response():
    X = random_matrix(10, 3, seed=5)
    design = canonicalize(X)
    y = np.random.default_rng(0).standard_normal(10)
    y_red = design.reduce_response(y)
    beta, *_ = np.linalg.lstsq(X.values, y, rcond=None)
    beta_red, *_ = np.linalg.lstsq(design.values, y_red, rcond=None)
    np.testing.assert_allclose(beta, beta_red, atol=1e-10)
    with pytest.raises(DataError):
        design.reduce_response(np.ones(3))


def test_from_matrix():
    design = from_matrix(np.eye(3))
    assert design.n == 3
    assert design.column_names == ['x1', 'x2', 'x3']
    np.testing.assert_allclose(design.column(2), [0, 1, 0])
    with pytest.raises(DataError):
        design.column(4)
    with pytest.raises(DataError):
        from_matrix(np.array([[1.0, 2.0], [2.0, 4.0]]))
