import io

import numpy as np
import pytest

from posikit.design.matrix import (DesignMatrix, estimate_sigma, load_design,
                                   load_vector, numerical_rank)
from posikit.errors import DataError


def test_load_comma(tmp_path):
    path = tmp_path / 'x.csv'
    path.write_text('1,2\n3,4\n5,7\n')
    X = load_design(path)
    assert X.n == 3
    assert X.p == 2
    assert X.rank == 2
    assert X.column_names == ['x1', 'x2']
    np.testing.assert_allclose(X.values[2], [5, 7])


def test_load_whitespace_header_intercept():
    X = load_design(io.StringIO('a b\n1  2\n3\t5\n\n4 1\n'),
                    header=True,
                    intercept=True)
    assert X.column_names == ['intercept', 'a', 'b']
    np.testing.assert_allclose(X.values[:, 0], 1)
    assert X.values.shape == (3, 3)


def test_duplicated_column_drops_rank():
    X = load_design(io.StringIO('1,1,2\n2,2,0\n3,3,1\n4,4,5\n'))
    assert X.p == 3
    assert X.rank == 2


@pytest.mark.parametrize('text, fragment', [
    ('1,2\n3,x\n', 'row 2, column 2'),
    ('1,2\n3\n', 'ragged'),
    ('', 'empty'),
    ('\n\n', 'empty'),
])
def test_load_errors(text, fragment):
    with pytest.raises(DataError) as e:
        load_design(io.StringIO(text))
    assert fragment in str(e.value)


def test_design_errors():
    with pytest.raises(DataError):
        DesignMatrix(np.zeros((3, 2)))
    with pytest.raises(DataError):
        DesignMatrix(np.array([[1.0, np.nan]]))
    with pytest.raises(DataError):
        DesignMatrix(np.ones((2, 2)), ['a'])


def test_numerical_rank():
    values = np.diag([1.0, 1e-3, 1e-12])
    assert numerical_rank(values, 1e-10) == 2
    assert numerical_rank(values, 0) == 3
    assert numerical_rank(np.zeros((2, 2)), 1e-10) == 0


def test_load_vector():
    y = load_vector(io.StringIO('1.5\n-2\n3e1\n'))
    np.testing.assert_allclose(y, [1.5, -2, 30])
    with pytest.raises(DataError):
        load_vector(io.StringIO('1,2\n3,4\n'))


def test_estimate_sigma():
    rng = np.random.default_rng(3)
    X = DesignMatrix(rng.standard_normal((30, 3)))
    noise = rng.standard_normal(30)
    y = X.values @ np.array([1.0, -2.0, 0.5]) + noise
    sigma_hat, df = estimate_sigma(X, y)
    assert df == 27
    beta, *_ = np.linalg.lstsq(X.values, y, rcond=None)
    rss = np.sum((y - X.values @ beta)**2)
    assert sigma_hat == pytest.approx(np.sqrt(rss / 27))
    with pytest.raises(DataError):
        estimate_sigma(X, y[:-1])
    with pytest.raises(DataError):
        estimate_sigma(DesignMatrix(np.eye(2)), np.ones(2))
