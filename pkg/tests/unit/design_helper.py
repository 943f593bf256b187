"""
Designs shared by the tests
"""
import numpy as np

from posikit.design.canonical import CanonicalDesign, canonicalize, from_matrix
from posikit.design.matrix import DesignMatrix


def random_matrix(n: int, p: int, seed: int = 0) -> DesignMatrix:
    rng = np.random.default_rng(seed)
    return DesignMatrix(rng.standard_normal((n, p)))


def random_design(p: int, n: int | None = None, seed: int = 0,
                  form: str = 'upper_triangular') -> CanonicalDesign:
    """
    Generic design: no orthogonal pairs, full rank min(n, p)
    """
    return canonicalize(random_matrix(n or p + 3, p, seed), form)


def random_symmetric_pd(p: int, seed: int = 0) -> CanonicalDesign:
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((p, p))
    values = a @ a.T + p * np.eye(p)
    return from_matrix(values, 'symmetric')


def orthogonal_pair_design(p: int, seed: int = 0) -> CanonicalDesign:
    """
    Upper-triangular design with X_1 = e_1, X_2 = e_2 and generic other columns
    """
    rng = np.random.default_rng(seed)
    values = np.triu(rng.uniform(0.5, 1.5, (p, p)))
    values[:, 0] = 0
    values[0, 0] = 1
    values[:, 1] = 0
    values[1, 1] = 1
    return from_matrix(values, 'upper_triangular')
