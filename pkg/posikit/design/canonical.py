"""
Canonical coordinates: the design and the response expressed
in an orthonormal basis of the column space of X
"""
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np
import scipy.linalg

from posikit.consts import DEFAULT_RANK_TOLERANCE
from posikit.design.matrix import DesignMatrix, numerical_rank
from posikit.errors import DataError, InfeasibleError
from posikit.utils import logger


class CanonicalForm(str, Enum):
    upper_triangular = 'upper_triangular'
    symmetric = 'symmetric'
    unspecified = 'unspecified'


@dataclass
class CanonicalDesign:
    """
    Reduced design X~ (d x p) with X~^T X~ = X^T X
    """
    values: np.ndarray
    basis: np.ndarray
    """
    n x d matrix Q with orthonormal columns, X~ = Q^T X
    """
    form: CanonicalForm = CanonicalForm.unspecified
    column_names: list[str] = field(default_factory=list)
    rank_tolerance: float = DEFAULT_RANK_TOLERANCE
    pivot: np.ndarray | None = None
    """
    Column order of the pivoted factorization, set only if d < p
    """

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.basis = np.asarray(self.basis, dtype=float)
        self.form = CanonicalForm(self.form)
        assert self.values.ndim == 2
        assert self.basis.shape[1] == self.values.shape[0]
        if not self.column_names:
            self.column_names = [f'x{k + 1}' for k in range(self.p)]

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @property
    def is_classical(self) -> bool:
        """
        True if d = p
        """
        return self.d == self.p

    @cached_property
    def column_norms(self) -> np.ndarray:
        return np.linalg.norm(self.values, axis=0)

    def column(self, j: int) -> np.ndarray:
        """
        Args:
            j (int): 1-based predictor index

        Returns:
            np.ndarray: column X~_j
        """
        if not 1 <= j <= self.p:
            raise DataError(f'predictor {j} is out of range 1..{self.p}')
        return self.values[:, j - 1]

    def gram(self) -> np.ndarray:
        return self.values.T @ self.values

    def reduce_response(self, y: np.ndarray) -> np.ndarray:
        """
        Canonical response y~ = Q^T y.
        Fits and t-ratios computed from (X~, y~) equal the ones from (X, y)

        Args:
            y (np.ndarray): response of length n

        Returns:
            np.ndarray: vector of length d
        """
        y = np.asarray(y, dtype=float)
        if y.shape != (self.n, ):
            raise DataError(
                f'vector has length {y.shape[0] if y.ndim else 0}, expected n={self.n}'
            )
        return self.basis.T @ y


def from_matrix(values: np.ndarray,
                form: CanonicalForm | str = CanonicalForm.unspecified,
                column_names: list[str] | None = None,
                rank_tolerance: float = DEFAULT_RANK_TOLERANCE
                ) -> CanonicalDesign:
    """
    Wraps a d x p matrix with full row rank as a design already in canonical coordinates.
    Used for constructed designs, the basis is the identity

    Args:
        values (np.ndarray): d x p matrix
        form (CanonicalForm | str, optional): declared form
        column_names (list[str] | None, optional): names of columns
        rank_tolerance (float, optional): relative singular-value cutoff

    Returns:
        CanonicalDesign: design with n = d
    """
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if not np.all(np.isfinite(values)):
        raise DataError('canonical design has non-finite entries')
    rank = numerical_rank(values, rank_tolerance)
    if rank != values.shape[0]:
        raise DataError(
            f'canonical design must have full row rank, got rank {rank} for {values.shape[0]} rows'
        )
    return CanonicalDesign(values, np.eye(values.shape[0]), form,
                           list(column_names or []), rank_tolerance)


def canonicalize(X: DesignMatrix,
                 form: CanonicalForm | str = CanonicalForm.upper_triangular
                 ) -> CanonicalDesign:
    """
    Reduces the design to canonical coordinates

    Args:
        X (DesignMatrix): design
        form (CanonicalForm | str, optional): upper_triangular or symmetric.
            Defaults to upper_triangular.

    Returns:
        CanonicalDesign: X~ with X~^T X~ = X^T X
    """
    form = CanonicalForm(form)
    d = X.rank
    pivot = None
    if form == CanonicalForm.symmetric:
        if d < X.p:
            raise InfeasibleError(
                f'symmetric canonical form requires d = p, got d={d}, p={X.p}')
        U, s, Vt = np.linalg.svd(X.values, full_matrices=False)
        basis = U @ Vt
        values = (Vt.T * s) @ Vt
        values = (values + values.T) / 2
    elif form == CanonicalForm.upper_triangular:
        if d == X.p:
            Q, R = np.linalg.qr(X.values, mode='reduced')
            signs = np.where(np.diag(R) < 0, -1.0, 1.0)
            basis = Q * signs
            values = np.triu(R * signs[:, None])
        else:
            Q, R, pivot = scipy.linalg.qr(X.values,
                                          mode='economic',
                                          pivoting=True)
            signs = np.where(np.diag(R)[:d] < 0, -1.0, 1.0)
            basis = Q[:, :d] * signs
            values = basis.T @ X.values
    else:
        raise InfeasibleError(f'can not build canonical form {form.value}')
    logger.debug(
        f'canonical form {form.value}: n={X.n}, p={X.p}, d={d}')
    return CanonicalDesign(values, basis, form, list(X.column_names),
                           X.rank_tolerance, pivot)
