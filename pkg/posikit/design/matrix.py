"""
Raw predictor matrices: loading from tabular text and rank bookkeeping
"""
import io
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import TextIO

import numpy as np
import pandas as pd

from posikit.consts import DEFAULT_RANK_TOLERANCE
from posikit.errors import DataError
from posikit.utils import logger

INTERCEPT_NAME = 'intercept'


def numerical_rank(values: np.ndarray, rank_tolerance: float) -> int:
    """
    Rank with a relative singular-value cutoff

    Args:
        values (np.ndarray): matrix
        rank_tolerance (float): sigma_k counts if sigma_k >= rank_tolerance * sigma_max

    Returns:
        int: numerical rank
    """
    singular = np.linalg.svd(values, compute_uv=False)
    if singular.size == 0 or singular[0] == 0:
        return 0
    return int(np.sum(singular >= rank_tolerance * singular[0]))


@dataclass
class DesignMatrix:
    """
    Full predictor matrix X (n x p), possibly of nonfull rank
    """
    values: np.ndarray
    column_names: list[str] = field(default_factory=list)
    rank_tolerance: float = DEFAULT_RANK_TOLERANCE

    def __post_init__(self):
        self.values = np.array(self.values, dtype=float)
        if self.values.ndim != 2:
            raise DataError(
                f'design must be a matrix, got shape {self.values.shape}')
        n, p = self.values.shape
        if n < 1 or p < 1:
            raise DataError(f'design must be nonempty, got shape {(n, p)}')
        if not np.all(np.isfinite(self.values)):
            row, col = np.argwhere(~np.isfinite(self.values))[0]
            raise DataError(
                f'non-finite entry at row {row + 1}, column {col + 1}')
        if self.rank_tolerance < 0:
            raise DataError(
                f'rank tolerance must be nonnegative: {self.rank_tolerance}')
        if not self.column_names:
            self.column_names = [f'x{k + 1}' for k in range(p)]
        if len(self.column_names) != p:
            raise DataError(
                f'{len(self.column_names)} column names for {p} columns')
        if self.rank < 1:
            raise DataError('design has rank 0')

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @cached_property
    def rank(self) -> int:
        """
        d = rank(X), 1 <= d <= min(n, p)
        """
        return numerical_rank(self.values, self.rank_tolerance)


def _detect_separator(text: str) -> str:
    for line in text.splitlines():
        if line.strip():
            return ',' if ',' in line else r'\s+'
    raise DataError('empty table')


def load_design(source: TextIO | str | Path,
                header: bool = False,
                intercept: bool = False,
                rank_tolerance: float = DEFAULT_RANK_TOLERANCE) -> DesignMatrix:
    """
    Reads a comma- or whitespace-separated numeric table

    Args:
        source (TextIO | str | Path): text stream or path to a file
        header (bool, optional): if set, the first line holds column names. Defaults to False.
        intercept (bool, optional): if set, a constant column is prepended. Defaults to False.
        rank_tolerance (float, optional): relative singular-value cutoff

    Returns:
        DesignMatrix: loaded design with computed rank
    """
    text = _read_text(source, 'design')
    table = _parse_table(text, header)
    values = _to_numeric(table)
    names = [str(c).strip()
             for c in table.columns] if header else []
    if intercept:
        values = np.hstack([np.ones((values.shape[0], 1)), values])
        if names:
            names = [INTERCEPT_NAME] + names
        else:
            names = [INTERCEPT_NAME] + [
                f'x{k + 1}' for k in range(values.shape[1] - 1)
            ]
    design = DesignMatrix(values, names, rank_tolerance)
    logger.debug(
        f'loaded design n={design.n}, p={design.p}, d={design.rank}')
    return design


def load_vector(source: TextIO | str | Path, name: str = 'vector') -> np.ndarray:
    """
    Reads one numeric value per line (response or mean vectors)

    Args:
        source (TextIO | str | Path): text stream or path to a file
        name (str, optional): name used in error messages

    Returns:
        np.ndarray: vector
    """
    text = _read_text(source, name)
    table = _parse_table(text, header=False)
    if table.shape[1] != 1:
        raise DataError(
            f'{name} must have one value per line, got {table.shape[1]} columns'
        )
    return _to_numeric(table)[:, 0]


def _read_text(source: TextIO | str | Path, name: str) -> str:
    if not isinstance(source, (str, Path)):
        return source.read()
    try:
        with open(source) as inp:
            return inp.read()
    except OSError as e:
        raise DataError(f'can not read {name} file {source}: {e}')


def _parse_table(text: str, header: bool) -> pd.DataFrame:
    sep = _detect_separator(text)
    try:
        table = pd.read_csv(io.StringIO(text),
                            sep=sep,
                            header=0 if header else None,
                            dtype=str,
                            na_filter=False,
                            skip_blank_lines=True,
                            skipinitialspace=True,
                            engine='python')
    except pd.errors.EmptyDataError:
        raise DataError('empty table')
    except pd.errors.ParserError as e:
        raise DataError(f'ragged rows: {e}')
    if table.shape[0] == 0 or table.shape[1] == 0:
        raise DataError('empty table')
    missing = table.isna().to_numpy() | (table.to_numpy() == '')
    if missing.any():
        row, _ = np.argwhere(missing)[0]
        raise DataError(f'ragged rows: row {row + 1} has missing cells')
    return table


def _to_numeric(table: pd.DataFrame) -> np.ndarray:
    numeric = table.apply(lambda col: pd.to_numeric(col.str.strip(),
                                                     errors='coerce'))
    values = numeric.to_numpy(dtype=float)
    bad = ~np.isfinite(values)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise DataError(
            f'non-numeric cell at row {row + 1}, column {col + 1}: "{table.iat[row, col]}"'
        )
    return values


def estimate_sigma(design: DesignMatrix, y: np.ndarray) -> tuple[float, int]:
    """
    Error estimate from the full-model residuals: sigma_hat^2 = RSS / (n - d)

    Args:
        design (DesignMatrix): full design
        y (np.ndarray): response of length n

    Returns:
        tuple[float, int]: sigma_hat and its degrees of freedom r = n - d
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (design.n, ):
        raise DataError(
            f'response has length {y.shape[0] if y.ndim else 0}, expected {design.n}'
        )
    df = design.n - design.rank
    if df < 1:
        raise DataError(
            f'no degrees of freedom left for the error estimate (n={design.n}, d={design.rank})'
        )
    beta, *_ = np.linalg.lstsq(design.values, y, rcond=None)
    residual = y - design.values @ beta
    return float(np.sqrt(residual @ residual / df)), df
