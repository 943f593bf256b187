"""
Two analyzed design families:
exchangeable designs I + aE and the upper-triangular designs that are worst for PoSI1.
Closed-form directions, fast statistics and constant tables
"""
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import optimize, stats

from posikit.consts import DRAW_BLOCK_SIZE
from posikit.design.canonical import CanonicalDesign, CanonicalForm, from_matrix
from posikit.design.directions import Direction
from posikit.design.models import ModelId
from posikit.design.universe import ModelUniverse
from posikit.engine.constants import ErrorModel, check_alpha, posi_K
from posikit.engine.quantile import conservative_quantile, quantile_index, quantile_standard_error
from posikit.engine.rng import block_count, draw_block
from posikit.errors import DataError, UsageError
from posikit.utils import logger
from posikit.workers import map_ordered


@dataclass(frozen=True)
class ExchangeableParam:
    """
    X_p(a) = I_p + a E, E is the matrix of ones, a > -1/p
    """
    p: int
    a: float

    def __post_init__(self):
        if self.p < 1:
            raise UsageError(f'p must be positive, got {self.p}')
        if not self.a > -1 / self.p:
            raise UsageError(
                f'exchangeable parameter must exceed -1/p={-1 / self.p:.4g}, got {self.a}')


@dataclass(frozen=True)
class WorstPosi1Param:
    """
    Design (e_1, ..., e_{p-1}, X_p(c)), X_p(c) = (c, ..., c, sqrt(1 - (p-1)c^2)), c^2 < 1/(p-1)
    """
    p: int
    c: float

    def __post_init__(self):
        if self.p < 2:
            raise UsageError(f'p must be at least 2, got {self.p}')
        if not self.c**2 * (self.p - 1) < 1:
            raise UsageError(
                f'c^2 must be below 1/(p-1)={1 / (self.p - 1):.4g}, got c={self.c}')

    @property
    def last_entry(self) -> float:
        return math.sqrt(1 - (self.p - 1) * self.c**2)


def exchangeable_design(param: ExchangeableParam) -> CanonicalDesign:
    """
    Symmetric canonical design I + aE
    """
    values = np.eye(param.p) + param.a * np.ones((param.p, param.p))
    return from_matrix(values, CanonicalForm.symmetric)


def exchangeable_dual_parameter(p: int, a: float) -> float:
    """
    c_p(a) = -a / (1 + pa), so that X_p(a)^{-1} = X_p(c_p(a))
    """
    ExchangeableParam(p, a)
    return -a / (1 + p * a)


def exchangeable_cosine(p: int, a: float) -> float:
    """
    Cosine between any two columns of X_p(a), tends to -1/(p-1) as a approaches -1/p
    """
    ExchangeableParam(p, a)
    return (2 * a + p * a**2) / (1 + 2 * a + p * a**2)


def exchangeable_direction_formula(param: ExchangeableParam, model: ModelId,
                                   j: int) -> Direction:
    """
    Closed-form direction l*_{j.M} of X_p(a).
    For j = 1 and M = {1..m} the adjusted predictor has entries 1 + da at 1,
    -(1 - d)/(m - 1) + da on the rest of M and da outside M,
    d = (1/(m-1)) / (pa^2 + 2a + 1/(m-1)); other (j, M) are permutations of it

    Args:
        param (ExchangeableParam): design parameters
        model (ModelId): model
        j (int): predictor in the model

    Returns:
        Direction: direction with its raw norm
    """
    p, a = param.p, param.a
    if j not in model:
        raise DataError(f'predictor {j} is not in model {model}')
    if model.last > p:
        raise DataError(f'model {model} refers to predictors above p={p}')
    m = model.size
    if m == 1:
        vector = np.full(p, a)
        vector[j - 1] += 1
    else:
        delta = (1 / (m - 1)) / (p * a**2 + 2 * a + 1 / (m - 1))
        vector = np.full(p, delta * a)
        for k in model:
            vector[k - 1] += -(1 - delta) / (m - 1)
        vector[j - 1] = 1 + delta * a
    norm = float(np.linalg.norm(vector))
    return Direction(vector / norm, j, model, norm)


def _exchangeable_cell(cell: tuple[int, float], alpha: float, em: ErrorModel,
                       n: int, seed: int) -> dict:
    p, a = cell
    design = exchangeable_design(ExchangeableParam(p, a))
    estimate = posi_K(design, ModelUniverse(), alpha, em, n, seed)
    return {
        'p': p,
        'a': a,
        'dual_a': exchangeable_dual_parameter(p, a),
        'K': estimate.K,
        'mc_standard_error': estimate.mc_standard_error,
        'ratio': estimate.K / math.sqrt(2 * math.log(p)) if p > 1 else math.nan,
    }


def exchangeable_ratio_cells(p_list: list[int],
                             a_grid: list[float],
                             alpha: float,
                             n: int,
                             seed: int,
                             em: ErrorModel | None = None,
                             threads: int = 1) -> pd.DataFrame:
    """
    Monte-Carlo K(X_p(a)) / sqrt(2 log p) for every p and a.
    Negative a are replaced by their dual parameter, which has the same constant

    Args:
        p_list (list[int]): dimensions
        a_grid (list[float]): parameters
        alpha (float): error level
        n (int): number of draws
        seed (int): seed, shared by all cells
        em (ErrorModel | None, optional): error model, sigma known if not set
        threads (int, optional): number of threads, cells run in parallel

    Returns:
        pd.DataFrame: one row per distinct (p, a) with a >= 0
    """
    check_alpha(alpha)
    em = em or ErrorModel()
    cells = []
    for p in p_list:
        if p < 2:
            raise UsageError(f'exchangeable table needs p >= 2, got {p}')
        for a in a_grid:
            a = float(a)
            if a < 0:
                a = exchangeable_dual_parameter(p, a)
            if (p, a) not in cells:
                cells.append((p, a))
    logger.info(f'computing {len(cells)} exchangeable cells')
    rows = map_ordered(lambda cell: _exchangeable_cell(cell, alpha, em, n, seed),
                       cells, threads)
    return pd.DataFrame(rows)


def exchangeable_ratio_table(p_list: list[int],
                             a_grid: list[float],
                             alpha: float,
                             n: int,
                             seed: int,
                             em: ErrorModel | None = None,
                             threads: int = 1) -> pd.DataFrame:
    """
    sup over the a-grid of K(X_p(a), alpha) / sqrt(2 log p), one row per p

    Returns:
        pd.DataFrame: columns p, a, dual_a, K, mc_standard_error, ratio
    """
    cells = exchangeable_ratio_cells(p_list, a_grid, alpha, n, seed, em,
                                     threads)
    best = cells.loc[cells.groupby('p', sort=False)['ratio'].idxmax()]
    return best.reset_index(drop=True)


def worst_posi1_design(param: WorstPosi1Param) -> CanonicalDesign:
    """
    Upper-triangular design (e_1, ..., e_{p-1}, X_p(c)); column p has unit norm
    """
    values = np.eye(param.p)
    values[:-1, -1] = param.c
    values[-1, -1] = param.last_entry
    return from_matrix(values, CanonicalForm.upper_triangular)


def _sorted_tails(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Sums of the k largest and the k smallest of the first p - 1 coordinates, k = 0..p-1
    """
    rest = np.sort(z[:, :-1], axis=1)
    zeros = np.zeros((z.shape[0], 1))
    bottom = np.hstack([zeros, np.cumsum(rest, axis=1)])
    top = np.hstack([zeros, np.cumsum(rest[:, ::-1], axis=1)])
    return top, bottom


def _worst_posi1_from_tails(p: int, c: float, last: np.ndarray,
                            top: np.ndarray,
                            bottom: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    param = WorstPosi1Param(p, c)
    k = np.arange(p)
    # model size m = p - k, the complement has k coordinates
    scale = 1 / np.sqrt(1 - (p - k - 1) * c**2)
    base = param.last_entry * last[:, None]
    values = np.maximum(np.abs(base + c * top), np.abs(base + c * bottom)) * scale
    best = np.argmax(values, axis=1)
    return values[np.arange(values.shape[0]), best], p - best


def fast_worst_posi1_stat(p: int,
                          c: float,
                          z: np.ndarray,
                          return_size: bool = False
                          ) -> float | np.ndarray | tuple:
    """
    max over models M containing p of |l*_{p.M}^T z| for the worst PoSI1 design,
    computed from sorted coordinates: for |M| = m the best complement holds
    the p - m largest or the p - m smallest of z_1..z_{p-1}

    Args:
        p (int): dimension
        c (float): design parameter
        z (np.ndarray): one draw of length p or N x p draws
        return_size (bool, optional): if set, the maximizing model size is returned too

    Returns:
        float | np.ndarray | tuple: statistic per draw (and the model size)
    """
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    z = np.atleast_2d(z)
    if z.shape[1] != p:
        raise DataError(f'draws must have {p} coordinates, got {z.shape[1]}')
    top, bottom = _sorted_tails(z)
    values, sizes = _worst_posi1_from_tails(p, c, z[:, -1], top, bottom)
    if single:
        values, sizes = float(values[0]), int(sizes[0])
    return (values, sizes) if return_size else values


def default_c_grid(p: int, size: int = 12) -> list[float]:
    """
    c^2 = (1 - 2^{-k}) / (p - 1), k = 1..size, approaching the boundary geometrically
    """
    return [math.sqrt((1 - 2.0**-k) / (p - 1)) for k in range(1, size + 1)]


def worst_posi1_ratio_table(p: int,
                            c_grid: list[float] | None,
                            alpha: float,
                            n: int,
                            seed: int,
                            threads: int = 1) -> pd.DataFrame:
    """
    PoSI1 constants K_{p.} / sqrt(p) of the worst designs over a c-grid, sigma known.
    All grid values share the draws

    Args:
        p (int): dimension
        c_grid (list[float] | None): grid, default_c_grid(p) if not set
        alpha (float): error level
        n (int): number of draws
        seed (int): seed
        threads (int, optional): number of threads

    Returns:
        pd.DataFrame: columns c, c2_fraction, K, mc_standard_error, ratio, median_size_ratio
    """
    check_alpha(alpha)
    quantile_index(alpha, n)
    grid = list(c_grid) if c_grid else default_c_grid(p)
    for c in grid:
        WorstPosi1Param(p, c)

    def run_block(b):
        z, _ = draw_block(seed, b, n, p, math.inf)
        top, bottom = _sorted_tails(z)
        return [
            _worst_posi1_from_tails(p, c, z[:, -1], top, bottom) for c in grid
        ]

    blocks = map_ordered(run_block, range(block_count(n, DRAW_BLOCK_SIZE)),
                         threads)
    rows = []
    for i, c in enumerate(grid):
        values = np.concatenate([block[i][0] for block in blocks])
        sizes = np.concatenate([block[i][1] for block in blocks])
        K = conservative_quantile(values, alpha)
        rows.append({
            'c': c,
            'c2_fraction': c**2 * (p - 1),
            'K': K,
            'mc_standard_error': quantile_standard_error(values, alpha, K),
            'ratio': K / math.sqrt(p),
            'median_size_ratio': float(np.median(sizes)) / p,
        })
    return pd.DataFrame(rows)


def rate_function_f(r: float) -> float:
    """
    f(r) = phi(Phi^{-1}(r)) / sqrt(1 - r), the limit of the worst PoSI1 statistic
    divided by sqrt(p) for models of size rp

    Args:
        r (float): size ratio in (0, 1)

    Returns:
        float: value
    """
    if not 0 < r < 1:
        raise UsageError(f'r must be in (0, 1), got {r}')
    return float(stats.norm.pdf(stats.norm.ppf(r)) / math.sqrt(1 - r))


def maximize_rate_function() -> tuple[float, float]:
    """
    Golden-section search for the maximum of rate_function_f

    Returns:
        tuple[float, float]: r* and f(r*)
    """
    result = optimize.minimize_scalar(lambda r: -rate_function_f(r),
                                      bracket=(0.5, 0.7, 0.95),
                                      method='golden',
                                      tol=1e-10)
    return float(result.x), float(-result.fun)
