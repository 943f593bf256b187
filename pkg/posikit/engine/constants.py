"""
PoSI constants and reference constants.

Monte-Carlo constants are conservative (1 - alpha) quantiles of max |l^T Z| / sigma_hat
over a direction set. Reference constants (Scheffe, orthogonal, sphere-cap bound)
are computed in closed form or by one-dimensional root finding
"""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
from scipy import integrate, optimize, stats

from posikit.consts import (DRAW_BLOCK_SIZE, MATERIALIZE_LIMIT,
                            DIRECTION_BUFFER_SIZE)
from posikit.design.canonical import CanonicalDesign
from posikit.design.directions import DirectionSet, direction_stream
from posikit.design.universe import ModelUniverse, load_universe
from posikit.engine.quantile import (conservative_quantile, quantile_index,
                                     quantile_standard_error)
from posikit.engine.rng import block_count, block_range, draw_block
from posikit.errors import DataError, InfeasibleError, UsageError
from posikit.utils import logger
from posikit.workers import map_ordered


@dataclass(frozen=True)
class ErrorModel:
    """
    Degrees of freedom r of the error estimate, sigma_hat^2 ~ sigma^2 chi2_r / r.
    r = inf means that sigma is known
    """
    df: float = math.inf

    def __post_init__(self):
        if not (math.isinf(self.df) or
                (self.df >= 1 and float(self.df).is_integer())):
            raise UsageError(
                f'df must be a positive integer or inf, got {self.df}')

    @classmethod
    def parse(cls, df: str | int | float | None) -> "ErrorModel":
        if df is None:
            return cls()
        text = str(df).strip().lower()
        if text in ('inf', 'infinity'):
            return cls()
        try:
            return cls(float(text))
        except ValueError:
            raise UsageError(f'bad df: {df}')

    @property
    def sigma_known(self) -> bool:
        return math.isinf(self.df)

    def __str__(self) -> str:
        return 'inf' if self.sigma_known else str(int(self.df))

    def marginal_quantile(self, alpha: float) -> float:
        """
        Two-sided marginal quantile z_{1-alpha/2} or t_{r,1-alpha/2}
        """
        if self.sigma_known:
            return float(stats.norm.isf(alpha / 2))
        return float(stats.t.isf(alpha / 2, self.df))


class Method(str, Enum):
    monte_carlo = 'monte_carlo'
    closed_form = 'closed_form'
    bound = 'bound'


@dataclass
class ConstantEstimate:
    """
    An estimated constant with the settings it belongs to
    """
    K: float
    alpha: float
    error_model: ErrorModel
    method: Method
    mc_samples: int = 0
    mc_standard_error: float = 0.0
    seed: int | None = None
    direction_count: int | None = None
    d: int | None = None
    p: int | None = None
    universe: str | None = None
    details: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.method = Method(self.method)
        assert self.K > 0, f'constant must be positive, got {self.K}'
        assert (self.mc_standard_error == 0) or self.method == Method.monte_carlo

    def to_dict(self) -> dict[str, Any]:
        result = {
            'K': self.K,
            'alpha': self.alpha,
            'df': str(self.error_model),
            'method': self.method.value,
            'mc_samples': self.mc_samples,
            'mc_standard_error': self.mc_standard_error,
            'seed': self.seed,
            'direction_count': self.direction_count,
            'd': self.d,
            'p': self.p,
            'universe': self.universe,
        }
        if self.details:
            result['details'] = dict(self.details)
        return result


def check_alpha(alpha: float):
    if not 0 < alpha < 1:
        raise UsageError(f'alpha must be in (0, 1), got {alpha}')


def _materialized_draws(vectors: np.ndarray, em: ErrorModel, n: int,
                        seed: int, threads: int) -> np.ndarray:

    def run_block(b):
        z, sigma = draw_block(seed, b, n, vectors.shape[1], em.df)
        running = np.zeros(z.shape[0])
        for i in range(0, vectors.shape[0], DIRECTION_BUFFER_SIZE):
            chunk = vectors[i:i + DIRECTION_BUFFER_SIZE]
            np.maximum(running, np.abs(z @ chunk.T).max(axis=1), out=running)
        return running / sigma

    blocks = map_ordered(run_block, range(block_count(n)), threads)
    return np.concatenate(blocks)


def _streamed_draws(directions: DirectionSet, em: ErrorModel, n: int,
                    seed: int, threads: int) -> tuple[np.ndarray, int]:
    d = directions.d
    # only the running maxima and sigma_hat are kept, Z is regenerated from its block key
    sigma = np.concatenate(
        [draw_block(seed, b, n, d, em.df)[1] for b in range(block_count(n))])

    def run_part(part):
        running = np.zeros(n)
        count = 0
        for block in directions.iter_blocks(part):
            count += len(block)
            vt = block.vectors.T
            for b in range(block_count(n)):
                start, stop = block_range(b, n)
                z, _ = draw_block(seed, b, n, d, em.df)
                np.maximum(running[start:stop],
                           np.abs(z @ vt).max(axis=1),
                           out=running[start:stop])
        return running, count

    results = map_ordered(run_part, directions.parts(), threads)
    running = np.zeros(n)
    count = 0
    for part_running, part_count in results:
        np.maximum(running, part_running, out=running)
        count += part_count
    return running / sigma, count


def simulate_max_draws(directions: DirectionSet,
                       em: ErrorModel,
                       n: int,
                       seed: int,
                       threads: int = 1) -> tuple[np.ndarray, int]:
    """
    Draws of max |l^T Z| / sigma_hat over the directions together with the direction count.
    Small sets are materialized and the draws are split between threads,
    large sets are streamed and their parts are split between threads

    Args:
        directions (DirectionSet): directions
        em (ErrorModel): error model
        n (int): number of draws
        seed (int): seed
        threads (int, optional): number of threads, does not change the result

    Returns:
        tuple[np.ndarray, int]: draws and number of directions
    """
    if n < 1:
        raise UsageError(f'number of draws must be positive, got {n}')
    d = directions.d
    materialize = directions.is_materialized or directions.dedup or (
        directions.count_bound() * d < MATERIALIZE_LIMIT)
    if materialize:
        vectors = directions.materialize().vectors
        count = vectors.shape[0]
        if count == 0:
            raise InfeasibleError('empty direction set')
        logger.debug(
            f'materialized mode: {count} directions, {n} draws in blocks of {DRAW_BLOCK_SIZE}'
        )
        draws = _materialized_draws(vectors, em, n, seed, threads)
    else:
        logger.debug(
            f'streaming mode: up to {directions.count_bound()} directions, {n} draws'
        )
        draws, count = _streamed_draws(directions, em, n, seed, threads)
        if count == 0:
            raise InfeasibleError('empty direction set')
    if directions.messages.count():
        logger.warning(
            f'{directions.messages.count()} degenerate pairs were skipped')
    return draws, count


def max_abs_t_draws(directions: DirectionSet,
                    em: ErrorModel,
                    n: int,
                    seed: int,
                    threads: int = 1) -> np.ndarray:
    """
    Draws of max over l in L of |l^T Z_i| / sigma_hat_i,
    Z_i standard Gaussian, sigma_hat_i^2 ~ chi2_r / r independent of Z_i

    Args:
        directions (DirectionSet): nonempty direction set
        em (ErrorModel): error model
        n (int): number of draws N
        seed (int): seed
        threads (int, optional): number of threads

    Returns:
        np.ndarray: N draws
    """
    return simulate_max_draws(directions, em, n, seed, threads)[0]


def posi_K_from_directions(directions: DirectionSet,
                           alpha: float,
                           em: ErrorModel,
                           n: int,
                           seed: int,
                           threads: int = 1) -> ConstantEstimate:
    """
    Monte-Carlo constant for an arbitrary direction set

    Args:
        directions (DirectionSet): directions
        alpha (float): error level
        em (ErrorModel): error model
        n (int): number of draws
        seed (int): seed
        threads (int, optional): number of threads

    Returns:
        ConstantEstimate: constant with its standard error
    """
    check_alpha(alpha)
    quantile_index(alpha, n)
    draws, count = simulate_max_draws(directions, em, n, seed, threads)
    K = conservative_quantile(draws, alpha)
    se = quantile_standard_error(draws, alpha, K)
    design = directions.design
    estimate = ConstantEstimate(
        K=K,
        alpha=alpha,
        error_model=em,
        method=Method.monte_carlo,
        mc_samples=n,
        mc_standard_error=se,
        seed=seed,
        direction_count=count,
        d=directions.d,
        p=design.p if design is not None else None,
        universe=str(directions.universe) if design is not None else None)
    if directions.dedup:
        estimate.details['emitted_count'] = directions.emitted_count
    logger.info(
        f'K={K:.5f} (se {se:.2g}) from {count} directions and {n} draws')
    return estimate


def posi_K(design: CanonicalDesign,
           universe: ModelUniverse | str | None,
           alpha: float,
           em: ErrorModel,
           n: int,
           seed: int,
           threads: int = 1,
           dedup: bool = False) -> ConstantEstimate:
    """
    The PoSI constant K(X, M, alpha, r)

    Args:
        design (CanonicalDesign): design in canonical coordinates
        universe (ModelUniverse | str | None): universe or its spec
        alpha (float): error level
        em (ErrorModel): error model
        n (int): number of draws
        seed (int): seed
        threads (int, optional): number of threads
        dedup (bool, optional): if set, directions equal up to sign are used once

    Returns:
        ConstantEstimate: estimate
    """
    directions = direction_stream(design, load_universe(universe), dedup=dedup)
    return posi_K_from_directions(directions, alpha, em, n, seed, threads)


def posi1_K(design: CanonicalDesign,
            universe: ModelUniverse | str | None,
            j: int,
            alpha: float,
            em: ErrorModel,
            n: int,
            seed: int,
            threads: int = 1,
            dedup: bool = False) -> ConstantEstimate:
    """
    The PoSI1 constant of predictor j: the statistic covers only l*_{j.M}
    for the models M of the universe that contain j

    Args:
        design (CanonicalDesign): design
        universe (ModelUniverse | str | None): universe or its spec
        j (int): 1-based predictor index
        alpha, em, n, seed, threads, dedup: as in posi_K

    Returns:
        ConstantEstimate: estimate, details['predictor'] is set to j
    """
    if not 1 <= j <= design.p:
        raise DataError(f'predictor {j} is out of range 1..{design.p}')
    universe = load_universe(universe)
    directions = direction_stream(design,
                                  universe.restricted_to(j),
                                  dedup=dedup,
                                  predictor=j)
    try:
        estimate = posi_K_from_directions(directions, alpha, em, n, seed,
                                          threads)
    except InfeasibleError as e:
        if 'empty direction set' in str(e):
            raise InfeasibleError(
                f'predictor {j} is in no full-rank model of the universe "{universe}"'
            )
        raise
    estimate.universe = str(universe)
    estimate.details['predictor'] = j
    return estimate


def scheffe_K(alpha: float, d: int, em: ErrorModel) -> ConstantEstimate:
    """
    Scheffe constant sqrt(d F_{d,r,1-alpha}), or sqrt(chi2_{d,1-alpha}) if sigma is known.
    Upper bound of all PoSI constants for rank d
    """
    check_alpha(alpha)
    if d < 1:
        raise UsageError(f'd must be positive, got {d}')
    if em.sigma_known:
        K = math.sqrt(stats.chi2.isf(alpha, d))
    else:
        K = math.sqrt(d * stats.f.isf(alpha, d, em.df))
    return ConstantEstimate(K=K,
                            alpha=alpha,
                            error_model=em,
                            method=Method.closed_form,
                            d=d)


def _orthogonal_coverage(K: float, d: int, em: ErrorModel) -> float:
    """
    P[max_i |Z_i| <= K sigma_hat] for d independent coordinates
    """
    if em.sigma_known:
        return math.exp(d * math.log1p(-2 * stats.norm.sf(K)))
    scale = stats.chi(em.df, scale=1 / math.sqrt(em.df))
    low, high = scale.ppf(1e-14), scale.isf(1e-14)

    def integrand(s):
        inner = 1 - 2 * stats.norm.sf(K * s)
        return scale.pdf(s) * inner**d if inner > 0 else 0.0

    value, _ = integrate.quad(integrand,
                              low,
                              high,
                              epsabs=1e-12,
                              epsrel=1e-10,
                              limit=200)
    return value


def orth_K(alpha: float, d: int, em: ErrorModel) -> ConstantEstimate:
    """
    Constant of orthogonal designs of rank d: solves P[max_i |Z_i| / sigma_hat <= K] = 1 - alpha.
    This is a lower bound for PoSI constants of universes with a maximal nested chain
    """
    check_alpha(alpha)
    if d < 1:
        raise UsageError(f'd must be positive, got {d}')
    target = 1 - alpha
    low = 0.5 * em.marginal_quantile(alpha)
    high = em.marginal_quantile(alpha / d) + 1.0
    K = optimize.brentq(lambda k: _orthogonal_coverage(k, d, em) - target,
                        low,
                        high,
                        xtol=1e-12,
                        rtol=1e-12)
    return ConstantEstimate(K=float(K),
                            alpha=alpha,
                            error_model=em,
                            method=Method.closed_form,
                            d=d)


def cap_bonferroni_bound(direction_count: int, d: int,
                         alpha: float) -> ConstantEstimate:
    """
    Upper bound for max |l^T Z| over any set of direction_count unit vectors, sigma known.

    With Z = R U, R = |Z| and U uniform on the sphere, the level is split in halves:
    direction_count * P[|l^T U| > K'] = alpha / 2 with (l^T U)^2 ~ Beta(1/2, (d - 1)/2),
    and R is bounded by the (1 - alpha/2) quantile of chi_d. The bound is K' times that quantile,
    capped by the Scheffe constant

    Args:
        direction_count (int): number of directions
        d (int): rank, at least 2
        alpha (float): error level

    Returns:
        ConstantEstimate: bound, details hold k_prime, radius_quantile and capped flag
    """
    check_alpha(alpha)
    if direction_count < 1:
        raise UsageError(
            f'direction count must be positive, got {direction_count}')
    if d < 2:
        raise UsageError(f'sphere-cap bound requires d >= 2, got {d}')
    shape = (d - 1) / 2

    def excess(k):
        return direction_count * stats.beta.sf(k * k, 0.5, shape) - alpha / 2

    k_prime = float(optimize.brentq(excess, 0.0, 1.0, xtol=1e-14, rtol=1e-14))
    radius = float(stats.chi.isf(alpha / 2, d))
    K = k_prime * radius
    em = ErrorModel()
    scheffe = scheffe_K(alpha, d, em).K
    capped = K > scheffe
    if capped:
        logger.warning(
            f'sphere-cap bound {K:.4f} exceeds the Scheffe constant {scheffe:.4f}, using Scheffe'
        )
        K = scheffe
    return ConstantEstimate(K=K,
                            alpha=alpha,
                            error_model=em,
                            method=Method.bound,
                            direction_count=direction_count,
                            d=d,
                            details={
                                'k_prime': k_prime,
                                'radius_quantile': radius,
                                'capped_by_scheffe': capped,
                            })


def asymptotic_cap_constant(a: float) -> float:
    """
    Limit of the worst-case K / sqrt(d) for direction sets of size about a^d: sqrt(1 - 1/a^2)

    Args:
        a (float): growth base, a > 1

    Returns:
        float: constant in (0, 1)
    """
    if not a > 1:
        raise UsageError(f'growth base must exceed 1, got {a}')
    return math.sqrt(1 - 1 / a**2)
