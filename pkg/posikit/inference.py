"""
Submodel least squares, t-ratios, PoSI confidence intervals, the significance-hunting
selectors SPAR and SPAR1, and a coverage simulator for the simultaneous guarantee.

All computations are done in canonical coordinates: y~ = Q^T y, mu~ = Q^T mu
"""
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np
import pandas as pd
from scipy.linalg import solve_triangular

from posikit.consts import MATERIALIZE_LIMIT
from posikit.design.canonical import CanonicalDesign
from posikit.design.directions import DirectionSet, direction_stream, vif
from posikit.design.matrix import numerical_rank
from posikit.design.models import ModelId
from posikit.design.universe import ModelUniverse, load_universe
from posikit.engine.constants import ConstantEstimate, ErrorModel, Method
from posikit.engine.rng import block_count, draw_block
from posikit.errors import DataError, InfeasibleError, UsageError
from posikit.utils import logger
from posikit.workers import map_ordered

if TYPE_CHECKING:
    from posikit.selectors import Selector

ZERO_TARGET = 1e-12
"""
Targets below this value (relative to the mean norm) count as null in error-control checks
"""


@dataclass
class FitResult:
    """
    Least squares fit of one submodel
    """
    model: ModelId
    estimates: np.ndarray
    adjusted_norms: np.ndarray
    """
    |X~_{j.M}| for j in the model, in the order of model members
    """
    sigma_hat: float
    error_model: ErrorModel = field(default_factory=ErrorModel)

    def estimate(self, j: int) -> float:
        return float(self.estimates[self.model.position(j)])

    def adjusted_norm(self, j: int) -> float:
        return float(self.adjusted_norms[self.model.position(j)])


@dataclass
class TargetSpec:
    """
    Mean of the response in canonical coordinates
    """
    mu: np.ndarray

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        if not np.all(np.isfinite(self.mu)):
            raise DataError('mean vector has non-finite entries')

    @classmethod
    def from_coefficients(cls, design: CanonicalDesign,
                          beta: np.ndarray) -> "TargetSpec":
        """
        mu~ = X~ beta for a full-model coefficient vector
        """
        beta = np.asarray(beta, dtype=float)
        if beta.shape != (design.p, ):
            raise DataError(
                f'coefficient vector has length {beta.size}, expected p={design.p}')
        return cls(design.values @ beta)

    @classmethod
    def from_mean(cls, design: CanonicalDesign,
                  mu: np.ndarray) -> "TargetSpec":
        """
        mu~ = Q^T mu for a mean vector of length n
        """
        return cls(design.reduce_response(mu))


@dataclass
class IntervalRow:
    predictor: int
    name: str
    estimate: float
    lower: float
    upper: float
    t_observed: float
    adjusted_norm: float
    K_used: float
    target: float | None = None
    covers_target: bool | None = None
    protected: bool = True
    """
    False when a vif<=c screen removed (j, M) from the set the constant covers
    """


@dataclass
class IntervalReport:
    """
    Confidence intervals for the coefficients of one submodel
    """
    model: ModelId
    sigma_hat: float
    constant: ConstantEstimate
    rows: list[IntervalRow] = field(default_factory=list)

    @property
    def covers_all(self) -> bool | None:
        flags = [r.covers_target for r in self.rows if r.protected]
        if any(f is None for f in flags):
            return None
        return all(flags)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([vars(r) for r in self.rows])

    def to_dict(self) -> dict[str, Any]:
        return {
            'model': self.model.members,
            'sigma_hat': self.sigma_hat,
            'constant': self.constant.to_dict(),
            'intervals': [dict(vars(r)) for r in self.rows],
        }


def _model_columns(design: CanonicalDesign, model: ModelId) -> np.ndarray:
    if model.last > design.p:
        raise DataError(
            f'model {model} refers to predictors above p={design.p}')
    block = design.values[:, [j - 1 for j in model]]
    if model.size > design.d or numerical_rank(
            block, design.rank_tolerance) < model.size:
        raise DataError(f'model {model} is rank-deficient')
    return block


def _check_vector(design: CanonicalDesign, y: np.ndarray, name: str) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (design.d, ):
        raise DataError(
            f'{name} must be in canonical coordinates of length d={design.d}, got shape {y.shape}'
        )
    return y


def fit_submodel(design: CanonicalDesign,
                 y: np.ndarray,
                 model: ModelId,
                 sigma_hat: float = 1.0,
                 em: ErrorModel | None = None) -> FitResult:
    """
    Least squares estimates of a submodel, beta_M = (X~_M^T X~_M)^{-1} X~_M^T y~

    Args:
        design (CanonicalDesign): design
        y (np.ndarray): canonical response of length d
        model (ModelId): full-rank model
        sigma_hat (float, optional): error estimate, supplied separately
        em (ErrorModel | None, optional): error model of sigma_hat

    Returns:
        FitResult: fit
    """
    y = _check_vector(design, y, 'response')
    block = _model_columns(design, model)
    Q, R = np.linalg.qr(block, mode='reduced')
    estimates = solve_triangular(R, Q.T @ y)
    # diag((X^T X)^{-1}) = squared row norms of R^{-1}
    r_inv = solve_triangular(R, np.eye(R.shape[0]))
    adjusted_norms = 1 / np.linalg.norm(r_inv, axis=1)
    return FitResult(model, estimates, adjusted_norms, float(sigma_hat), em
                     or ErrorModel())


def submodel_target(design: CanonicalDesign, model: ModelId,
                    target: TargetSpec) -> np.ndarray:
    """
    Target of a submodel: beta_M = argmin_b |mu~ - X~_M b|^2

    Args:
        design (CanonicalDesign): design
        model (ModelId): full-rank model
        target (TargetSpec): mean in canonical coordinates

    Returns:
        np.ndarray: beta_M in the order of model members
    """
    mu = _check_vector(design, target.mu, 'mean')
    block = _model_columns(design, model)
    beta, *_ = np.linalg.lstsq(block, mu, rcond=None)
    return beta


def t_ratio(fit: FitResult, j: int, target_value: float = 0.0) -> float:
    """
    t-ratio (beta_hat_{j.M} - target) / (sigma_hat / |X~_{j.M}|)

    Args:
        fit (FitResult): fit of a model containing j
        j (int): 1-based predictor index
        target_value (float, optional): value under the null. Defaults to 0.

    Returns:
        float: t-ratio
    """
    return (fit.estimate(j) - target_value) * fit.adjusted_norm(j) / fit.sigma_hat


def posi_intervals(design: CanonicalDesign,
                   y: np.ndarray,
                   sigma_hat: float,
                   em: ErrorModel,
                   model: ModelId,
                   K: ConstantEstimate,
                   universe: ModelUniverse | str | None = None,
                   target: TargetSpec | None = None) -> IntervalReport:
    """
    Intervals beta_hat_{j.M} +- K sigma_hat / |X~_{j.M}| for j in M.
    For a PoSI1 constant, only the interval of its predictor is reported.
    Rows of pairs removed by a vif<=c screen are marked as not protected

    Args:
        design (CanonicalDesign): design
        y (np.ndarray): canonical response
        sigma_hat (float): error estimate
        em (ErrorModel): error model
        model (ModelId): submodel, must be in the universe of K
        K (ConstantEstimate): constant
        universe (ModelUniverse | str | None, optional): universe of K.
            If not set, parsed from K.universe. Constants without a universe
            (Scheffe, orthogonal, naive) are used for any model
        target (TargetSpec | None, optional): if set, coverage of the targets is reported

    Returns:
        IntervalReport: report
    """
    if universe is None and K.universe is not None:
        universe = K.universe
    if universe is not None:
        universe = load_universe(universe)
        if not universe.accepts(model, design.p):
            raise InfeasibleError(
                f'model {model} is outside the universe "{universe}" of the constant')
    predictor = K.details.get('predictor')
    if predictor is not None and predictor not in model:
        raise InfeasibleError(
            f'constant protects predictor {predictor} which is not in model {model}')
    fit = fit_submodel(design, y, model, sigma_hat, em)
    targets = submodel_target(design, model, target) if target is not None else None
    report = IntervalReport(model, float(sigma_hat), K)
    for position, j in enumerate(model):
        if predictor is not None and j != predictor:
            continue
        estimate = fit.estimate(j)
        half_width = K.K * sigma_hat / fit.adjusted_norm(j)
        row = IntervalRow(predictor=j,
                          name=design.column_names[j - 1],
                          estimate=estimate,
                          lower=estimate - half_width,
                          upper=estimate + half_width,
                          t_observed=t_ratio(fit, j),
                          adjusted_norm=fit.adjusted_norm(j),
                          K_used=K.K)
        if universe is not None and universe.screens_pairs:
            row.protected = universe.accepts_pair(vif(design, model, j))
        if targets is not None:
            row.target = float(targets[position])
            row.covers_target = bool(row.lower <= row.target <= row.upper)
        report.rows.append(row)
    return report


@dataclass
class SelectionResult:
    """
    Model chosen by a significance-hunting selector and the achieved max |t|
    """
    model: ModelId
    value: float
    predictor: int


def stream_maximum(directions: DirectionSet, y: np.ndarray,
                   sigma_hat: float) -> SelectionResult:
    """
    max over l in L of |l^T y~| / sigma_hat with its pair (j, M).
    Ties: larger value, then smaller model mask, then smaller j

    Args:
        directions (DirectionSet): directions with provenance
        y (np.ndarray): canonical response
        sigma_hat (float): error estimate

    Returns:
        SelectionResult: argmax pair and the value
    """
    if directions.is_materialized or directions.count_bound(
    ) * directions.d < MATERIALIZE_LIMIT:
        blocks = [directions.materialize()]
    else:
        blocks = directions.iter_blocks()
    best = None
    for block in blocks:
        if len(block) == 0:
            continue
        values = np.abs(block.vectors @ y) / sigma_hat
        top = values.max()
        for i in np.flatnonzero(values == top):
            key = (-top, block.masks[i], int(block.predictors[i]))
            if best is None or key < best:
                best = key
    if best is None:
        raise InfeasibleError('empty direction set')
    value, mask, j = best
    return SelectionResult(ModelId(mask), float(-value), j)


def spar_select(design: CanonicalDesign, y: np.ndarray, sigma_hat: float,
                universe: ModelUniverse | str | None = None) -> SelectionResult:
    """
    Single Predictor Adjusted Regression: the model with the largest |t_{j.M}| (target 0)
    over all pairs of the universe

    Returns:
        SelectionResult: model, achieved value, and the predictor that attains it
    """
    y = _check_vector(design, y, 'response')
    directions = direction_stream(design, load_universe(universe))
    return stream_maximum(directions, y, sigma_hat)


def spar1_select(design: CanonicalDesign, y: np.ndarray, sigma_hat: float,
                 universe: ModelUniverse | str | None, j: int) -> SelectionResult:
    """
    SPAR for a single predictor: the model containing j with the largest |t_{j.M}|
    """
    y = _check_vector(design, y, 'response')
    if not 1 <= j <= design.p:
        raise DataError(f'predictor {j} is out of range 1..{design.p}')
    directions = direction_stream(design,
                                  load_universe(universe).restricted_to(j),
                                  predictor=j)
    return stream_maximum(directions, y, sigma_hat)


@dataclass
class CoverageReport:
    """
    Result of a coverage simulation
    """
    coverage: float
    standard_error: float
    false_rejection_rate: float
    replications: int
    alpha: float
    constant: ConstantEstimate
    selector: str
    seed: int
    log: pd.DataFrame

    def to_dict(self) -> dict[str, Any]:
        return {
            'family_wise_coverage': self.coverage,
            'binomial_standard_error': self.standard_error,
            'false_rejection_rate': self.false_rejection_rate,
            'replications': self.replications,
            'alpha': self.alpha,
            'selector': self.selector,
            'seed': self.seed,
            'constant': self.constant.to_dict(),
        }


def naive_constant(alpha: float, em: ErrorModel) -> ConstantEstimate:
    """
    Marginal quantile z_{1-alpha/2} or t_{r,1-alpha/2}, valid only without selection
    """
    return ConstantEstimate(K=em.marginal_quantile(alpha),
                            alpha=alpha,
                            error_model=em,
                            method=Method.closed_form,
                            details={'naive': True})


def coverage_experiment(design: CanonicalDesign,
                        universe: ModelUniverse | str | None,
                        selector: "Selector",
                        alpha: float,
                        em: ErrorModel,
                        K: ConstantEstimate,
                        replications: int,
                        seed: int,
                        target: TargetSpec | None = None,
                        threads: int = 1) -> CoverageReport:
    """
    Simulates y~ = mu~ + eps with sigma_hat^2 ~ chi2_r / r drawn independently,
    selects a model and checks that the intervals of all its coefficients cover their targets

    Args:
        design (CanonicalDesign): design
        universe (ModelUniverse | str | None): universe the selector chooses from
        selector (Selector): pure selection procedure
        alpha (float): error level
        em (ErrorModel): error model
        K (ConstantEstimate): constant used for the intervals
        replications (int): number of replications
        seed (int): seed of the counter-based generator
        target (TargetSpec | None, optional): mean, zero if not set
        threads (int, optional): number of threads

    Returns:
        CoverageReport: family-wise coverage with its binomial standard error,
            false rejection rate and per-replication log
    """
    universe = load_universe(universe)
    mu = np.zeros(design.d) if target is None else _check_vector(
        design, target.mu, 'mean')
    target = TargetSpec(mu)
    scale = max(float(np.linalg.norm(mu)), 1.0)
    predictor = K.details.get('predictor')
    chosen_for = getattr(selector, 'predictor', None)
    if predictor is not None and chosen_for is not None and chosen_for != predictor:
        raise UsageError(
            f'constant protects predictor {predictor}, selector {selector} hunts predictor {chosen_for}'
        )

    def run_block(b):
        z, sigma = draw_block(seed, b, replications, design.d, em.df)
        rows = []
        for i in range(z.shape[0]):
            y = mu + z[i]
            model = selector.select(design, y, float(sigma[i]))
            if not universe.accepts(model, design.p):
                raise InfeasibleError(
                    f'selector {selector} chose model {model} outside the universe "{universe}"'
                )
            if predictor is not None and predictor not in model:
                raise UsageError(
                    f'selector {selector} chose model {model} without predictor {predictor}'
                    ' protected by the constant')
            fit = fit_submodel(design, y, model, float(sigma[i]), em)
            targets = submodel_target(design, model, target)
            max_t = 0.0
            false_rejection = False
            for position, j in enumerate(model):
                if predictor is not None and j != predictor:
                    continue
                t = abs(t_ratio(fit, j, float(targets[position])))
                max_t = max(max_t, t)
                if abs(targets[position]) <= ZERO_TARGET * scale and t > K.K:
                    false_rejection = True
            rows.append({
                'model': str(model),
                'sigma_hat': float(sigma[i]),
                'max_abs_t': max_t,
                'covered': max_t <= K.K,
                'false_rejection': false_rejection,
            })
        return rows

    blocks = map_ordered(run_block, range(block_count(replications)), threads)
    log = pd.DataFrame([row for rows in blocks for row in rows])
    log.insert(0, 'replication', np.arange(len(log)))
    coverage = float(log['covered'].mean())
    report = CoverageReport(
        coverage=coverage,
        standard_error=float(np.sqrt(coverage * (1 - coverage) / replications)),
        false_rejection_rate=float(log['false_rejection'].mean()),
        replications=replications,
        alpha=alpha,
        constant=K,
        selector=str(selector),
        seed=seed,
        log=log)
    logger.info(
        f'coverage {coverage:.4f} (se {report.standard_error:.2g}) over {replications} replications'
    )
    return report
