"""
Geometry of PoSI direction sets: dual designs, orthogonality census and the PoSI polytope
"""
from collections import Counter
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from posikit.consts import (DEFAULT_DEDUP_TOLERANCE, DIRECTION_BUFFER_SIZE,
                            DUALITY_SLACK, POLYTOPE_SLACK)
from posikit.design.canonical import CanonicalDesign, CanonicalForm
from posikit.design.directions import DirectionSet, direction_stream, sign_class_keys
from posikit.design.universe import ModelUniverse
from posikit.errors import DataError, InfeasibleError
from posikit.utils import logger
from posikit.workers import map_ordered


def dual_design(design: CanonicalDesign) -> CanonicalDesign:
    """
    Dual design X* = X~ (X~^T X~)^{-1}. Its columns are the full-model vectors l_{j.M_F}

    Args:
        design (CanonicalDesign): design with d = p

    Returns:
        CanonicalDesign: dual in the same canonical coordinates
    """
    if not design.is_classical:
        raise InfeasibleError(
            f'dual design requires d = p, got d={design.d}, p={design.p}')
    values = np.linalg.solve(design.gram(), design.values.T).T
    form = design.form if design.form == CanonicalForm.symmetric else CanonicalForm.unspecified
    if form == CanonicalForm.symmetric:
        values = (values + values.T) / 2
    return CanonicalDesign(values, design.basis, form,
                           [f'{name}*' for name in design.column_names],
                           design.rank_tolerance)


@dataclass
class DualityReport:
    """
    Comparison of L(X) and L(X*) for the unrestricted universe
    """
    matched_pairs: int
    unmatched_pairs: int
    max_mismatch: float
    """
    max over pairs of min(|l - l*|, |l + l*|) for (j, M) and (j, M*)
    """
    norm_product_check: float
    """
    max over pairs of | |l_{j.M}| |l*_{j.M*}| - 1 |
    """
    sets_equal: bool

    def to_dict(self) -> dict[str, Any]:
        return dict(vars(self))


def verify_duality(design: CanonicalDesign,
                   tolerance: float = DEFAULT_DEDUP_TOLERANCE) -> DualityReport:
    """
    Checks that (j, M) of X and (j, M*) of the dual, M* = (M_F - M) + {j},
    give the same direction up to sign and reciprocal norms

    Args:
        design (CanonicalDesign): design with d = p
        tolerance (float, optional): tolerance of sign classes for the set comparison

    Returns:
        DualityReport: worst deviations
    """
    dual = dual_design(design)
    full = (1 << design.p) - 1
    primal = direction_stream(design, ModelUniverse()).materialize()
    dual_block = direction_stream(dual, ModelUniverse()).materialize()
    index = {(int(j), mask): i
             for i, (j, mask) in enumerate(zip(dual_block.predictors, dual_block.masks))}
    matched = unmatched = 0
    max_mismatch = norm_check = 0.0
    for i, (j, mask) in enumerate(zip(primal.predictors, primal.masks)):
        j = int(j)
        dual_mask = (full & ~mask) | 1 << (j - 1)
        k = index.get((j, dual_mask))
        if k is None:
            unmatched += 1
            continue
        matched += 1
        v, w = primal.vectors[i], dual_block.vectors[k]
        max_mismatch = max(max_mismatch,
                           min(np.linalg.norm(v - w), np.linalg.norm(v + w)))
        # |l_{j.M}| = 1 / |X_{j.M}|
        product = 1 / (primal.raw_norms[i] * dual_block.raw_norms[k])
        norm_check = max(norm_check, abs(product - 1))
    slack = tolerance * DUALITY_SLACK
    sets_equal = set(sign_class_keys(primal.vectors, slack)) == set(
        sign_class_keys(dual_block.vectors, slack))
    report = DualityReport(matched, unmatched, float(max_mismatch),
                           float(norm_check), sets_equal)
    logger.debug(f'duality check: {report}')
    return report


@dataclass
class CensusReport:
    """
    Orthogonal partners of each direction
    """
    partners: np.ndarray
    """
    Number of directions orthogonal to each direction, with multiplicity
    """
    histogram: dict[int, int] = field(default_factory=dict)
    """
    Number of partners -> number of directions
    """

    def to_dict(self) -> dict[str, Any]:
        return {
            'direction_count': int(self.partners.size),
            'histogram': {str(k): v for k, v in sorted(self.histogram.items())},
            'min_partners': int(self.partners.min()) if self.partners.size else 0,
            'max_partners': int(self.partners.max()) if self.partners.size else 0,
        }


def orthogonality_census(directions: DirectionSet,
                         tolerance: float = 1e-10,
                         threads: int = 1) -> CensusReport:
    """
    Counts pairs of directions with |<v, w>| < tolerance

    Args:
        directions (DirectionSet): directions, counted with multiplicity unless deduplicated
        tolerance (float, optional): orthogonality tolerance
        threads (int, optional): number of threads

    Returns:
        CensusReport: per-direction counts and their histogram
    """
    vectors = directions.materialize().vectors

    def count_rows(start):
        rows = vectors[start:start + DIRECTION_BUFFER_SIZE]
        return (np.abs(rows @ vectors.T) < tolerance).sum(axis=1)

    starts = range(0, vectors.shape[0], DIRECTION_BUFFER_SIZE)
    parts = map_ordered(count_rows, starts, threads)
    partners = np.concatenate(parts) if parts else np.zeros(0, dtype=int)
    histogram = Counter(int(c) for c in partners)
    return CensusReport(partners, dict(histogram))


@dataclass
class PolytopeSpec:
    """
    PoSI polytope: all z with |l^T z| <= K for every direction l
    """
    directions: DirectionSet
    K: float

    def __post_init__(self):
        if not self.K > 0:
            raise DataError(f'polytope constant must be positive, got {self.K}')
        if self.directions.count_bound() == 0:
            raise InfeasibleError('polytope needs at least one direction')


def polytope_contains(polytope: PolytopeSpec, z: np.ndarray) -> bool:
    """
    Membership test, stops at the first violated face

    Args:
        polytope (PolytopeSpec): polytope
        z (np.ndarray): point in d dimensions

    Returns:
        bool: True if |l^T z| <= K for all directions
    """
    z = np.asarray(z, dtype=float)
    if z.shape != (polytope.directions.d, ):
        raise DataError(
            f'point must have length d={polytope.directions.d}, got shape {z.shape}'
        )
    bound = polytope.K * (1 + POLYTOPE_SLACK)
    for block in polytope.directions.iter_blocks():
        if np.any(np.abs(block.vectors @ z) > bound):
            return False
    return True
