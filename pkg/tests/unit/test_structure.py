import numpy as np
import pytest

from posikit.design.canonical import from_matrix
from posikit.design.directions import DirectionSet, direction_stream
from posikit.design.universe import ModelUniverse
from posikit.engine.constants import ErrorModel, posi_K
from posikit.errors import DataError, InfeasibleError
from posikit.structure import (PolytopeSpec, dual_design, orthogonality_census,
                               polytope_contains, verify_duality)
from tests.unit.design_helper import random_design, random_symmetric_pd


def test_dual_design():
    design = random_design(4, seed=2)
    dual = dual_design(design)
    np.testing.assert_allclose(dual.values.T @ design.values, np.eye(4), atol=1e-10)
    assert dual.column_names == ['x1*', 'x2*', 'x3*', 'x4*']
    symmetric = random_symmetric_pd(3, seed=1)
    dual = dual_design(symmetric)
    assert dual.form == 'symmetric'
    np.testing.assert_allclose(dual.values, np.linalg.inv(symmetric.values), atol=1e-10)
    with pytest.raises(InfeasibleError):
        dual_design(random_design(4, n=3, seed=0))


@pytest.mark.parametrize('p', [2, 3, 5])
def test_verify_duality(p):
    report = verify_duality(random_design(p, seed=p))
    assert report.matched_pairs == p * 2**(p - 1)
    assert report.unmatched_pairs == 0
    assert report.max_mismatch < 1e-9
    assert report.norm_product_check < 1e-9
    assert report.sets_equal
    assert report.to_dict()['sets_equal']


def test_dual_constant():
    design = random_design(4, seed=9)
    K = posi_K(design, None, 0.05, ErrorModel(), 3000, seed=5)
    K_dual = posi_K(dual_design(design), None, 0.05, ErrorModel(), 3000, seed=5)
    assert K.K == pytest.approx(K_dual.K, abs=1e-9)


def test_census():
    design = from_matrix(np.diag([1.0, 2.0, 3.0]))
    report = orthogonality_census(direction_stream(design, ModelUniverse()), threads=2)
    assert report.histogram == {8: 12}
    assert report.to_dict() == {
        'direction_count': 12,
        'histogram': {'8': 12},
        'min_partners': 8,
        'max_partners': 8,
    }
    report = orthogonality_census(direction_stream(design, ModelUniverse(), dedup=True))
    assert report.histogram == {2: 3}

    vectors = np.array([[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    report = orthogonality_census(DirectionSet.from_vectors(vectors))
    assert report.partners.tolist() == [1, 0, 1]


def test_polytope():
    design = from_matrix(np.eye(3))
    polytope = PolytopeSpec(direction_stream(design, ModelUniverse()), 1.0)
    assert polytope_contains(polytope, np.array([0.5, -0.5, 1.0]))
    assert not polytope_contains(polytope, np.array([1.5, 0.0, 0.0]))
    with pytest.raises(DataError):
        polytope_contains(polytope, np.zeros(2))
    with pytest.raises(DataError):
        PolytopeSpec(direction_stream(design, ModelUniverse()), 0.0)


def test_polytope_contains_ball():
    design = random_design(4, seed=4)
    polytope = PolytopeSpec(direction_stream(design, ModelUniverse()), 2.0)
    rng = np.random.default_rng(0)
    for _ in range(20):
        z = rng.standard_normal(4)
        assert polytope_contains(polytope, 2.0 * (1 - 1e-9) * z / np.linalg.norm(z))
    # the column directions are faces
    z = 2.1 * design.column(1) / np.linalg.norm(design.column(1))
    assert not polytope_contains(polytope, z)


def test_polytope_symmetry_and_scale():
    directions = direction_stream(random_design(3, seed=12), ModelUniverse())
    rng = np.random.default_rng(1)
    for _ in range(30):
        z = rng.standard_normal(3) * 2
        inside = polytope_contains(PolytopeSpec(directions, 2.0), z)
        assert polytope_contains(PolytopeSpec(directions, 2.0), -z) == inside
        assert polytope_contains(PolytopeSpec(directions, 3.0), 1.5 * z) == inside
