from math import comb

import numpy as np
import pytest

from posikit.design.canonical import canonicalize
from posikit.design.matrix import DesignMatrix
from posikit.design.models import ModelId
from posikit.design.universe import (Explicit, ModelUniverse, enumerate_models,
                                     load_universe)
from posikit.errors import DataError, InfeasibleError, UsageError
from tests.unit.design_helper import random_design


def brute_force(universe: ModelUniverse, p: int) -> set[ModelId]:
    return {
        ModelId(mask)
        for mask in range(1, 1 << p) if universe.accepts(ModelId(mask), p)
    }


@pytest.mark.parametrize('spec, count', [
    ('all', 15),
    ('size<=2', 10),
    ('size>p-1', 1),
    ('size>p-2', 5),
    ('forced=1', 8),
    ('forced=1,2 & size<=3', 3),
    ('nested', 4),
    ('vif<=5', 15),
])
def test_enumerate(spec, count):
    design = random_design(4, seed=7)
    universe = ModelUniverse.parse(spec)
    models = list(enumerate_models(design, universe))
    assert len(models) == count
    assert len(set(models)) == count
    if not universe.is_finite:
        assert set(models) == brute_force(universe, 4)


def test_parse_and_str():
    universe = ModelUniverse.parse('size<=2 & forced=1 & vif<=3')
    assert str(universe) == 'size<=2 & forced=1 & vif<=3'
    assert str(ModelUniverse.parse('all')) == 'all'
    assert ModelUniverse.parse('all').is_unrestricted
    assert ModelUniverse.parse('all & size<=2').constraints[0].m == 2
    assert universe.screens_pairs
    assert not universe.is_finite
    for bad in ['size<=0', 'vif<=0.5', 'size<3', 'size>p-0']:
        with pytest.raises(UsageError):
            ModelUniverse.parse(bad)


@pytest.mark.parametrize('spec', ['size<=2', 'size>p-2 & forced=3', 'nested'])
def test_round_trip(spec):
    universe = ModelUniverse.parse(spec)
    again = ModelUniverse.parse(str(universe))
    assert brute_force(universe, 5) == brute_force(again, 5)


def test_file_universe(tmp_path):
    path = tmp_path / 'models.txt'
    path.write_text('# chosen models\n1\n1,3\n\n2,3\n1,3\n')
    universe = ModelUniverse.parse(f'file={path}')
    assert universe.is_finite
    assert str(universe) == f'file={path}'
    assert universe.finite_models(3) == [
        ModelId(1), ModelId(0b101), ModelId(0b110)
    ]
    assert universe.accepts(ModelId(0b101), 3)
    assert not universe.accepts(ModelId(0b11), 3)
    design = random_design(3, seed=1)
    assert len(list(enumerate_models(design, universe))) == 3
    restricted = ModelUniverse.parse(f'file={path} & size<=1')
    assert restricted.finite_models(3) == [ModelId(1)]
    assert str(ModelUniverse.parse(str(universe))) == str(universe)
    with pytest.raises(DataError):
        universe.finite_models(2)
    with pytest.raises(DataError):
        ModelUniverse.parse(f'file={tmp_path / "missing.txt"}')
    with pytest.raises(DataError):
        Explicit([])


def test_empty_universe():
    design = random_design(4, seed=2)
    with pytest.raises(InfeasibleError):
        list(enumerate_models(design, ModelUniverse.parse('size>p-1 & size<=1')))


def test_rank_deficient_models_skipped():
    values = np.random.default_rng(0).standard_normal((8, 3))
    X = DesignMatrix(np.hstack([values, values[:, :1] + values[:, 1:2]]))
    design = canonicalize(X)
    models = set(enumerate_models(design, ModelUniverse()))
    assert ModelId.from_members([1, 2, 4]) not in models
    assert ModelId.from_members([1, 2, 3, 4]) not in models
    assert len(models) == 4 + 6 + 3
    nested = list(enumerate_models(design, ModelUniverse.parse('nested')))
    assert len(nested) == 3


def test_pair_count_bound():
    assert ModelUniverse().pair_count_bound(4) == 32
    assert ModelUniverse().pair_count_bound(4, predictor=1) == 8
    assert ModelUniverse.parse('size<=2').pair_count_bound(4) == 4 + 2 * comb(4, 2)
    assert ModelUniverse.parse('forced=1').pair_count_bound(3) == 1 + 2 * 2 + 3
    assert ModelUniverse.parse('nested').pair_count_bound(3) == 6
    assert ModelUniverse.parse('nested').pair_count_bound(3, predictor=2) == 2


def test_restricted_to():
    universe = ModelUniverse.parse('size<=2').restricted_to(3)
    assert brute_force(universe, 3) == {
        ModelId(0b100), ModelId(0b101), ModelId(0b110)
    }


def test_load_universe():
    universe = ModelUniverse.parse('size<=2')
    assert load_universe(universe) is universe
    assert load_universe(None).is_unrestricted
    assert str(load_universe('forced=2')) == 'forced=2'


@pytest.mark.parametrize('c', [1.2345678, 2.5, 10.0, 3.141592653589793])
def test_vif_threshold_round_trip(c):
    universe = ModelUniverse.parse(f'size<=3 & vif<={c!r}')
    again = ModelUniverse.parse(str(universe))
    assert again.constraints[-1].c == c
    assert str(again) == str(universe)
