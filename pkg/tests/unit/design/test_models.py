import pytest

from posikit.design.models import ModelId, full_model
from posikit.errors import DataError


def test_members():
    model = ModelId.from_members([4, 1, 3])
    assert model.mask == 0b1101
    assert model.members == [1, 3, 4]
    assert model.size == 3
    assert len(model) == 3
    assert model.last == 4
    assert str(model) == '1,3,4'
    assert 3 in model
    assert 2 not in model
    assert 0 not in model


def test_parse():
    assert ModelId.parse('2, 1') == ModelId(0b11)
    for bad in ['', 'a', '0', '1,-2']:
        with pytest.raises(DataError):
            ModelId.parse(bad)
    with pytest.raises(DataError):
        ModelId(0)


def test_set_operations():
    model = ModelId.from_members([1, 3])
    assert model.with_predictor(2) == full_model(3)
    assert model.without_predictor(3) == ModelId(1)
    assert ModelId(1).without_predictor(1) is None
    assert model.issubset(full_model(3))
    assert not full_model(3).issubset(model)


def test_position():
    model = ModelId.from_members([2, 5, 7])
    assert [model.position(j) for j in model] == [0, 1, 2]
    with pytest.raises(DataError):
        model.position(3)


def test_order_and_hash():
    models = {ModelId(3), ModelId(3), ModelId(1)}
    assert len(models) == 2
    assert sorted(models) == [ModelId(1), ModelId(3)]
