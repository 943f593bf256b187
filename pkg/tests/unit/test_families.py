import math

import numpy as np
import pytest

from posikit.design.directions import direction_stream
from posikit.design.models import ModelId
from posikit.design.universe import ModelUniverse
from posikit.engine.constants import ErrorModel, posi1_K
from posikit.errors import DataError, UsageError
from posikit.families import (ExchangeableParam, WorstPosi1Param, default_c_grid,
                              exchangeable_cosine, exchangeable_design,
                              exchangeable_direction_formula, exchangeable_dual_parameter,
                              exchangeable_ratio_cells, exchangeable_ratio_table,
                              fast_worst_posi1_stat, maximize_rate_function,
                              rate_function_f, worst_posi1_design, worst_posi1_ratio_table)
from posikit.structure import dual_design


def test_params():
    ExchangeableParam(3, -0.3)
    with pytest.raises(UsageError):
        ExchangeableParam(3, -1 / 3)
    with pytest.raises(UsageError):
        ExchangeableParam(0, 1.0)
    assert WorstPosi1Param(5, 0.4).last_entry == pytest.approx(math.sqrt(1 - 4 * 0.16))
    with pytest.raises(UsageError):
        WorstPosi1Param(5, 0.5)
    with pytest.raises(UsageError):
        WorstPosi1Param(1, 0.0)


def test_exchangeable_design():
    design = exchangeable_design(ExchangeableParam(4, 0.5))
    np.testing.assert_allclose(design.values, np.eye(4) + 0.5)
    assert design.form == 'symmetric'
    x1, x2 = design.column(1), design.column(2)
    cosine = x1 @ x2 / np.linalg.norm(x1) / np.linalg.norm(x2)
    assert exchangeable_cosine(4, 0.5) == pytest.approx(cosine)


@pytest.mark.parametrize('p, a', [(2, 1.0), (3, -0.3), (4, -0.2), (5, 2.0), (6, -0.16)])
def test_exchangeable_cosine_matches_columns(p, a):
    values = exchangeable_design(ExchangeableParam(p, a)).values
    unit = values / np.linalg.norm(values, axis=0)
    gram = unit.T @ unit
    off_diagonal = gram[~np.eye(p, dtype=bool)]
    np.testing.assert_allclose(off_diagonal, exchangeable_cosine(p, a), atol=1e-12)


def test_exchangeable_cosine_at_boundary():
    assert exchangeable_cosine(2, 1.0) == pytest.approx(0.8)
    assert exchangeable_cosine(4, -0.25 + 1e-9) == pytest.approx(-1 / 3, abs=1e-6)
    assert exchangeable_cosine(4, 0.0) == 0.0


@pytest.mark.parametrize('a', [0.7, -0.2, 3.0])
def test_exchangeable_dual(a):
    p = 4
    c = exchangeable_dual_parameter(p, a)
    assert c > -1 / p
    dual = dual_design(exchangeable_design(ExchangeableParam(p, a)))
    np.testing.assert_allclose(dual.values, np.eye(p) + c, atol=1e-10)
    assert exchangeable_dual_parameter(p, c) == pytest.approx(a)


@pytest.mark.parametrize('p, a', [(4, 0.5), (5, -0.15), (3, 2.0)])
def test_direction_formula_matches_stream(p, a):
    param = ExchangeableParam(p, a)
    block = direction_stream(exchangeable_design(param), ModelUniverse()).materialize()
    assert len(block) == p * 2**(p - 1)
    for i in range(len(block)):
        expected = block[i]
        direction = exchangeable_direction_formula(param, expected.model, expected.predictor)
        assert np.abs(direction.vector - expected.vector).max() < 1e-10
        assert direction.raw_norm == pytest.approx(expected.raw_norm, rel=1e-10)


def test_direction_formula_errors():
    param = ExchangeableParam(3, 0.5)
    with pytest.raises(DataError):
        exchangeable_direction_formula(param, ModelId(0b011), 3)
    with pytest.raises(DataError):
        exchangeable_direction_formula(param, ModelId(0b1001), 1)


def test_exchangeable_cells():
    cells = exchangeable_ratio_cells([2, 3], [-0.1, 0.5, 0.5], 0.05, 2000, seed=1)
    assert len(cells) == 4
    assert list(cells.columns) == ['p', 'a', 'dual_a', 'K', 'mc_standard_error', 'ratio']
    assert (cells['a'] >= 0).all()
    first = cells.iloc[0]
    assert first['a'] == pytest.approx(exchangeable_dual_parameter(2, -0.1))
    assert first['dual_a'] == pytest.approx(-0.1)
    np.testing.assert_allclose(cells['ratio'], cells['K'] / np.sqrt(2 * np.log(cells['p'])))
    table = exchangeable_ratio_table([2, 3], [-0.1, 0.5], 0.05, 2000, seed=1, threads=2)
    assert table['p'].tolist() == [2, 3]
    for _, row in table.iterrows():
        assert row['ratio'] == cells[cells['p'] == row['p']]['ratio'].max()
    with pytest.raises(UsageError):
        exchangeable_ratio_cells([1], [0.5], 0.05, 2000, seed=1)


def test_worst_posi1_design():
    design = worst_posi1_design(WorstPosi1Param(4, 0.3))
    assert design.form == 'upper_triangular'
    assert np.linalg.norm(design.column(4)) == pytest.approx(1)
    np.testing.assert_allclose(design.values[:3, :3], np.eye(3))
    assert np.allclose(np.tril(design.values, -1), 0)


@pytest.mark.parametrize('p', [2, 3, 5, 7])
def test_fast_stat_matches_brute_force(p):
    c = default_c_grid(p, 6)[3]
    design = worst_posi1_design(WorstPosi1Param(p, c))
    directions = direction_stream(design, ModelUniverse().restricted_to(p), predictor=p)
    block = directions.materialize()
    sizes = np.array([ModelId(mask).size for mask in block.masks])
    rng = np.random.default_rng(p)
    z = rng.standard_normal((200, p))
    brute = np.abs(z @ block.vectors.T)
    fast, fast_sizes = fast_worst_posi1_stat(p, c, z, return_size=True)
    np.testing.assert_allclose(fast, brute.max(axis=1), atol=1e-10)
    np.testing.assert_array_equal(fast_sizes, sizes[brute.argmax(axis=1)])
    assert fast_worst_posi1_stat(p, c, z[0]) == pytest.approx(fast[0])
    with pytest.raises(DataError):
        fast_worst_posi1_stat(p, c, np.zeros(p + 1))


def test_default_c_grid():
    grid = default_c_grid(10, 5)
    fractions = [c**2 * 9 for c in grid]
    assert fractions == pytest.approx([0.5, 0.75, 0.875, 0.9375, 0.96875])


def test_worst_posi1_table_matches_engine():
    p = 6
    grid = default_c_grid(p, 3)
    table = worst_posi1_ratio_table(p, grid, 0.05, 3000, seed=7, threads=2)
    assert list(table.columns) == [
        'c', 'c2_fraction', 'K', 'mc_standard_error', 'ratio', 'median_size_ratio'
    ]
    np.testing.assert_allclose(table['ratio'], table['K'] / math.sqrt(p))
    assert ((table['median_size_ratio'] > 0) & (table['median_size_ratio'] <= 1)).all()
    for row in table.itertuples():
        design = worst_posi1_design(WorstPosi1Param(p, row.c))
        estimate = posi1_K(design, None, p, 0.05, ErrorModel(), 3000, seed=7)
        assert row.K == pytest.approx(estimate.K, abs=1e-9)
    with pytest.raises(UsageError):
        worst_posi1_ratio_table(p, [0.5], 0.05, 3000, seed=7)


def test_rate_function():
    assert rate_function_f(0.5) == pytest.approx(math.sqrt(2) / math.sqrt(2 * math.pi))
    for r in [0.0, 1.0, -0.1]:
        with pytest.raises(UsageError):
            rate_function_f(r)
    r_star, value = maximize_rate_function()
    assert 0.7 < r_star < 0.76
    assert value == pytest.approx(0.6363, abs=5e-4)
    for r in np.linspace(0.05, 0.95, 19):
        assert rate_function_f(r) <= value + 1e-12
