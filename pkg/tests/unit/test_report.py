import io
import json
import math

import numpy as np
import pandas as pd
import pytest

from posikit.errors import UsageError
from posikit.report import (STANDARD_KEYS, CommandResult, render_csv, render_json,
                            render_text, to_jsonable, write_result)


def test_to_jsonable():
    value = to_jsonable({
        'a': np.float64(1.5),
        'b': np.int64(3),
        'c': np.bool_(True),
        'd': np.array([1, 2]),
        'e': (math.inf, math.nan),
        'f': pd.DataFrame({'x': [1, 2]}),
        1: 'key',
    })
    assert value == {
        'a': 1.5,
        'b': 3,
        'c': True,
        'd': [1, 2],
        'e': ['inf', 'nan'],
        'f': [{'x': 1}, {'x': 2}],
        '1': 'key',
    }
    json.dumps(value)


def test_render_json():
    text = render_json(CommandResult({'K': 2.5, 'extra': {'z': 1}}))
    result = json.loads(text)
    assert set(STANDARD_KEYS) <= set(result)
    assert result['K'] == 2.5
    assert result['p'] is None
    assert 'tool_version' in result
    assert text.endswith('\n')
    assert text == render_json(CommandResult({'extra': {'z': 1}, 'K': 2.5}))


def test_render_tables():
    result = CommandResult({'K': 2.5, 'details': {'k_prime': 0.5, 'nested': {}}, 'rows': [1]})
    lines = render_csv(result).splitlines()
    assert lines[0] == 'K,details.k_prime'
    assert lines[1] == '2.5,0.5'
    table = CommandResult({}, pd.DataFrame({'c': [0.1, 0.2], 'K': [2.0, 3.0]}), 'grid')
    assert render_csv(table).splitlines() == ['c,K', '0.1,2.0', '0.2,3.0']
    text = render_text(table)
    assert 'grid' in text
    assert '0.2' in text


def test_write_result():
    out = io.StringIO()
    write_result(CommandResult({'K': 1.0}), 'csv', out)
    assert out.getvalue() == 'K\n1.0\n'
    with pytest.raises(UsageError):
        write_result(CommandResult({}), 'xml', out)
