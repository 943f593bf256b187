"""
Rendering of command results: JSON for machines, CSV for plots and rich tables for people
"""
import json
import math
from dataclasses import dataclass, field
from typing import Any, TextIO

import numpy as np
import pandas as pd
from rich.console import Console
from rich.table import Table

from posikit.consts import APP_NAME
from posikit.errors import UsageError
from posikit.version import get_version

STANDARD_KEYS = ('K', 'alpha', 'df', 'mc_samples', 'mc_standard_error', 'seed',
                 'd', 'p', 'direction_count', 'universe')
"""
Keys present in every JSON report, null when they do not apply to the command
"""


@dataclass
class CommandResult:
    """
    Output of one command
    """
    payload: dict[str, Any]
    """
    JSON document
    """
    table: pd.DataFrame | None = None
    """
    Rows for csv and text outputs. If not set, the scalar fields of the payload are used
    """
    title: str = ''


def to_jsonable(value: Any) -> Any:
    """
    Converts numpy scalars, arrays and frames into plain JSON values.
    Non-finite floats become strings, so the document stays strict JSON
    """
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, pd.DataFrame):
        return to_jsonable(value.to_dict(orient='records'))
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value) or math.isinf(value):
            return str(value)
        return value
    return value


def render_json(result: CommandResult) -> str:
    payload = {key: None for key in STANDARD_KEYS}
    payload.update(to_jsonable(result.payload))
    payload['tool_version'] = get_version()
    return json.dumps(payload, sort_keys=True, indent=2) + '\n'


def _scalar_frame(payload: dict[str, Any]) -> pd.DataFrame:
    row = {}
    for key, value in sorted(payload.items()):
        if isinstance(value, dict):
            for sub_key, sub_value in sorted(value.items()):
                if not isinstance(sub_value, (dict, list)):
                    row[f'{key}.{sub_key}'] = sub_value
        elif not isinstance(value, list):
            row[key] = value
    return pd.DataFrame([row])


def _rows(result: CommandResult) -> pd.DataFrame:
    if result.table is not None:
        return result.table
    return _scalar_frame(to_jsonable(result.payload))


def render_csv(result: CommandResult) -> str:
    return _rows(result).to_csv(index=False)


def render_text(result: CommandResult) -> str:
    frame = _rows(result)
    table = Table(title=result.title or APP_NAME)
    for column in frame.columns:
        table.add_column(str(column))
    for row in frame.itertuples(index=False):
        table.add_row(*[_format_cell(v) for v in row])
    console = Console(record=True, width=160, color_system=None)
    with console.capture() as capture:
        console.print(table)
    return capture.get()


def _format_cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return f'{float(value):.6g}'
    return str(value)


RENDERERS = {
    'json': render_json,
    'csv': render_csv,
    'text': render_text,
}


def write_result(result: CommandResult, output: str, out: TextIO):
    """
    Writes a result to the output stream

    Args:
        result (CommandResult): result
        output (str): json, csv or text
        out (TextIO): output stream
    """
    if output not in RENDERERS:
        raise UsageError(f'unknown output format {output}')
    out.write(RENDERERS[output](result))
    out.flush()
