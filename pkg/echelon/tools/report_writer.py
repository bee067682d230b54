"""
Report files
CSV curves/trajectories with a '#' parameter-echo header, and JSON reports
with stable key order. Nothing time-dependent is written, so reruns with
the same configuration are byte-identical.
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Union

import numpy as np
from pydantic import BaseModel

logger = logging.getLogger(__name__)

# 17 significant digits, enough to round-trip a double
FLOAT_FORMAT = '%.16e'

PathLike = Union[str, Path]


def _header_lines(header: Mapping[str, Any]) -> List[str]:
    lines = []
    for key, value in header.items():
        if isinstance(value, float):
            value = repr(value)
        lines.append(f"{key}: {value}")
    return lines


def write_csv(
    path: PathLike,
    columns: Sequence[str],
    rows: np.ndarray,
    header: Mapping[str, Any],
) -> Path:
    """
    Write rows under a '#'-prefixed header block and a column-name line.

    NaN cells are written as 'nan' and mark gaps (e.g. an undefined derivative).
    An empty rows array gives a file with the header only.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = np.asarray(rows, dtype=float).reshape(-1, len(columns))

    with path.open('w', newline='\n') as handle:
        for line in _header_lines(header):
            handle.write(f"# {line}\n")
        handle.write(','.join(columns) + '\n')
        if len(rows):
            np.savetxt(handle, rows, fmt=FLOAT_FORMAT, delimiter=',')

    logger.info(f"Wrote {len(rows)} rows to {path}")
    return path


def write_curve(path: PathLike, xs, values, header: Mapping[str, Any]) -> Path:
    return write_csv(path, ('x', 'value'), np.column_stack([np.ravel(xs), np.ravel(values)]), header)


def read_csv(path: PathLike):
    """(header dict, column names, rows) from a file written by write_csv"""
    header: Dict[str, str] = {}
    columns: List[str] = []
    body: List[List[float]] = []
    with Path(path).open() as handle:
        for line in handle:
            line = line.rstrip('\n')
            if line.startswith('#'):
                key, _, value = line[1:].strip().partition(': ')
                header[key] = value
            elif not columns:
                columns = line.split(',')
            elif line:
                body.append([float(cell) for cell in line.split(',')])
    rows = np.asarray(body, dtype=float).reshape(-1, len(columns)) if columns else np.empty((0, 0))
    return header, columns, rows


def write_trajectories(path: PathLike, trajectories: Iterable[Sequence[Sequence[float]]], header: Mapping[str, Any]) -> Path:
    """One row per snapshot: restart, iteration, x_1..x_n"""
    rows = []
    for restart, trajectory in enumerate(trajectories):
        for iteration, X in enumerate(trajectory or []):
            rows.append([restart, iteration, *X])
    n = len(rows[0]) - 2 if rows else int(header.get('n', 0))
    columns = ['restart', 'iteration', *[f"x_{i}" for i in range(1, n + 1)]]
    return write_csv(path, columns, np.asarray(rows, dtype=float).reshape(-1, len(columns)), header)


def to_jsonable(value: Any) -> Any:
    if isinstance(value, BaseModel):
        return json.loads(value.model_dump_json())
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def write_json(path: PathLike, payload: Any, header: Mapping[str, Any] = None) -> Path:
    """
    JSON report; keys keep model field / insertion order.

    Args:
        payload: pydantic model, mapping or list
        header: parameter echo, stored under 'parameters' ahead of the payload
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {}
    if header:
        document['parameters'] = to_jsonable(dict(header))
    body = to_jsonable(payload)
    if isinstance(body, dict):
        document.update(body)
    else:
        document['results'] = body

    path.write_text(json.dumps(document, indent=2) + '\n')
    logger.info(f"Wrote report {path}")
    return path
