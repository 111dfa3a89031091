"""CSV writers: ``#``-prefixed header (version, config hash, seed), 17 significant digits."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

__all__ = [
    "config_digest",
    "header_lines",
    "format_value",
    "summary_rows_csv",
    "run_result_csv",
    "write_text",
]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def canonical_json(config: dict) -> str:
    return json.dumps(_jsonable(config), sort_keys=True, separators=(",", ":"))


def config_digest(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


def header_lines(config: dict, seed: int) -> list[str]:
    from . import __version__

    return [
        f"# netavg {__version__}",
        f"# config_sha256: {config_digest(config)}",
        f"# master_seed: {seed}",
        f"# config: {canonical_json(config)}",
    ]


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def summary_rows_csv(rows, config: dict, seed: int) -> str:
    from .experiments import SummaryRow

    lines = header_lines(config, seed)
    lines.append(",".join(SummaryRow.FIELDS))
    for row in rows:
        lines.append(",".join(format_value(getattr(row, f)) for f in SummaryRow.FIELDS))
    return "\n".join(lines) + "\n"


def run_result_csv(result, config: dict, seed: int) -> str:
    """Trace of one run as ``t,sum_sq_error`` rows."""
    lines = header_lines(config, seed)
    lines.append(f"# algorithm: {result.algorithm_tag}")
    lines.append(f"# replication: {result.replication}")
    lines.append(f"# samples_used_per_node: {result.samples_used_per_node}")
    lines.append("t,sum_sq_error")
    for t, e in zip(result.trace_iterations, result.trace):
        lines.append(f"{int(t)},{format_value(float(e))}")
    return "\n".join(lines) + "\n"


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path
