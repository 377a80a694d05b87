"""Canonical on-disk formats for runs.

One serializer owns every byte that reaches disk so that identical runs
produce identical trace files:

  * trace: JSON lines, one object per inner step, keys sorted, compact
    separators, non-finite floats mapped to null;
  * summary: a single indented JSON document (the only nondeterministic
    field is wall time);
  * comparison table and plot data: plain CSV with fixed headers.

Writes go through a temp file in the target directory followed by an atomic
replace.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import asdict
from typing import Any, Iterable

from .outer import TracedStep

__all__ = [
    "COMPARE_CSV_HEADER",
    "PLOT_CSV_HEADER",
    "sanitize",
    "step_object",
    "trace_objects",
    "dumps_canonical",
    "dumps_trace",
    "write_text",
    "write_trace",
    "write_summary",
    "write_compare_csv",
    "write_plot_csv",
]

COMPARE_CSV_HEADER = "seed,method,nc_count,final_f,wall_time_s"
PLOT_CSV_HEADER = "iteration,f_value,procedure"


def _safe(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def sanitize(obj: Any) -> Any:
    """Recursively map non-finite floats to null-safe values."""
    if isinstance(obj, dict):
        return {key: sanitize(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(value) for value in obj]
    return _safe(obj)


def step_object(step: TracedStep, global_iter: int) -> dict[str, Any]:
    """Flat JSON object for one annotated inner step."""
    obj: dict[str, Any] = {"k": step.k, "mu": step.mu, "nu": step.nu,
                           "global_iter": global_iter}
    for key, value in asdict(step.record).items():
        obj[key] = _safe(value)
    return obj


def trace_objects(steps: Iterable[TracedStep]) -> list[dict[str, Any]]:
    """Annotate steps with a running index that counts actual moves."""
    out = []
    moves = 0
    for step in steps:
        if step.record.procedure != "terminated":
            moves += 1
        out.append(step_object(step, moves))
    return out


def dumps_canonical(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def dumps_trace(steps: Iterable[TracedStep]) -> str:
    return "".join(dumps_canonical(o) + "\n" for o in trace_objects(steps))


def write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_trace(path: str, steps: Iterable[TracedStep]) -> None:
    write_text(path, dumps_trace(steps))


def write_summary(path: str, summary: dict[str, Any]) -> None:
    write_text(
        path,
        json.dumps(summary, sort_keys=True, indent=2, allow_nan=False) + "\n",
    )


def _csv_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_compare_csv(path: str, rows: Iterable[dict[str, Any]]) -> None:
    lines = [COMPARE_CSV_HEADER]
    for row in rows:
        lines.append(
            ",".join(
                _csv_cell(row[key])
                for key in ("seed", "method", "nc_count", "final_f", "wall_time_s")
            )
        )
    write_text(path, "\n".join(lines) + "\n")


def write_plot_csv(path: str, points: Iterable[tuple[int, float, str]]) -> None:
    lines = [PLOT_CSV_HEADER]
    for iteration, f_value, procedure in points:
        lines.append(f"{iteration},{_csv_cell(f_value)},{procedure}")
    write_text(path, "\n".join(lines) + "\n")
