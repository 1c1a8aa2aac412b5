"""Text file formats: trace CSV, W / QUBO JSON, result JSONL, trajectory CSV.

CSV writers may prepend a ``# config: {...}`` line carrying the run
configuration; readers skip ``#`` lines.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Iterable
from pathlib import Path
from typing import Any

import numpy as np

from .classical import SolverResult
from .errors import ConfigError, EmptyInputError, ParseError
from .qubo import QuboProblem
from .trace import ConductanceTrace, TransitionMatrix

TRACE_HEADER = ["t", "v", "g", "fb_flag", "vfb_label"]

TRANSITION_MATRIX_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["levels", "w"],
    "properties": {
        "levels": {"type": "array", "items": {"type": "integer"}, "minItems": 2},
        "w": {
            "type": "array",
            "items": {
                "type": "array",
                "items": {"enum": [0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 99]},
            },
        },
    },
}


def dumps(obj: Any) -> str:
    """Canonical JSON: sorted keys, no NaN."""
    return json.dumps(obj, sort_keys=True, allow_nan=False)


def config_line(config: dict | None) -> str:
    return "" if config is None else f"# config: {dumps(config)}\n"


def _data_lines(text: str) -> Iterable[tuple[int, str]]:
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.strip() and not line.startswith("#"):
            yield lineno, line


def read_config_line(path: str | Path) -> dict | None:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    if first.startswith("# config: "):
        return json.loads(first[len("# config: ") :])
    return None


# --------------------------------------------------------------------------
# traces


def trace_to_csv(trace: ConductanceTrace, config: dict | None = None) -> str:
    buf = io.StringIO()
    buf.write(config_line(config))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    labels = dict(zip(trace.fb_events, trace.vfb_labels))
    for k in range(len(trace)):
        fb = k in labels
        writer.writerow(
            [repr(float(trace.t[k])), repr(float(trace.v[k])), repr(float(trace.g[k])),
             int(fb), labels[k] if fb else ""]
        )
    return buf.getvalue()


def trace_from_csv(text: str) -> ConductanceTrace:
    lines = list(_data_lines(text))
    if not lines:
        raise EmptyInputError("trace file is empty")
    header_line, header = lines[0]
    if [h.strip() for h in header.split(",")] != TRACE_HEADER:
        raise ParseError(f"expected header {','.join(TRACE_HEADER)}", header_line)
    t, v, g, events, labels = [], [], [], [], []
    for idx, (lineno, line) in enumerate(lines[1:]):
        row = next(csv.reader([line]))
        if len(row) != 5:
            raise ParseError(f"expected 5 fields, got {len(row)}", lineno)
        try:
            t.append(float(row[0]))
            v.append(float(row[1]))
            g.append(float(row[2]))
            flag = int(row[3])
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
        if flag not in (0, 1):
            raise ParseError(f"fb_flag must be 0 or 1, got {flag}", lineno)
        if flag:
            if not row[4].strip():
                raise ParseError("feedback row without a vfb_label", lineno)
            try:
                labels.append(int(float(row[4])))
            except ValueError:
                raise ParseError(f"bad vfb_label {row[4]!r}", lineno) from None
            events.append(idx)
        elif row[4].strip():
            raise ParseError("vfb_label given on a non-feedback row", lineno)
    if not t:
        raise EmptyInputError("trace file has a header but no samples")
    try:
        return ConductanceTrace(np.array(t), np.array(v), np.array(g), events, labels)
    except ConfigError as exc:
        raise ParseError(f"invalid trace: {exc}") from None


def read_trace(path: str | Path) -> ConductanceTrace:
    return trace_from_csv(Path(path).read_text(encoding="utf-8"))


# --------------------------------------------------------------------------
# W and QUBO


def matrix_to_dict(w: TransitionMatrix, config: dict | None = None) -> dict:
    out: dict[str, Any] = {"levels": list(w.levels), "w": w.w.tolist()}
    if config is not None:
        out["config"] = config
    return out


def matrix_from_dict(data: dict) -> TransitionMatrix:
    try:
        return TransitionMatrix(list(data["levels"]), np.array(data["w"]))
    except KeyError as exc:
        raise ParseError(f"transition matrix file missing key {exc}") from None


def read_matrix(path: str | Path) -> TransitionMatrix:
    return matrix_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def qubo_to_dict(q: QuboProblem) -> dict:
    return {
        "n_orders": q.n_orders,
        "z_levels": q.z_levels,
        "a": q.a,
        "b": q.b,
        "offset": q.offset,
        "linear": q.linear.tolist(),
        "quadratic": [[i, j, c] for (i, j), c in sorted(q.quadratic.items())],
    }


def qubo_from_dict(data: dict) -> QuboProblem:
    try:
        return QuboProblem(
            n_orders=int(data["n_orders"]),
            z_levels=int(data["z_levels"]),
            a=float(data["a"]),
            b=float(data["b"]),
            linear=np.array(data["linear"], dtype=float),
            quadratic={(int(i), int(j)): float(c) for i, j, c in data["quadratic"]},
            offset=float(data["offset"]),
        )
    except KeyError as exc:
        raise ParseError(f"QUBO file missing key {exc}") from None


# --------------------------------------------------------------------------
# results


def _bits_str(bits: np.ndarray) -> str:
    return "".join(str(int(b)) for b in bits)


def _num(x: float | None) -> float | None:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return None
    return float(x)


def result_records(
    result: SolverResult, levels: list[int] | None = None, config: dict | None = None
) -> list[dict]:
    """One record per trial followed by a summary record."""

    def labels(sched):
        if sched is None or levels is None:
            return None
        return [levels[i] for i in sched]

    records = []
    for k, t in enumerate(result.per_trial):
        records.append(
            {
                "type": "trial",
                "trial": k,
                "energy": float(t.energy),
                "feasible": bool(t.feasible),
                "s_max": _num(t.s_max),
                "schedule": t.schedule,
                "schedule_labels": labels(t.schedule),
                "bits": _bits_str(t.bits),
            }
        )
    records.append(
        {
            "type": "summary",
            "backend": result.backend,
            "best_energy": float(result.best_energy),
            "feasible": bool(result.feasible),
            "s_max": _num(result.s_max),
            "schedule": result.schedule,
            "schedule_labels": labels(result.schedule),
            "best_bits": _bits_str(result.best_bits),
            "best_trial": result.meta.get("best_trial"),
            "num_trials": len(result.per_trial),
            "config": config,
        }
    )
    return records


def result_to_jsonl(result: SolverResult, levels=None, config=None) -> str:
    return "".join(dumps(r) + "\n" for r in result_records(result, levels, config))


def read_jsonl(path: str | Path) -> list[dict]:
    out = []
    for lineno, line in _data_lines(Path(path).read_text(encoding="utf-8")):
        try:
            out.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise ParseError(str(exc), lineno) from None
    return out


def trajectory_to_csv(rows: Iterable[tuple[int, float, float]], config: dict | None = None) -> str:
    buf = io.StringIO()
    buf.write(config_line(config))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["iteration", "objective", "best_energy_so_far"])
    for it, obj, best in rows:
        writer.writerow([int(it), repr(float(obj)), repr(float(best))])
    return buf.getvalue()
