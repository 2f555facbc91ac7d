"""JSON and CSV formats for spaces, functions, step functions and reports."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .errors import BadParams
from .metric_measure import MetricMeasureSpace, SampleFunction, build_space
from .rearrangement import StepFunction


def _reject_constant(name):
    raise BadParams(f"non-finite number {name} is not allowed")


def loads(text: str):
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise BadParams(f"invalid JSON: {exc}") from None


def dumps(obj) -> str:
    """Deterministic JSON; floats keep full double precision."""
    try:
        return json.dumps(obj, indent=2, allow_nan=False) + "\n"
    except ValueError as exc:
        raise BadParams(str(exc)) from None


def read_json(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise BadParams(f"cannot read {path}: {exc.strerror}") from None
    return loads(text)


def write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")


def space_to_dict(space: MetricMeasureSpace) -> dict:
    if space.coords is not None:
        atoms = [
            {"id": int(a), "mass": float(m), "coords": [float(x) for x in c]}
            for a, m, c in zip(space.ids.tolist(), space.masses.tolist(), space.coords.tolist())
        ]
        return {"atoms": atoms, "metric": "euclidean"}
    atoms = [{"id": int(a), "mass": float(m)} for a, m in zip(space.ids.tolist(), space.masses.tolist())]
    return {"atoms": atoms, "metric": {"matrix": space.distance_matrix.tolist()}}


def space_from_dict(data) -> MetricMeasureSpace:
    if not isinstance(data, dict) or "atoms" not in data:
        raise BadParams("space JSON needs an 'atoms' list")
    try:
        return build_space(data["atoms"], data.get("metric", "euclidean"))
    except (KeyError, TypeError) as exc:
        raise BadParams(f"malformed space JSON: {exc}") from None


def function_to_dict(f: SampleFunction) -> dict:
    return {"values": {str(k): v for k, v in f.as_mapping().items()}}


def function_from_dict(data, space: MetricMeasureSpace) -> SampleFunction:
    if not isinstance(data, dict) or not isinstance(data.get("values"), dict):
        raise BadParams("function JSON needs a 'values' object")
    try:
        return SampleFunction.from_mapping(space, data["values"])
    except (TypeError, ValueError) as exc:
        if isinstance(exc, BadParams):
            raise
        raise BadParams(f"malformed function JSON: {exc}") from None


def load_space(path) -> MetricMeasureSpace:
    return space_from_dict(read_json(path))


def load_function(path, space: MetricMeasureSpace) -> SampleFunction:
    return function_from_dict(read_json(path), space)


def step_to_dict(g: StepFunction) -> dict:
    return g.to_dict()


def step_from_dict(data) -> StepFunction:
    return StepFunction.from_dict(data)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, float) else x for x in row])
    return buf.getvalue()
