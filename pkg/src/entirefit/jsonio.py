"""Deterministic JSON serialization for artifacts.

The standard json module renders floats with shortest-round-trip repr, which
is not the 17-significant-digit contract of the artifact files, so a small
writer is used instead.  Reading uses json.loads; 17 significant digits
round-trip losslessly through it.
"""

from __future__ import annotations

import json
import math
from typing import Any

from .pipeline import Artifact
from .poly import Polynomial

__all__ = ["dumps", "artifact_to_obj", "write_artifact", "read_artifact", "format_number"]


def format_number(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"non-finite number in JSON output: {x}")
    return f"{x:.17g}"


def _emit(value: Any, out: list[str]) -> None:
    if value is True or value is False:
        out.append("true" if value else "false")
    elif value is None:
        out.append("null")
    elif isinstance(value, str):
        out.append(json.dumps(value))
    elif isinstance(value, int):
        out.append(str(value))
    elif isinstance(value, float):
        out.append(format_number(value))
    elif isinstance(value, dict):
        out.append("{")
        for n, (k, v) in enumerate(value.items()):
            if n:
                out.append(", ")
            out.append(json.dumps(str(k)))
            out.append(": ")
            _emit(v, out)
        out.append("}")
    elif isinstance(value, (list, tuple)):
        out.append("[")
        for n, v in enumerate(value):
            if n:
                out.append(", ")
            _emit(v, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(value).__name__}")


def dumps(value: Any) -> str:
    out: list[str] = []
    _emit(value, out)
    out.append("\n")
    return "".join(out)


def artifact_to_obj(artifact: Artifact) -> dict:
    if artifact.certificate is None:
        raise ValueError("artifact has no certificate")
    return {
        "g": artifact.g.to_pairs(),
        "taylor": artifact.taylor.to_pairs(),
        "m": artifact.m,
        "K": artifact.K,
        "stages": [s.to_obj() for s in artifact.stages],
        "certificate": artifact.certificate.to_obj(),
    }


def write_artifact(artifact: Artifact, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(artifact_to_obj(artifact)))


def read_artifact(path: str) -> dict:
    """Load an artifact file; returns the raw dict with 'g' and 'taylor'
    replaced by Polynomial values."""
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    for key in ("g", "taylor", "m", "K"):
        if key not in obj:
            raise ValueError(f"artifact file missing key {key!r}")
    obj["g"] = Polynomial.from_pairs(obj["g"])
    obj["taylor"] = Polynomial.from_pairs(obj["taylor"])
    return obj
