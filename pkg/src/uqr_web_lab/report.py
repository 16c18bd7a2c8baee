"""Report envelopes and serialization: JSON with 17-digit floats, CSV tables."""
from __future__ import annotations

import csv
import dataclasses
import datetime as _dt
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .geom import ClosedCurve

SCHEMA = "uqr-web-lab/1"
VERDICTS = ("pass", "fail", "undecided")


def fmt_float(x: float) -> str:
    """17 significant digits; non-finite values become ``null``."""
    x = float(x)
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def to_plain(obj):
    """Convert dataclasses, numpy values, complex numbers and curves to JSON-ready data."""
    if isinstance(obj, ClosedCurve):
        return {"vertices": len(obj), "log_scale": obj.log_scale, "resolution": obj.resolution,
                "log_min_norm": float(obj.log_norms().min()), "log_max_norm": float(obj.log_norms().max())}
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        out = {f.name: to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)
               if f.name not in ("parent_stage",)}
        for name in ("passed", "connected"):
            if name not in out and isinstance(getattr(type(obj), name, None), property):
                out[name] = to_plain(getattr(obj, name))
        return out
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, Path):
        return str(obj)
    return repr(obj)


def dumps(obj, indent: int = 2) -> str:
    """Deterministic JSON text: sorted keys, floats via :func:`fmt_float`."""

    def enc(v, level: int) -> str:
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(v, dict):
            if not v:
                return "{}"
            items = [f"{pad}{json.dumps(k)}: {enc(v[k], level + 1)}" for k in sorted(v)]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(v, list):
            if not v:
                return "[]"
            if all(not isinstance(x, (dict, list)) for x in v):
                return "[" + ", ".join(enc(x, level + 1) for x in v) + "]"
            return "[\n" + ",\n".join(pad + enc(x, level + 1) for x in v) + "\n" + end + "]"
        if isinstance(v, bool) or v is None:
            return json.dumps(v)
        if isinstance(v, int):
            return str(v)
        if isinstance(v, float):
            return fmt_float(v)
        return json.dumps(v)

    return enc(to_plain(obj), 0) + "\n"


@dataclasses.dataclass
class ReportEnvelope:
    command: str
    config: dict
    verdict: str
    metrics: dict
    tables: dict = dataclasses.field(default_factory=dict)
    schema: str = SCHEMA
    tool_version: str = __version__
    timestamp: str = ""

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}")
        if not self.timestamp:
            self.timestamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")

    def to_json(self) -> str:
        return dumps(self)


def strip_timestamp(text: str) -> str:
    """JSON text without the timestamp line, for determinism comparisons."""
    return "\n".join(line for line in text.splitlines() if '"timestamp":' not in line)


def write_json(path, envelope: ReportEnvelope) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(envelope.to_json(), encoding="utf-8")
    return p


def write_curve_csv(path, curve: ClosedCurve) -> Path:
    """``x, y`` per vertex; curves with a log scale also record it per row."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "log_scale"])
        for z in curve.vertices:
            w.writerow([fmt_float(z.real), fmt_float(z.imag), fmt_float(curve.log_scale)])
    return p


def write_periodic_csv(path, records) -> Path:
    """``period, re z, im z, |multiplier|, classification`` per cycle point."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["period", "re", "im", "abs_multiplier", "classification"])
        for r in records:
            for z in r.cycle:
                w.writerow([r.period, fmt_float(z.real), fmt_float(z.imag), fmt_float(r.modulus), r.classification])
    return p


__all__ = [
    "SCHEMA",
    "ReportEnvelope",
    "dumps",
    "fmt_float",
    "to_plain",
    "strip_timestamp",
    "write_json",
    "write_curve_csv",
    "write_periodic_csv",
]
