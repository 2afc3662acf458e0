"""Experiment configuration and report serialization (JSON and CSV)."""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

from . import __version__

FORMATS = ("json", "csv")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce a run. ``workers`` never affects results."""

    subcommand: str
    n: int | None = None
    d: int | None = None
    samples: int = 10000
    seed: int = 0
    mu: str = "1/16"
    dist: str = "bernoulli"
    v: tuple[str, ...] | None = None
    ones: int | None = None
    grid: int = 10000
    l: int | None = None
    a: str = "1/10"
    constant: float = 2.0
    interval: tuple[str, str] | None = None
    basis: str | None = None
    method: str = "normalized"
    format: str = "json"
    out: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.format not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}")
        if self.samples < 1:
            raise ValueError("samples must be positive")
        if self.workers < 1:
            raise ValueError("workers must be positive")
        if not 0 <= self.seed < 1 << 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def to_json(self) -> dict:
        d = dataclasses.asdict(self)
        for k in ("v", "interval"):
            if d[k] is not None:
                d[k] = list(d[k])
        return d

    @classmethod
    def from_json(cls, data: dict) -> ExperimentConfig:
        data = dict(data)
        for k in ("v", "interval"):
            if data.get(k) is not None:
                data[k] = tuple(data[k])
        return cls(**data)


def to_jsonable(x: Any) -> Any:
    """Exact rationals become {"num", "den"} decimal strings (with a float ``approx``)."""
    if isinstance(x, Fraction):
        return {"num": str(x.numerator), "den": str(x.denominator), "approx": float(x)}
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, int):
        return x if abs(x) < 1 << 53 else str(x)
    if isinstance(x, (np.integer,)):
        return to_jsonable(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isfinite(x):
            return x
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return [to_jsonable(v) for v in x.tolist()]
    if dataclasses.is_dataclass(x) and not isinstance(x, type):
        if hasattr(x, "to_json"):
            return to_jsonable(x.to_json())
        return {f.name: to_jsonable(getattr(x, f.name)) for f in dataclasses.fields(x)}
    if hasattr(x, "_asdict"):
        return {k: to_jsonable(v) for k, v in x._asdict().items()}
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    raise TypeError(f"cannot serialize {type(x).__name__}")


@dataclass
class Table:
    header: tuple[str, ...]
    rows: list[tuple]


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    results: dict
    paper_bound_comparisons: list = field(default_factory=list)
    wall_time_seconds: float = 0.0
    tool_version: str = __version__
    table: Table | None = None

    def to_json(self) -> dict:
        return {
            "config": self.config.to_json(),
            "results": to_jsonable(self.results),
            "paper_bound_comparisons": to_jsonable(self.paper_bound_comparisons),
            "tool_version": self.tool_version,
            "wall_time_seconds": self.wall_time_seconds,
        }


def dumps(report: ExperimentReport) -> str:
    return json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n"


def reproducible_payload(doc: dict | str) -> str:
    """The serialized report minus run-specific fields (wall time, worker count)."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    doc = dict(doc)
    doc.pop("wall_time_seconds", None)
    cfg = dict(doc.get("config", {}))
    cfg.pop("workers", None)
    cfg.pop("out", None)
    doc["config"] = cfg
    return json.dumps(doc, indent=2, sort_keys=True)


def _csv_cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    return str(x)


def emit_csv(report: ExperimentReport | Table) -> bytes:
    """RFC 4180 CSV (CRLF line ends) of the report's table."""
    table = report if isinstance(report, Table) else report.table
    if table is None:
        raise ValueError("report has no tabular payload")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(table.header)
    for row in table.rows:
        w.writerow([_csv_cell(x) for x in row])
    return buf.getvalue().encode()
