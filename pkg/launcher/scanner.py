"""
MIT License

Copyright (c) 2024-present ressf developers

Permission is hereby granted, free of charge, to any person obtaining a copy
of this software and associated documentation files (the "Software"), to deal
in the Software without restriction, including without limitation the rights
to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
copies of the Software, and to permit persons to whom the Software is
furnished to do so, subject to the following conditions:

The above copyright notice and this permission notice shall be included in all
copies or substantial portions of the Software.

THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
SOFTWARE.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field
from os import PathLike, getenv
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from dotenv import load_dotenv

from Ressf import __version__
from Ressf.Cantor import CantorModel, index_row
from Ressf.errors import ModelValidationError, RessfError
from Ressf.Operators import FramedModel, is_regular_point
from Ressf.Operators.constants import (
    CLUSTER_GAP,
    CSV_SCHEMA_VERSION,
    DECOMPOSITION_TOL,
    GL_LOCAL_TOL,
    INTEGER_TOL,
    LARGE_COUPLING_TOL,
    RESIDUE_TOL,
    RICHARDSON_AGREEMENT,
    Y_SCHEDULE_FACTOR,
    Y_SCHEDULE_STABLE,
)
from Ressf.Resonance import (
    large_coupling_limit,
    real_resonance_points,
    resonance_index,
    ssf_decompose,
)
from Ressf.utils import config_digest

load_dotenv()

log = logging.getLogger("Scanner")

Command = Literal["index", "ssf", "cantor", "selftest"]
Format = Literal["csv", "json"]

NUDGE_STEPS: int = 8

INDEX_COLUMNS: Tuple[str, ...] = (
    "lambda",
    "r0",
    "n_plus",
    "n_minus",
    "index",
    "multiplicity",
    "residue_check_re",
    "residue_check_im",
    "y_used",
    "y_schedule",
    "capped",
    "tolerances",
    "error",
    "code",
    "message",
)

SSF_COLUMNS: Tuple[str, ...] = (
    "lambda",
    "a",
    "b",
    "xi",
    "xi_a",
    "xi_s",
    "jumps",
    "y_extrapolation_error",
    "y_schedule",
    "nudge",
    "tolerances",
    "error",
    "code",
    "message",
)

LARGE_COUPLING_COLUMNS: Tuple[str, ...] = ("xi_limit", "signature", "converged", "xi_a_limit", "index_sum")

# echoed into every row as name:value pairs
INDEX_TOLERANCES: Tuple[Tuple[str, float], ...] = (
    ("cluster_gap", CLUSTER_GAP),
    ("residue", RESIDUE_TOL),
    ("y_factor", Y_SCHEDULE_FACTOR),
    ("y_stable", float(Y_SCHEDULE_STABLE)),
)
SSF_TOLERANCES: Tuple[Tuple[str, float], ...] = (
    ("richardson", RICHARDSON_AGREEMENT),
    ("contour", GL_LOCAL_TOL),
    ("integer", INTEGER_TOL),
    ("decomposition", DECOMPOSITION_TOL),
    ("large_coupling", LARGE_COUPLING_TOL),
)


def default_workers() -> int:
    value = getenv("RESSF_WORKERS")
    try:
        return max(1, int(value)) if value else 1
    except ValueError:
        log.warning("ignoring RESSF_WORKERS=%r, not an integer", value)
        return 1


@dataclass(frozen=True)
class ScanConfig:
    command: Command
    model_path: Optional[str] = None
    lambda_min: Optional[float] = None
    lambda_max: Optional[float] = None
    lambda_count: int = 1
    lambda_list: Tuple[float, ...] = ()
    interval: Optional[Tuple[float, float]] = None
    y0: Optional[float] = None
    y: float = 1e-4
    output: Optional[str] = None
    format: Format = "csv"
    seed: int = 0
    depth: int = 6
    nodes: int = 32
    samples: int = 100
    large_coupling: bool = False
    models: int = 20
    workers: int = field(default_factory=default_workers)

    def __post_init__(self) -> None:
        if self.lambda_count < 1:
            raise ModelValidationError("lambda count must be at least 1", field="lambda_count")
        if self.interval is not None and not self.interval[0] < self.interval[1]:
            raise ModelValidationError("interval must satisfy a < b", field="interval")
        if self.y0 is not None and self.y0 <= 0:
            raise ModelValidationError("y0 must be positive", field="y0")
        if self.y <= 0:
            raise ModelValidationError("y must be positive", field="y")
        if self.format not in ("csv", "json"):
            raise ModelValidationError(f"unknown format {self.format!r}", field="format")
        if self.depth < 1:
            raise ModelValidationError("depth must be at least 1", field="depth")
        if self.nodes < 2:
            raise ModelValidationError("nodes must be at least 2", field="nodes")
        if self.samples < 1:
            raise ModelValidationError("samples must be at least 1", field="samples")
        if self.workers < 1:
            raise ModelValidationError("workers must be at least 1", field="workers")
        if self.models < 1:
            raise ModelValidationError("models must be at least 1", field="models")
        if self.command in ("index", "ssf") and self.model_path is None:
            raise ModelValidationError("a model file is required", field="model")
        if (self.lambda_min is None) != (self.lambda_max is None):
            raise ModelValidationError("give both ends of the lambda grid", field="lambda")

    @property
    def lambdas(self) -> List[float]:
        if self.lambda_list:
            return [float(x) for x in self.lambda_list]
        if self.lambda_min is None:
            return []
        if self.lambda_count == 1:
            return [float(self.lambda_min)]
        return [float(x) for x in np.linspace(self.lambda_min, self.lambda_max, self.lambda_count)]

    @property
    def grid_step(self) -> float:
        lambdas = self.lambdas
        if len(lambdas) < 2:
            return 1e-3
        return float(abs(lambdas[1] - lambdas[0]))

    def canonical(self) -> Dict[str, Any]:
        """Everything that determines the report; the worker count and paths do not"""
        payload = asdict(self)
        for key in ("workers", "output", "model_path"):
            payload.pop(key)
        return payload

    @property
    def digest(self) -> str:
        return config_digest(self.canonical())


def _error_fields(error: RessfError) -> Dict[str, Any]:
    payload = error.to_dict()
    return {"error": payload["error"], "code": payload["code"], "message": payload["message"]}


def index_rows(model: FramedModel, lam: float, interval: Tuple[float, float], y0: Optional[float]) -> List[Dict[str, Any]]:
    """Resonance points in the interval with their indices, one row per point"""
    tolerances = [list(pair) for pair in INDEX_TOLERANCES]
    return [{**row, "tolerances": tolerances} for row in _index_rows(model, lam, interval, y0)]


def _index_rows(model: FramedModel, lam: float, interval: Tuple[float, float], y0: Optional[float]) -> List[Dict[str, Any]]:
    try:
        points = real_resonance_points(model, lam, interval)
    except RessfError as e:
        return [{"lambda": lam, **_error_fields(e)}]
    if not points:
        return [{"lambda": lam}]
    rows = []
    for r0 in points:
        try:
            result = resonance_index(model, lam, r0, y0=y0)
        except RessfError as e:
            rows.append({"lambda": lam, "r0": r0, **_error_fields(e)})
            continue
        rows.append(
            {
                "lambda": lam,
                "r0": r0,
                "n_plus": result.n_plus,
                "n_minus": result.n_minus,
                "index": result.index,
                "multiplicity": result.multiplicity,
                "residue_check_re": result.residue_check.real,
                "residue_check_im": result.residue_check.imag,
                "y_used": result.y_used,
                "y_schedule": [step[0] for step in result.y_schedule],
                "capped": result.capped,
            }
        )
    return rows


def _nudged(model: FramedModel, lam: float, end: float, outward: float, step: float) -> float:
    for k in range(NUDGE_STEPS + 1):
        candidate = end + outward * k * step
        if is_regular_point(model, candidate, lam):
            return candidate
    return end


def ssf_row(
    model: FramedModel,
    lam: float,
    interval: Tuple[float, float],
    y0: Optional[float],
    large_coupling: bool,
    step: float,
) -> Dict[str, Any]:
    """xi, its two parts and the jumps at one lambda; resonant endpoints are moved outward"""
    a, b = _nudged(model, lam, interval[0], -1.0, step), _nudged(model, lam, interval[1], 1.0, step)
    row: Dict[str, Any] = {
        "lambda": lam,
        "a": a,
        "b": b,
        "nudge": [a - interval[0], b - interval[1]],
        "tolerances": [list(pair) for pair in SSF_TOLERANCES],
    }
    try:
        decomposition = ssf_decompose(model, lam, a, b, y0=y0)
        row.update(
            xi=decomposition.xi,
            xi_a=decomposition.xi_a,
            xi_s=decomposition.xi_s,
            jumps=[[j.r0, j.jump] for j in decomposition.jumps],
            y_extrapolation_error=decomposition.y_extrapolation_error,
            y_schedule=list(decomposition.y_schedule),
        )
        if large_coupling:
            limit = large_coupling_limit(model, lam)
            row.update(
                xi_limit=limit.xi_limit,
                signature=limit.signature,
                converged=limit.converged,
                xi_a_limit=limit.xi_a_limit,
                index_sum=limit.index_sum,
            )
    except RessfError as e:
        row.update(_error_fields(e))
    return row


def cantor_row(model: CantorModel, lam: float, y: float, nodes: int) -> Dict[str, Any]:
    try:
        return index_row(model, lam, y, nodes).values()
    except RessfError as e:
        return {"lambda": lam, **_error_fields(e)}


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ";".join(":".join(_cell(v) for v in item) if isinstance(item, (list, tuple)) else _cell(item) for item in value)
    return str(value)


def header_line(config: ScanConfig) -> str:
    return f"ressf {__version__} schema {CSV_SCHEMA_VERSION} {config.command} config {config.digest}"


def write_report(
    rows: Sequence[Dict[str, Any]],
    columns: Sequence[str],
    path: Union[str, PathLike],
    config: ScanConfig,
    summary: Optional[Dict[str, Any]] = None,
) -> None:
    """CSV with a leading '#' comment line, or a JSON document; both byte-stable"""
    if config.format == "json":
        document: Dict[str, Any] = {
            "tool": f"ressf {__version__}",
            "schema": CSV_SCHEMA_VERSION,
            "command": config.command,
            "config_digest": config.digest,
            "config": config.canonical(),
            "rows": list(rows),
        }
        if summary is not None:
            document["summary"] = summary
        with open(path, "w", encoding="utf-8") as f:
            json.dump(document, f, indent=2, sort_keys=True)
            f.write("\n")
        return

    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(f"# {header_line(config)}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(column)) for column in columns])
        if summary is not None:
            f.write("# summary " + " ".join(f"{k}={_cell(v)}" for k, v in sorted(summary.items())) + "\n")
