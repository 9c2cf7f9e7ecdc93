"""Run configuration and deterministic file output."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from .errors import GoldenRuleError
from .params import ModelParams, derive_params

DEFAULT_ALPHAS = (0.0, 0.25, 3.0 / 7.0, 0.5)
FLOAT_FORMAT = "{:.17g}"


class ConfigError(GoldenRuleError, ValueError):
    exit_code = 1


class OutputError(GoldenRuleError, OSError):
    exit_code = 2


@dataclass
class RunConfig:
    """Everything a subcommand needs; file values are overridden by flags."""

    e_b: Optional[float] = None
    delta: float = 1.0
    g: float = 0.15
    alphas: List[float] = field(default_factory=list)
    t_max_over_th: float = 4.0
    points_per_interval: int = 200
    truncation_n: int = 1000
    oracle: bool = False
    format: Optional[str] = None
    out: Optional[str] = None
    oracle_m: int = 100_000
    k_max: int = 8
    sample_t: float = 1.0
    sample_range: int = 10
    n_list: List[int] = field(default_factory=lambda: [100, 300, 1000])
    tolerance: float = 1e-4
    scaling_t_over_th: float = 2.5
    scaling_g_over_delta: List[float] = field(default_factory=lambda: [0.08, 0.04, 0.02])

    def validate(self, analysis: bool = False) -> "RunConfig":
        try:
            derive_params(self.e_b if self.e_b is not None else 0.0, self.delta, self.g)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        for a in self.alphas:
            if not (0.0 <= a < 1.0):
                raise ConfigError(f"alpha values must lie in [0, 1), got {a}")
        if not self.t_max_over_th > 0:
            raise ConfigError("--t-max-over-th must be positive")
        if self.points_per_interval < 1:
            raise ConfigError("--points-per-interval must be >= 1")
        if analysis and self.points_per_interval < 50:
            raise ConfigError("analysis needs --points-per-interval >= 50")
        if self.truncation_n < 1:
            raise ConfigError("--truncation-n must be >= 1")
        if self.format not in (None, "csv", "json"):
            raise ConfigError(f"--format must be csv or json, got {self.format!r}")
        return self

    def output_format(self, default: str = "csv") -> str:
        return self.format or default

    def alpha_list(self, default=DEFAULT_ALPHAS) -> List[float]:
        if self.alphas:
            return list(self.alphas)
        if self.e_b is not None:
            return [derive_params(self.e_b, self.delta, self.g).alpha]
        return list(default)

    def params_for(self, alpha: float) -> ModelParams:
        """Model with the discrete level at ``(floor(E_b/delta) + alpha) delta``."""
        base = 0.0 if self.e_b is None else math.floor(self.e_b / self.delta)
        return derive_params((base + alpha) * self.delta, self.delta, self.g)

    def as_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


_FIELDS = {f.name for f in dataclasses.fields(RunConfig)}


def load_config_file(path) -> Dict[str, Any]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OutputError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    out = {}
    for key, value in data.items():
        name = key.replace("-", "_")
        if name == "alpha":
            name = "alphas"
        if name not in _FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        out[name] = value
    return out


def build_config(file_values: Dict[str, Any], flag_values: Dict[str, Any]) -> RunConfig:
    merged = dict(file_values)
    merged.update({k: v for k, v in flag_values.items() if v is not None})
    try:
        return RunConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT.format(float(value))
    return str(value)


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating,)):
        value = float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return _jsonable(dataclasses.asdict(value))
    return value


def render_csv(metadata: Dict[str, Any], columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    """CSV text: ``# key: value`` metadata lines, a header row, then data."""
    buf = io.StringIO()
    for key, value in metadata.items():
        buf.write(f"# {key}: {json.dumps(_jsonable(value), sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def render_json(payload: Dict[str, Any]) -> str:
    return json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n"


def emit(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    try:
        path = Path(out)
        if path.parent and not path.parent.exists():
            raise OSError(f"directory {path.parent} does not exist")
        path.write_text(text)
    except OSError as exc:
        raise OutputError(f"cannot write {out}: {exc}") from exc


def read_csv(path) -> tuple:
    """Parse a file written by :func:`render_csv` into (metadata, columns, rows)."""
    metadata = {}
    lines = Path(path).read_text().splitlines()
    body = []
    for line in lines:
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            metadata[key] = json.loads(value)
        else:
            body.append(line)
    reader = csv.reader(body)
    columns = next(reader)
    return metadata, columns, [row for row in reader]
