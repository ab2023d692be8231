"""Reading configs and writing CSV/JSON artifacts."""

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import ConfigError

SCHEMA_VERSION = 1


def load_config(path):
    """Parse a TOML or JSON config file into a dict."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if path.suffix.lower() == ".json":
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from None
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from None


def check_keys(cfg, allowed, where="config"):
    unknown = sorted(set(cfg) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}; allowed: {', '.join(sorted(allowed))}")


def fmt(x):
    """Round-trip exact text for a float; empty for missing values."""
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return ""
    return repr(x)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def read_csv(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = [row for row in r if row]
    return header, rows


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if hasattr(o, "value"):
        return o.value
    raise TypeError(f"not serialisable: {type(o).__name__}")


def dumps(obj):
    return json.dumps({"schema_version": SCHEMA_VERSION, **obj}, default=_default, indent=2, sort_keys=True)


def write_json(path, obj):
    Path(path).write_text(dumps(obj) + "\n")


def read_json(path):
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    v = d.get("schema_version", SCHEMA_VERSION)
    if v != SCHEMA_VERSION:
        raise ConfigError(f"{path}: unsupported schema_version {v}")
    return d


def write_field_csv(path, state):
    write_csv(path, ["xi", "u", "u_t"], zip(state.grid, state.u, state.u_t))


def read_field_csv(path, length=None):
    from .boussinesq import FieldState

    header, rows = read_csv(path)
    if header != ["xi", "u", "u_t"]:
        raise ConfigError(f"{path}: expected columns xi,u,u_t, got {','.join(header)}")
    data = np.array([[float(v) for v in row] for row in rows])
    return FieldState(data[:, 0], data[:, 1], data[:, 2], 0.0, length)
