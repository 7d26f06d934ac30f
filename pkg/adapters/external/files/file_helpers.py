from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import pandas as pd

from core.services.exceptions import ConfigError
from core.services.utils import to_json_safe

# 17 significant digits round-trip every float64
FLOAT_FORMAT = "%.17g"


def require_file(path: str | Path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"No such file: {p}")
    return p


def read_json(path: str | Path) -> Any:
    p = require_file(path)
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p} is not valid JSON: {exc}", field=str(p)) from exc


def write_json(data: Any, path: str | Path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(json.dumps(to_json_safe(data), indent=2, sort_keys=False) + "\n", encoding="utf-8")
    return p


def read_csv(path: str | Path) -> pd.DataFrame:
    p = require_file(path)
    try:
        return pd.read_csv(p, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise ConfigError(f"{p} is not a readable CSV: {exc}", field=str(p)) from exc


def write_csv(df: pd.DataFrame, path: str | Path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(p, index=False, float_format=FLOAT_FORMAT)
    return p


def numbered_columns(df: pd.DataFrame, prefix: str, path: str | Path) -> list[str]:
    """
    Columns `<prefix>1..<prefix>N` in bus order; raises ConfigError when any is missing.
    """
    found = sorted(
        (int(c[len(prefix):]), c) for c in df.columns if c.startswith(prefix) and c[len(prefix):].isdigit()
    )
    expected = list(range(1, len(found) + 1))
    if not found or [k for k, _ in found] != expected:
        raise ConfigError(f"{path}: expected columns {prefix}1..{prefix}N", field=str(path))
    return [c for _, c in found]
