# core/services/utils.py
from typing import Any
from collections.abc import Mapping, Iterable
from enum import Enum
import math

import numpy as np
from pydantic import BaseModel


def to_json_safe(obj: Any) -> Any:
    """
    Recursively convert numpy / pydantic-heavy structures into plain JSON-serializable primitives.

    - ndarray        -> nested lists
    - numpy scalars  -> int / float / bool
    - non-finite     -> None
    - BaseModel      -> to_json_safe(model_dump())
    - Mapping        -> {str(k): to_json_safe(v)}
    - list/tuple/set -> [to_json_safe(v), ...]
    - everything else -> unchanged if primitive, else str(obj)
    """
    if isinstance(obj, Enum):
        return obj.value

    if isinstance(obj, np.ndarray):
        return [to_json_safe(v) for v in obj.tolist()]

    if isinstance(obj, np.generic):
        obj = obj.item()

    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None

    # basic primitives
    if isinstance(obj, (str, int, bool)) or obj is None:
        return obj

    if isinstance(obj, BaseModel):
        if hasattr(obj, "to_record"):
            return obj.to_record()
        return to_json_safe(obj.model_dump(mode="python"))

    if isinstance(obj, Mapping):
        return {str(k): to_json_safe(v) for (k, v) in obj.items()}

    if isinstance(obj, (list, tuple, set, frozenset)):
        return [to_json_safe(v) for v in obj]

    if isinstance(obj, Iterable) and not isinstance(obj, (bytes, bytearray)):
        try:
            return [to_json_safe(v) for v in obj]
        except Exception:
            pass

    return str(obj)


def envelope(message: str, data: Any = None, *, ok: bool = True) -> dict:
    """
    Standard response envelope shared by use cases, CLI output and HTTP views.
    """
    return {"ok": ok, "message": message, "data": to_json_safe(data)}
