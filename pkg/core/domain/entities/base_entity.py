# core/domain/entities/base_entity.py
from __future__ import annotations

from typing import Any, Optional, Type, TypeVar

import numpy as np
from pydantic import BaseModel, ConfigDict

from core.services.utils import to_json_safe

E = TypeVar("E", bound="ArrayEntity")


def as_float_array(value: Any, *, ndim: int, name: str) -> np.ndarray:
    """
    Coerce lists / arrays into a read-only float64 ndarray with the expected rank.
    """
    arr = np.array(value, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


class ArrayEntity(BaseModel):
    """
    Base entity for immutable numerical values.

    Conventions:
    - numpy arrays are allowed as fields and are stored read-only.
    - Instances are frozen; derived values are computed, never patched in place.
    - `to_record()` / `from_record()` map to plain JSON-ready dictionaries.
    """

    model_config = ConfigDict(
        arbitrary_types_allowed=True,
        frozen=True,
        use_enum_values=True,
    )

    @classmethod
    def from_record(cls: Type[E], doc: Optional[dict[str, Any]]) -> Optional[E]:
        """
        Build an entity from a JSON-decoded dictionary.
        """
        if not doc:
            return None
        return cls.model_validate(dict(doc))

    def to_record(self) -> dict[str, Any]:
        """
        Serialize this entity into a JSON-ready dictionary (arrays become nested lists).
        """
        data = {name: getattr(self, name) for name in type(self).model_fields}
        return to_json_safe(data)
