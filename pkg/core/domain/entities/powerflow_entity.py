from __future__ import annotations

from typing import Any

import numpy as np
from pydantic import Field, field_validator, model_validator

from core.domain.entities.base_entity import ArrayEntity, as_float_array
from core.services.exceptions import NonFiniteInput


class InjectionProfile(ArrayEntity):
    """
    Net complex power injections over time, per unit. Consumption is negative p.

    Row t holds the injections of buses 1..N at time slot t.
    """

    p: np.ndarray
    q: np.ndarray
    v0: float = Field(1.0, gt=0, description="Squared substation voltage magnitude")

    @field_validator("p", "q", mode="before")
    @classmethod
    def _as_matrix(cls, value: Any) -> np.ndarray:
        return as_float_array(value, ndim=2, name="injection matrix")

    @model_validator(mode="after")
    def _check(self) -> "InjectionProfile":
        if self.p.shape != self.q.shape:
            raise ValueError(f"p and q shapes differ: {self.p.shape} vs {self.q.shape}")
        if self.p.shape[0] < 1:
            raise ValueError("profile needs at least one time slot")
        if not (np.all(np.isfinite(self.p)) and np.all(np.isfinite(self.q))):
            raise ValueError("injections must be finite")
        return self

    @property
    def n_slots(self) -> int:
        return int(self.p.shape[0])

    @property
    def n_buses(self) -> int:
        return int(self.p.shape[1])


class PowerFlowState(ArrayEntity):
    """
    Branch flow solution for one time slot.

    v: squared voltage magnitudes of buses 1..N
    S: complex power flowing from pi_n into bus n (line n)
    ell: squared current magnitudes of line n
    """

    v: np.ndarray
    S: np.ndarray
    ell: np.ndarray
    iterations: int = 0

    @model_validator(mode="after")
    def _check(self) -> "PowerFlowState":
        if not (self.v.shape == self.S.shape == self.ell.shape) or self.v.ndim != 1:
            raise ValueError("v, S and ell must be vectors of the same length")
        return self


class VoltageSeries(ArrayEntity):
    """
    T x N matrix of squared voltage magnitudes; column n - 1 is bus n.

    Note: "voltage" here always means the SQUARED magnitude v = |V|^2, per unit.
    """

    V: np.ndarray
    timestamps: np.ndarray

    @model_validator(mode="before")
    @classmethod
    def _coerce(cls, data: Any) -> Any:
        if isinstance(data, dict):
            data = dict(data)
            V = np.array(data.get("V"), dtype=float)
            if V.ndim == 1:
                V = V.reshape(1, -1)
            if V.ndim != 2:
                raise ValueError(f"V must be a T x N matrix, got shape {V.shape}")
            bad = int(np.size(V) - np.count_nonzero(np.isfinite(V)))
            if bad:
                raise NonFiniteInput(bad)
            V.setflags(write=False)
            data["V"] = V

            ts = data.get("timestamps")
            ts = np.arange(V.shape[0]) if ts is None else np.array(ts)
            ts.setflags(write=False)
            data["timestamps"] = ts
        return data

    @model_validator(mode="after")
    def _check(self) -> "VoltageSeries":
        if self.V.shape[0] < 1 or self.V.shape[1] < 1:
            raise ValueError("series needs at least one time slot and one bus")
        if self.timestamps.shape[0] != self.V.shape[0]:
            raise ValueError("timestamps length must match the number of rows of V")
        if np.any(self.V <= 0):
            raise ValueError("squared voltage magnitudes must be > 0")
        return self

    @property
    def n_slots(self) -> int:
        return int(self.V.shape[0])

    @property
    def n_buses(self) -> int:
        return int(self.V.shape[1])

    def head(self, n_slots: int) -> "VoltageSeries":
        return VoltageSeries(V=self.V[:n_slots], timestamps=self.timestamps[:n_slots])

    def tail(self, start: int) -> "VoltageSeries":
        return VoltageSeries(V=self.V[start:], timestamps=self.timestamps[start:])
