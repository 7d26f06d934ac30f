from __future__ import annotations

from typing import Any

import numpy as np
from pydantic import Field, field_validator, model_validator

from core.domain.entities.base_entity import ArrayEntity, as_float_array


def n_pairs(n_buses: int) -> int:
    """Length of the reduced Kronecker product v (x) v: N(N+1)/2."""
    return n_buses * (n_buses + 1) // 2


class ReducedKron(ArrayEntity):
    """
    Upper-triangular pairwise products [v1^2, v1 v2, ..., v_{N-1} v_N, v_N^2] in lexicographic order.
    """

    n_buses: int = Field(..., ge=1)
    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def _as_vector(cls, value: Any) -> np.ndarray:
        return as_float_array(value, ndim=1, name="values")

    @model_validator(mode="after")
    def _check(self) -> "ReducedKron":
        if self.values.shape[0] != n_pairs(self.n_buses):
            raise ValueError(f"expected {n_pairs(self.n_buses)} products, got {self.values.shape[0]}")
        return self


class FeatureMatrix(ArrayEntity):
    """
    M (D x T): column t is m(t) = [v(t); v(t) (x) v(t)], D = N + N(N+1)/2.
    """

    n_buses: int = Field(..., ge=1)
    M: np.ndarray

    @model_validator(mode="after")
    def _check(self) -> "FeatureMatrix":
        if self.M.ndim != 2 or self.M.shape[0] != self.n_buses + n_pairs(self.n_buses):
            raise ValueError(f"M has shape {self.M.shape}, incompatible with N={self.n_buses}")
        return self

    @property
    def dim(self) -> int:
        return int(self.M.shape[0])

    @property
    def n_slots(self) -> int:
        return int(self.M.shape[1])

    @property
    def first_order(self) -> np.ndarray:
        return self.M[: self.n_buses]

    @property
    def second_order(self) -> np.ndarray:
        return self.M[self.n_buses :]


class BusKernels(ArrayEntity):
    """
    Graph Volterra kernels of one bus n: rho1 (length N) and rho2 (length N(N+1)/2).
    Positions are 0-based (position k <-> bus k + 1); `bus` is the 1-based bus id.
    """

    bus: int = Field(..., ge=1)
    rho1: np.ndarray
    rho2: np.ndarray

    @field_validator("rho1", "rho2", mode="before")
    @classmethod
    def _as_vector(cls, value: Any) -> np.ndarray:
        return as_float_array(value, ndim=1, name="kernel")

    @model_validator(mode="after")
    def _check(self) -> "BusKernels":
        n = self.rho1.shape[0]
        if self.rho2.shape[0] != n_pairs(n):
            raise ValueError(f"rho2 must have {n_pairs(n)} entries for N={n}")
        if not 1 <= self.bus <= n:
            raise ValueError(f"bus {self.bus} outside 1..{n}")
        return self

    @property
    def n_buses(self) -> int:
        return int(self.rho1.shape[0])

    @property
    def theta(self) -> np.ndarray:
        return np.concatenate([self.rho1, self.rho2])


class RnMatrix(ArrayEntity):
    """
    N x (N+1) matrix of one bus: column 0 is rho1, entry (i, j + 1) is rho2 of pair {i, j}.
    A pair coefficient appears in the rows of both partners.
    """

    bus: int = Field(..., ge=1)
    matrix: np.ndarray


class VolterraKernels(ArrayEntity):
    """
    Kernels of all buses stacked as R1 (N x N, row n-1 = rho_{n,1}) and R2 (N x N(N+1)/2).
    """

    R1: np.ndarray
    R2: np.ndarray

    @field_validator("R1", "R2", mode="before")
    @classmethod
    def _as_matrix(cls, value: Any) -> np.ndarray:
        return as_float_array(value, ndim=2, name="kernel matrix")

    @model_validator(mode="after")
    def _check(self) -> "VolterraKernels":
        n = self.R1.shape[0]
        if self.R1.shape != (n, n) or self.R2.shape != (n, n_pairs(n)):
            raise ValueError(f"inconsistent kernel shapes {self.R1.shape} / {self.R2.shape}")
        return self

    @property
    def n_buses(self) -> int:
        return int(self.R1.shape[0])

    def for_bus(self, bus: int) -> BusKernels:
        return BusKernels(bus=bus, rho1=self.R1[bus - 1], rho2=self.R2[bus - 1])

    @classmethod
    def from_buses(cls, kernels: list[BusKernels]) -> "VolterraKernels":
        ordered = sorted(kernels, key=lambda k: k.bus)
        return cls(R1=np.vstack([k.rho1 for k in ordered]), R2=np.vstack([k.rho2 for k in ordered]))

    @classmethod
    def zeros(cls, n_buses: int) -> "VolterraKernels":
        return cls(R1=np.zeros((n_buses, n_buses)), R2=np.zeros((n_buses, n_pairs(n_buses))))


class StackedModel(ArrayEntity):
    """
    V1 = R1 V1 + R2 V2 + E, with V1 (N x T), V2 (N(N+1)/2 x T) and residuals E.
    """

    V1: np.ndarray
    V2: np.ndarray
    R1: np.ndarray
    R2: np.ndarray
    E: np.ndarray
