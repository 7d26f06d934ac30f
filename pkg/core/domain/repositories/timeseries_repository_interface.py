from __future__ import annotations

from abc import ABC, abstractmethod
from pathlib import Path

from core.domain.entities.powerflow_entity import InjectionProfile, VoltageSeries


class TimeSeriesRepository(ABC):
    """
    Voltage series (`t,bus_1..bus_N`) and injection profiles (`t,p_1..p_N,q_1..q_N`).
    """

    @abstractmethod
    def load_series(self, path: str | Path) -> VoltageSeries:
        raise NotImplementedError

    @abstractmethod
    def save_series(self, series: VoltageSeries, path: str | Path) -> Path:
        raise NotImplementedError

    @abstractmethod
    def load_profiles(self, path: str | Path, v0: float = 1.0) -> InjectionProfile:
        raise NotImplementedError

    @abstractmethod
    def save_profiles(self, profile: InjectionProfile, path: str | Path) -> Path:
        raise NotImplementedError
