from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from adapters.external.files.grid_repository_json import GridRepositoryJSON
from adapters.external.files.timeseries_repository_csv import TimeSeriesRepositoryCSV
from config import get_settings
from core.domain.repositories.grid_repository_interface import GridRepository
from core.domain.repositories.timeseries_repository_interface import TimeSeriesRepository
from core.services.exceptions import ConfigError
from core.services.grid_model import synth_grid
from core.services.powerflow import synth_profiles
from core.services.utils import envelope


@dataclass
class SynthesisUseCase:
    """
    Synthetic inputs: random radial feeders and load / solar injection profiles.
    """

    grid_repo: GridRepository
    series_repo: TimeSeriesRepository
    default_seed: int = 0

    @classmethod
    def from_settings(cls) -> "SynthesisUseCase":
        settings = get_settings()
        return cls(
            grid_repo=GridRepositoryJSON(),
            series_repo=TimeSeriesRepositoryCSV(),
            default_seed=settings.SEED,
        )

    def synth_grid(
        self,
        *,
        n_buses: int,
        seed: Optional[int] = None,
        degree_bias: float = 1.0,
        out: Optional[str | Path] = None,
    ) -> dict:
        if n_buses < 1:
            raise ConfigError("N must be >= 1", field="n_buses")
        if degree_bias < 0:
            raise ConfigError("degree_bias must be >= 0", field="degree_bias")

        seed = self.default_seed if seed is None else int(seed)
        grid = synth_grid(n_buses, seed, degree_bias)
        data = {"grid": grid.to_record(), "seed": seed}
        if out is not None:
            data["path"] = str(self.grid_repo.save(grid, out))
        return envelope("OK", data)

    def synth_profiles(
        self,
        *,
        grid_path: str | Path,
        T: int,
        seed: Optional[int] = None,
        base_load: float = 0.005,
        volatility: float = 0.3,
        solar_fraction: float = 0.3,
        v0: float = 1.0,
        out: str | Path,
    ) -> dict:
        if T < 1:
            raise ConfigError("T must be >= 1", field="T")
        grid = self.grid_repo.load(grid_path)

        seed = self.default_seed if seed is None else int(seed)
        try:
            profile = synth_profiles(grid, T, seed, base_load, volatility, solar_fraction, v0)
        except ValueError as exc:
            raise ConfigError(str(exc), field="synth_profiles") from exc
        path = self.series_repo.save_profiles(profile, out)
        return envelope("OK", {"path": str(path), "T": profile.n_slots, "buses": profile.n_buses, "seed": seed})
