from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from adapters.external.files.grid_repository_json import GridRepositoryJSON
from adapters.external.files.timeseries_repository_csv import TimeSeriesRepositoryCSV
from config import get_settings
from core.domain.enums.powerflow_enums import FlowModel
from core.domain.repositories.grid_repository_interface import GridRepository
from core.domain.repositories.timeseries_repository_interface import TimeSeriesRepository
from core.services.exceptions import ConfigError
from core.services.powerflow import add_measurement_noise, simulate_series
from core.services.utils import envelope


@dataclass
class SimulateUseCase:
    grid_repo: GridRepository
    series_repo: TimeSeriesRepository
    tol: float = 1e-10
    max_iter: int = 200
    default_seed: int = 0

    @classmethod
    def from_settings(cls) -> "SimulateUseCase":
        settings = get_settings()
        return cls(
            grid_repo=GridRepositoryJSON(),
            series_repo=TimeSeriesRepositoryCSV(),
            tol=settings.PF_TOL,
            max_iter=settings.PF_MAX_ITER,
            default_seed=settings.SEED,
        )

    def execute(
        self,
        *,
        grid_path: str | Path,
        profiles_path: str | Path,
        model: FlowModel | str = FlowModel.EXACT,
        noise_std: float = 0.0,
        seed: Optional[int] = None,
        v0: float = 1.0,
        jobs: int = 1,
        out: str | Path,
    ) -> dict:
        """
        Solve every slot of the profiles on the grid and write the (optionally noisy) series.
        Noise is added after the solve, with `seed`.
        """
        try:
            model = FlowModel(model)
        except ValueError as exc:
            raise ConfigError(f"unknown power flow model {model!r}", field="model") from exc
        if noise_std < 0:
            raise ConfigError("noise std must be >= 0", field="noise_std")

        grid = self.grid_repo.load(grid_path)
        profile = self.series_repo.load_profiles(profiles_path, v0=v0)

        series = simulate_series(grid, profile, model, tol=self.tol, max_iter=self.max_iter, jobs=jobs)
        seed = self.default_seed if seed is None else int(seed)
        series = add_measurement_noise(series, noise_std, seed)

        path = self.series_repo.save_series(series, out)
        return envelope("OK", {"path": str(path), "T": series.n_slots, "buses": series.n_buses, "model": model})
