from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
from pydantic import ValidationError

from adapters.external.files.results_repository_files import ResultsRepositoryFiles
from adapters.external.files.timeseries_repository_csv import TimeSeriesRepositoryCSV
from config import get_settings
from core.domain.entities.powerflow_entity import VoltageSeries
from core.domain.repositories.results_repository_interface import ResultsRepository
from core.domain.repositories.timeseries_repository_interface import TimeSeriesRepository
from core.domain.schemas.solver_types import IdentificationResult, SolverConfig
from core.services.exceptions import ConfigError
from core.services.features import kernels_to_records
from core.services.solver import solve_all
from core.services.utils import envelope


def diagnostics_path(kernels_path: str | Path) -> Path:
    """kernels.json -> kernels.diagnostics.json"""
    return Path(kernels_path).with_suffix(".diagnostics.json")


def _summary(result: IdentificationResult) -> Dict[str, Any]:
    return {
        "buses": result.kernels.n_buses,
        "status": dict(Counter(str(s.status) for s in result.solutions)),
        "nonzero_first_order": int(np.count_nonzero(result.kernels.R1)),
        "nonzero_second_order": int(np.count_nonzero(result.kernels.R2)),
        "violations": dict(result.violations),
    }


@dataclass
class IdentifyUseCase:
    series_repo: TimeSeriesRepository
    results_repo: ResultsRepository
    default_tol: float = 1e-8
    default_max_iter: int = 20000

    @classmethod
    def from_settings(cls) -> "IdentifyUseCase":
        settings = get_settings()
        return cls(
            series_repo=TimeSeriesRepositoryCSV(),
            results_repo=ResultsRepositoryFiles(),
            default_tol=settings.SOLVER_TOL,
            default_max_iter=settings.SOLVER_MAX_ITER,
        )

    def solver_config(self, overrides: Optional[Dict[str, Any]] = None) -> SolverConfig:
        """
        SolverConfig from settings defaults plus non-None overrides (`lambda` or `lam` for the l1 weight).
        """
        data: Dict[str, Any] = {"tol": self.default_tol, "max_iter": self.default_max_iter}
        for key, value in (overrides or {}).items():
            if value is not None:
                data["lambda" if key == "lam" else key] = value
        try:
            return SolverConfig.model_validate(data)
        except ValidationError as exc:
            raise ConfigError(f"Invalid solver configuration: {exc}", field="solver") from exc

    def execute(
        self,
        *,
        series_path: str | Path,
        solver: SolverConfig | Dict[str, Any] | None = None,
        jobs: int = 1,
        out: str | Path,
        diagnostics_out: Optional[str | Path] = None,
    ) -> dict:
        cfg = solver if isinstance(solver, SolverConfig) else self.solver_config(solver)
        series = self.series_repo.load_series(series_path)

        result = solve_all(series, cfg=cfg, jobs=jobs)

        kernels_file = self.results_repo.save_kernels(result.kernels, out)
        diag_file = self.results_repo.save_diagnostics(
            result.diagnostics(), diagnostics_out or diagnostics_path(out)
        )
        data = _summary(result)
        data.update({"kernels": str(kernels_file), "diagnostics": str(diag_file)})
        return envelope("OK", data)

    def identify_matrix(
        self,
        *,
        V: Any,
        solver: SolverConfig | Dict[str, Any] | None = None,
        jobs: int = 1,
    ) -> dict:
        """In-memory variant: T x N squared voltages in, kernel records out."""
        cfg = solver if isinstance(solver, SolverConfig) else self.solver_config(solver)
        series = VoltageSeries(V=V)
        result = solve_all(series, cfg=cfg, jobs=jobs)

        data = _summary(result)
        data["kernels"] = kernels_to_records(result.kernels)
        data["diagnostics"] = result.diagnostics(include_trace=False)
        return envelope("OK", data)
