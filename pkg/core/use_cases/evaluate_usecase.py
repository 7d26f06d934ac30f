from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from adapters.external.files.grid_repository_json import GridRepositoryJSON
from adapters.external.files.results_repository_files import ResultsRepositoryFiles
from adapters.external.files.timeseries_repository_csv import TimeSeriesRepositoryCSV
from core.domain.entities.powerflow_entity import VoltageSeries
from core.domain.entities.report_entity import EvaluationReport
from core.domain.enums.method_enums import Method
from core.domain.repositories.grid_repository_interface import GridRepository
from core.domain.repositories.results_repository_interface import ResultsRepository
from core.domain.repositories.timeseries_repository_interface import TimeSeriesRepository
from core.domain.schemas.solver_types import SolverConfig
from core.services.exceptions import ConfigError
from core.services.grid_model import build_grid
from core.services.identify import evaluate
from core.services.utils import envelope
from core.use_cases.identify_usecase import IdentifyUseCase


def parse_methods(methods: Optional[Sequence[str] | str]) -> List[Method]:
    if methods is None:
        return list(Method)
    if isinstance(methods, str):
        methods = [m for m in methods.split(",") if m.strip()]
    try:
        parsed = [Method(m.strip().lower()) for m in methods]
    except ValueError as exc:
        raise ConfigError(f"unknown method in {list(methods)}; choose from {[m.value for m in Method]}", field="methods") from exc
    if not parsed:
        raise ConfigError("at least one method is required", field="methods")
    return list(dict.fromkeys(parsed))


def _summary(report: EvaluationReport) -> Dict[str, Any]:
    return {
        "auc": {m: r.auc for m, r in report.rocs.items()},
        "supplementary": {"volterra_triads": report.triad_roc.auc} if report.triad_roc else {},
        "buses": report.n_buses,
        "T": report.n_slots,
        "triads_reported": len(report.triads),
    }


@dataclass
class EvaluateUseCase:
    grid_repo: GridRepository
    series_repo: TimeSeriesRepository
    results_repo: ResultsRepository
    identify: IdentifyUseCase

    @classmethod
    def from_settings(cls) -> "EvaluateUseCase":
        return cls(
            grid_repo=GridRepositoryJSON(),
            series_repo=TimeSeriesRepositoryCSV(),
            results_repo=ResultsRepositoryFiles(),
            identify=IdentifyUseCase.from_settings(),
        )

    def execute(
        self,
        *,
        grid_path: str | Path,
        series_path: str | Path,
        methods: Optional[Sequence[str] | str] = None,
        solver: SolverConfig | Dict[str, Any] | None = None,
        jobs: int = 1,
        ridge: bool = True,
        kernels_path: Optional[str | Path] = None,
        out_dir: str | Path,
    ) -> dict:
        """
        ROC / AUC of every method against the grid; writes the report directory.
        With `kernels_path` the Volterra scores come from an earlier `identify` run.
        """
        method_list = parse_methods(methods)
        cfg = solver if isinstance(solver, SolverConfig) else self.identify.solver_config(solver)
        grid = self.grid_repo.load(grid_path)
        series = self.series_repo.load_series(series_path)
        kernels = self.results_repo.load_kernels(kernels_path) if kernels_path is not None else None

        report = evaluate(grid, series, cfg, methods=method_list, jobs=jobs, ridge=ridge, kernels=kernels)
        files = self.results_repo.save_report(report, out_dir)

        data = _summary(report)
        data["files"] = [str(f) for f in files]
        return envelope("OK", data)

    def evaluate_arrays(
        self,
        *,
        grid: Dict[str, Any],
        V: Any,
        methods: Optional[Sequence[str] | str] = None,
        solver: SolverConfig | Dict[str, Any] | None = None,
        jobs: int = 1,
    ) -> dict:
        """In-memory variant: grid record and T x N squared voltages in, AUC table out."""
        method_list = parse_methods(methods)
        cfg = solver if isinstance(solver, SolverConfig) else self.identify.solver_config(solver)
        radial = build_grid(grid.get("lines", []), n_buses=grid.get("buses"))
        series = VoltageSeries(V=V)

        report = evaluate(radial, series, cfg, methods=method_list, jobs=jobs)
        data = _summary(report)
        data["rocs"] = {m: r.model_dump() for m, r in report.rocs.items()}
        return envelope("OK", data)
