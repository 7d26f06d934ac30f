from __future__ import annotations

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Sequence

from core.domain.entities.kernels_entity import VolterraKernels
from core.domain.entities.report_entity import EvaluationReport


class ResultsRepository(ABC):
    @abstractmethod
    def save_kernels(self, kernels: VolterraKernels, path: str | Path) -> Path:
        raise NotImplementedError

    @abstractmethod
    def load_kernels(self, path: str | Path) -> VolterraKernels:
        raise NotImplementedError

    @abstractmethod
    def save_diagnostics(self, diagnostics: Sequence[dict[str, Any]], path: str | Path) -> Path:
        raise NotImplementedError

    @abstractmethod
    def save_report(self, report: EvaluationReport, out_dir: str | Path) -> list[Path]:
        raise NotImplementedError

    @abstractmethod
    def load_report(self, out_dir: str | Path) -> EvaluationReport:
        raise NotImplementedError
