from __future__ import annotations

from pathlib import Path
from typing import Any, Sequence

import pandas as pd

from adapters.external.files.file_helpers import read_json, write_csv, write_json
from core.domain.entities.kernels_entity import VolterraKernels
from core.domain.entities.report_entity import EvaluationReport, RocCurve
from core.domain.repositories.results_repository_interface import ResultsRepository
from core.services.exceptions import ConfigError
from core.services.features import kernels_from_records, kernels_to_records


class ResultsRepositoryFiles(ResultsRepository):
    """
    Kernels JSON, solver diagnostics sidecar and the evaluation report directory:

    report/
      report.json            full EvaluationReport
      auc.json               AUC table
      roc_<method>.csv       threshold,fpr,tpr
      edges_<method>.csv     i,j,score
      triads_volterra.csv    center,i,j,score
    """

    REPORT_FILE = "report.json"

    def save_kernels(self, kernels: VolterraKernels, path: str | Path) -> Path:
        return write_json(kernels_to_records(kernels), path)

    def load_kernels(self, path: str | Path) -> VolterraKernels:
        records = read_json(path)
        if not isinstance(records, list) or not records:
            raise ConfigError(f"{path}: kernels JSON must be a non-empty list", field="kernels")
        try:
            return kernels_from_records(records)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"{path}: malformed kernel record ({exc!r})", field="kernels") from exc

    def save_diagnostics(self, diagnostics: Sequence[dict[str, Any]], path: str | Path) -> Path:
        return write_json({"buses": list(diagnostics)}, path)

    def save_report(self, report: EvaluationReport, out_dir: str | Path) -> list[Path]:
        out = Path(out_dir)
        written = [write_json(report.model_dump(mode="json"), out / self.REPORT_FILE)]
        written.append(write_json(report.auc_table(), out / "auc.json"))

        curves: list[RocCurve] = list(report.rocs.values())
        if report.triad_roc is not None:
            curves.append(report.triad_roc)
        for curve in curves:
            df = pd.DataFrame({"threshold": curve.thresholds, "fpr": curve.fpr, "tpr": curve.tpr})
            written.append(write_csv(df, out / f"roc_{curve.method}.csv"))

        for method in report.edge_scores:
            rows = report.scores_for(method).candidates()
            written.append(write_csv(pd.DataFrame(rows, columns=["i", "j", "score"]), out / f"edges_{method}.csv"))

        if report.triads or "volterra" in report.rocs:
            df = pd.DataFrame([e.model_dump() for e in report.triads], columns=["center", "i", "j", "score"])
            written.append(write_csv(df, out / "triads_volterra.csv"))
        return written

    def load_report(self, out_dir: str | Path) -> EvaluationReport:
        return EvaluationReport.model_validate(read_json(Path(out_dir) / self.REPORT_FILE))
