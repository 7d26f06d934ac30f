from __future__ import annotations

from dataclasses import dataclass

from config import get_settings
from core.domain.entities.report_entity import EvaluationReport
from core.domain.schemas.file_formats import CSV_FORMATS, AucFile, GridFile, KernelRecord
from core.domain.schemas.run_config import RunConfig
from core.services.utils import envelope


@dataclass
class SchemaUseCase:
    version: str

    @classmethod
    def from_settings(cls) -> "SchemaUseCase":
        return cls(version=get_settings().APP_VERSION)

    def execute(self) -> dict:
        formats = {
            "grid_json": GridFile.model_json_schema(),
            "kernels_json": {"type": "array", "items": KernelRecord.model_json_schema()},
            "auc_json": AucFile.model_json_schema(),
            "report_json": EvaluationReport.model_json_schema(),
            "run_config_toml": RunConfig.model_json_schema(by_alias=True),
            "csv": CSV_FORMATS,
        }
        return envelope("OK", {"version": self.version, "formats": formats})
