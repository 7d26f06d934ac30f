from __future__ import annotations

from pathlib import Path

from adapters.external.files.file_helpers import read_json, write_json
from core.domain.entities.grid_entity import RadialGrid
from core.domain.repositories.grid_repository_interface import GridRepository
from core.services.exceptions import ConfigError
from core.services.grid_model import build_grid


class GridRepositoryJSON(GridRepository):
    """
    Grid file: {"buses": N, "lines": [{"child", "parent", "r", "x"}, ...]}, N = non-root buses.
    """

    def load(self, path: str | Path) -> RadialGrid:
        doc = read_json(path)
        if not isinstance(doc, dict) or not isinstance(doc.get("lines"), list):
            raise ConfigError(f"{path}: grid JSON needs a 'lines' list", field="lines")
        buses = doc.get("buses")
        return build_grid(doc["lines"], n_buses=int(buses) if buses is not None else None)

    def save(self, grid: RadialGrid, path: str | Path) -> Path:
        return write_json(grid.to_record(), path)
