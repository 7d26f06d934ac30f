from __future__ import annotations

from abc import ABC, abstractmethod
from pathlib import Path

from core.domain.entities.grid_entity import RadialGrid


class GridRepository(ABC):
    @abstractmethod
    def load(self, path: str | Path) -> RadialGrid:
        raise NotImplementedError

    @abstractmethod
    def save(self, grid: RadialGrid, path: str | Path) -> Path:
        raise NotImplementedError
