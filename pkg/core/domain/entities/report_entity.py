from __future__ import annotations

from typing import Any, Dict, List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from core.domain.entities.base_entity import ArrayEntity, as_float_array
from core.domain.entities.grid_entity import Triad


class EdgeScores(ArrayEntity):
    """
    Symmetric N x N matrix of nonnegative edge scores over the non-root buses (position k <-> bus k + 1).
    """

    method: str = "volterra"
    matrix: np.ndarray

    @field_validator("matrix", mode="before")
    @classmethod
    def _as_matrix(cls, value: Any) -> np.ndarray:
        return as_float_array(value, ndim=2, name="edge scores")

    @model_validator(mode="after")
    def _check(self) -> "EdgeScores":
        m = self.matrix
        if m.shape[0] != m.shape[1]:
            raise ValueError(f"edge scores must be square, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("edge scores must be finite")
        if np.any(m < 0) or np.any(np.diag(m) != 0):
            raise ValueError("edge scores must be nonnegative with a zero diagonal")
        if not np.array_equal(m, m.T):
            raise ValueError("edge scores must be symmetric")
        return self

    @property
    def n_buses(self) -> int:
        return int(self.matrix.shape[0])

    def candidates(self) -> List[tuple[int, int, float]]:
        """(i, j, score) over the N(N-1)/2 unordered pairs, 1-based, i < j."""
        iu, ju = np.triu_indices(self.n_buses, 1)
        return [(int(i) + 1, int(j) + 1, float(self.matrix[i, j])) for i, j in zip(iu, ju)]

    def score(self, i: int, j: int) -> float:
        return float(self.matrix[i - 1, j - 1])


class TriadEntry(BaseModel):
    center: int = Field(..., ge=1)
    i: int = Field(..., ge=1)
    j: int = Field(..., ge=1)
    score: float = Field(..., ge=0)

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check(self) -> "TriadEntry":
        if not self.i < self.j:
            raise ValueError(f"triad pair must satisfy i < j, got ({self.i}, {self.j})")
        if self.center in (self.i, self.j):
            raise ValueError(f"triad center {self.center} cannot be one of its partners")
        return self

    @property
    def triad(self) -> Triad:
        return Triad(self.center, self.i, self.j)


class TriadScores(BaseModel):
    """
    Nonzero second-order interactions (center; {i, j}) ranked by decreasing score.
    """

    n_buses: int = Field(..., ge=1)
    entries: List[TriadEntry] = Field(default_factory=list)

    model_config = ConfigDict(frozen=True)

    def as_dict(self) -> Dict[Triad, float]:
        return {e.triad: e.score for e in self.entries}

    def __len__(self) -> int:
        return len(self.entries)


class RocCurve(BaseModel):
    """
    Empirical ROC. Points run from (0, 0) to (1, 1) as the threshold decreases; the first
    threshold lies above every score.
    """

    method: str
    thresholds: List[float]
    fpr: List[float]
    tpr: List[float]
    auc: float = Field(..., ge=0, le=1)
    positives: int = 0
    negatives: int = 0
    supplementary: bool = False

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check(self) -> "RocCurve":
        if not len(self.thresholds) == len(self.fpr) == len(self.tpr):
            raise ValueError("thresholds, fpr and tpr must have the same length")
        return self

    def points(self) -> List[tuple[float, float, float]]:
        return list(zip(self.thresholds, self.fpr, self.tpr))


class EvaluationReport(BaseModel):
    """
    Everything `evaluate` produces: ROC per method, AUC table, edge scores, Volterra triads
    and per-bus solver diagnostics. JSON round-trips through model_dump_json / model_validate_json.
    """

    n_buses: int
    n_slots: int
    rocs: Dict[str, RocCurve] = Field(default_factory=dict)
    triad_roc: RocCurve | None = None
    edge_scores: Dict[str, List[List[float]]] = Field(default_factory=dict)
    triads: List[TriadEntry] = Field(default_factory=list)
    diagnostics: List[Dict[str, Any]] = Field(default_factory=list)

    model_config = ConfigDict(frozen=True)

    @property
    def auc(self) -> Dict[str, float]:
        table = {m: r.auc for m, r in self.rocs.items()}
        if self.triad_roc is not None:
            table["volterra_triads"] = self.triad_roc.auc
        return table

    def auc_table(self) -> Dict[str, Any]:
        return {
            "auc": {m: r.auc for m, r in self.rocs.items()},
            "supplementary": {"volterra_triads": self.triad_roc.auc} if self.triad_roc else {},
            "n_buses": self.n_buses,
            "n_slots": self.n_slots,
        }

    def scores_for(self, method: str) -> EdgeScores:
        return EdgeScores(method=method, matrix=self.edge_scores[method])
