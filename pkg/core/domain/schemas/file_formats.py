from __future__ import annotations

from typing import Dict, List

from pydantic import BaseModel, Field


class LineRecord(BaseModel):
    child: int = Field(..., ge=1)
    parent: int = Field(..., ge=0)
    r: float = Field(..., gt=0, description="Resistance, per unit")
    x: float = Field(..., ge=0, description="Reactance, per unit")


class GridFile(BaseModel):
    """Radial grid; bus 0 is the substation and `buses` counts the non-root buses."""

    buses: int = Field(..., ge=1)
    lines: List[LineRecord]


class PairEntry(BaseModel):
    i: int = Field(..., ge=1)
    j: int = Field(..., ge=1)
    value: float


class KernelRecord(BaseModel):
    """Kernels of bus n; rho2 lists the nonzero pair coefficients only."""

    n: int = Field(..., ge=1)
    rho1: List[float]
    rho2: List[PairEntry] = Field(default_factory=list)


class AucFile(BaseModel):
    auc: Dict[str, float]
    supplementary: Dict[str, float] = Field(default_factory=dict)
    n_buses: int
    n_slots: int


CSV_FORMATS: Dict[str, Dict[str, object]] = {
    "series": {"columns": ["t", "bus_1", "...", "bus_N"], "values": "squared voltage magnitudes, per unit"},
    "profiles": {"columns": ["t", "p_1", "...", "p_N", "q_1", "...", "q_N"], "values": "net injections, per unit"},
    "roc": {"columns": ["threshold", "fpr", "tpr"]},
    "edges": {"columns": ["i", "j", "score"]},
    "triads": {"columns": ["center", "i", "j", "score"]},
}
