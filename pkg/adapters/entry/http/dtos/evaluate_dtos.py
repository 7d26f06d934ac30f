from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from adapters.entry.http.dtos.identify_dtos import SolverIn
from core.domain.schemas.file_formats import GridFile


class EvaluateRequest(BaseModel):
    grid: GridFile
    V: List[List[float]] = Field(..., description="T x N squared voltage magnitudes")
    methods: Optional[List[str]] = None
    solver: SolverIn = Field(default_factory=SolverIn)
    jobs: int = Field(1, ge=1, le=64)


class EvaluateResponse(BaseModel):
    ok: bool
    message: str
    data: Dict[str, Any]
