from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field


class SolverIn(BaseModel):
    lam: Optional[float] = Field(None, ge=0, alias="lambda")
    mu: Optional[float] = Field(None, ge=0)
    tol: Optional[float] = Field(None, gt=0)
    max_iter: Optional[int] = Field(None, ge=1)
    sweep: Optional[bool] = None
    criterion: Optional[str] = None
    hierarchy: Optional[str] = None
    enforce_hierarchy: Optional[bool] = None

    model_config = ConfigDict(populate_by_name=True)

    def overrides(self) -> Dict[str, Any]:
        return self.model_dump(by_alias=True, exclude_none=True)


class IdentifyRequest(BaseModel):
    V: List[List[float]] = Field(..., description="T x N squared voltage magnitudes, column n-1 is bus n")
    solver: SolverIn = Field(default_factory=SolverIn)
    jobs: int = Field(1, ge=1, le=64)


class IdentifyResponse(BaseModel):
    ok: bool
    message: str
    data: Dict[str, Any]
