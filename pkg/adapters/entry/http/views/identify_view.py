from __future__ import annotations

from fastapi import APIRouter, Depends, HTTPException

from adapters.entry.http.dtos.identify_dtos import IdentifyRequest, IdentifyResponse
from core.services.exceptions import GridVolterraError
from core.use_cases.identify_usecase import IdentifyUseCase


router = APIRouter(prefix="/identify", tags=["identify"])


def get_use_case() -> IdentifyUseCase:
    return IdentifyUseCase.from_settings()


@router.post("", response_model=IdentifyResponse)
def identify_kernels(
    body: IdentifyRequest,
    use_case: IdentifyUseCase = Depends(get_use_case),
):
    try:
        return use_case.identify_matrix(V=body.V, solver=body.solver.overrides(), jobs=body.jobs)
    except (GridVolterraError, ValueError) as exc:
        detail = exc.as_dict() if isinstance(exc, GridVolterraError) else str(exc)
        raise HTTPException(status_code=400, detail=detail) from exc
    except Exception as exc:
        raise HTTPException(status_code=500, detail=f"Failed to identify kernels: {exc}") from exc
