from __future__ import annotations

from fastapi import APIRouter, Depends, HTTPException

from adapters.entry.http.dtos.evaluate_dtos import EvaluateRequest, EvaluateResponse
from core.services.exceptions import GridVolterraError
from core.use_cases.evaluate_usecase import EvaluateUseCase


router = APIRouter(prefix="/evaluate", tags=["evaluate"])


def get_use_case() -> EvaluateUseCase:
    return EvaluateUseCase.from_settings()


@router.post("", response_model=EvaluateResponse)
def evaluate_methods(
    body: EvaluateRequest,
    use_case: EvaluateUseCase = Depends(get_use_case),
):
    try:
        return use_case.evaluate_arrays(
            grid=body.grid.model_dump(),
            V=body.V,
            methods=body.methods,
            solver=body.solver.overrides(),
            jobs=body.jobs,
        )
    except (GridVolterraError, ValueError) as exc:
        detail = exc.as_dict() if isinstance(exc, GridVolterraError) else str(exc)
        raise HTTPException(status_code=400, detail=detail) from exc
    except Exception as exc:
        raise HTTPException(status_code=500, detail=f"Failed to evaluate methods: {exc}") from exc
