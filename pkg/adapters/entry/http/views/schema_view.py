from __future__ import annotations

from fastapi import APIRouter, Depends

from core.use_cases.schema_usecase import SchemaUseCase


router = APIRouter(prefix="/schema", tags=["schema"])


def get_use_case() -> SchemaUseCase:
    return SchemaUseCase.from_settings()


@router.get("")
def get_schema(use_case: SchemaUseCase = Depends(get_use_case)):
    return use_case.execute()
