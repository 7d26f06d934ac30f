# main.py
from __future__ import annotations

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from adapters.entry.http.views.evaluate_view import router as evaluate_router
from adapters.entry.http.views.identify_view import router as identify_router
from adapters.entry.http.views.schema_view import router as schema_router
from config import get_settings


def create_app() -> FastAPI:
    """
    Application factory for the grid topology identification API.

    The HTTP surface runs the same use cases as the CLI on in-memory inputs.
    """
    settings = get_settings()
    app = FastAPI(
        title="Grid Volterra API",
        version=settings.APP_VERSION,
    )

    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_credentials=False,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    app.include_router(schema_router, prefix="/api")
    app.include_router(identify_router, prefix="/api")
    app.include_router(evaluate_router, prefix="/api")

    return app


app = create_app()
