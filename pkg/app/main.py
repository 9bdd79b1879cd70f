from typing import Any, Dict

from fastapi import FastAPI

from app import __version__
from app.cache import get_report_store
from app.db.registry import load_registry
from app.harness.routes import router as harness_router
from app.settings import S, configure_logging

configure_logging()

app = FastAPI(title="Holmes-Thompson Santaló API", version=__version__)

app.include_router(harness_router)


@app.on_event("startup")
def startup() -> None:
    # fail fast on a broken registry or cache file
    load_registry()
    get_report_store()


@app.get("/health")
def health() -> Dict[str, Any]:
    return {
        "ok": True,
        "version": __version__,
        "presets": len(load_registry()),
        "report_cache": S.report_cache,
        "duckdb_path": S.duckdb_path,
    }
