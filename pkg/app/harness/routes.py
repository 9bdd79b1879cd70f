import time
from typing import Any, Dict, List, Optional

from fastapi import APIRouter, Body, HTTPException
from pydantic import BaseModel, Field

from app.cache import get_report_store
from app.common.errors import GeometryError
from app.db.registry import load_registry
from app.harness.commands import COMMANDS, run_command
from app.harness.models import ExperimentConfig

router = APIRouter()


class CacheClearRequest(BaseModel):
    prefixes: Optional[List[str]] = Field(default=None, description="Commands whose reports to drop (e.g. ['santalo']).")
    all: bool = Field(default=False, description="If true, drop every cached report.")


@router.get("/api/v1/presets")
def presets() -> Dict[str, Any]:
    registry = load_registry()
    return {
        "ok": True,
        "presets": {key: {"description": e.description, "spec": e.spec.model_dump(exclude_none=True, mode="json")} for key, e in registry.items()},
    }


@router.post("/api/v1/cache/clear")
def cache_clear(req: CacheClearRequest) -> Dict[str, Any]:
    store = get_report_store()
    if store is None:
        raise HTTPException(status_code=503, detail="Report cache is disabled (REPORT_CACHE=false).")
    if not req.all and not req.prefixes:
        raise HTTPException(status_code=400, detail="Provide prefixes or set all=true.")
    unknown = [p for p in (req.prefixes or []) if p not in COMMANDS]
    if unknown:
        raise HTTPException(status_code=400, detail=f"Unknown prefixes: {unknown}. Allowed: {sorted(COMMANDS)}")
    deleted = store.clear(None if req.all else req.prefixes)
    return {"ok": True, "deleted": deleted}


@router.post("/api/v1/{command}")
def run(command: str, payload: Optional[Dict[str, Any]] = Body(default=None)) -> Dict[str, Any]:
    """Run one CLI command; the body carries the remaining ExperimentConfig fields."""
    if command not in COMMANDS:
        raise HTTPException(status_code=404, detail=f"Unknown command '{command}'. Known: {sorted(COMMANDS)}")
    t0 = time.time()
    try:
        config = ExperimentConfig.parse({**(payload or {}), "command": command, "out": None})
        report, cached = run_command(config)
    except GeometryError as e:
        raise HTTPException(status_code=400, detail=f"{type(e).__name__}: {e}")
    dt_ms = int((time.time() - t0) * 1000)
    return {"ok": report.passed, "cached": cached, "t_ms": dt_ms, "exit_code": report.exit_code, "data": report.to_dict()}
