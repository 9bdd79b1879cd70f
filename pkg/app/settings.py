import logging
import os
import sys
from dataclasses import dataclass


@dataclass(frozen=True)
class Settings:
    tol: float
    circle_nodes: int
    sphere_level: int
    slice_angles: int
    fd_step: float
    curvature_min: float
    flat_value_tol: float
    flat_length_fraction: float
    max_iter: int
    mc_samples: int
    seed: int

    body_registry_path: str
    duckdb_path: str
    duckdb_threads: int
    report_cache: bool
    log_level: str

    @classmethod
    def from_env(cls) -> "Settings":
        def _bool(name: str, default: str) -> bool:
            return os.getenv(name, default).strip().lower() == "true"

        tol = float(os.getenv("HT_TOL", "1e-9"))
        circle_nodes = int(os.getenv("HT_CIRCLE_NODES", "512"))
        sphere_level = int(os.getenv("HT_SPHERE_LEVEL", "4"))
        slice_angles = int(os.getenv("HT_SLICE_ANGLES", "128"))
        fd_step = float(os.getenv("HT_FD_STEP", "1e-4"))
        curvature_min = float(os.getenv("HT_CURVATURE_MIN", "1e-8"))
        flat_value_tol = float(os.getenv("HT_FLAT_VALUE_TOL", "1e-12"))
        flat_length_fraction = float(os.getenv("HT_FLAT_LENGTH_FRACTION", "1e-3"))
        max_iter = int(os.getenv("HT_MAX_ITER", "500"))
        mc_samples = int(os.getenv("HT_MC_SAMPLES", "200000"))
        seed = int(os.getenv("HT_SEED", "0"))

        body_registry_path = os.getenv("BODY_REGISTRY_PATH", "app/data/bodies.json")
        duckdb_path = os.getenv("DUCKDB_DB_PATH", "data/reports.duckdb")
        duckdb_threads = int(os.getenv("DUCKDB_THREADS", "4"))
        report_cache = _bool("REPORT_CACHE", "false")
        log_level = os.getenv("LOG_LEVEL", "INFO").strip().upper()

        return cls(
            tol=tol,
            circle_nodes=circle_nodes,
            sphere_level=sphere_level,
            slice_angles=slice_angles,
            fd_step=fd_step,
            curvature_min=curvature_min,
            flat_value_tol=flat_value_tol,
            flat_length_fraction=flat_length_fraction,
            max_iter=max_iter,
            mc_samples=mc_samples,
            seed=seed,
            body_registry_path=body_registry_path,
            duckdb_path=duckdb_path,
            duckdb_threads=duckdb_threads,
            report_cache=report_cache,
            log_level=log_level,
        )


S = Settings.from_env()


def configure_logging() -> None:
    logging.basicConfig(
        level=getattr(logging, S.log_level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
