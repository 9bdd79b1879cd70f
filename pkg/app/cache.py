import logging
from typing import List, Optional

from app.db.duckdb import duckdb_connect
from app.settings import S

log = logging.getLogger(__name__)


class ReportStore:
    """Materialized reports in DuckDB, keyed by ``cache_key(command, config)``."""

    def __init__(self, path: Optional[str] = None):
        self.path = path

    def init(self) -> None:
        con = duckdb_connect(self.path)
        try:
            con.execute(
                """
                CREATE TABLE IF NOT EXISTS report_cache (
                  cache_key VARCHAR PRIMARY KEY,
                  report_json VARCHAR,
                  created_at TIMESTAMP
                );
                """
            )
        finally:
            con.close()

    def get(self, key: str) -> Optional[str]:
        con = duckdb_connect(self.path)
        try:
            row = con.execute("SELECT report_json FROM report_cache WHERE cache_key = ?", [key]).fetchone()
        finally:
            con.close()
        return row[0] if row else None

    def put(self, key: str, raw: str) -> None:
        con = duckdb_connect(self.path)
        try:
            con.execute("DELETE FROM report_cache WHERE cache_key = ?", [key])
            con.execute("INSERT INTO report_cache VALUES (?, ?, now())", [key, raw])
        finally:
            con.close()

    def clear(self, prefixes: Optional[List[str]] = None) -> int:
        """Delete cached reports (all, or those whose key starts with one of ``prefixes``)."""
        con = duckdb_connect(self.path)
        try:
            if not prefixes:
                n = con.execute("SELECT count(*) FROM report_cache").fetchone()[0]
                con.execute("DELETE FROM report_cache")
                return int(n)
            n = 0
            for p in prefixes:
                pattern = f"{p}:%"
                n += con.execute("SELECT count(*) FROM report_cache WHERE cache_key LIKE ?", [pattern]).fetchone()[0]
                con.execute("DELETE FROM report_cache WHERE cache_key LIKE ?", [pattern])
            return int(n)
        finally:
            con.close()


report_store: Optional[ReportStore] = None


def get_report_store() -> Optional[ReportStore]:
    """The shared store, created on first use; ``None`` when REPORT_CACHE is off."""
    global report_store
    if not S.report_cache:
        return None
    if report_store is None:
        report_store = ReportStore()
        report_store.init()
        log.info("report cache at %s", S.duckdb_path)
    return report_store
