import os
from typing import Optional, Sequence

import duckdb

from app.settings import S


def quote_literal(s: str) -> str:
    """SQL string literal with single quotes escaped."""
    return "'" + str(s).replace("'", "''") + "'"


def duckdb_connect(path: Optional[str] = None) -> duckdb.DuckDBPyConnection:
    """Connection to the report store (``path=":memory:"`` for scratch work)."""
    path = S.duckdb_path if path is None else path
    if path != ":memory:":
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    con = duckdb.connect(path)
    con.execute(f"PRAGMA threads={int(S.duckdb_threads)}")
    return con


def export_samples_csv(path: str, columns: Sequence[str], records: Sequence[Sequence[float]]) -> str:
    """Write numeric sample rows to ``path`` as CSV through DuckDB COPY."""
    con = duckdb_connect(":memory:")
    try:
        cols = ", ".join(f'"{c}" DOUBLE' for c in columns)
        con.execute(f"CREATE TABLE samples ({cols})")
        if records:
            marks = ", ".join("?" for _ in columns)
            con.executemany(f"INSERT INTO samples VALUES ({marks})", [list(map(float, r)) for r in records])
        target = os.path.abspath(path)
        os.makedirs(os.path.dirname(target), exist_ok=True)
        con.execute(f"COPY (SELECT * FROM samples ORDER BY rowid) TO {quote_literal(target)} (HEADER TRUE, DELIMITER ',')")
        return target
    finally:
        con.close()
