"""DuckDB helpers and the body registry."""
