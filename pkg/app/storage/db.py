from __future__ import annotations

from typing import Any, Dict, Optional, Tuple

from sqlalchemy import Engine, create_engine, insert, select, text
from sqlalchemy.exc import IntegrityError, SQLAlchemyError

from app.storage.schema import metadata, optimization_traces, verification_reports
from app.util.hashing import digest


def create_db_engine(database_url: str) -> Engine:
    engine = create_engine(database_url, pool_pre_ping=True, future=True)
    if engine.dialect.name == "sqlite":
        # SQLite stores are created in place; other databases are migrated with alembic.
        metadata.create_all(engine)
    return engine


def check_db(engine: Engine) -> None:
    with engine.connect() as conn:
        conn.execute(text("SELECT 1"))


def get_report_by_request_key(engine: Engine, request_key: str) -> Optional[Dict[str, Any]]:
    with engine.begin() as conn:
        row = conn.execute(
            select(verification_reports).where(verification_reports.c.request_key == request_key)
        ).mappings().first()
        return dict(row) if row else None


def get_report(engine: Engine, report_id: str) -> Optional[Dict[str, Any]]:
    with engine.begin() as conn:
        row = conn.execute(
            select(verification_reports).where(verification_reports.c.report_id == report_id)
        ).mappings().first()
        return dict(row) if row else None


def insert_report(engine: Engine, *, request_key: str, report: Dict[str, Any]) -> Tuple[Dict[str, Any], bool]:
    """Store a report once per request key; a concurrent duplicate returns the stored row."""
    values = {
        "report_id": report["report_id"],
        "inequality": report["inequality"],
        "verdict": report["verdict"],
        "complex_hash": report["complex_hash"],
        "metric_hash": report["metric_hash"],
        "level": report["level"],
        "request_key": request_key,
        "trace_id": report["trace_id"],
        "report_version": report["report_version"],
        "report_hash": digest(report),
        "report": report,
    }
    try:
        with engine.begin() as conn:
            conn.execute(insert(verification_reports).values(**values))
    except IntegrityError:
        existing = get_report_by_request_key(engine, request_key)
        if not existing:
            raise SQLAlchemyError("Idempotent insert failed to return a row")
        return existing, False
    stored = get_report(engine, report["report_id"])
    if not stored:
        raise SQLAlchemyError("Report not found after insert")
    return stored, True


def insert_trace(engine: Engine, *, summary: Dict[str, Any]) -> Dict[str, Any]:
    with engine.begin() as conn:
        conn.execute(
            insert(optimization_traces).values(
                trace_id=summary["run_id"],
                complex_hash=summary["complex_hash"],
                seed=summary["seed"],
                best_ratio=summary["best_ratio"],
                certified_ratio=summary["certified_ratio"],
                trace=summary,
            )
        )
        row = conn.execute(
            select(optimization_traces).where(optimization_traces.c.trace_id == summary["run_id"])
        ).mappings().first()
    if not row:
        raise SQLAlchemyError("Trace not found after insert")
    return dict(row)


def get_trace(engine: Engine, trace_id: str) -> Optional[Dict[str, Any]]:
    with engine.begin() as conn:
        row = conn.execute(
            select(optimization_traces).where(optimization_traces.c.trace_id == trace_id)
        ).mappings().first()
        return dict(row) if row else None
