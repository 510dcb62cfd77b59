from __future__ import annotations

from sqlalchemy import JSON, Column, DateTime, Float, Index, Integer, MetaData, Table, Text
from sqlalchemy.dialects.postgresql import JSONB
from sqlalchemy.sql import func

metadata = MetaData()

JSONDocument = JSON().with_variant(JSONB(), "postgresql")

verification_reports = Table(
    "verification_reports",
    metadata,
    Column("report_id", Text, primary_key=True),
    Column("created_at", DateTime(timezone=True), nullable=False, server_default=func.now()),
    Column("inequality", Text, nullable=False),
    Column("verdict", Text, nullable=False),
    Column("complex_hash", Text, nullable=False),
    Column("metric_hash", Text, nullable=False),
    Column("level", Integer, nullable=False),
    Column("request_key", Text, nullable=False, unique=True),
    Column("trace_id", Text, nullable=False),
    Column("report_version", Integer, nullable=False),
    Column("report_hash", Text, nullable=False),
    Column("report", JSONDocument, nullable=False),
    Index("ix_verification_reports_complex_hash", "complex_hash"),
    Index("ix_verification_reports_verdict", "verdict"),
)

optimization_traces = Table(
    "optimization_traces",
    metadata,
    Column("trace_id", Text, primary_key=True),
    Column("created_at", DateTime(timezone=True), nullable=False, server_default=func.now()),
    Column("complex_hash", Text, nullable=False),
    Column("seed", Integer, nullable=False),
    Column("best_ratio", Float, nullable=False),
    Column("certified_ratio", Float, nullable=False),
    Column("trace", JSONDocument, nullable=False),
    Index("ix_optimization_traces_complex_hash", "complex_hash"),
)
