from __future__ import annotations

from alembic import op
import sqlalchemy as sa
from sqlalchemy.dialects import postgresql

revision = "0001_create_report_store"
down_revision = None
branch_labels = None
depends_on = None

JSON_DOCUMENT = sa.JSON().with_variant(postgresql.JSONB(astext_type=sa.Text()), "postgresql")


def upgrade() -> None:
    op.create_table(
        "verification_reports",
        sa.Column("report_id", sa.Text(), primary_key=True),
        sa.Column("created_at", sa.DateTime(timezone=True), nullable=False, server_default=sa.func.now()),
        sa.Column("inequality", sa.Text(), nullable=False),
        sa.Column("verdict", sa.Text(), nullable=False),
        sa.Column("complex_hash", sa.Text(), nullable=False),
        sa.Column("metric_hash", sa.Text(), nullable=False),
        sa.Column("level", sa.Integer(), nullable=False),
        sa.Column("request_key", sa.Text(), nullable=False, unique=True),
        sa.Column("trace_id", sa.Text(), nullable=False),
        sa.Column("report_version", sa.Integer(), nullable=False),
        sa.Column("report_hash", sa.Text(), nullable=False),
        sa.Column("report", JSON_DOCUMENT, nullable=False),
    )
    op.create_index("ix_verification_reports_complex_hash", "verification_reports", ["complex_hash"])
    op.create_index("ix_verification_reports_verdict", "verification_reports", ["verdict"])

    op.create_table(
        "optimization_traces",
        sa.Column("trace_id", sa.Text(), primary_key=True),
        sa.Column("created_at", sa.DateTime(timezone=True), nullable=False, server_default=sa.func.now()),
        sa.Column("complex_hash", sa.Text(), nullable=False),
        sa.Column("seed", sa.Integer(), nullable=False),
        sa.Column("best_ratio", sa.Float(), nullable=False),
        sa.Column("certified_ratio", sa.Float(), nullable=False),
        sa.Column("trace", JSON_DOCUMENT, nullable=False),
    )
    op.create_index("ix_optimization_traces_complex_hash", "optimization_traces", ["complex_hash"])


def downgrade() -> None:
    op.drop_index("ix_optimization_traces_complex_hash", table_name="optimization_traces")
    op.drop_table("optimization_traces")
    op.drop_index("ix_verification_reports_verdict", table_name="verification_reports")
    op.drop_index("ix_verification_reports_complex_hash", table_name="verification_reports")
    op.drop_table("verification_reports")
