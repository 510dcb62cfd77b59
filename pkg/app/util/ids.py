from __future__ import annotations

import uuid

import ulid


def new_report_id() -> str:
    return f"rep_{ulid.new().str}"


def new_run_id() -> str:
    return f"trc_{ulid.new().str}"


def new_trace_id() -> str:
    return str(uuid.uuid4())
