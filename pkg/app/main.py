from __future__ import annotations

import json
import logging
from typing import Any, Dict, Optional, Type, TypeVar

from fastapi import Depends, FastAPI, Header, HTTPException, Request, status
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ValidationError
from sqlalchemy.exc import SQLAlchemyError

from app.config import Settings, settings as default_settings
from app.errors import SchemaError, SystolicError, build_error_payload
from app.generators import generate
from app.models.documents import GeneratorSpec, OptimizationRequest, VerificationRequest
from app.models.reports import TraceSummary, VerificationReport
from app.optimizer import OptimizerConfig, optimize_metric
from app.serialization import complex_hash, metric_document, parse_document
from app.storage.db import (
    check_db,
    create_db_engine,
    get_report,
    get_report_by_request_key,
    get_trace,
    insert_report,
    insert_trace,
)
from app.util.hashing import canonical_json, sha256_hex
from app.util.ids import new_report_id, new_run_id, new_trace_id
from app.verification import verify

logger = logging.getLogger("systolic")

ModelT = TypeVar("ModelT", bound=BaseModel)


def build_error_response(
    *,
    status_code: int,
    code: str,
    message: str,
    details: Optional[Dict[str, Any]] = None,
) -> JSONResponse:
    return JSONResponse(status_code=status_code, content={"error": build_error_payload(code, message, details)})


def compute_request_key(payload: Dict[str, Any]) -> str:
    return sha256_hex(canonical_json(payload))


async def read_model(request: Request, model: Type[ModelT]) -> tuple[Dict[str, Any], ModelT]:
    try:
        payload = json.loads(await request.body())
    except json.JSONDecodeError as exc:
        raise SchemaError("malformed JSON", details={"pointer": "", "line": exc.lineno, "column": exc.colno}) from exc
    if not isinstance(payload, dict):
        raise SchemaError("payload must be a JSON object", details={"pointer": ""})
    try:
        return payload, model.model_validate(payload)
    except ValidationError as exc:
        first = exc.errors()[0]
        pointer = "/" + "/".join(str(part) for part in first.get("loc", ()))
        raise SchemaError(first.get("msg", "invalid payload"), details={"pointer": pointer}) from exc


def create_app(app_settings: Settings | None = None) -> FastAPI:
    app_settings = app_settings or default_settings
    app = FastAPI(title="systolic")
    app.state.settings = app_settings
    app.state.engine = create_db_engine(app_settings.database_url)

    @app.exception_handler(SystolicError)
    async def handle_systolic_error(_: Request, exc: SystolicError) -> JSONResponse:
        status_code = status.HTTP_400_BAD_REQUEST if isinstance(exc, SchemaError) else 422
        logger.info("request_rejected code=%s message=%s", exc.code, exc.message)
        return build_error_response(status_code=status_code, code=exc.code, message=exc.message, details=exc.details)

    @app.exception_handler(SQLAlchemyError)
    async def handle_store_error(_: Request, exc: SQLAlchemyError) -> JSONResponse:
        logger.exception("report_store_failed")
        return build_error_response(
            status_code=status.HTTP_503_SERVICE_UNAVAILABLE, code="STORE_UNAVAILABLE", message="Report store unavailable"
        )

    def get_settings() -> Settings:
        return app.state.settings

    def require_bearer(
        authorization: str | None = Header(default=None),
        settings: Settings = Depends(get_settings),
    ) -> None:
        if not settings.service_token:
            return
        if not authorization:
            raise HTTPException(status_code=status.HTTP_401_UNAUTHORIZED, detail="Missing bearer token")
        try:
            scheme, token = authorization.split(" ", 1)
        except ValueError:
            raise HTTPException(status_code=status.HTTP_401_UNAUTHORIZED, detail="Invalid authorization header")
        if scheme.lower() != "bearer" or token != settings.service_token:
            raise HTTPException(status_code=status.HTTP_401_UNAUTHORIZED, detail="Invalid bearer token")

    def check_level(level: int, settings: Settings) -> None:
        if level > settings.max_level:
            raise SystolicError(
                "refinement level too large",
                code="INVALID_PARAMETERS",
                details={"level": level, "max_level": settings.max_level},
            )

    @app.get("/health")
    def health() -> Dict[str, str]:
        try:
            check_db(app.state.engine)
        except Exception:
            raise HTTPException(status_code=status.HTTP_503_SERVICE_UNAVAILABLE, detail="Database unavailable")
        return {"status": "ok"}

    @app.get("/version")
    def version(settings: Settings = Depends(get_settings)) -> Dict[str, Any]:
        return {
            "version": settings.version,
            "git_sha": settings.git_sha,
            "report_version": settings.report_version,
        }

    @app.post("/v1/generate")
    async def generate_complex(request: Request, _: None = Depends(require_bearer)) -> Dict[str, Any]:
        _, spec = await read_model(request, GeneratorSpec)
        mc = generate(spec)
        return {"complex": metric_document(mc), "complex_hash": complex_hash(mc.complex)}

    @app.post("/v1/verifications", response_model=VerificationReport)
    async def create_verification(
        request: Request,
        _: None = Depends(require_bearer),
        settings: Settings = Depends(get_settings),
    ) -> VerificationReport:
        payload, body = await read_model(request, VerificationRequest)
        check_level(body.level, settings)
        request_key = compute_request_key(payload)
        existing = get_report_by_request_key(app.state.engine, request_key)
        if existing:
            logger.info("verification_replayed report_id=%s", existing["report_id"])
            return VerificationReport.model_validate(existing["report"])

        doc = parse_document(payload["complex"])
        alpha = None
        if body.cocycle is not None:
            alpha = doc.cochains.get(body.cocycle)
            if alpha is None:
                raise SchemaError("unknown cochain", details={"pointer": f"/complex/cochains/{body.cocycle}"})
        report = verify(doc.metric_complex, body.inequality, level=body.level, radii=body.radii, alpha=alpha)
        report = report.model_copy(update={"report_id": new_report_id(), "trace_id": new_trace_id()})
        row, created = insert_report(app.state.engine, request_key=request_key, report=report.model_dump(mode="json"))
        logger.info(
            "verification_stored report_id=%s inequality=%s verdict=%s created=%s",
            row["report_id"],
            row["inequality"],
            row["verdict"],
            created,
        )
        return VerificationReport.model_validate(row["report"])

    @app.get("/v1/verifications/{report_id}", response_model=VerificationReport)
    def get_verification(report_id: str, _: None = Depends(require_bearer)) -> VerificationReport:
        row = get_report(app.state.engine, report_id)
        if not row:
            raise HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail="Report not found")
        return VerificationReport.model_validate(row["report"])

    @app.post("/v1/optimizations", response_model=TraceSummary)
    async def create_optimization(
        request: Request,
        _: None = Depends(require_bearer),
        settings: Settings = Depends(get_settings),
    ) -> TraceSummary:
        payload, body = await read_model(request, OptimizationRequest)
        check_level(body.config.level, settings)
        doc = parse_document(payload["complex"])
        config = OptimizerConfig.from_settings(**body.config.model_dump())
        trace = optimize_metric(doc.metric_complex, config)
        summary = trace.to_summary(run_id=new_run_id())
        row = insert_trace(app.state.engine, summary=summary.model_dump(mode="json"))
        logger.info("optimization_stored trace_id=%s best_ratio=%s", row["trace_id"], row["best_ratio"])
        return summary

    @app.get("/v1/optimizations/{trace_id}", response_model=TraceSummary)
    def get_optimization(trace_id: str, _: None = Depends(require_bearer)) -> TraceSummary:
        row = get_trace(app.state.engine, trace_id)
        if not row:
            raise HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail="Trace not found")
        return TraceSummary.model_validate(row["trace"])

    return app


app = create_app()
