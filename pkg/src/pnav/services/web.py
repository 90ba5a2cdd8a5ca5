"""Shared REST plumbing for the microservices.

Keeps the controllers thin: OperationOutcome error responses, the health
probe and the hop-log instrumentation endpoints the harness uses to
reconstruct scenario traces. Routes are sync functions so slow upstream
calls run on the threadpool instead of blocking the event loop.
"""

from typing import Any, Dict, Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from starlette.exceptions import HTTPException as StarletteHTTPException

from ..fhir import FHIR_JSON_MEDIA_TYPE, outcome, resource_to_json
from ..hops import HopLog
from .errors import ServiceError

STALE_HEADER = "X-Degraded"


def outcome_response(
    status: int, body: Any, headers: Optional[Dict[str, str]] = None
) -> Response:
    return JSONResponse(
        content=resource_to_json(body),
        status_code=status,
        headers=headers,
        media_type=FHIR_JSON_MEDIA_TYPE,
    )


def service_error_response(error: ServiceError) -> Response:
    return outcome_response(error.status, error.to_outcome())


def install_common_routes(app: FastAPI, service_name: str, hop_log: HopLog) -> None:
    @app.get("/health")
    def health() -> Dict[str, str]:
        return {"status": "ok", "service": service_name}

    @app.get("/_hops")
    def hops() -> Dict[str, Any]:
        return {
            "service": service_name,
            "hops": [h.to_dict() for h in hop_log.snapshot()],
        }

    @app.post("/_hops/reset")
    def reset_hops() -> Dict[str, str]:
        hop_log.reset()
        return {"status": "reset"}

    @app.exception_handler(StarletteHTTPException)
    async def http_error(request: Request, exc: StarletteHTTPException) -> Response:
        code = "not-found" if exc.status_code == 404 else "processing"
        return outcome_response(
            exc.status_code, outcome("error", code, str(exc.detail))
        )

    @app.exception_handler(RequestValidationError)
    async def invalid_body(request: Request, exc: RequestValidationError) -> Response:
        return outcome_response(
            400, outcome("error", "structure", "request body must be a JSON object")
        )

    @app.exception_handler(ServiceError)
    async def service_error(request: Request, exc: ServiceError) -> Response:
        return service_error_response(exc)

    @app.exception_handler(Exception)
    async def unexpected(request: Request, exc: Exception) -> Response:
        return outcome_response(
            500, outcome("fatal", "exception", f"{type(exc).__name__}: {exc}")
        )
