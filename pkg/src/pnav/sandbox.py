"""Minimal in-process FHIR R4 server.

Stands in for the hosted sandbox the services talk to, so the whole suite
runs with no external dependency. Supports create (POST /{type}), read
(GET /{type}/{id}) and search (GET /{type}?...) for Patient and Appointment,
with sequential decimal ids and searchset paging via next links.
"""

import threading
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from typing import Any, Dict, List, Optional, Sequence, Tuple

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response

from .fhir import (
    FHIR_JSON_MEDIA_TYPE,
    Appointment,
    Bundle,
    InvariantViolation,
    MalformedJson,
    Patient,
    UnknownResourceType,
    make_searchset,
    outcome,
    outcome_from_violations,
    parse_fhir_date,
    parse_instant,
    parse_resource,
    resource_to_json,
    validate,
)
from .fhir.searchset import COUNT_PARAM, PAGE_PARAM, PageOutOfRange

STORED_TYPES = ("Patient", "Appointment")
DEFAULT_PAGE_SIZE = 20


class SeedError(Exception):
    pass


class SearchParamError(Exception):
    def __init__(self, param: str, reason: str):
        self.param = param
        self.reason = reason
        super().__init__(f"{param}: {reason}")


class ResourceStore:
    """Per-type id -> (resource, version) map with linearizable id assignment.

    The counter only moves forward; an id is never reissued, and under any
    concurrent create schedule the final counter equals the number of
    successful creates.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._data: Dict[str, Dict[str, Tuple[Any, int]]] = {
            t: {} for t in STORED_TYPES
        }
        self._counters: Dict[str, int] = {t: 0 for t in STORED_TYPES}

    def create(self, resource_type: str, resource: Any) -> str:
        with self._lock:
            self._counters[resource_type] += 1
            assigned = str(self._counters[resource_type])
            resource.id = assigned
            self._data[resource_type][assigned] = (resource, 1)
            return assigned

    def put_seeded(self, resource_type: str, resource: Any) -> str:
        """Insert a seed resource honoring its embedded id (REST create never does)."""
        with self._lock:
            resource_id = resource.id
            if resource_id is None:
                self._counters[resource_type] += 1
                resource_id = str(self._counters[resource_type])
                resource.id = resource_id
            elif resource_id in self._data[resource_type]:
                raise SeedError(f"duplicate seed id {resource_type}/{resource_id}")
            elif resource_id.isdigit():
                self._counters[resource_type] = max(
                    self._counters[resource_type], int(resource_id)
                )
            self._data[resource_type][resource_id] = (resource, 1)
            return resource_id

    def get(self, resource_type: str, resource_id: str) -> Optional[Any]:
        with self._lock:
            entry = self._data[resource_type].get(resource_id)
            return entry[0] if entry else None

    def list(self, resource_type: str) -> List[Any]:
        with self._lock:
            return [resource for resource, _ in self._data[resource_type].values()]

    def counter(self, resource_type: str) -> int:
        with self._lock:
            return self._counters[resource_type]

    def count(self, resource_type: str) -> int:
        with self._lock:
            return len(self._data[resource_type])

    def clear(self) -> None:
        with self._lock:
            for t in STORED_TYPES:
                self._data[t].clear()
                self._counters[t] = 0


# ---------------------------------------------------------------------------
# search filtering; semantics mirror the supported-parameter list exactly
# ---------------------------------------------------------------------------


def patient_matches(patient: Patient, param: str, value: str) -> bool:
    if param == "_id":
        return patient.id == value
    if param == "name":
        needle = value.casefold()
        for name in patient.name:
            if name.family and needle in name.family.casefold():
                return True
            if any(needle in g.casefold() for g in name.given):
                return True
        return False
    raise KeyError(param)


def _date_bounds(param_value: str) -> Tuple[str, datetime]:
    prefix, rest = param_value[:2], param_value[2:]
    if prefix not in ("ge", "le"):
        raise SearchParamError("date", f"unsupported prefix in {param_value!r}")
    try:
        instant = parse_instant(rest)
        return prefix, instant
    except ValueError:
        pass
    try:
        day = parse_fhir_date(rest)
    except ValueError:
        raise SearchParamError("date", f"unparseable date in {param_value!r}") from None
    midnight = datetime(day.year, day.month, day.day, tzinfo=timezone.utc)
    if prefix == "ge":
        return "ge", midnight
    # le over a whole day: anything before the next midnight
    return "lt", midnight + timedelta(days=1)


def appointment_matches(appt: Appointment, param: str, value: str) -> bool:
    if param == "_id":
        return appt.id == value
    if param == "status":
        return appt.status == value
    if param == "patient":
        return any(
            p.actor is not None and p.actor.reference == value
            for p in appt.participant
        )
    if param == "date":
        if not isinstance(appt.start, datetime):
            return False
        op, bound = _date_bounds(value)
        if op == "ge":
            return appt.start >= bound
        if op == "le":
            return appt.start <= bound
        return appt.start < bound
    raise KeyError(param)


_MATCHERS = {"Patient": patient_matches, "Appointment": appointment_matches}


def filter_store_snapshot(
    resources: Sequence[Any], resource_type: str, params: Sequence[Tuple[str, str]]
) -> List[Any]:
    """Brute-force AND filter; unknown parameters are silently ignored."""
    matcher = _MATCHERS[resource_type]
    if resource_type == "Appointment":
        for param, value in params:
            if param == "date":
                _date_bounds(value)  # malformed prefixes fail even on empty stores
    kept = []
    for resource in resources:
        ok = True
        for param, value in params:
            if param in (PAGE_PARAM, COUNT_PARAM):
                continue
            try:
                if not matcher(resource, param, value):
                    ok = False
                    break
            except KeyError:
                continue
        if ok:
            kept.append(resource)
    return kept


@dataclass
class SandboxResponse:
    status: int
    payload: Optional[Dict[str, Any]]
    headers: Dict[str, str]


class SandboxCore:
    """Request handling, independent of the HTTP framework wrapper."""

    def __init__(self, store: Optional[ResourceStore] = None) -> None:
        self.store = store or ResourceStore()
        self._count_lock = threading.Lock()
        self.request_counts: Dict[Tuple[str, str], int] = {}

    def _bump(self, method: str, resource_type: str) -> None:
        with self._count_lock:
            key = (method, resource_type)
            self.request_counts[key] = self.request_counts.get(key, 0) + 1

    @staticmethod
    def _unsupported(resource_type: str) -> SandboxResponse:
        return SandboxResponse(
            404,
            resource_to_json(
                outcome(
                    "error", "not-supported", f"unsupported resource type: {resource_type}"
                )
            ),
            {},
        )

    def handle_create(
        self, resource_type: str, body: bytes, base_url: str
    ) -> SandboxResponse:
        self._bump("POST", resource_type)
        if resource_type not in STORED_TYPES:
            return self._unsupported(resource_type)
        try:
            resource = parse_resource(body.decode("utf-8"))
        except MalformedJson as exc:
            return SandboxResponse(
                400,
                resource_to_json(outcome("error", "structure", f"malformed JSON: {exc}")),
                {},
            )
        except UnknownResourceType as exc:
            return SandboxResponse(
                400,
                resource_to_json(
                    outcome(
                        "error",
                        "structure",
                        f"resourceType: missing or unsupported ({exc.resource_type!r})",
                    )
                ),
                {},
            )
        except InvariantViolation as exc:
            return SandboxResponse(
                400, resource_to_json(outcome_from_violations(exc.violations)), {}
            )
        if resource.resource_type != resource_type:
            return SandboxResponse(
                400,
                resource_to_json(
                    outcome(
                        "error",
                        "invariant",
                        f"resourceType: must be {resource_type!r} on this endpoint",
                    )
                ),
                {},
            )
        resource.id = None  # the server owns id assignment
        assigned = self.store.create(resource_type, resource)
        location = f"{base_url.rstrip('/')}/{resource_type}/{assigned}"
        return SandboxResponse(
            201, resource_to_json(resource), {"Location": location}
        )

    def handle_read(self, resource_type: str, resource_id: str) -> SandboxResponse:
        self._bump("GET", resource_type)
        if resource_type not in STORED_TYPES:
            return self._unsupported(resource_type)
        resource = self.store.get(resource_type, resource_id)
        if resource is None:
            return SandboxResponse(
                404,
                resource_to_json(
                    outcome(
                        "error", "not-found", f"{resource_type}/{resource_id} not found"
                    )
                ),
                {},
            )
        return SandboxResponse(200, resource_to_json(resource), {})

    def handle_search(
        self,
        resource_type: str,
        params: Sequence[Tuple[str, str]],
        base_url: str,
        search_url: Optional[str] = None,
    ) -> SandboxResponse:
        self._bump("GET", resource_type)
        if resource_type not in STORED_TYPES:
            return self._unsupported(resource_type)

        page_size = DEFAULT_PAGE_SIZE
        page_index = 0
        for param, value in params:
            if param == COUNT_PARAM:
                try:
                    page_size = max(1, int(value))
                except ValueError:
                    pass
            elif param == PAGE_PARAM:
                try:
                    page_index = max(0, int(value))
                except ValueError:
                    pass

        snapshot = self.store.list(resource_type)
        try:
            matches = filter_store_snapshot(snapshot, resource_type, params)
        except SearchParamError as exc:
            return SandboxResponse(
                400, resource_to_json(outcome("error", "invalid", str(exc))), {}
            )
        try:
            bundle = make_searchset(
                matches, base_url, page_size, page_index, search_url=search_url
            )
        except PageOutOfRange as exc:
            return SandboxResponse(
                400, resource_to_json(outcome("error", "invalid", str(exc))), {}
            )
        return SandboxResponse(200, resource_to_json(bundle), {})

    def load_seed(self, path: str) -> int:
        """Load a collection bundle of seed resources; returns how many."""
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise SeedError(f"cannot read seed file {path}: {exc}") from None
        try:
            bundle = parse_resource(text)
        except (MalformedJson, UnknownResourceType, InvariantViolation) as exc:
            raise SeedError(f"seed file {path} is not valid: {exc}") from None
        if not isinstance(bundle, Bundle) or bundle.type != "collection":
            raise SeedError(f"seed file {path} must be a collection bundle")
        loaded = 0
        for i, entry in enumerate(bundle.entry):
            resource = entry.resource
            if resource is None:
                continue
            if not isinstance(resource, (Patient, Appointment)):
                raise SeedError(f"seed entry[{i}] has an unsupported resource type")
            violations = validate(resource)
            if violations:
                raise SeedError(f"seed entry[{i}] is invalid: {violations[0]}")
            self.store.put_seeded(resource.resource_type, resource)
            loaded += 1
        return loaded


def _fhir_response(result: SandboxResponse) -> Response:
    return JSONResponse(
        content=result.payload,
        status_code=result.status,
        headers=result.headers,
        media_type=FHIR_JSON_MEDIA_TYPE,
    )


def create_sandbox_app(core: SandboxCore, base_path: str = "") -> FastAPI:
    """HTTP wrapper over a SandboxCore; base_path prefixes the FHIR routes."""
    from starlette.exceptions import HTTPException as StarletteHTTPException

    base_path = base_path.rstrip("/")
    app = FastAPI(title="fhir-sandbox", docs_url=None, redoc_url=None)
    app.state.core = core

    def request_base(request: Request) -> str:
        return f"{request.url.scheme}://{request.url.netloc}{base_path}"

    # every error leaving this server is an OperationOutcome
    @app.exception_handler(StarletteHTTPException)
    async def route_error(request: Request, exc: StarletteHTTPException) -> Response:
        return _fhir_response(
            SandboxResponse(
                exc.status_code,
                resource_to_json(outcome("error", "not-found", str(exc.detail))),
                {},
            )
        )

    @app.exception_handler(Exception)
    async def unexpected(request: Request, exc: Exception) -> Response:
        return _fhir_response(
            SandboxResponse(
                500,
                resource_to_json(
                    outcome("fatal", "exception", f"{type(exc).__name__}: {exc}")
                ),
                {},
            )
        )

    @app.get("/health")
    def health() -> Dict[str, str]:
        return {"status": "ok", "service": "sandbox"}

    @app.post(base_path + "/{resource_type}")
    async def create(resource_type: str, request: Request) -> Response:
        body = await request.body()
        return _fhir_response(
            core.handle_create(resource_type, body, request_base(request))
        )

    @app.get(base_path + "/{resource_type}/{resource_id}")
    def read(resource_type: str, resource_id: str) -> Response:
        return _fhir_response(core.handle_read(resource_type, resource_id))

    @app.get(base_path + "/{resource_type}")
    def search(resource_type: str, request: Request) -> Response:
        params = [(k, v) for k, v in request.query_params.multi_items()]
        return _fhir_response(
            core.handle_search(
                resource_type, params, request_base(request), str(request.url)
            )
        )

    return app
