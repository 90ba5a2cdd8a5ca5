"""Backend-for-frontend for the navigator UI.

Aggregates the Patient and Appointment services into navigator-shaped JSON
views and maps downstream failures into field-attributed, user-presentable
errors. Holds no state of its own: restarting it changes nothing downstream.
"""

import json
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Optional, Sequence, Tuple
from urllib.parse import urlencode

import requests

from ..hops import HopLog
from ..transport import TransportUnreachable, http_request
from .web import STALE_HEADER

DEFAULT_BUDGET_MS = 8000


class DownstreamUnavailable(Exception):
    def __init__(self, which: str):
        self.which = which
        super().__init__(f"{which} is unreachable")


class AllDownstreamUnavailable(Exception):
    pass


def _display_name(resource: Dict[str, Any]) -> str:
    for name in resource.get("name") or []:
        if not isinstance(name, dict):
            continue
        parts = []
        family = name.get("family")
        given = [g for g in name.get("given") or [] if isinstance(g, str)]
        if isinstance(family, str) and family:
            parts.append(family)
        if given:
            parts.append(" ".join(given))
        if parts:
            return ", ".join(parts)
        text = name.get("text")
        if isinstance(text, str) and text:
            return text
    return ""


def _issues_from_outcome(payload: Any) -> List[Dict[str, Any]]:
    if not isinstance(payload, dict):
        return []
    issues = payload.get("issue")
    return [i for i in issues if isinstance(i, dict)] if isinstance(issues, list) else []


def _fields_from_issues(issues: Sequence[Dict[str, Any]]) -> Dict[str, str]:
    """Service diagnostics are "<field>: <rule>"; split them back apart."""
    fields: Dict[str, str] = {}
    for issue in issues:
        diagnostics = issue.get("diagnostics")
        if not isinstance(diagnostics, str) or ":" not in diagnostics:
            continue
        field, _, message = diagnostics.partition(":")
        field = field.strip()
        if field and " " not in field and field not in fields:
            fields[field] = message.strip()
    return fields


class BffError(Exception):
    def __init__(
        self,
        status: int,
        message: str,
        issues: Optional[List[Dict[str, Any]]] = None,
        retriable: bool = False,
    ):
        self.status = status
        self.message = message
        self.issues = issues or []
        self.fields = _fields_from_issues(self.issues)
        self.retriable = retriable
        super().__init__(message)

    def payload(self) -> Dict[str, Any]:
        return {
            "error": {
                "message": self.message,
                "fields": self.fields,
                "issues": self.issues,
                "retriable": self.retriable,
            }
        }


class BffCore:
    def __init__(
        self,
        patient_base: str,
        appointment_base: str,
        budget_ms: int = DEFAULT_BUDGET_MS,
        hop_log: Optional[HopLog] = None,
    ) -> None:
        self.patient_base = patient_base.rstrip("/")
        self.appointment_base = appointment_base.rstrip("/")
        self.budget_ms = budget_ms
        self.hop_log = hop_log
        self._local = threading.local()

    def _session(self) -> requests.Session:
        # one session per worker thread; requests sessions aren't meant
        # to be driven from several threads at once
        session = getattr(self._local, "session", None)
        if session is None:
            session = requests.Session()
            self._local.session = session
        return session

    def _call(
        self,
        which: str,
        base: str,
        method: str,
        path: str,
        params: Optional[Sequence[Tuple[str, str]]] = None,
        json_body: Optional[Dict[str, Any]] = None,
    ) -> requests.Response:
        url = base + path
        if params:
            url += "?" + urlencode(list(params))
        body = None
        headers = {"Accept": "application/json"}
        if json_body is not None:
            body = json.dumps(json_body).encode("utf-8")
            headers["Content-Type"] = "application/json"
        try:
            return http_request(
                self._session(),
                method,
                url,
                timeout_s=self.budget_ms / 1000.0,
                retry_count=0,
                headers=headers,
                body=body,
                caller="nav-bff",
                callee=which,
                hop_log=self.hop_log,
            )
        except TransportUnreachable:
            raise DownstreamUnavailable(which) from None

    # -- reads ----------------------------------------------------------------

    def _fetch_patients(
        self, name: Optional[str]
    ) -> Tuple[List[Dict[str, Any]], bool]:
        params = [("name", name)] if name else None
        response = self._call(
            "patient-service", self.patient_base, "GET", "/patients", params
        )
        if response.status_code != 200:
            raise DownstreamUnavailable("patient-service")
        stale = response.headers.get(STALE_HEADER) == "true"
        records = response.json()
        return (records if isinstance(records, list) else []), stale

    def _fetch_appointments(
        self, status: Optional[str]
    ) -> Tuple[List[Dict[str, Any]], bool]:
        params = [("status", status)] if status else None
        response = self._call(
            "appointment-service", self.appointment_base, "GET", "/appointments", params
        )
        if response.status_code != 200:
            raise DownstreamUnavailable("appointment-service")
        stale = response.headers.get(STALE_HEADER) == "true"
        records = response.json()
        return (records if isinstance(records, list) else []), stale

    @staticmethod
    def _patient_row(record: Dict[str, Any]) -> Dict[str, Any]:
        resource = record.get("resource") or {}
        return {
            "fhirId": record.get("fhirId"),
            "displayName": _display_name(resource),
            "birthDate": resource.get("birthDate"),
            "gender": resource.get("gender"),
        }

    @staticmethod
    def _appointment_row(
        record: Dict[str, Any], names_by_id: Dict[str, str]
    ) -> Dict[str, Any]:
        resource = record.get("resource") or {}
        patient_id = record.get("patientFhirId")
        display = names_by_id.get(patient_id or "")
        if not display:
            # fall back to the participant display, then the raw reference
            for part in resource.get("participant") or []:
                actor = part.get("actor") if isinstance(part, dict) else None
                if isinstance(actor, dict):
                    reference = actor.get("reference") or ""
                    if reference.startswith("Patient/"):
                        display = actor.get("display") or reference
                        break
            display = display or f"Patient/{patient_id}"
        specialty = None
        raw_specialty = resource.get("specialty")
        if isinstance(raw_specialty, list) and raw_specialty:
            first = raw_specialty[0]
            if isinstance(first, dict):
                specialty = first.get("text")
        return {
            "fhirId": record.get("fhirId"),
            "patientFhirId": patient_id,
            "patientDisplayName": display,
            "specialty": specialty,
            "start": resource.get("start"),
            "end": resource.get("end"),
            "status": resource.get("status"),
        }

    def home(
        self, filter_name: Optional[str] = None, filter_status: Optional[str] = None
    ) -> Dict[str, Any]:
        """Composite navigator view; both downstream fetches run concurrently.

        One dead downstream degrades the view instead of failing it; only
        when neither service answers is the request hopeless.
        """
        with ThreadPoolExecutor(max_workers=2) as pool:
            patients_f = pool.submit(self._fetch_patients, filter_name)
            appointments_f = pool.submit(self._fetch_appointments, filter_status)
            patients_down = appointments_down = False
            patients: List[Dict[str, Any]] = []
            appointments: List[Dict[str, Any]] = []
            patients_stale = appointments_stale = False
            try:
                patients, patients_stale = patients_f.result()
            except DownstreamUnavailable:
                patients_down = True
            try:
                appointments, appointments_stale = appointments_f.result()
            except DownstreamUnavailable:
                appointments_down = True
        if patients_down and appointments_down:
            raise AllDownstreamUnavailable()

        patient_rows = [self._patient_row(r) for r in patients]
        names_by_id = {
            row["fhirId"]: row["displayName"]
            for row in patient_rows
            if row.get("fhirId") and row.get("displayName")
        }
        appointment_rows = [
            self._appointment_row(r, names_by_id) for r in appointments
        ]
        return {
            "patients": patient_rows,
            "appointments": appointment_rows,
            "degraded": patients_down
            or appointments_down
            or patients_stale
            or appointments_stale,
        }

    def patients_view(self, filter_name: Optional[str] = None) -> Dict[str, Any]:
        try:
            patients, stale = self._fetch_patients(filter_name)
        except DownstreamUnavailable:
            raise BffError(
                503, "patient service is unavailable, try again", retriable=True
            ) from None
        return {
            "patients": [self._patient_row(r) for r in patients],
            "degraded": stale,
        }

    def appointments_view(
        self,
        filter_status: Optional[str] = None,
    ) -> Dict[str, Any]:
        with ThreadPoolExecutor(max_workers=2) as pool:
            appointments_f = pool.submit(self._fetch_appointments, filter_status)
            patients_f = pool.submit(self._fetch_patients, None)
            try:
                appointments, stale = appointments_f.result()
            except DownstreamUnavailable:
                raise BffError(
                    503, "appointment service is unavailable, try again", retriable=True
                ) from None
            names_by_id: Dict[str, str] = {}
            degraded = stale
            try:
                patients, patients_stale = patients_f.result()
                degraded = degraded or patients_stale
                for record in patients:
                    row = self._patient_row(record)
                    if row.get("fhirId") and row.get("displayName"):
                        names_by_id[row["fhirId"]] = row["displayName"]
            except DownstreamUnavailable:
                degraded = True
        return {
            "appointments": [
                self._appointment_row(r, names_by_id) for r in appointments
            ],
            "degraded": degraded,
        }

    # -- writes ---------------------------------------------------------------

    def _forward_create(
        self,
        which: str,
        base: str,
        path: str,
        body: Dict[str, Any],
        unavailable_message: str,
    ) -> Dict[str, Any]:
        try:
            response = self._call(which, base, "POST", path, json_body=body)
        except DownstreamUnavailable:
            raise BffError(503, unavailable_message, retriable=True) from None
        if response.status_code == 201:
            record = response.json()
            return record if isinstance(record, dict) else {}
        try:
            payload = response.json()
        except ValueError:
            payload = None
        issues = _issues_from_outcome(payload)
        if response.status_code == 400:
            message = "the form has invalid fields"
        elif response.status_code == 404:
            message = "patient not found"
        elif response.status_code == 502:
            message = "the records server could not take the request, try again"
        else:
            message = f"downstream error (HTTP {response.status_code})"
        raise BffError(
            response.status_code,
            message,
            issues=issues,
            retriable=response.status_code in (502, 503),
        )

    def submit_registration(self, form: Dict[str, Any]) -> Dict[str, Any]:
        body = {
            "given": form.get("given"),
            "family": form.get("family"),
            "birthDate": form.get("birthDate"),
            "gender": form.get("gender"),
        }
        return self._forward_create(
            "patient-service",
            self.patient_base,
            "/patients",
            body,
            "registration could not reach the patient service, try again",
        )

    def submit_booking(self, form: Dict[str, Any]) -> Dict[str, Any]:
        body = {
            "patientId": form.get("patientId"),
            "specialty": form.get("specialty"),
            "start": form.get("start"),
            "end": form.get("end"),
        }
        return self._forward_create(
            "appointment-service",
            self.appointment_base,
            "/appointments",
            body,
            "booking could not reach the appointment service, try again",
        )


def create_bff_app(core: BffCore, hop_log=None, ui_origin: str = "*"):
    from fastapi import Body, FastAPI, Query, Request
    from fastapi.middleware.cors import CORSMiddleware
    from fastapi.responses import JSONResponse

    from .web import install_common_routes

    app = FastAPI(title="nav-bff", docs_url=None, redoc_url=None)
    app.state.core = core
    install_common_routes(app, "nav-bff", hop_log if hop_log is not None else HopLog())
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[ui_origin] if ui_origin != "*" else ["*"],
        allow_methods=["GET", "POST"],
        allow_headers=["Content-Type"],
    )

    @app.exception_handler(BffError)
    async def bff_error(request: Request, exc: BffError) -> JSONResponse:
        return JSONResponse(content=exc.payload(), status_code=exc.status)

    @app.exception_handler(AllDownstreamUnavailable)
    async def all_down(request: Request, exc: AllDownstreamUnavailable) -> JSONResponse:
        return JSONResponse(
            content=BffError(
                503, "both downstream services are unavailable", retriable=True
            ).payload(),
            status_code=503,
        )

    @app.get("/nav/home")
    def home(
        name: Optional[str] = Query(None), status: Optional[str] = Query(None)
    ) -> Dict[str, Any]:
        return core.home(name, status)

    @app.get("/nav/patients")
    def patients(name: Optional[str] = Query(None)) -> Dict[str, Any]:
        return core.patients_view(name)

    @app.get("/nav/appointments")
    def appointments(status: Optional[str] = Query(None)) -> Dict[str, Any]:
        return core.appointments_view(status)

    @app.post("/nav/patients", status_code=201)
    def register(form: Dict[str, Any] = Body(...)) -> JSONResponse:
        return JSONResponse(content=core.submit_registration(form), status_code=201)

    @app.post("/nav/appointments", status_code=201)
    def book(form: Dict[str, Any] = Body(...)) -> JSONResponse:
        return JSONResponse(content=core.submit_booking(form), status_code=201)

    return app
