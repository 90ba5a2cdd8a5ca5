"""The Appointment microservice: list, book and fetch appointment records.

Booking verifies the patient through the Patient microservice's REST API
(service-to-service, not straight to the FHIR server) before any upstream
create is attempted; a failed referential check therefore costs zero
Appointment POSTs.
"""

from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional, Tuple

import requests

from ..client import FhirClient, NotFound, ProtocolError, Rejected, RemoteError, Unreachable
from ..fhir import (
    Appointment,
    AppointmentParticipant,
    ID_PATTERN,
    ResourceRef,
    Violation,
    decode_resource,
    format_instant,
    now_utc,
    parse_instant,
    resource_to_json,
    validate,
)
from ..hops import HopLog
from ..repository import DocumentRepository
from ..transport import TransportUnreachable, http_request, timeout_seconds
from .errors import (
    PatientNotFound,
    RecordNotFound,
    UpstreamRejected,
    UpstreamUnavailable,
    ValidationFailed,
)

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


@dataclass
class AppointmentRecord:
    """One appointment plus the patient id it hangs off (denormalized from
    the first Patient participant)."""

    fhir_id: str
    resource: Appointment
    patient_fhir_id: str
    recorded_at: datetime

    def to_doc(self) -> Dict[str, Any]:
        return {
            "fhirId": self.fhir_id,
            "resource": resource_to_json(self.resource),
            "patientFhirId": self.patient_fhir_id,
            "recordedAt": format_instant(self.recorded_at),
        }

    @classmethod
    def from_doc(cls, doc: Dict[str, Any]) -> "AppointmentRecord":
        resource, _ = decode_resource(doc["resource"])
        return cls(
            fhir_id=doc["fhirId"],
            resource=resource,
            patient_fhir_id=doc["patientFhirId"],
            recorded_at=parse_instant(doc["recordedAt"]),
        )

    def to_view(self) -> Dict[str, Any]:
        return {
            "fhirId": self.fhir_id,
            "resource": resource_to_json(self.resource),
            "patientFhirId": self.patient_fhir_id,
            "recordedAt": format_instant(self.recorded_at),
        }


def first_patient_id(appt: Appointment) -> Optional[str]:
    for part in appt.patient_participants():
        return part.actor.target_id
    return None


def _sort_key(record: AppointmentRecord) -> Tuple[datetime, str]:
    start = record.resource.start
    return (start if isinstance(start, datetime) else _EPOCH, record.fhir_id)


class PatientDirectory:
    """Client for the Patient service's REST API; the referential check."""

    def __init__(
        self,
        base_url: str,
        timeout_ms: int = 5000,
        retry_count: int = 2,
        hop_log: Optional[HopLog] = None,
        caller: str = "appointment-service",
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.timeout_ms = timeout_ms
        self.retry_count = retry_count
        self.hop_log = hop_log
        self.caller = caller
        self.session = requests.Session()

    def get_patient(self, fhir_id: str) -> Optional[Dict[str, Any]]:
        """The record view, None when unknown; raises UpstreamUnavailable
        when the Patient service (or its upstream) cannot answer."""
        url = f"{self.base_url}/patients/{fhir_id}"
        try:
            response = http_request(
                self.session,
                "GET",
                url,
                timeout_s=timeout_seconds(self.timeout_ms),
                retry_count=self.retry_count,
                caller=self.caller,
                callee="patient-service",
                hop_log=self.hop_log,
            )
        except TransportUnreachable as exc:
            raise UpstreamUnavailable(f"patient service unreachable: {exc}") from None
        if response.status_code == 404:
            return None
        if response.status_code != 200:
            raise UpstreamUnavailable(
                f"patient service answered HTTP {response.status_code}"
            )
        try:
            view = response.json()
        except ValueError:
            raise UpstreamUnavailable("patient service returned non-JSON") from None
        return view if isinstance(view, dict) else None


def check_booking_form(
    patient_fhir_id: str, start: Any, end: Any
) -> Tuple[List[Violation], Optional[datetime], Optional[datetime]]:
    violations: List[Violation] = []
    if not patient_fhir_id or not ID_PATTERN.match(patient_fhir_id):
        violations.append(Violation("patientId", "must be a valid FHIR id"))

    def _coerce(value: Any, field: str) -> Optional[datetime]:
        if isinstance(value, datetime):
            if value.tzinfo is None:
                violations.append(Violation(field, "instant must carry a UTC offset"))
                return None
            return value
        if isinstance(value, str) and value:
            try:
                return parse_instant(value)
            except ValueError:
                violations.append(
                    Violation(field, "not a valid instant (RFC 3339 with offset)")
                )
                return None
        violations.append(Violation(field, "is required"))
        return None

    start_dt = _coerce(start, "start")
    end_dt = _coerce(end, "end")
    if start_dt is not None and end_dt is not None and end_dt <= start_dt:
        violations.append(Violation("end", "must be after start"))
    return violations, start_dt, end_dt


class AppointmentServiceCore:
    def __init__(
        self,
        connector: FhirClient,
        patients: PatientDirectory,
        repository: DocumentRepository,
        clock=now_utc,
    ) -> None:
        self.connector = connector
        self.patients = patients
        self.repository = repository
        self.clock = clock

    # -- repository plumbing -------------------------------------------------

    def _upsert(self, appt: Appointment) -> AppointmentRecord:
        assert appt.id is not None
        patient_id = first_patient_id(appt)
        assert patient_id is not None
        existing = self.repository.get(appt.id)
        resource_json = resource_to_json(appt)
        if existing is not None and existing.get("resource") == resource_json:
            return AppointmentRecord.from_doc(existing)
        record = AppointmentRecord(
            fhir_id=appt.id,
            resource=appt,
            patient_fhir_id=patient_id,
            recorded_at=self.clock(),
        )
        self.repository.put(record.fhir_id, record.to_doc())
        return record

    def _records(self) -> List[AppointmentRecord]:
        return [AppointmentRecord.from_doc(doc) for doc in self.repository.all()]

    # -- operations ----------------------------------------------------------

    def list_appointments(
        self,
        status: Optional[str] = None,
        patient_fhir_id: Optional[str] = None,
        date_from: Optional[datetime] = None,
        date_to: Optional[datetime] = None,
    ) -> Tuple[List[AppointmentRecord], bool]:
        params: List[Tuple[str, str]] = []
        if status:
            params.append(("status", status))
        if patient_fhir_id:
            params.append(("patient", f"Patient/{patient_fhir_id}"))
        if date_from is not None:
            params.append(("date", "ge" + format_instant(date_from)))
        if date_to is not None:
            params.append(("date", "le" + format_instant(date_to)))
        stale = False
        try:
            bundle = self.connector.search("Appointment", params)
        except (Unreachable, RemoteError, ProtocolError):
            stale = True
        else:
            for resource in bundle.match_resources():
                if (
                    isinstance(resource, Appointment)
                    and resource.id
                    and first_patient_id(resource)
                    and not validate(resource)
                ):
                    self._upsert(resource)
        records = [
            r
            for r in self._records()
            if self._matches(r, status, patient_fhir_id, date_from, date_to)
        ]
        records.sort(key=_sort_key)
        return records, stale

    @staticmethod
    def _matches(
        record: AppointmentRecord,
        status: Optional[str],
        patient_fhir_id: Optional[str],
        date_from: Optional[datetime],
        date_to: Optional[datetime],
    ) -> bool:
        appt = record.resource
        if status and appt.status != status:
            return False
        if patient_fhir_id:
            wanted = f"Patient/{patient_fhir_id}"
            if not any(
                p.actor is not None and p.actor.reference == wanted
                for p in appt.participant
            ):
                return False
        if date_from is not None or date_to is not None:
            if not isinstance(appt.start, datetime):
                return False
            if date_from is not None and appt.start < date_from:
                return False
            if date_to is not None and appt.start > date_to:
                return False
        return True

    def book_appointment(
        self,
        patient_fhir_id: str,
        specialty: Optional[str],
        start: Any,
        end: Any,
    ) -> AppointmentRecord:
        """Verify the patient, create the booked appointment upstream, record it.

        The referential check happens first; when it fails, no Appointment
        POST is ever issued and the repository stays untouched.
        """
        violations, start_dt, end_dt = check_booking_form(patient_fhir_id, start, end)
        if violations:
            raise ValidationFailed(violations)

        patient_view = self.patients.get_patient(patient_fhir_id)
        if patient_view is None:
            raise PatientNotFound(patient_fhir_id)
        display = _display_name_from_view(patient_view)

        delta_s = int((end_dt - start_dt).total_seconds())
        appt = Appointment(
            status="booked",
            specialty=(specialty or None),
            start=start_dt,
            end=end_dt,
            minutes_duration=delta_s // 60 if delta_s % 60 == 0 else None,
            participant=[
                AppointmentParticipant(
                    actor=ResourceRef(
                        reference=f"Patient/{patient_fhir_id}", display=display or None
                    ),
                    required="required",
                    status="accepted",
                )
            ],
        )
        leftover = validate(appt)
        if leftover:
            raise ValidationFailed(leftover)

        try:
            fhir_id, returned = self.connector.create(appt)
        except Rejected as exc:
            raise UpstreamRejected(exc.status, exc.outcome) from None
        except (Unreachable, RemoteError, ProtocolError) as exc:
            raise UpstreamUnavailable(str(exc)) from None

        stored = appt
        if (
            isinstance(returned, Appointment)
            and not validate(returned)
            and first_patient_id(returned)
        ):
            stored = returned
        stored.id = fhir_id
        return self._upsert(stored)

    def get_appointment(self, fhir_id: str) -> AppointmentRecord:
        doc = self.repository.get(fhir_id)
        if doc is not None:
            return AppointmentRecord.from_doc(doc)
        try:
            resource = self.connector.read("Appointment", fhir_id)
        except NotFound:
            raise RecordNotFound("Appointment", fhir_id) from None
        except (Unreachable, RemoteError, ProtocolError) as exc:
            raise UpstreamUnavailable(str(exc)) from None
        if (
            not isinstance(resource, Appointment)
            or validate(resource)
            or not first_patient_id(resource)
        ):
            raise UpstreamUnavailable(
                "upstream returned an unusable Appointment resource"
            )
        return self._upsert(resource)


def _display_name_from_view(view: Dict[str, Any]) -> str:
    resource = view.get("resource")
    if not isinstance(resource, dict):
        return ""
    for name in resource.get("name") or []:
        if not isinstance(name, dict):
            continue
        family = name.get("family")
        given = [g for g in name.get("given") or [] if isinstance(g, str)]
        parts = []
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


def create_appointment_app(core: AppointmentServiceCore, hop_log=None):
    from fastapi import Body, FastAPI, Query
    from fastapi.responses import JSONResponse

    from .web import STALE_HEADER, install_common_routes

    app = FastAPI(title="appointment-service", docs_url=None, redoc_url=None)
    app.state.core = core
    install_common_routes(app, "appointment-service", hop_log if hop_log is not None else HopLog())

    def _parse_bound(value: Optional[str], field: str) -> Optional[datetime]:
        if not value:
            return None
        try:
            return parse_instant(value)
        except ValueError:
            raise ValidationFailed(
                [Violation(field, "not a valid instant (RFC 3339 with offset)")]
            ) from None

    @app.get("/appointments")
    def list_appointments(
        status: Optional[str] = None,
        patient: Optional[str] = None,
        date_from: Optional[str] = Query(None, alias="from"),
        date_to: Optional[str] = Query(None, alias="to"),
    ) -> JSONResponse:
        patient_id = patient
        if patient_id and patient_id.startswith("Patient/"):
            patient_id = patient_id.split("/", 1)[1]
        records, stale = core.list_appointments(
            status=status,
            patient_fhir_id=patient_id,
            date_from=_parse_bound(date_from, "from"),
            date_to=_parse_bound(date_to, "to"),
        )
        headers = {STALE_HEADER: "true"} if stale else None
        return JSONResponse(content=[r.to_view() for r in records], headers=headers)

    @app.post("/appointments", status_code=201)
    def book(form: Dict[str, Any] = Body(...)) -> JSONResponse:
        specialty = form.get("specialty")
        record = core.book_appointment(
            patient_fhir_id=str(form.get("patientId") or ""),
            specialty=str(specialty) if specialty else None,
            start=form.get("start"),
            end=form.get("end"),
        )
        return JSONResponse(content=record.to_view(), status_code=201)

    @app.get("/appointments/{fhir_id}")
    def get_appointment(fhir_id: str) -> JSONResponse:
        return JSONResponse(content=core.get_appointment(fhir_id).to_view())

    return app
