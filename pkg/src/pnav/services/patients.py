"""The Patient microservice: list, register and fetch patient records.

Built from the four chassis components: the resource model, this controller
core, the FHIR client connector and a document repository. The controller
never touches the network or the store directly beyond those two
collaborators, which is what keeps degraded mode and the no-orphan rule easy
to reason about.
"""

import uuid
from dataclasses import dataclass
from datetime import date, datetime
from typing import Any, Dict, List, Optional, Tuple

from ..client import FhirClient, NotFound, ProtocolError, Rejected, RemoteError, Unreachable
from ..fhir import (
    GENDERS,
    HumanName,
    Patient,
    Violation,
    decode_resource,
    now_utc,
    parse_fhir_date,
    parse_instant,
    format_instant,
    resource_to_json,
    validate,
)
from ..repository import DocumentRepository
from .errors import (
    RecordNotFound,
    UpstreamRejected,
    UpstreamUnavailable,
    ValidationFailed,
)

ORIGIN_UPSTREAM = "upstream"
ORIGIN_LOCAL_CREATE = "local-create"


@dataclass
class PatientRecord:
    """One patient as this service knows it.

    local_id is the repository's private key and never leaves the service;
    callers identify records by the upstream FHIR id.
    """

    local_id: str
    fhir_id: str
    resource: Patient
    recorded_at: datetime
    origin: str

    def to_doc(self) -> Dict[str, Any]:
        return {
            "localId": self.local_id,
            "fhirId": self.fhir_id,
            "resource": resource_to_json(self.resource),
            "recordedAt": format_instant(self.recorded_at),
            "origin": self.origin,
        }

    @classmethod
    def from_doc(cls, doc: Dict[str, Any]) -> "PatientRecord":
        resource, _ = decode_resource(doc["resource"])
        return cls(
            local_id=doc["localId"],
            fhir_id=doc["fhirId"],
            resource=resource,
            recorded_at=parse_instant(doc["recordedAt"]),
            origin=doc["origin"],
        )

    def to_view(self) -> Dict[str, Any]:
        return {
            "fhirId": self.fhir_id,
            "resource": resource_to_json(self.resource),
            "recordedAt": format_instant(self.recorded_at),
            "origin": self.origin,
        }


def _sort_key(record: PatientRecord) -> Tuple[str, str, str]:
    family = ""
    given = ""
    if record.resource.name:
        first = record.resource.name[0]
        family = (first.family or "").casefold()
        given = " ".join(first.given).casefold()
    return (family, given, record.fhir_id)


def name_matches(patient: Patient, needle: str) -> bool:
    """Same substring semantics the upstream search applies."""
    folded = needle.casefold()
    for name in patient.name:
        if name.family and folded in name.family.casefold():
            return True
        if any(folded in g.casefold() for g in name.given):
            return True
    return False


def check_registration_form(
    given: str, family: str, birth_date: Any, gender: str
) -> Tuple[List[Violation], Optional[date]]:
    """Field-level validation of the registration form, collect-all."""
    violations: List[Violation] = []
    if not (given or "").strip() and not (family or "").strip():
        violations.append(Violation("given", "given or family must be non-empty"))
    parsed: Optional[date] = None
    if isinstance(birth_date, date):
        parsed = birth_date
    elif isinstance(birth_date, str) and birth_date:
        try:
            parsed = parse_fhir_date(birth_date)
        except ValueError:
            violations.append(Violation("birthDate", "invalid calendar date"))
    elif not birth_date:
        violations.append(Violation("birthDate", "is required"))
    else:
        violations.append(Violation("birthDate", "invalid calendar date"))
    if parsed is not None and parsed > date.today():
        violations.append(Violation("birthDate", "must not be in the future"))
    if gender not in GENDERS:
        violations.append(
            Violation("gender", "must be one of " + ", ".join(GENDERS))
        )
    return violations, parsed


class PatientServiceCore:
    def __init__(
        self,
        connector: FhirClient,
        repository: DocumentRepository,
        clock=now_utc,
    ) -> None:
        self.connector = connector
        self.repository = repository
        self.clock = clock

    # -- repository plumbing -------------------------------------------------

    def _upsert(self, patient: Patient, origin: str) -> PatientRecord:
        """Store upstream truth; a no-op when the resource is unchanged,
        so repeated listings leave the repository byte-identical."""
        assert patient.id is not None
        existing_doc = self.repository.get(patient.id)
        resource_json = resource_to_json(patient)
        if existing_doc is not None and existing_doc.get("resource") == resource_json:
            return PatientRecord.from_doc(existing_doc)
        record = PatientRecord(
            local_id=existing_doc["localId"] if existing_doc else uuid.uuid4().hex,
            fhir_id=patient.id,
            resource=patient,
            recorded_at=self.clock(),
            origin=origin,
        )
        self.repository.put(record.fhir_id, record.to_doc())
        return record

    def _records(self) -> List[PatientRecord]:
        return [PatientRecord.from_doc(doc) for doc in self.repository.all()]

    # -- operations ----------------------------------------------------------

    def list_patients(
        self, name: Optional[str] = None
    ) -> Tuple[List[PatientRecord], bool]:
        """Merged repository view, refreshed from upstream when reachable.

        Returns (records, stale); stale means upstream could not be asked and
        the listing is served from what the repository already had.
        """
        params = [("name", name)] if name else []
        stale = False
        try:
            bundle = self.connector.search("Patient", params)
        except (Unreachable, RemoteError, ProtocolError):
            stale = True
        else:
            for resource in bundle.match_resources():
                if (
                    isinstance(resource, Patient)
                    and resource.id
                    and not validate(resource)
                ):
                    self._upsert(resource, ORIGIN_UPSTREAM)
        records = self._records()
        if name:
            records = [r for r in records if name_matches(r.resource, name)]
        records.sort(key=_sort_key)
        return records, stale

    def register_patient(
        self, given: str, family: str, birth_date: Any, gender: str
    ) -> PatientRecord:
        """Compose a Patient, create it upstream, then record it locally.

        Nothing is persisted unless the upstream answered 201, so a failed
        registration leaves the repository untouched.
        """
        violations, parsed_birth = check_registration_form(
            given, family, birth_date, gender
        )
        if violations:
            raise ValidationFailed(violations)
        patient = Patient(
            name=[
                HumanName(
                    family=(family or "").strip() or None,
                    given=[given.strip()] if (given or "").strip() else [],
                )
            ],
            gender=gender,
            birth_date=parsed_birth,
        )
        leftover = validate(patient)
        if leftover:
            raise ValidationFailed(leftover)

        try:
            fhir_id, returned = self.connector.create(patient)
        except Rejected as exc:
            raise UpstreamRejected(exc.status, exc.outcome) from None
        except (Unreachable, RemoteError, ProtocolError) as exc:
            raise UpstreamUnavailable(str(exc)) from None

        stored = patient
        if isinstance(returned, Patient) and not validate(returned):
            stored = returned
        stored.id = fhir_id
        return self._upsert(stored, ORIGIN_LOCAL_CREATE)

    def get_patient(self, fhir_id: str) -> PatientRecord:
        """Repository hit answers directly; a miss is resolved upstream."""
        doc = self.repository.get(fhir_id)
        if doc is not None:
            return PatientRecord.from_doc(doc)
        try:
            resource = self.connector.read("Patient", fhir_id)
        except NotFound:
            raise RecordNotFound("Patient", fhir_id) from None
        except (Unreachable, RemoteError, ProtocolError) as exc:
            raise UpstreamUnavailable(str(exc)) from None
        if not isinstance(resource, Patient) or validate(resource):
            raise UpstreamUnavailable("upstream returned an unusable Patient resource")
        return self._upsert(resource, ORIGIN_UPSTREAM)


def create_patient_app(core: PatientServiceCore, hop_log=None):
    from fastapi import Body, FastAPI
    from fastapi.responses import JSONResponse

    from ..hops import HopLog
    from .web import STALE_HEADER, install_common_routes

    app = FastAPI(title="patient-service", docs_url=None, redoc_url=None)
    app.state.core = core
    install_common_routes(app, "patient-service", hop_log if hop_log is not None else HopLog())

    @app.get("/patients")
    def list_patients(name: Optional[str] = None) -> JSONResponse:
        records, stale = core.list_patients(name)
        headers = {STALE_HEADER: "true"} if stale else None
        return JSONResponse(content=[r.to_view() for r in records], headers=headers)

    @app.post("/patients", status_code=201)
    def register(form: Dict[str, Any] = Body(...)) -> JSONResponse:
        record = core.register_patient(
            given=str(form.get("given") or ""),
            family=str(form.get("family") or ""),
            birth_date=form.get("birthDate"),
            gender=str(form.get("gender") or ""),
        )
        return JSONResponse(content=record.to_view(), status_code=201)

    @app.get("/patients/{fhir_id}")
    def get_patient(fhir_id: str) -> JSONResponse:
        return JSONResponse(content=core.get_patient(fhir_id).to_view())

    return app
