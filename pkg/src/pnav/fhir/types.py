"""FHIR R4 resource subset used by the navigation suite.

Resources are plain dataclasses holding already-decoded values. Decoding is
deliberately lenient: fields that arrive malformed (an unparseable date, an
out-of-set code) are kept as-is so that ``validate`` can report every problem
instead of failing on the first one. Unknown JSON members are carried in each
object's ``extra`` dict and re-emitted verbatim on serialization, so resources
proxied from a fuller FHIR server survive the hop without data loss.
"""

import re
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from typing import Any, Dict, List, Optional, Union
from urllib.parse import urlparse

GENDERS = ("male", "female", "other", "unknown")
APPOINTMENT_STATUSES = (
    "proposed",
    "pending",
    "booked",
    "arrived",
    "fulfilled",
    "cancelled",
    "noshow",
    "entered-in-error",
)
PARTICIPANT_REQUIRED = ("required", "optional", "information-only")
PARTICIPATION_STATUSES = ("accepted", "declined", "tentative", "needs-action")
BUNDLE_TYPES = (
    "document",
    "message",
    "transaction",
    "transaction-response",
    "batch",
    "batch-response",
    "history",
    "searchset",
    "collection",
)
SEARCH_MODES = ("match", "include")
REQUEST_METHODS = ("GET", "POST", "PUT", "DELETE")
ISSUE_SEVERITIES = ("fatal", "error", "warning", "information")
REFERENCE_TYPES = ("Patient", "Practitioner", "Location")

ID_PATTERN = re.compile(r"^[A-Za-z0-9\-.]{1,64}$")

INSTANT_PATTERN = re.compile(
    r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}(\.\d+)?(Z|[+-]\d{2}:\d{2})$"
)


def parse_fhir_date(value: str) -> date:
    """Parse a FHIR date (YYYY-MM-DD). Raises ValueError on anything else."""
    if not re.match(r"^\d{4}-\d{2}-\d{2}$", value):
        raise ValueError(f"not a calendar date: {value!r}")
    return date.fromisoformat(value)


def parse_instant(value: str) -> datetime:
    """Parse a FHIR instant: RFC 3339 with an explicit offset (Z or +-hh:mm)."""
    m = INSTANT_PATTERN.match(value)
    if not m:
        raise ValueError(f"not an instant: {value!r}")
    normalized = value
    if normalized.endswith("Z"):
        normalized = normalized[:-1] + "+00:00"
    frac = m.group(1)
    if frac is not None:
        # fromisoformat on 3.10 wants exactly 3 or 6 fractional digits
        digits = frac[1:]
        padded = (digits + "000000")[:6]
        normalized = normalized.replace(frac, "." + padded, 1)
    return datetime.fromisoformat(normalized)


def format_instant(value: datetime) -> str:
    if value.tzinfo is None:
        raise ValueError("instant must carry a UTC offset")
    return value.isoformat()


def now_utc() -> datetime:
    return datetime.now(timezone.utc).replace(microsecond=0)


def is_absolute_uri(value: str) -> bool:
    parsed = urlparse(value)
    return bool(parsed.scheme) and bool(parsed.netloc or parsed.path)


@dataclass
class Violation:
    """One broken invariant: which field and which rule."""

    field: str
    rule: str

    def __str__(self) -> str:
        return f"{self.field}: {self.rule}"


@dataclass
class Identifier:
    system: Optional[str] = None
    value: str = ""
    extra: Dict[str, Any] = field(default_factory=dict)


@dataclass
class HumanName:
    family: Optional[str] = None
    given: List[str] = field(default_factory=list)
    text: Optional[str] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    def display(self) -> str:
        """Human-readable form: "family, given given" with text fallback."""
        parts = []
        if self.family:
            parts.append(self.family)
        if self.given:
            parts.append(" ".join(self.given))
        if parts:
            return ", ".join(parts)
        return self.text or ""


@dataclass
class ResourceRef:
    reference: str = ""
    display: Optional[str] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    def segments(self) -> Optional[tuple]:
        """("Patient", "7") for "Patient/7"; None when malformed."""
        parts = self.reference.split("/")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            return None
        return (parts[0], parts[1])

    @property
    def target_type(self) -> Optional[str]:
        seg = self.segments()
        return seg[0] if seg else None

    @property
    def target_id(self) -> Optional[str]:
        seg = self.segments()
        return seg[1] if seg else None


@dataclass
class Patient:
    id: Optional[str] = None
    identifier: List[Identifier] = field(default_factory=list)
    active: Optional[bool] = None
    name: List[HumanName] = field(default_factory=list)
    gender: Optional[str] = None
    birth_date: Union[date, str, None] = None
    address: List[str] = field(default_factory=list)
    extra: Dict[str, Any] = field(default_factory=dict)

    resource_type = "Patient"

    def display_name(self) -> str:
        for name in self.name:
            text = name.display()
            if text:
                return text
        return ""


@dataclass
class AppointmentParticipant:
    actor: Optional[ResourceRef] = None
    required: Optional[str] = None
    status: Optional[str] = None
    extra: Dict[str, Any] = field(default_factory=dict)


@dataclass
class Appointment:
    id: Optional[str] = None
    status: Optional[str] = None
    specialty: Optional[str] = None
    description: Optional[str] = None
    start: Union[datetime, str, None] = None
    end: Union[datetime, str, None] = None
    minutes_duration: Optional[Any] = None
    participant: List[AppointmentParticipant] = field(default_factory=list)
    extra: Dict[str, Any] = field(default_factory=dict)

    resource_type = "Appointment"

    def patient_participants(self) -> List[AppointmentParticipant]:
        return [
            p
            for p in self.participant
            if p.actor is not None and p.actor.target_type == "Patient"
        ]


@dataclass
class OperationOutcomeIssue:
    severity: str = "error"
    code: str = ""
    diagnostics: str = ""
    extra: Dict[str, Any] = field(default_factory=dict)


@dataclass
class OperationOutcome:
    issue: List[OperationOutcomeIssue] = field(default_factory=list)
    extra: Dict[str, Any] = field(default_factory=dict)

    resource_type = "OperationOutcome"


@dataclass
class RawResource:
    """A resource type outside the modeled subset, held opaquely.

    Appears only inside Bundle entries proxied from fuller servers; carried
    so a searchset survives intact even when it mentions e.g. a Practitioner.
    """

    data: Dict[str, Any] = field(default_factory=dict)

    @property
    def resource_type(self) -> str:
        return str(self.data.get("resourceType", ""))

    @property
    def id(self) -> Optional[str]:
        value = self.data.get("id")
        return value if isinstance(value, str) else None


@dataclass
class BundleLink:
    relation: str = ""
    url: str = ""
    extra: Dict[str, Any] = field(default_factory=dict)


@dataclass
class EntrySearch:
    mode: Optional[str] = None
    extra: Dict[str, Any] = field(default_factory=dict)


@dataclass
class EntryRequest:
    method: Optional[str] = None
    url: Optional[str] = None
    extra: Dict[str, Any] = field(default_factory=dict)


@dataclass
class EntryResponse:
    status: Optional[str] = None
    location: Optional[str] = None
    extra: Dict[str, Any] = field(default_factory=dict)


@dataclass
class BundleEntry:
    full_url: Optional[str] = None
    resource: Optional[Any] = None
    search: Optional[EntrySearch] = None
    request: Optional[EntryRequest] = None
    response: Optional[EntryResponse] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    def is_match(self) -> bool:
        """Searchset entries without an explicit mode count as matches."""
        if self.search is None or self.search.mode is None:
            return True
        return self.search.mode == "match"


@dataclass
class Bundle:
    type: Optional[str] = None
    total: Optional[Any] = None
    link: List[BundleLink] = field(default_factory=list)
    entry: List[BundleEntry] = field(default_factory=list)
    extra: Dict[str, Any] = field(default_factory=dict)

    resource_type = "Bundle"

    def link_url(self, relation: str) -> Optional[str]:
        for link in self.link:
            if link.relation == relation:
                return link.url
        return None

    def match_resources(self) -> List[Any]:
        return [
            e.resource for e in self.entry if e.resource is not None and e.is_match()
        ]


Resource = Union[Patient, Appointment, Bundle, OperationOutcome]


def outcome(severity: str, code: str, diagnostics: str) -> OperationOutcome:
    """Single-issue OperationOutcome, the usual error reply."""
    return OperationOutcome(
        issue=[
            OperationOutcomeIssue(severity=severity, code=code, diagnostics=diagnostics)
        ]
    )


def outcome_from_violations(violations: List["Violation"]) -> OperationOutcome:
    return OperationOutcome(
        issue=[
            OperationOutcomeIssue(severity="error", code="invariant", diagnostics=str(v))
            for v in violations
        ]
    )


def _check_id(resource_id: Optional[str], out: List[Violation]) -> None:
    if resource_id is None:
        return
    if not isinstance(resource_id, str) or not ID_PATTERN.match(resource_id):
        out.append(Violation("id", "must match [A-Za-z0-9\\-.]{1,64}"))


def _check_code(
    value: Any, allowed: tuple, path: str, out: List[Violation], required: bool
) -> None:
    if value is None:
        if required:
            out.append(Violation(path, "is required"))
        return
    if value not in allowed:
        out.append(Violation(path, "must be one of " + ", ".join(allowed)))


def _check_instant(value: Any, path: str, out: List[Violation]) -> None:
    if value is None:
        return
    if isinstance(value, datetime):
        if value.tzinfo is None:
            out.append(Violation(path, "instant must carry a UTC offset"))
        return
    out.append(Violation(path, "not a valid instant (RFC 3339 with offset)"))


def _validate_human_name(name: HumanName, path: str, out: List[Violation]) -> None:
    has_family = bool(name.family)
    has_given = any(bool(g) for g in name.given)
    has_text = bool(name.text)
    if not (has_family or has_given or has_text):
        out.append(Violation(path, "needs at least one of family, given or text"))


def _validate_ref(ref: ResourceRef, path: str, out: List[Violation]) -> None:
    seg = ref.segments()
    if seg is None:
        out.append(
            Violation(path + ".reference", 'must look like "<ResourceType>/<id>"')
        )
        return
    if seg[0] not in REFERENCE_TYPES:
        out.append(
            Violation(
                path + ".reference",
                "type segment must be one of " + ", ".join(REFERENCE_TYPES),
            )
        )


def _validate_patient(patient: Patient, out: List[Violation]) -> None:
    _check_id(patient.id, out)
    for i, ident in enumerate(patient.identifier):
        if not ident.value:
            out.append(Violation(f"identifier[{i}].value", "must be non-empty"))
        if ident.system is not None and not is_absolute_uri(ident.system):
            out.append(Violation(f"identifier[{i}].system", "must be an absolute URI"))
    if patient.active is not None and not isinstance(patient.active, bool):
        out.append(Violation("active", "must be a boolean"))
    for i, name in enumerate(patient.name):
        _validate_human_name(name, f"name[{i}]", out)
    _check_code(patient.gender, GENDERS, "gender", out, required=False)
    if patient.birth_date is not None:
        if isinstance(patient.birth_date, date):
            if patient.birth_date > date.today():
                out.append(Violation("birthDate", "must not be in the future"))
        else:
            out.append(Violation("birthDate", "invalid calendar date"))


def _validate_appointment(appt: Appointment, out: List[Violation]) -> None:
    _check_id(appt.id, out)
    _check_code(appt.status, APPOINTMENT_STATUSES, "status", out, required=True)
    _check_instant(appt.start, "start", out)
    _check_instant(appt.end, "end", out)
    start_ok = isinstance(appt.start, datetime) and appt.start.tzinfo is not None
    end_ok = isinstance(appt.end, datetime) and appt.end.tzinfo is not None
    if start_ok and end_ok and appt.end < appt.start:
        out.append(Violation("end", "must not be before start"))
    if appt.minutes_duration is not None:
        if not isinstance(appt.minutes_duration, int) or isinstance(
            appt.minutes_duration, bool
        ):
            out.append(Violation("minutesDuration", "must be a positive integer"))
        elif appt.minutes_duration <= 0:
            out.append(Violation("minutesDuration", "must be a positive integer"))
        elif start_ok and end_ok:
            delta = (appt.end - appt.start).total_seconds()
            if appt.minutes_duration * 60 != delta:
                out.append(
                    Violation(
                        "minutesDuration",
                        "must equal the whole minutes between start and end",
                    )
                )
    if not appt.participant:
        out.append(Violation("participant", "must have at least one participant"))
    for i, part in enumerate(appt.participant):
        path = f"participant[{i}]"
        if part.actor is None:
            out.append(Violation(path + ".actor", "is required"))
        else:
            _validate_ref(part.actor, path + ".actor", out)
        _check_code(
            part.required, PARTICIPANT_REQUIRED, path + ".required", out, required=False
        )
        _check_code(
            part.status, PARTICIPATION_STATUSES, path + ".status", out, required=True
        )
    if appt.participant and not appt.patient_participants():
        out.append(
            Violation("participant", "needs at least one participant of type Patient")
        )


def _validate_bundle(bundle: Bundle, out: List[Violation]) -> None:
    _check_code(bundle.type, BUNDLE_TYPES, "type", out, required=True)
    if bundle.total is not None:
        if (
            not isinstance(bundle.total, int)
            or isinstance(bundle.total, bool)
            or bundle.total < 0
        ):
            out.append(Violation("total", "must be a non-negative integer"))
        elif bundle.type != "searchset":
            out.append(Violation("total", "only allowed on searchset bundles"))
    for i, link in enumerate(bundle.link):
        if not link.relation:
            out.append(Violation(f"link[{i}].relation", "must be non-empty"))
        if not link.url:
            out.append(Violation(f"link[{i}].url", "must be non-empty"))
    for i, entry in enumerate(bundle.entry):
        path = f"entry[{i}]"
        if entry.resource is None and entry.request is None and entry.response is None:
            out.append(
                Violation(path, "needs at least one of resource, request or response")
            )
        if entry.search is not None:
            _check_code(
                entry.search.mode, SEARCH_MODES, path + ".search.mode", out, False
            )
        if entry.request is not None:
            _check_code(
                entry.request.method,
                REQUEST_METHODS,
                path + ".request.method",
                out,
                required=True,
            )
        if entry.response is not None and not entry.response.status:
            out.append(Violation(path + ".response.status", "is required"))
        if entry.resource is not None and not isinstance(entry.resource, RawResource):
            for v in validate(entry.resource):
                out.append(Violation(f"{path}.resource.{v.field}", v.rule))


def _validate_outcome(outcome: OperationOutcome, out: List[Violation]) -> None:
    if not outcome.issue:
        out.append(Violation("issue", "must have at least one issue"))
    for i, issue in enumerate(outcome.issue):
        _check_code(
            issue.severity, ISSUE_SEVERITIES, f"issue[{i}].severity", out, required=True
        )


def validate(resource: Any) -> List[Violation]:
    """Collect every broken invariant on a structurally decoded resource.

    Returns [] iff the resource is valid. Ordering follows document order,
    so repeated runs report violations identically.
    """
    out: List[Violation] = []
    if isinstance(resource, Patient):
        _validate_patient(resource, out)
    elif isinstance(resource, Appointment):
        _validate_appointment(resource, out)
    elif isinstance(resource, Bundle):
        _validate_bundle(resource, out)
    elif isinstance(resource, OperationOutcome):
        _validate_outcome(resource, out)
    elif isinstance(resource, RawResource):
        pass
    else:
        raise TypeError(f"not a FHIR resource: {type(resource).__name__}")
    return out
