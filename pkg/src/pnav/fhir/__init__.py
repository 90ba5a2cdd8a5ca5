"""FHIR R4 resource subset, wire codec and searchset assembly."""

from .codec import (
    FHIR_JSON_MEDIA_TYPE,
    CodecError,
    InvariantViolation,
    MalformedJson,
    UnknownResourceType,
    decode_resource,
    parse_resource,
    resource_to_json,
    serialize_resource,
)
from .searchset import PageOutOfRange, make_searchset
from .types import (
    APPOINTMENT_STATUSES,
    BUNDLE_TYPES,
    GENDERS,
    ID_PATTERN,
    ISSUE_SEVERITIES,
    PARTICIPANT_REQUIRED,
    PARTICIPATION_STATUSES,
    REFERENCE_TYPES,
    REQUEST_METHODS,
    SEARCH_MODES,
    Appointment,
    AppointmentParticipant,
    Bundle,
    BundleEntry,
    BundleLink,
    EntryRequest,
    EntryResponse,
    EntrySearch,
    HumanName,
    Identifier,
    OperationOutcome,
    OperationOutcomeIssue,
    Patient,
    RawResource,
    ResourceRef,
    Violation,
    format_instant,
    is_absolute_uri,
    now_utc,
    outcome,
    outcome_from_violations,
    parse_fhir_date,
    parse_instant,
    validate,
)

__all__ = [
    "APPOINTMENT_STATUSES",
    "BUNDLE_TYPES",
    "GENDERS",
    "ID_PATTERN",
    "ISSUE_SEVERITIES",
    "PARTICIPANT_REQUIRED",
    "PARTICIPATION_STATUSES",
    "REFERENCE_TYPES",
    "REQUEST_METHODS",
    "SEARCH_MODES",
    "FHIR_JSON_MEDIA_TYPE",
    "Appointment",
    "AppointmentParticipant",
    "Bundle",
    "BundleEntry",
    "BundleLink",
    "CodecError",
    "EntryRequest",
    "EntryResponse",
    "EntrySearch",
    "HumanName",
    "Identifier",
    "InvariantViolation",
    "MalformedJson",
    "OperationOutcome",
    "OperationOutcomeIssue",
    "PageOutOfRange",
    "Patient",
    "RawResource",
    "ResourceRef",
    "UnknownResourceType",
    "Violation",
    "decode_resource",
    "format_instant",
    "is_absolute_uri",
    "make_searchset",
    "now_utc",
    "outcome",
    "outcome_from_violations",
    "parse_fhir_date",
    "parse_instant",
    "parse_resource",
    "resource_to_json",
    "serialize_resource",
    "validate",
]
