"""JSON wire format for the resource subset.

``serialize_resource`` renders the FHIR R4 lexical forms (dates as
YYYY-MM-DD, instants as RFC 3339 with offset) and omits absent optional
members entirely: no nulls, no empty arrays. ``parse_resource`` is the strict
inverse; ``decode_resource`` is the lenient half used when reading replies
from a foreign server, where we want the violations reported rather than
raised.
"""

import json
from datetime import date, datetime
from typing import Any, Dict, List, Optional, Tuple

from .types import (
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
    parse_fhir_date,
    parse_instant,
    validate,
)

FHIR_JSON_MEDIA_TYPE = "application/fhir+json"


class CodecError(Exception):
    pass


class MalformedJson(CodecError):
    pass


class UnknownResourceType(CodecError):
    def __init__(self, resource_type: Optional[str]):
        self.resource_type = resource_type
        super().__init__(f"unsupported resourceType: {resource_type!r}")


class InvariantViolation(CodecError):
    def __init__(self, violations: List[Violation]):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations))


# ---------------------------------------------------------------------------
# decoding helpers: pull a member out of the dict, note a violation when the
# JSON shape is wrong, and leave the rest for passthrough
# ---------------------------------------------------------------------------


def _take(data: Dict[str, Any], key: str) -> Any:
    return data.pop(key, None)


def _take_str(
    data: Dict[str, Any], key: str, path: str, violations: List[Violation]
) -> Optional[str]:
    value = _take(data, key)
    if value is None:
        return None
    if not isinstance(value, str):
        violations.append(Violation(path, "must be a string"))
        return None
    return value


def _take_list(
    data: Dict[str, Any], key: str, path: str, violations: List[Violation]
) -> list:
    value = _take(data, key)
    if value is None:
        return []
    if not isinstance(value, list):
        violations.append(Violation(path, "must be an array"))
        return []
    return value


def _take_obj(
    data: Dict[str, Any], key: str, path: str, violations: List[Violation]
) -> Optional[Dict[str, Any]]:
    value = _take(data, key)
    if value is None:
        return None
    if not isinstance(value, dict):
        violations.append(Violation(path, "must be an object"))
        return None
    return dict(value)


def _decode_date(value: Any, path: str, violations: List[Violation]) -> Any:
    """Valid dates become date objects; anything else is held for validate."""
    if value is None:
        return None
    if isinstance(value, str):
        try:
            return parse_fhir_date(value)
        except ValueError:
            violations.append(Violation(path, "invalid calendar date"))
            return value
    violations.append(Violation(path, "must be a string date (YYYY-MM-DD)"))
    return str(value)


def _decode_instant(value: Any, path: str, violations: List[Violation]) -> Any:
    if value is None:
        return None
    if isinstance(value, str):
        try:
            return parse_instant(value)
        except ValueError:
            violations.append(
                Violation(path, "not a valid instant (RFC 3339 with offset)")
            )
            return value
    violations.append(Violation(path, "must be a string instant"))
    return str(value)


def _decode_identifier(
    data: Dict[str, Any], path: str, violations: List[Violation]
) -> Identifier:
    system = _take_str(data, "system", path + ".system", violations)
    value = _take_str(data, "value", path + ".value", violations) or ""
    return Identifier(system=system, value=value, extra=data)


def _decode_human_name(
    data: Dict[str, Any], path: str, violations: List[Violation]
) -> HumanName:
    family = _take_str(data, "family", path + ".family", violations)
    given_raw = _take_list(data, "given", path + ".given", violations)
    given = []
    for i, item in enumerate(given_raw):
        if isinstance(item, str):
            given.append(item)
        else:
            violations.append(Violation(f"{path}.given[{i}]", "must be a string"))
    text = _take_str(data, "text", path + ".text", violations)
    return HumanName(family=family, given=given, text=text, extra=data)


def _decode_ref(
    data: Dict[str, Any], path: str, violations: List[Violation]
) -> ResourceRef:
    reference = _take_str(data, "reference", path + ".reference", violations) or ""
    display = _take_str(data, "display", path + ".display", violations)
    return ResourceRef(reference=reference, display=display, extra=data)


def _decode_patient(data: Dict[str, Any], violations: List[Violation]) -> Patient:
    patient = Patient()
    patient.id = _take_str(data, "id", "id", violations)
    identifiers = []
    for i, item in enumerate(_take_list(data, "identifier", "identifier", violations)):
        if isinstance(item, dict):
            identifiers.append(
                _decode_identifier(dict(item), f"identifier[{i}]", violations)
            )
        else:
            violations.append(Violation(f"identifier[{i}]", "must be an object"))
    patient.identifier = identifiers
    active = _take(data, "active")
    if active is not None and not isinstance(active, bool):
        violations.append(Violation("active", "must be a boolean"))
        active = None
    patient.active = active
    names = []
    for i, item in enumerate(_take_list(data, "name", "name", violations)):
        if isinstance(item, dict):
            names.append(_decode_human_name(dict(item), f"name[{i}]", violations))
        else:
            violations.append(Violation(f"name[{i}]", "must be an object"))
    patient.name = names
    gender = _take(data, "gender")
    if gender is not None and not isinstance(gender, str):
        violations.append(Violation("gender", "must be a string code"))
        gender = str(gender)
    patient.gender = gender
    patient.birth_date = _decode_date(
        _take(data, "birthDate"), "birthDate", violations
    )
    address = []
    for i, item in enumerate(_take_list(data, "address", "address", violations)):
        if isinstance(item, dict):
            text = item.get("text")
            if isinstance(text, str):
                address.append(text)
            else:
                violations.append(
                    Violation(f"address[{i}].text", "must be a string line")
                )
        elif isinstance(item, str):
            address.append(item)
        else:
            violations.append(Violation(f"address[{i}]", "must be an object"))
    patient.address = address
    patient.extra = data
    return patient


def _decode_participant(
    data: Dict[str, Any], path: str, violations: List[Violation]
) -> AppointmentParticipant:
    actor_obj = _take_obj(data, "actor", path + ".actor", violations)
    actor = (
        _decode_ref(actor_obj, path + ".actor", violations)
        if actor_obj is not None
        else None
    )
    required = _take_str(data, "required", path + ".required", violations)
    status = _take_str(data, "status", path + ".status", violations)
    return AppointmentParticipant(
        actor=actor, required=required, status=status, extra=data
    )


def _decode_specialty(data: Dict[str, Any], violations: List[Violation]) -> Optional[str]:
    """Appointment.specialty arrives as CodeableConcept[]; we keep the text."""
    raw = _take(data, "specialty")
    if raw is None:
        return None
    if isinstance(raw, str):
        return raw
    if not isinstance(raw, list):
        violations.append(Violation("specialty", "must be an array"))
        return None
    for i, concept in enumerate(raw):
        if not isinstance(concept, dict):
            violations.append(Violation(f"specialty[{i}]", "must be an object"))
            continue
        text = concept.get("text")
        if isinstance(text, str) and text:
            return text
        for coding in concept.get("coding") or []:
            if isinstance(coding, dict):
                label = coding.get("display") or coding.get("code")
                if isinstance(label, str) and label:
                    return label
    return None


def _decode_appointment(
    data: Dict[str, Any], violations: List[Violation]
) -> Appointment:
    appt = Appointment()
    appt.id = _take_str(data, "id", "id", violations)
    appt.status = _take_str(data, "status", "status", violations)
    appt.specialty = _decode_specialty(data, violations)
    appt.description = _take_str(data, "description", "description", violations)
    appt.start = _decode_instant(_take(data, "start"), "start", violations)
    appt.end = _decode_instant(_take(data, "end"), "end", violations)
    minutes = _take(data, "minutesDuration")
    appt.minutes_duration = minutes
    participants = []
    for i, item in enumerate(
        _take_list(data, "participant", "participant", violations)
    ):
        if isinstance(item, dict):
            participants.append(
                _decode_participant(dict(item), f"participant[{i}]", violations)
            )
        else:
            violations.append(Violation(f"participant[{i}]", "must be an object"))
    appt.participant = participants
    appt.extra = data
    return appt


def _decode_issue(
    data: Dict[str, Any], path: str, violations: List[Violation]
) -> OperationOutcomeIssue:
    severity = _take_str(data, "severity", path + ".severity", violations) or ""
    code = _take_str(data, "code", path + ".code", violations) or ""
    diagnostics = _take_str(data, "diagnostics", path + ".diagnostics", violations) or ""
    return OperationOutcomeIssue(
        severity=severity, code=code, diagnostics=diagnostics, extra=data
    )


def _decode_outcome(
    data: Dict[str, Any], violations: List[Violation]
) -> OperationOutcome:
    issues = []
    for i, item in enumerate(_take_list(data, "issue", "issue", violations)):
        if isinstance(item, dict):
            issues.append(_decode_issue(dict(item), f"issue[{i}]", violations))
        else:
            violations.append(Violation(f"issue[{i}]", "must be an object"))
    return OperationOutcome(issue=issues, extra=data)


def _decode_entry_resource(
    data: Dict[str, Any], path: str, violations: List[Violation]
) -> Any:
    resource_type = data.get("resourceType")
    if resource_type in _DECODERS:
        nested: List[Violation] = []
        resource = _decode_tree(dict(data), nested)
        for v in nested:
            violations.append(Violation(f"{path}.{v.field}", v.rule))
        return resource
    return RawResource(data=data)


def _decode_bundle(data: Dict[str, Any], violations: List[Violation]) -> Bundle:
    bundle = Bundle()
    bundle.type = _take_str(data, "type", "type", violations)
    bundle.total = _take(data, "total")
    links = []
    for i, item in enumerate(_take_list(data, "link", "link", violations)):
        if not isinstance(item, dict):
            violations.append(Violation(f"link[{i}]", "must be an object"))
            continue
        item = dict(item)
        relation = _take_str(item, "relation", f"link[{i}].relation", violations) or ""
        url = _take_str(item, "url", f"link[{i}].url", violations) or ""
        links.append(BundleLink(relation=relation, url=url, extra=item))
    bundle.link = links
    entries = []
    for i, item in enumerate(_take_list(data, "entry", "entry", violations)):
        path = f"entry[{i}]"
        if not isinstance(item, dict):
            violations.append(Violation(path, "must be an object"))
            continue
        item = dict(item)
        entry = BundleEntry()
        entry.full_url = _take_str(item, "fullUrl", path + ".fullUrl", violations)
        resource_obj = _take_obj(item, "resource", path + ".resource", violations)
        if resource_obj is not None:
            entry.resource = _decode_entry_resource(
                resource_obj, path + ".resource", violations
            )
        search_obj = _take_obj(item, "search", path + ".search", violations)
        if search_obj is not None:
            mode = _take_str(search_obj, "mode", path + ".search.mode", violations)
            entry.search = EntrySearch(mode=mode, extra=search_obj)
        request_obj = _take_obj(item, "request", path + ".request", violations)
        if request_obj is not None:
            entry.request = EntryRequest(
                method=_take_str(
                    request_obj, "method", path + ".request.method", violations
                ),
                url=_take_str(request_obj, "url", path + ".request.url", violations),
                extra=request_obj,
            )
        response_obj = _take_obj(item, "response", path + ".response", violations)
        if response_obj is not None:
            entry.response = EntryResponse(
                status=_take_str(
                    response_obj, "status", path + ".response.status", violations
                ),
                location=_take_str(
                    response_obj, "location", path + ".response.location", violations
                ),
                extra=response_obj,
            )
        entry.extra = item
        entries.append(entry)
    bundle.entry = entries
    bundle.extra = data
    return bundle


_DECODERS = {
    "Patient": _decode_patient,
    "Appointment": _decode_appointment,
    "Bundle": _decode_bundle,
    "OperationOutcome": _decode_outcome,
}


def _decode_tree(data: Dict[str, Any], violations: List[Violation]) -> Any:
    resource_type = data.pop("resourceType", None)
    decoder = _DECODERS.get(resource_type)
    if decoder is None:
        raise UnknownResourceType(resource_type)
    return decoder(data, violations)


def decode_resource(data: Dict[str, Any]) -> Tuple[Any, List[Violation]]:
    """Lenient decode of an already-parsed JSON object.

    Returns the resource plus every structural and semantic violation found;
    nothing is raised except for a missing or unsupported resourceType.
    """
    violations: List[Violation] = []
    resource = _decode_tree(dict(data), violations)
    violations.extend(validate(resource))
    return resource, _dedupe(violations)


def _dedupe(violations: List[Violation]) -> List[Violation]:
    seen = set()
    unique = []
    for v in violations:
        key = (v.field, v.rule)
        if key not in seen:
            seen.add(key)
            unique.append(v)
    return unique


def parse_resource(text: str) -> Any:
    """Parse and validate FHIR JSON; the strict inverse of serialize_resource."""
    try:
        data = json.loads(text)
    except (ValueError, TypeError) as exc:
        raise MalformedJson(str(exc)) from None
    if not isinstance(data, dict):
        raise MalformedJson("top-level JSON value must be an object")
    resource, violations = decode_resource(data)
    if violations:
        raise InvariantViolation(violations)
    return resource


# ---------------------------------------------------------------------------
# encoding
# ---------------------------------------------------------------------------


def _put(out: Dict[str, Any], key: str, value: Any) -> None:
    if value is None:
        return
    if isinstance(value, (list, dict)) and not value:
        return
    out[key] = value


def _encode_date(value: Any) -> Any:
    if isinstance(value, date) and not isinstance(value, datetime):
        return value.isoformat()
    return value


def _encode_instant(value: Any) -> Any:
    if isinstance(value, datetime):
        return format_instant(value)
    return value


def _encode_identifier(ident: Identifier) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    _put(out, "system", ident.system)
    _put(out, "value", ident.value)
    out.update(ident.extra)
    return out


def _encode_human_name(name: HumanName) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    _put(out, "family", name.family)
    _put(out, "given", list(name.given))
    _put(out, "text", name.text)
    out.update(name.extra)
    return out


def _encode_ref(ref: ResourceRef) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    _put(out, "reference", ref.reference)
    _put(out, "display", ref.display)
    out.update(ref.extra)
    return out


def _encode_patient(patient: Patient) -> Dict[str, Any]:
    out: Dict[str, Any] = {"resourceType": "Patient"}
    _put(out, "id", patient.id)
    _put(out, "identifier", [_encode_identifier(i) for i in patient.identifier])
    if patient.active is not None:
        out["active"] = patient.active
    _put(out, "name", [_encode_human_name(n) for n in patient.name])
    _put(out, "gender", patient.gender)
    _put(out, "birthDate", _encode_date(patient.birth_date))
    _put(out, "address", [{"text": line} for line in patient.address])
    out.update(patient.extra)
    return out


def _encode_participant(part: AppointmentParticipant) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    if part.actor is not None:
        out["actor"] = _encode_ref(part.actor)
    _put(out, "required", part.required)
    _put(out, "status", part.status)
    out.update(part.extra)
    return out


def _encode_appointment(appt: Appointment) -> Dict[str, Any]:
    out: Dict[str, Any] = {"resourceType": "Appointment"}
    _put(out, "id", appt.id)
    _put(out, "status", appt.status)
    if appt.specialty is not None:
        out["specialty"] = [{"text": appt.specialty}]
    _put(out, "description", appt.description)
    _put(out, "start", _encode_instant(appt.start))
    _put(out, "end", _encode_instant(appt.end))
    _put(out, "minutesDuration", appt.minutes_duration)
    _put(out, "participant", [_encode_participant(p) for p in appt.participant])
    out.update(appt.extra)
    return out


def _encode_outcome(outcome: OperationOutcome) -> Dict[str, Any]:
    out: Dict[str, Any] = {"resourceType": "OperationOutcome"}
    issues = []
    for issue in outcome.issue:
        item: Dict[str, Any] = {}
        _put(item, "severity", issue.severity)
        _put(item, "code", issue.code)
        _put(item, "diagnostics", issue.diagnostics)
        item.update(issue.extra)
        issues.append(item)
    _put(out, "issue", issues)
    out.update(outcome.extra)
    return out


def _encode_bundle(bundle: Bundle) -> Dict[str, Any]:
    out: Dict[str, Any] = {"resourceType": "Bundle"}
    _put(out, "type", bundle.type)
    if bundle.total is not None:
        out["total"] = bundle.total
    links = []
    for link in bundle.link:
        item: Dict[str, Any] = {}
        _put(item, "relation", link.relation)
        _put(item, "url", link.url)
        item.update(link.extra)
        links.append(item)
    _put(out, "link", links)
    entries = []
    for entry in bundle.entry:
        item = {}
        _put(item, "fullUrl", entry.full_url)
        if entry.resource is not None:
            item["resource"] = resource_to_json(entry.resource)
        if entry.search is not None:
            search: Dict[str, Any] = {}
            _put(search, "mode", entry.search.mode)
            search.update(entry.search.extra)
            item["search"] = search
        if entry.request is not None:
            request: Dict[str, Any] = {}
            _put(request, "method", entry.request.method)
            _put(request, "url", entry.request.url)
            request.update(entry.request.extra)
            item["request"] = request
        if entry.response is not None:
            response: Dict[str, Any] = {}
            _put(response, "status", entry.response.status)
            _put(response, "location", entry.response.location)
            response.update(entry.response.extra)
            item["response"] = response
        item.update(entry.extra)
        entries.append(item)
    _put(out, "entry", entries)
    out.update(bundle.extra)
    return out


def resource_to_json(resource: Any) -> Dict[str, Any]:
    """Resource as a JSON-ready dict; resourceType first, document order after."""
    if isinstance(resource, Patient):
        return _encode_patient(resource)
    if isinstance(resource, Appointment):
        return _encode_appointment(resource)
    if isinstance(resource, Bundle):
        return _encode_bundle(resource)
    if isinstance(resource, OperationOutcome):
        return _encode_outcome(resource)
    if isinstance(resource, RawResource):
        return dict(resource.data)
    raise TypeError(f"not a FHIR resource: {type(resource).__name__}")


def serialize_resource(resource: Any) -> str:
    return json.dumps(resource_to_json(resource))
