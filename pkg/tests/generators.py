"""Random valid resources and single-field corruptions for property tests.

Generators only ever emit resources that satisfy every declared invariant;
the mutation table then breaks exactly one field at a time so validation
soundness can be checked invariant by invariant.
"""

import random
from datetime import date, datetime, timedelta, timezone

from pnav.fhir import (
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
    ResourceRef,
)

GIVEN = ("Ana", "Bruno", "Carla", "Diego", "Elisa", "Joao", "Maria", "Pedro")
FAMILY = ("Silva", "Souza", "Oliveira", "Santos", "Lima", "Costa")
TZS = (
    timezone.utc,
    timezone(timedelta(hours=2)),
    timezone(timedelta(hours=-3)),
    timezone(timedelta(hours=5, minutes=30)),
)


def gen_id(rng: random.Random) -> str:
    alphabet = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-."
    return "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 12)))


def gen_human_name(rng: random.Random) -> HumanName:
    style = rng.randrange(4)
    if style == 0:
        return HumanName(family=rng.choice(FAMILY))
    if style == 1:
        return HumanName(given=[rng.choice(GIVEN) for _ in range(rng.randint(1, 2))])
    if style == 2:
        return HumanName(text=f"{rng.choice(GIVEN)} {rng.choice(FAMILY)}")
    return HumanName(
        family=rng.choice(FAMILY),
        given=[rng.choice(GIVEN)],
        text=None if rng.random() < 0.7 else "as printed",
    )


def gen_birth_date(rng: random.Random) -> date:
    return date(rng.randint(1930, 2020), rng.randint(1, 12), rng.randint(1, 28))


def gen_instant(rng: random.Random) -> datetime:
    base = datetime(2026, rng.randint(1, 12), rng.randint(1, 28), tzinfo=rng.choice(TZS))
    return base + timedelta(minutes=rng.randint(0, 1440), seconds=rng.choice((0, 15)))


def maybe_extras(rng: random.Random) -> dict:
    """Unknown members a fuller server might attach; exercise passthrough."""
    if rng.random() < 0.6:
        return {}
    choices = {
        "meta": {"versionId": str(rng.randint(1, 9))},
        "language": "pt-BR",
        "x-custom": [1, 2, {"nested": True}],
    }
    picked = rng.sample(sorted(choices), rng.randint(1, 2))
    return {k: choices[k] for k in picked}


def gen_patient(rng: random.Random, with_id: bool = False) -> Patient:
    patient = Patient(
        id=gen_id(rng) if with_id else None,
        name=[gen_human_name(rng) for _ in range(rng.randint(0, 2))],
        extra=maybe_extras(rng),
    )
    if rng.random() < 0.8:
        patient.gender = rng.choice(("male", "female", "other", "unknown"))
    if rng.random() < 0.8:
        patient.birth_date = gen_birth_date(rng)
    if rng.random() < 0.5:
        patient.identifier = [
            Identifier(
                system=rng.choice(("urn:test:ids", "http://ids.example/mrn", None)),
                value=f"mrn-{rng.randint(1, 9999)}",
            )
        ]
    if rng.random() < 0.3:
        patient.active = rng.random() < 0.8
    if rng.random() < 0.3:
        patient.address = [f"{rng.randint(1, 999)} Example Street"]
    return patient


def gen_participants(rng: random.Random) -> list:
    participants = [
        AppointmentParticipant(
            actor=ResourceRef(
                reference=f"Patient/{rng.randint(1, 50)}",
                display=None if rng.random() < 0.5 else rng.choice(FAMILY),
            ),
            required=rng.choice(("required", "optional", None)),
            status=rng.choice(("accepted", "declined", "tentative", "needs-action")),
        )
    ]
    if rng.random() < 0.3:
        participants.append(
            AppointmentParticipant(
                actor=ResourceRef(
                    reference=f"{rng.choice(('Practitioner', 'Location'))}/{rng.randint(1, 9)}"
                ),
                status="accepted",
            )
        )
    rng.shuffle(participants)
    return participants


def gen_appointment(rng: random.Random, with_id: bool = False) -> Appointment:
    appt = Appointment(
        id=gen_id(rng) if with_id else None,
        status=rng.choice(
            ("proposed", "pending", "booked", "arrived", "fulfilled", "cancelled")
        ),
        participant=gen_participants(rng),
        extra=maybe_extras(rng),
    )
    if rng.random() < 0.6:
        appt.specialty = rng.choice(("oncology", "cardiology", "general practice"))
    if rng.random() < 0.3:
        appt.description = "follow-up visit"
    if rng.random() < 0.9:
        start = gen_instant(rng)
        minutes = rng.choice((15, 30, 45, 60))
        appt.start = start
        appt.end = start + timedelta(minutes=minutes)
        if rng.random() < 0.7:
            appt.minutes_duration = minutes
    return appt


def gen_bundle(rng: random.Random) -> Bundle:
    kind = rng.choice(("searchset", "collection", "transaction", "batch-response"))
    entries = []
    for _ in range(rng.randint(0, 4)):
        entry = BundleEntry()
        payload = rng.randrange(3)
        if payload == 0:
            resource = (
                gen_patient(rng, with_id=True)
                if rng.random() < 0.5
                else gen_appointment(rng, with_id=True)
            )
            entry.resource = resource
            entry.full_url = f"http://fhir.example/x/{resource.resource_type}/{resource.id}"
            if kind == "searchset":
                entry.search = EntrySearch(mode=rng.choice(("match", "include")))
        elif payload == 1:
            entry.request = EntryRequest(
                method=rng.choice(("GET", "POST")), url="Patient?name=silva"
            )
        else:
            entry.response = EntryResponse(
                status="201 Created", location="Patient/9/_history/1"
            )
        entries.append(entry)
    bundle = Bundle(type=kind, entry=entries, extra=maybe_extras(rng))
    if kind == "searchset":
        bundle.total = rng.randint(len(entries), len(entries) + 40)
        bundle.link = [
            BundleLink(relation="self", url="http://fhir.example/x/Patient?_page=0")
        ]
    return bundle


def gen_outcome(rng: random.Random) -> OperationOutcome:
    return OperationOutcome(
        issue=[
            OperationOutcomeIssue(
                severity=rng.choice(("fatal", "error", "warning", "information")),
                code="invariant",
                diagnostics=f"field{i}: broken",
            )
            for i in range(rng.randint(1, 3))
        ]
    )


def gen_resource(rng: random.Random):
    pick = rng.randrange(3)
    if pick == 0:
        return gen_patient(rng, with_id=rng.random() < 0.5)
    if pick == 1:
        return gen_appointment(rng, with_id=rng.random() < 0.5)
    return gen_bundle(rng)


# ---------------------------------------------------------------------------
# single-field corruptions, one per declared invariant
# ---------------------------------------------------------------------------


def _future_date() -> date:
    return date.today() + timedelta(days=120)


def _ensure_identifier(p: Patient, rng: random.Random) -> Patient:
    if not p.identifier:
        p.identifier = [Identifier(system="urn:test:ids", value="mrn-1")]
    return p


def _ensure_name(p: Patient, rng: random.Random) -> Patient:
    if not p.name:
        p.name = [gen_human_name(rng)]
    return p


def _ensure_times(a: Appointment, rng: random.Random) -> Appointment:
    if not isinstance(a.start, datetime):
        a.start = gen_instant(rng)
        a.end = a.start + timedelta(minutes=30)
        a.minutes_duration = 30
    return a


def _mut(builder, field, corrupt):
    return (builder, field, corrupt)


def _set(field_name, value_fn):
    def apply(resource, rng):
        setattr(resource, field_name, value_fn(rng))

    return apply


PATIENT_MUTATIONS = [
    _mut(gen_patient, "id", _set("id", lambda rng: "no spaces allowed!")),
    _mut(gen_patient, "id", _set("id", lambda rng: "x" * 65)),
    _mut(gen_patient, "gender", _set("gender", lambda rng: "f")),
    _mut(gen_patient, "birthDate", _set("birth_date", lambda rng: "1990-13-40")),
    _mut(gen_patient, "birthDate", _set("birth_date", lambda rng: _future_date())),
    _mut(gen_patient, "active", _set("active", lambda rng: "yes")),
    _mut(
        lambda rng: _ensure_identifier(gen_patient(rng), rng),
        "identifier[0].value",
        lambda p, rng: setattr(p.identifier[0], "value", ""),
    ),
    _mut(
        lambda rng: _ensure_identifier(gen_patient(rng), rng),
        "identifier[0].system",
        lambda p, rng: setattr(p.identifier[0], "system", "not a uri"),
    ),
    _mut(
        lambda rng: _ensure_name(gen_patient(rng), rng),
        "name[0]",
        lambda p, rng: p.name.__setitem__(0, HumanName()),
    ),
]


def _clear_patient_participants(a: Appointment, rng) -> None:
    a.participant = [
        AppointmentParticipant(
            actor=ResourceRef(reference="Practitioner/1"), status="accepted"
        )
    ]


APPOINTMENT_MUTATIONS = [
    _mut(gen_appointment, "status", _set("status", lambda rng: "busy")),
    _mut(gen_appointment, "status", _set("status", lambda rng: None)),
    _mut(
        lambda rng: _ensure_times(gen_appointment(rng), rng),
        "end",
        lambda a, rng: setattr(a, "end", a.start - timedelta(minutes=5)),
    ),
    _mut(
        lambda rng: _ensure_times(gen_appointment(rng), rng),
        "start",
        lambda a, rng: setattr(a, "start", a.start.replace(tzinfo=None)),
    ),
    _mut(
        lambda rng: _ensure_times(gen_appointment(rng), rng),
        "start",
        lambda a, rng: setattr(a, "start", "half past nine"),
    ),
    _mut(
        lambda rng: _ensure_times(gen_appointment(rng), rng),
        "minutesDuration",
        lambda a, rng: setattr(
            a, "minutes_duration", int((a.end - a.start).total_seconds() // 60) + 7
        ),
    ),
    _mut(
        gen_appointment,
        "minutesDuration",
        lambda a, rng: (
            setattr(a, "start", None),
            setattr(a, "end", None),
            setattr(a, "minutes_duration", 0),
        ),
    ),
    _mut(gen_appointment, "participant", lambda a, rng: setattr(a, "participant", [])),
    _mut(gen_appointment, "participant", _clear_patient_participants),
    _mut(
        gen_appointment,
        "participant[0].actor",
        lambda a, rng: setattr(a.participant[0], "actor", None),
    ),
    _mut(
        gen_appointment,
        "participant[0].actor.reference",
        lambda a, rng: setattr(a.participant[0].actor, "reference", "justoneword"),
    ),
    _mut(
        gen_appointment,
        "participant[0].actor.reference",
        lambda a, rng: setattr(a.participant[0].actor, "reference", "Organization/1")
        or _clear_other_patients(a),
    ),
    _mut(
        gen_appointment,
        "participant[0].status",
        lambda a, rng: setattr(a.participant[0], "status", "maybe"),
    ),
    _mut(
        gen_appointment,
        "participant[0].required",
        lambda a, rng: setattr(a.participant[0], "required", "mandatory"),
    ),
]


def _clear_other_patients(a: Appointment) -> None:
    a.participant = a.participant[:1]


def _searchset_bundle(rng: random.Random) -> Bundle:
    bundle = gen_bundle(rng)
    bundle.type = "searchset"
    if bundle.total is None:
        bundle.total = 3
        bundle.link = [BundleLink(relation="self", url="http://x/Patient")]
    return bundle


def _collection_bundle(rng: random.Random) -> Bundle:
    bundle = gen_bundle(rng)
    bundle.type = "collection"
    bundle.total = None
    return bundle


def _bundle_with_search_entry(rng: random.Random) -> Bundle:
    bundle = _searchset_bundle(rng)
    bundle.entry = [
        BundleEntry(resource=gen_patient(rng, with_id=True), search=EntrySearch("match"))
    ]
    return bundle


def _bundle_with_request_entry(rng: random.Random) -> Bundle:
    bundle = _collection_bundle(rng)
    bundle.entry = [BundleEntry(request=EntryRequest(method="GET", url="Patient"))]
    return bundle


BUNDLE_MUTATIONS = [
    _mut(gen_bundle, "type", _set("type", lambda rng: "pile")),
    _mut(gen_bundle, "type", _set("type", lambda rng: None)),
    _mut(_searchset_bundle, "total", _set("total", lambda rng: -1)),
    _mut(_collection_bundle, "total", _set("total", lambda rng: 2)),
    _mut(
        gen_bundle,
        "entry[0]",
        lambda b, rng: b.entry.__setitem__(0, BundleEntry())
        if b.entry
        else b.entry.append(BundleEntry()),
    ),
    _mut(
        _searchset_bundle,
        "link[0].url",
        lambda b, rng: setattr(b.link[0], "url", ""),
    ),
    _mut(
        _bundle_with_search_entry,
        "entry[0].search.mode",
        lambda b, rng: setattr(b.entry[0].search, "mode", "fuzzy"),
    ),
    _mut(
        _bundle_with_request_entry,
        "entry[0].request.method",
        lambda b, rng: setattr(b.entry[0].request, "method", "PATCH"),
    ),
]

OUTCOME_MUTATIONS = [
    _mut(gen_outcome, "issue", lambda o, rng: setattr(o, "issue", [])),
    _mut(
        gen_outcome,
        "issue[0].severity",
        lambda o, rng: setattr(o.issue[0], "severity", "oops"),
    ),
]

ALL_MUTATIONS = (
    PATIENT_MUTATIONS + APPOINTMENT_MUTATIONS + BUNDLE_MUTATIONS + OUTCOME_MUTATIONS
)
