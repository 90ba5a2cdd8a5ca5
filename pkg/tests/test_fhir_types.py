import random
from datetime import date, datetime, timedelta, timezone

import pytest

from generators import ALL_MUTATIONS, gen_appointment, gen_bundle, gen_outcome, gen_patient
from pnav.fhir import (
    Appointment,
    AppointmentParticipant,
    Bundle,
    HumanName,
    OperationOutcome,
    Patient,
    ResourceRef,
    Violation,
    is_absolute_uri,
    parse_instant,
    validate,
)


def test_valid_booked_appointment_has_no_violations():
    appt = Appointment(
        status="booked",
        start=datetime(2026, 9, 1, 9, 0, tzinfo=timezone.utc),
        end=datetime(2026, 9, 1, 9, 30, tzinfo=timezone.utc),
        minutes_duration=30,
        participant=[
            AppointmentParticipant(
                actor=ResourceRef(reference="Patient/1"),
                required="required",
                status="accepted",
            )
        ],
    )
    assert validate(appt) == []


def test_empty_participant_list_is_flagged():
    appt = Appointment(status="booked", participant=[])
    fields = [v.field for v in validate(appt)]
    assert "participant" in fields


def test_nonsense_birth_date_is_flagged_as_invalid_calendar_date():
    patient = Patient(birth_date="1990-13-40")
    violations = validate(patient)
    assert any(
        v.field == "birthDate" and "calendar" in v.rule for v in violations
    )


def test_future_birth_date_is_flagged():
    patient = Patient(birth_date=date.today() + timedelta(days=30))
    assert any(v.field == "birthDate" for v in validate(patient))


def test_random_valid_resources_have_no_violations():
    rng = random.Random(11)
    for _ in range(300):
        for gen in (gen_patient, gen_appointment, gen_bundle, gen_outcome):
            resource = gen(rng)
            assert validate(resource) == [], (resource, validate(resource))


@pytest.mark.parametrize("case", range(len(ALL_MUTATIONS)))
def test_single_field_corruption_names_the_field(case):
    builder, target_field, corrupt = ALL_MUTATIONS[case]
    rng = random.Random(1000 + case)
    for _ in range(20):
        resource = builder(rng)
        assert validate(resource) == []
        corrupt(resource, rng)
        violations = validate(resource)
        assert violations, f"corrupting {target_field} went unnoticed"
        named = [v.field for v in violations]
        assert any(
            field == target_field or field.startswith(target_field)
            for field in named
        ), f"expected a violation naming {target_field}, got {named}"


def test_enum_fields_reject_anything_outside_their_value_set():
    rng = random.Random(7)
    junk_words = ("", "BOOKED", "Female", "zzz", "match ", "proposed!")
    for word in junk_words:
        if word:
            assert any(v.field == "gender" for v in validate(Patient(gender=word)))
        appt = gen_appointment(rng)
        appt.status = word or "x"
        assert any(v.field == "status" for v in validate(appt))
        bundle = Bundle(type=word or "x")
        assert any(v.field == "type" for v in validate(bundle))


def test_id_rule_boundaries():
    assert validate(Patient(id="a" * 64)) == []
    assert validate(Patient(id="A-b.9")) == []
    assert any(v.field == "id" for v in validate(Patient(id="a" * 65)))
    assert any(v.field == "id" for v in validate(Patient(id="has space")))
    assert any(v.field == "id" for v in validate(Patient(id="")))


def test_human_name_needs_some_content():
    assert any(v.field == "name[0]" for v in validate(Patient(name=[HumanName()])))
    assert validate(Patient(name=[HumanName(given=["Ana"])])) == []
    assert validate(Patient(name=[HumanName(text="Ana Silva")])) == []
    # empty strings don't count as content
    assert any(
        v.field == "name[0]"
        for v in validate(Patient(name=[HumanName(family="", given=[""])]))
    )


def test_reference_shape_and_type_set():
    ok = AppointmentParticipant(actor=ResourceRef("Practitioner/2"), status="accepted")
    bad_shape = AppointmentParticipant(actor=ResourceRef("Patient"), status="accepted")
    bad_type = AppointmentParticipant(
        actor=ResourceRef("Organization/1"), status="accepted"
    )
    base = dict(
        status="booked",
        participant=[
            AppointmentParticipant(actor=ResourceRef("Patient/1"), status="accepted")
        ],
    )
    assert validate(Appointment(**base)) == []
    appt = Appointment(**base)
    appt.participant.append(ok)
    assert validate(appt) == []
    appt = Appointment(**base)
    appt.participant.append(bad_shape)
    assert any("reference" in v.field for v in validate(appt))
    appt = Appointment(**base)
    appt.participant.append(bad_type)
    assert any("reference" in v.field for v in validate(appt))


def test_duration_must_match_whole_minutes():
    start = datetime(2026, 1, 1, 8, 0, tzinfo=timezone.utc)
    participant = [
        AppointmentParticipant(actor=ResourceRef("Patient/1"), status="accepted")
    ]
    ok = Appointment(
        status="booked",
        start=start,
        end=start + timedelta(minutes=45),
        minutes_duration=45,
        participant=participant,
    )
    assert validate(ok) == []
    off_by_one = Appointment(
        status="booked",
        start=start,
        end=start + timedelta(minutes=45),
        minutes_duration=44,
        participant=participant,
    )
    assert any(v.field == "minutesDuration" for v in validate(off_by_one))
    # 90 seconds can never be a whole number of minutes
    ragged = Appointment(
        status="booked",
        start=start,
        end=start + timedelta(seconds=90),
        minutes_duration=1,
        participant=participant,
    )
    assert any(v.field == "minutesDuration" for v in validate(ragged))


def test_instant_lexical_forms():
    utc = parse_instant("2026-09-01T09:00:00Z")
    offset = parse_instant("2026-09-01T11:00:00+02:00")
    assert utc == offset  # same point in time
    assert parse_instant("2026-09-01T09:00:00.250Z").microsecond == 250000
    for bad in ("2026-09-01T09:00:00", "2026-09-01", "yesterday", "2026-09-01 09:00:00Z"):
        with pytest.raises(ValueError):
            parse_instant(bad)


def test_absolute_uri_check():
    assert is_absolute_uri("http://ids.example/mrn")
    assert is_absolute_uri("urn:oid:1.2.3")
    assert not is_absolute_uri("relative/path")
    assert not is_absolute_uri("not a uri")


def test_validation_order_is_deterministic():
    patient = Patient(id="bad id!", gender="f", birth_date="1990-13-40")
    first = [(v.field, v.rule) for v in validate(patient)]
    second = [(v.field, v.rule) for v in validate(patient)]
    assert first == second
    assert [f for f, _ in first] == ["id", "gender", "birthDate"]


def test_violation_reads_as_field_and_rule():
    v = Violation("gender", "must be one of male, female, other, unknown")
    assert str(v).startswith("gender: ")


def test_outcome_needs_an_issue():
    assert any(v.field == "issue" for v in validate(OperationOutcome()))
