"""Deterministic demo data: a collection bundle of patients and appointments.

The same RNG seed always yields byte-identical output, so scripted scenarios
and docs can rely on exact ids and names.
"""

import random
from datetime import date, datetime, timedelta, timezone
from ..fhir import (
    Appointment,
    AppointmentParticipant,
    Bundle,
    BundleEntry,
    GENDERS,
    HumanName,
    Identifier,
    Patient,
    ResourceRef,
    serialize_resource,
)

GIVEN_NAMES = (
    "Ana", "Bruno", "Carla", "Diego", "Elisa", "Fabio", "Gabriela",
    "Henrique", "Iara", "Joao", "Larissa", "Marcos", "Natalia", "Otavio",
)
FAMILY_NAMES = (
    "Silva", "Souza", "Oliveira", "Santos", "Pereira", "Lima", "Carvalho",
    "Almeida", "Ribeiro", "Martins",
)
SPECIALTIES = ("oncology", "cardiology", "general practice", "radiology")
SEED_STATUSES = ("booked", "proposed", "pending", "booked")  # booked-heavy mix
DURATIONS_MIN = (15, 30, 45, 60)

# fixed anchor so generated data does not depend on the wall clock
_SCHEDULE_ANCHOR = datetime(2026, 1, 5, 8, 0, tzinfo=timezone.utc)


def _random_birth_date(rng: random.Random) -> date:
    year = rng.randint(1940, 2010)
    month = rng.randint(1, 12)
    day = rng.randint(1, 28)
    return date(year, month, day)


def generate_seed_bundle(
    patients: int, appointments: int, rng_seed: int = 0
) -> Bundle:
    """Collection bundle with ids pre-assigned (Patient/1..n, Appointment/1..m)."""
    if appointments > 0 and patients < 1:
        raise ValueError("appointments need at least one patient to point at")
    rng = random.Random(rng_seed)
    entries = []
    for i in range(patients):
        patient_id = str(i + 1)
        patient = Patient(
            id=patient_id,
            identifier=[
                Identifier(
                    system="urn:pnav:seed", value=f"seed-patient-{patient_id}"
                )
            ],
            name=[
                HumanName(
                    family=rng.choice(FAMILY_NAMES),
                    given=[rng.choice(GIVEN_NAMES)],
                )
            ],
            gender=rng.choice(GENDERS),
            birth_date=_random_birth_date(rng),
        )
        entries.append(
            BundleEntry(full_url=f"urn:pnav:seed:Patient/{patient_id}", resource=patient)
        )
    for j in range(appointments):
        appointment_id = str(j + 1)
        start = _SCHEDULE_ANCHOR + timedelta(
            days=rng.randint(0, 60), minutes=15 * rng.randint(0, 32)
        )
        minutes = rng.choice(DURATIONS_MIN)
        patient_ref = str(rng.randint(1, patients))
        status = rng.choice(SEED_STATUSES)
        appt = Appointment(
            id=appointment_id,
            status=status,
            specialty=rng.choice(SPECIALTIES),
            start=start,
            end=start + timedelta(minutes=minutes),
            minutes_duration=minutes,
            participant=[
                AppointmentParticipant(
                    actor=ResourceRef(reference=f"Patient/{patient_ref}"),
                    required="required",
                    status="accepted",
                )
            ],
        )
        entries.append(
            BundleEntry(
                full_url=f"urn:pnav:seed:Appointment/{appointment_id}", resource=appt
            )
        )
    return Bundle(type="collection", entry=entries)


def write_seed_file(
    path: str, patients: int, appointments: int, rng_seed: int = 0
) -> Bundle:
    bundle = generate_seed_bundle(patients, appointments, rng_seed)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_resource(bundle))
        fh.write("\n")
    return bundle
