import random
from datetime import date, timedelta

import pytest
import requests

from fakes import FakeConnector
from pnav.client import Rejected
from pnav.fhir import HumanName, Patient, outcome
from pnav.repository import MemoryRepository
from pnav.services.errors import (
    RecordNotFound,
    UpstreamRejected,
    UpstreamUnavailable,
    ValidationFailed,
)
from pnav.services.patients import PatientServiceCore, create_patient_app


def _named(family, given, pid):
    return Patient(id=pid, name=[HumanName(family=family, given=[given])], gender="female")


@pytest.fixture
def connector():
    return FakeConnector()


@pytest.fixture
def core(connector):
    return PatientServiceCore(connector, MemoryRepository())


GOOD_FORM = dict(given="Ana", family="Silva", birth_date="1990-01-02", gender="female")


# --- list_patients ----------------------------------------------------------


def test_listing_merges_upstream_and_sorts_by_family_then_given(core, connector):
    connector.search_results = [
        _named("Souza", "Bruno", "2"),
        _named("Silva", "Ana", "1"),
        _named("Silva", "Ana", "3"),
    ]
    records, stale = core.list_patients()
    assert not stale
    # oracle: independent sort on (family, given, id)
    expected = sorted(
        [("Souza", "Bruno", "2"), ("Silva", "Ana", "1"), ("Silva", "Ana", "3")],
        key=lambda t: (t[0].casefold(), t[1].casefold(), t[2]),
    )
    got = [
        (r.resource.name[0].family, r.resource.name[0].given[0], r.fhir_id)
        for r in records
    ]
    assert got == expected
    assert got[0][0] == "Silva"


def test_listing_twice_keeps_the_repository_byte_identical(core, connector):
    connector.search_results = [_named("Silva", "Ana", "1"), _named("Souza", "Bo", "2")]
    core.list_patients()
    before = core.repository.snapshot_bytes()
    core.list_patients()
    assert core.repository.snapshot_bytes() == before


def test_listing_with_upstream_down_serves_the_cache_with_a_stale_flag(core, connector):
    connector.search_results = [_named("Silva", "Ana", "1")]
    core.list_patients()
    connector.down = True
    records, stale = core.list_patients()
    assert stale
    assert [r.fhir_id for r in records] == ["1"]


def test_listing_never_fails_when_repository_is_readable(core, connector):
    connector.down = True
    records, stale = core.list_patients()
    assert stale and records == []


def test_name_filter_applies_to_cached_records_too(core, connector):
    connector.search_results = [_named("Silva", "Ana", "1"), _named("Souza", "Bo", "2")]
    core.list_patients()
    connector.search_results = []  # upstream finds nothing now
    records, _ = core.list_patients(name="silv")
    assert [r.fhir_id for r in records] == ["1"]


def test_upstream_resources_refresh_cached_ones(core, connector):
    connector.search_results = [_named("Silva", "Ana", "1")]
    core.list_patients()
    renamed = _named("Silva-Souza", "Ana", "1")
    connector.search_results = [renamed]
    records, _ = core.list_patients()
    assert records[0].resource.name[0].family == "Silva-Souza"


# --- register_patient ---------------------------------------------------------


def test_register_returns_a_record_with_the_upstream_id(core, connector):
    record = core.register_patient(**GOOD_FORM)
    assert record.fhir_id == "1"
    assert record.origin == "local-create"
    assert record.resource.id == "1"
    assert len(connector.create_calls) == 1
    sent = connector.create_calls[0]
    assert sent.gender == "female"
    assert core.repository.get("1") is not None


def test_register_validates_before_any_network_call(core, connector):
    before = core.repository.snapshot_bytes()
    with pytest.raises(ValidationFailed) as err:
        core.register_patient(given="", family="", birth_date="1990-01-02", gender="female")
    assert any(v.field == "given" for v in err.value.violations)
    assert connector.total_calls == 0
    assert core.repository.snapshot_bytes() == before


@pytest.mark.parametrize(
    "overrides, field",
    [
        (dict(birth_date="1990-13-40"), "birthDate"),
        (dict(birth_date=""), "birthDate"),
        (dict(birth_date=(date.today() + timedelta(days=5)).isoformat()), "birthDate"),
        (dict(gender="f"), "gender"),
        (dict(gender=""), "gender"),
    ],
)
def test_register_rejects_bad_form_fields(core, connector, overrides, field):
    form = dict(GOOD_FORM)
    form.update(overrides)
    with pytest.raises(ValidationFailed) as err:
        core.register_patient(**form)
    assert any(v.field == field for v in err.value.violations)
    assert connector.total_calls == 0


def test_register_with_upstream_down_persists_nothing(core, connector):
    connector.down = True
    before = core.repository.snapshot_bytes()
    with pytest.raises(UpstreamUnavailable):
        core.register_patient(**GOOD_FORM)
    assert core.repository.snapshot_bytes() == before


def test_register_maps_upstream_rejection_through(core, connector):
    connector.reject_with = Rejected(400, outcome("error", "invariant", "gender: bad"))
    with pytest.raises(UpstreamRejected) as err:
        core.register_patient(**GOOD_FORM)
    issues = err.value.to_outcome().issue
    assert any("gender: bad" == i.diagnostics for i in issues)
    assert core.repository.count() == 0


def test_register_accepts_given_only_and_family_only(core):
    record = core.register_patient(
        given="Ana", family="", birth_date="1990-01-02", gender="female"
    )
    assert record.resource.name[0].given == ["Ana"]
    assert record.resource.name[0].family is None
    record = core.register_patient(
        given="", family="Silva", birth_date="1990-01-02", gender="female"
    )
    assert record.resource.name[0].family == "Silva"


# --- get_patient ----------------------------------------------------------------


def test_get_patient_repo_hit_makes_zero_upstream_calls(core, connector):
    record = core.register_patient(**GOOD_FORM)
    calls_before = connector.total_calls
    fetched = core.get_patient(record.fhir_id)
    assert fetched.resource == record.resource
    assert connector.total_calls == calls_before  # probe: no connector traffic


def test_get_patient_miss_reads_upstream_and_caches(core, connector):
    connector.resources["Patient"]["9"] = _named("Lima", "Iara", "9")
    record = core.get_patient("9")
    assert record.fhir_id == "9"
    assert record.origin == "upstream"
    assert connector.read_calls == [("Patient", "9")]
    core.get_patient("9")
    assert connector.read_calls == [("Patient", "9")]  # second hit is local


def test_get_patient_unknown_everywhere(core):
    with pytest.raises(RecordNotFound):
        core.get_patient("404")


def test_get_patient_miss_with_upstream_down(core, connector):
    connector.down = True
    with pytest.raises(UpstreamUnavailable):
        core.get_patient("1")


def test_create_then_get_round_trip(core, connector):
    rng = random.Random(4)
    for i in range(5):
        form = dict(
            given=f"G{i}", family=f"F{i}", birth_date="1980-05-05", gender="male"
        )
        record = core.register_patient(**form)
        again = core.get_patient(record.fhir_id)
        assert again.resource == record.resource
        assert again.recorded_at == record.recorded_at


# --- REST layer -------------------------------------------------------------------


@pytest.fixture
def patient_api(core, serve_app):
    return serve_app(create_patient_app(core), "patient-service"), core


def test_rest_list_and_register(patient_api):
    base, core = patient_api
    empty = requests.get(f"{base}/patients", timeout=5)
    assert empty.status_code == 200 and empty.json() == []
    assert "X-Degraded" not in empty.headers

    created = requests.post(
        f"{base}/patients",
        json={"given": "Ana", "family": "Silva", "birthDate": "1990-01-02", "gender": "female"},
        timeout=5,
    )
    assert created.status_code == 201
    view = created.json()
    assert view["fhirId"] == "1"
    assert "localId" not in view  # internal key never leaves the service

    listed = requests.get(f"{base}/patients", timeout=5).json()
    assert [v["fhirId"] for v in listed] == ["1"]

    fetched = requests.get(f"{base}/patients/1", timeout=5)
    assert fetched.status_code == 200
    assert fetched.json() == view


def test_rest_errors_are_operation_outcomes(patient_api):
    base, core = patient_api
    bad = requests.post(
        f"{base}/patients",
        json={"given": "", "family": "", "birthDate": "x", "gender": "?"},
        timeout=5,
    )
    assert bad.status_code == 400
    assert bad.json()["resourceType"] == "OperationOutcome"
    assert len(bad.json()["issue"]) >= 3

    missing = requests.get(f"{base}/patients/777", timeout=5)
    assert missing.status_code == 404
    assert missing.json()["resourceType"] == "OperationOutcome"

    not_json = requests.post(f"{base}/patients", data=b"<xml/>", timeout=5)
    assert not_json.status_code == 400
    assert not_json.json()["resourceType"] == "OperationOutcome"

    unrouted = requests.get(f"{base}/no/such/route", timeout=5)
    assert unrouted.status_code == 404
    assert unrouted.json()["resourceType"] == "OperationOutcome"


def test_rest_degraded_listing_sets_the_header(patient_api):
    base, core = patient_api
    core.connector.down = True
    response = requests.get(f"{base}/patients", timeout=5)
    assert response.status_code == 200
    assert response.headers.get("X-Degraded") == "true"

    unavailable = requests.post(
        f"{base}/patients",
        json={"given": "Ana", "family": "Silva", "birthDate": "1990-01-02", "gender": "female"},
        timeout=5,
    )
    assert unavailable.status_code == 502
    assert unavailable.json()["resourceType"] == "OperationOutcome"
