"""Scripted end-to-end scenarios against a running suite.

Each scenario drives the BFF the way the browser would, collects every hop
the services made (from their hop-log endpoints plus the driver's own log),
and checks the resulting call chain. The registration chain is asserted as
an exact ordered list: browser to BFF to Patient service to sandbox, with
nothing extra in between.
"""

import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import requests

from ..hops import Hop, HopLog
from ..transport import http_request
from .suite import Suite

SCENARIO_NAMES = (
    "register-patient",
    "list-patients",
    "book-appointment",
    "list-appointments",
    "degraded-upstream",
)

REGISTRATION_FORM = {
    "given": "Ana",
    "family": "Silva",
    "birthDate": "1990-01-02",
    "gender": "female",
}

BOOKING_START = "2026-09-01T09:00:00+00:00"
BOOKING_END = "2026-09-01T09:30:00+00:00"


class ScenarioAssertionFailed(Exception):
    def __init__(self, message: str, report: "ScenarioReport"):
        self.report = report
        super().__init__(message)


@dataclass
class ScenarioReport:
    name: str
    passed: bool = False
    steps: List[Dict[str, Any]] = field(default_factory=list)
    hops: List[Dict[str, Any]] = field(default_factory=list)
    entities: Dict[str, Any] = field(default_factory=dict)
    failure: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scenario": self.name,
            "passed": self.passed,
            "steps": self.steps,
            "hops": self.hops,
            "entities": self.entities,
            "failure": self.failure,
        }

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    def step(self, name: str, ok: bool, detail: str = "") -> None:
        self.steps.append({"name": name, "ok": ok, "detail": detail})


HopKey = Tuple[str, str, str, str, Optional[int]]


def _key(hop: Hop) -> HopKey:
    return (hop.caller, hop.callee, hop.method, hop.path, hop.status)


class ScenarioDriver:
    """Plays the browser: talks only to the BFF, logging its own hops."""

    def __init__(self, suite: Suite):
        self.suite = suite
        self.bff_base = suite.base_url("nav-bff")
        self.ui_log = HopLog()
        self.session = requests.Session()

    def reset_logs(self) -> None:
        self.ui_log.reset()
        for service in ("nav-bff", "patient-service", "appointment-service"):
            if self.suite.service_running(service):
                requests.post(self.suite.base_url(service) + "/_hops/reset", timeout=5)

    def call_bff(
        self, method: str, path: str, body: Optional[Dict[str, Any]] = None
    ) -> requests.Response:
        headers = {"Accept": "application/json"}
        payload = None
        if body is not None:
            payload = json.dumps(body).encode("utf-8")
            headers["Content-Type"] = "application/json"
        return http_request(
            self.session,
            method,
            self.bff_base + path,
            timeout_s=15,
            headers=headers,
            body=payload,
            caller="ui",
            callee="nav-bff",
            hop_log=self.ui_log,
        )

    def collect_hops(self) -> List[Hop]:
        hops = list(self.ui_log.snapshot())
        for service in ("nav-bff", "patient-service", "appointment-service"):
            if not self.suite.service_running(service):
                continue
            response = requests.get(
                self.suite.base_url(service) + "/_hops", timeout=5
            )
            for raw in response.json().get("hops", []):
                hops.append(Hop(**raw))
        hops.sort(key=lambda h: (h.started_at, h.ended_at))
        return hops


def _assert_exact_chain(
    report: ScenarioReport, actual: List[Hop], expected: Sequence[HopKey]
) -> None:
    actual_keys = [_key(h) for h in actual]
    for i, want in enumerate(expected):
        if i >= len(actual_keys):
            raise ScenarioAssertionFailed(
                f"hop {i} missing: expected {want}, trace ended early", report
            )
        if actual_keys[i] != want:
            raise ScenarioAssertionFailed(
                f"hop {i} diverged: expected {want}, got {actual_keys[i]}", report
            )
    if len(actual_keys) > len(expected):
        extra = actual_keys[len(expected)]
        raise ScenarioAssertionFailed(
            f"extra hop {len(expected)}: {extra}", report
        )
    report.step("hop-chain", True, f"{len(expected)} hops in prescribed order")


def _assert_hop_set(
    report: ScenarioReport, actual: List[Hop], expected: Sequence[HopKey]
) -> None:
    actual_keys = sorted(_key(h) for h in actual)
    expected_keys = sorted(expected)
    if actual_keys != expected_keys:
        missing = [k for k in expected_keys if k not in actual_keys]
        surplus = [k for k in actual_keys if k not in expected_keys]
        raise ScenarioAssertionFailed(
            f"hop set diverged: missing {missing or 'none'}, extra {surplus or 'none'}",
            report,
        )
    report.step("hop-set", True, f"{len(expected)} hops, callees as prescribed")


def _require(report: ScenarioReport, ok: bool, step: str, detail: str) -> None:
    report.step(step, ok, detail)
    if not ok:
        raise ScenarioAssertionFailed(f"{step}: {detail}", report)


def _finish(report: ScenarioReport, hops: List[Hop]) -> None:
    report.hops = [h.to_dict() for h in hops]


def _fhir_path(suite: Suite, resource_type: str) -> str:
    from urllib.parse import urlsplit

    prefix = urlsplit(suite.sandbox_fhir_base()).path
    return f"{prefix}/{resource_type}"


def _register(driver: ScenarioDriver, report: ScenarioReport) -> str:
    response = driver.call_bff("POST", "/nav/patients", REGISTRATION_FORM)
    _require(
        report,
        response.status_code == 201,
        "register",
        f"BFF answered {response.status_code}",
    )
    fhir_id = response.json().get("fhirId")
    _require(report, bool(fhir_id), "register-id", f"assigned id {fhir_id!r}")
    return fhir_id


def _scenario_register_patient(suite: Suite, driver: ScenarioDriver) -> ScenarioReport:
    report = ScenarioReport("register-patient")
    driver.reset_logs()
    fhir_id = _register(driver, report)
    hops = driver.collect_hops()
    _finish(report, hops)
    _assert_exact_chain(
        report,
        hops,
        [
            ("ui", "nav-bff", "POST", "/nav/patients", 201),
            ("nav-bff", "patient-service", "POST", "/patients", 201),
            ("patient-service", "sandbox", "POST", _fhir_path(suite, "Patient"), 201),
        ],
    )
    upstream = requests.get(
        f"{suite.sandbox_fhir_base()}/Patient/{fhir_id}", timeout=5
    )
    _require(
        report,
        upstream.status_code == 200,
        "upstream-read",
        f"sandbox holds Patient/{fhir_id}: HTTP {upstream.status_code}",
    )
    record = requests.get(
        f"{suite.base_url('patient-service')}/patients/{fhir_id}", timeout=5
    )
    _require(
        report,
        record.status_code == 200 and record.json().get("fhirId") == fhir_id,
        "record-read",
        f"patient service holds the matching record for {fhir_id}",
    )
    report.entities = {"patientId": fhir_id}
    report.passed = True
    return report


def _scenario_list_patients(suite: Suite, driver: ScenarioDriver) -> ScenarioReport:
    report = ScenarioReport("list-patients")
    driver.reset_logs()
    response = driver.call_bff("GET", "/nav/patients")
    _require(
        report,
        response.status_code == 200,
        "list",
        f"BFF answered {response.status_code}",
    )
    body = response.json()
    hops = driver.collect_hops()
    _finish(report, hops)
    _assert_exact_chain(
        report,
        hops,
        [
            ("ui", "nav-bff", "GET", "/nav/patients", 200),
            ("nav-bff", "patient-service", "GET", "/patients", 200),
            ("patient-service", "sandbox", "GET", _fhir_path(suite, "Patient"), 200),
        ],
    )
    report.entities = {"patients": len(body.get("patients", []))}
    report.passed = True
    return report


def _scenario_book_appointment(suite: Suite, driver: ScenarioDriver) -> ScenarioReport:
    report = ScenarioReport("book-appointment")
    patient_id = _register(driver, report)
    driver.reset_logs()
    response = driver.call_bff(
        "POST",
        "/nav/appointments",
        {
            "patientId": patient_id,
            "specialty": "oncology",
            "start": BOOKING_START,
            "end": BOOKING_END,
        },
    )
    _require(
        report,
        response.status_code == 201,
        "book",
        f"BFF answered {response.status_code}",
    )
    record = response.json()
    hops = driver.collect_hops()
    _finish(report, hops)
    _assert_exact_chain(
        report,
        hops,
        [
            ("ui", "nav-bff", "POST", "/nav/appointments", 201),
            ("nav-bff", "appointment-service", "POST", "/appointments", 201),
            (
                "appointment-service",
                "patient-service",
                "GET",
                f"/patients/{patient_id}",
                200,
            ),
            (
                "appointment-service",
                "sandbox",
                "POST",
                _fhir_path(suite, "Appointment"),
                201,
            ),
        ],
    )
    resource = record.get("resource", {})
    _require(
        report,
        resource.get("status") == "booked",
        "booked-status",
        f"appointment status is {resource.get('status')!r}",
    )
    _require(
        report,
        resource.get("minutesDuration") == 30,
        "duration",
        f"minutesDuration is {resource.get('minutesDuration')!r}",
    )
    report.entities = {
        "patientId": patient_id,
        "appointmentId": record.get("fhirId"),
    }
    report.passed = True
    return report


def _scenario_list_appointments(suite: Suite, driver: ScenarioDriver) -> ScenarioReport:
    report = ScenarioReport("list-appointments")
    driver.reset_logs()
    response = driver.call_bff("GET", "/nav/appointments")
    _require(
        report,
        response.status_code == 200,
        "list",
        f"BFF answered {response.status_code}",
    )
    body = response.json()
    hops = driver.collect_hops()
    _finish(report, hops)
    # the two BFF fetches run concurrently, so order is not prescribed here
    _assert_hop_set(
        report,
        hops,
        [
            ("ui", "nav-bff", "GET", "/nav/appointments", 200),
            ("nav-bff", "appointment-service", "GET", "/appointments", 200),
            ("nav-bff", "patient-service", "GET", "/patients", 200),
            (
                "appointment-service",
                "sandbox",
                "GET",
                _fhir_path(suite, "Appointment"),
                200,
            ),
            ("patient-service", "sandbox", "GET", _fhir_path(suite, "Patient"), 200),
        ],
    )
    report.entities = {"appointments": len(body.get("appointments", []))}
    report.passed = True
    return report


def _scenario_degraded_upstream(suite: Suite, driver: ScenarioDriver) -> ScenarioReport:
    if not suite.has_local_sandbox:
        raise ValueError(
            "degraded-upstream needs the bundled sandbox; it cannot stop an "
            "external upstream server"
        )
    report = ScenarioReport("degraded-upstream")
    _register(driver, report)  # warm the patient repository
    driver.reset_logs()
    suite.stop_service("sandbox")
    try:
        response = driver.call_bff("GET", "/nav/home")
        _require(
            report,
            response.status_code == 200,
            "home-degraded",
            f"BFF answered {response.status_code} with the sandbox down",
        )
        view = response.json()
        hops = driver.collect_hops()
        _finish(report, hops)
        _require(
            report,
            view.get("degraded") is True,
            "degraded-flag",
            "view reports degraded=true",
        )
        _require(
            report,
            len(view.get("patients", [])) >= 1,
            "cached-patients",
            f"{len(view.get('patients', []))} patient(s) served from the repository",
        )
        failed = [
            h for h in hops if h.callee == "sandbox" and h.status is None
        ]
        _require(
            report,
            len(failed) >= 1,
            "upstream-failures-recorded",
            f"{len(failed)} failed sandbox hops in the trace",
        )
    finally:
        suite.start_service("sandbox")
    recovered = driver.call_bff("GET", "/nav/home")
    _require(
        report,
        recovered.status_code == 200 and recovered.json().get("degraded") is False,
        "recovered",
        "view is fresh again after the sandbox returned",
    )
    report.entities = {"patients": len(view.get("patients", []))}
    report.passed = True
    return report


_SCENARIOS = {
    "register-patient": _scenario_register_patient,
    "list-patients": _scenario_list_patients,
    "book-appointment": _scenario_book_appointment,
    "list-appointments": _scenario_list_appointments,
    "degraded-upstream": _scenario_degraded_upstream,
}


def run_scenario(suite: Suite, name: str) -> ScenarioReport:
    """Run one named scenario; raises ScenarioAssertionFailed on divergence."""
    if name not in _SCENARIOS:
        raise ValueError(f"unknown scenario {name!r}; pick from {SCENARIO_NAMES}")
    driver = ScenarioDriver(suite)
    return _SCENARIOS[name](suite, driver)
