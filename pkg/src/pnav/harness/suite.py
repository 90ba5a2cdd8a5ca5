"""Launches the whole suite in one process, each service on its own port.

Services only ever talk HTTP to each other, so the microservice boundary
stays honest even though they share a process. Startup follows dependency
order with a readiness probe before each dependent; shutdown runs in
reverse. Individual services can be stopped and restarted mid-flight for
fault-injection scenarios.
"""

import socket
import threading
import time
from typing import Any, Dict, List, Optional

import requests
import uvicorn

from ..client import FhirClient, FhirEndpoint
from ..hops import HopLog
from ..repository import open_repository
from ..sandbox import SandboxCore, create_sandbox_app
from ..services.appointments import (
    AppointmentServiceCore,
    PatientDirectory,
    create_appointment_app,
)
from ..services.bff import BffCore, create_bff_app
from ..services.patients import PatientServiceCore, create_patient_app
from .config import SuiteConfig

SERVICE_ORDER = ("sandbox", "patient-service", "appointment-service", "nav-bff")

READY_TIMEOUT_S = 10.0


class SuiteError(Exception):
    pass


class PortInUse(SuiteError):
    def __init__(self, service: str, port: int):
        self.service = service
        self.port = port
        super().__init__(f"{service}: port {port} is already in use")


class DependencyNotReady(SuiteError):
    def __init__(self, service: str, detail: str):
        self.service = service
        super().__init__(f"{service} did not become ready: {detail}")


def _port_is_free(host: str, port: int) -> bool:
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.connect((host, port))
    except OSError:
        return True
    else:
        return False
    finally:
        probe.close()


class ServerHandle:
    """One uvicorn server on its own thread."""

    def __init__(self, name: str, app: Any, host: str, port: int, log_level: str):
        self.name = name
        self.app = app
        self.host = host
        self.requested_port = port
        self.log_level = log_level
        self.port: Optional[int] = None
        self._server: Optional[uvicorn.Server] = None
        self._thread: Optional[threading.Thread] = None

    @property
    def running(self) -> bool:
        return self._thread is not None and self._thread.is_alive()

    def start(self) -> None:
        port = self.port if self.port is not None else self.requested_port
        config = uvicorn.Config(
            self.app,
            host=self.host,
            port=port,
            log_level=self.log_level if self.log_level != "error" else "critical",
            access_log=False,
        )
        self._server = uvicorn.Server(config)
        self._thread = threading.Thread(
            target=self._server.run, name=f"pnav-{self.name}", daemon=True
        )
        self._thread.start()
        deadline = time.time() + READY_TIMEOUT_S
        while time.time() < deadline:
            if self._server.started:
                break
            if not self._thread.is_alive():
                raise DependencyNotReady(self.name, "server thread exited on startup")
            time.sleep(0.01)
        if not self._server.started:
            self.stop()
            raise DependencyNotReady(self.name, "server did not start in time")
        self.port = self._server.servers[0].sockets[0].getsockname()[1]

    def stop(self) -> None:
        if self._server is not None:
            self._server.should_exit = True
        if self._thread is not None:
            self._thread.join(timeout=READY_TIMEOUT_S)
        self._server = None
        self._thread = None

    def base_url(self) -> str:
        return f"http://{self.host}:{self.port}"


def _probe_ready(base_url: str, timeout_s: float = READY_TIMEOUT_S) -> None:
    deadline = time.time() + timeout_s
    last = "no attempt made"
    while time.time() < deadline:
        try:
            response = requests.get(base_url + "/health", timeout=1)
            if response.status_code == 200:
                return
            last = f"HTTP {response.status_code}"
        except requests.RequestException as exc:
            last = type(exc).__name__
        time.sleep(0.05)
    raise DependencyNotReady(base_url, last)


class Suite:
    """Handles to the running services plus their cores and hop logs."""

    def __init__(self, config: SuiteConfig):
        self.config = config
        self.handles: Dict[str, ServerHandle] = {}
        self.hop_logs: Dict[str, HopLog] = {
            "patient-service": HopLog(),
            "appointment-service": HopLog(),
            "nav-bff": HopLog(),
        }
        self.sandbox_core: Optional[SandboxCore] = None
        self.patient_core: Optional[PatientServiceCore] = None
        self.appointment_core: Optional[AppointmentServiceCore] = None
        self.bff_core: Optional[BffCore] = None

    def base_url(self, service: str) -> str:
        return self.handles[service].base_url()

    @property
    def has_local_sandbox(self) -> bool:
        return "sandbox" in self.handles

    def sandbox_fhir_base(self) -> str:
        if self.config.upstream_base:
            return self.config.upstream_base.rstrip("/")
        return self.base_url("sandbox") + self.config.sandbox_base_path

    def service_running(self, service: str) -> bool:
        handle = self.handles.get(service)
        return handle is not None and handle.running

    def stop_service(self, service: str) -> None:
        self.handles[service].stop()

    def start_service(self, service: str) -> None:
        """Restart a stopped service on the same port with the same state."""
        handle = self.handles[service]
        if handle.running:
            return
        handle.start()
        _probe_ready(handle.base_url())

    def shutdown(self) -> None:
        for name in reversed(SERVICE_ORDER):
            handle = self.handles.get(name)
            if handle is not None:
                handle.stop()

    def __enter__(self) -> "Suite":
        return self

    def __exit__(self, *exc_info: Any) -> None:
        self.shutdown()


def launch_suite(config: Optional[SuiteConfig] = None) -> Suite:
    """Start sandbox, patient, appointment and BFF in dependency order.

    Each dependent is wired with the already-resolved base URL of what it
    needs, then readiness-probed before the next one starts.
    """
    config = config or SuiteConfig()
    config.validate()
    suite = Suite(config)

    for service, port in config.ports().items():
        if service == "sandbox" and config.upstream_base is not None:
            continue
        if port != 0 and not _port_is_free(config.host, port):
            raise PortInUse(service, port)

    started: List[str] = []
    try:
        if config.upstream_base is None:
            # sandbox first: everyone else talks to it
            suite.sandbox_core = SandboxCore()
            if config.seed_path:
                suite.sandbox_core.load_seed(config.seed_path)
            sandbox_app = create_sandbox_app(
                suite.sandbox_core, config.sandbox_base_path
            )
            handle = ServerHandle(
                "sandbox", sandbox_app, config.host, config.sandbox_port, config.log_level
            )
            suite.handles["sandbox"] = handle
            handle.start()
            started.append("sandbox")
            _probe_ready(handle.base_url())
        sandbox_base = suite.sandbox_fhir_base()

        patient_log = suite.hop_logs["patient-service"]
        suite.patient_core = PatientServiceCore(
            connector=FhirClient(
                FhirEndpoint(sandbox_base),
                hop_log=patient_log,
                caller="patient-service",
                callee="sandbox",
            ),
            repository=open_repository(config.patient_repository),
        )
        patient_app = create_patient_app(suite.patient_core, patient_log)
        handle = ServerHandle(
            "patient-service",
            patient_app,
            config.host,
            config.patient_port,
            config.log_level,
        )
        suite.handles["patient-service"] = handle
        handle.start()
        started.append("patient-service")
        _probe_ready(handle.base_url())
        patient_base = handle.base_url()

        appointment_log = suite.hop_logs["appointment-service"]
        suite.appointment_core = AppointmentServiceCore(
            connector=FhirClient(
                FhirEndpoint(sandbox_base),
                hop_log=appointment_log,
                caller="appointment-service",
                callee="sandbox",
            ),
            patients=PatientDirectory(patient_base, hop_log=appointment_log),
            repository=open_repository(config.appointment_repository),
        )
        appointment_app = create_appointment_app(
            suite.appointment_core, appointment_log
        )
        handle = ServerHandle(
            "appointment-service",
            appointment_app,
            config.host,
            config.appointment_port,
            config.log_level,
        )
        suite.handles["appointment-service"] = handle
        handle.start()
        started.append("appointment-service")
        _probe_ready(handle.base_url())
        appointment_base = handle.base_url()

        bff_log = suite.hop_logs["nav-bff"]
        suite.bff_core = BffCore(
            patient_base, appointment_base, hop_log=bff_log
        )
        bff_app = create_bff_app(suite.bff_core, bff_log, config.ui_origin)
        handle = ServerHandle(
            "nav-bff", bff_app, config.host, config.bff_port, config.log_level
        )
        suite.handles["nav-bff"] = handle
        handle.start()
        started.append("nav-bff")
        _probe_ready(handle.base_url())
    except Exception:
        for name in reversed(started):
            suite.handles[name].stop()
        raise
    return suite
