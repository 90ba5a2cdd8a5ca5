"""Suite configuration: one YAML file, a few environment overrides.

Port 0 asks the OS for a free port, which is how the test suite runs many
suites side by side; fixed ports are for the interactive `pnav suite up`.
"""

import os
import tempfile
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import yaml


class ConfigError(Exception):
    pass


DEFAULT_PORTS = {
    "sandbox": 8090,
    "patient-service": 8091,
    "appointment-service": 8092,
    "nav-bff": 8093,
}

ENV_PREFIX = "PNAV_"


@dataclass
class SuiteConfig:
    host: str = "127.0.0.1"
    sandbox_port: int = DEFAULT_PORTS["sandbox"]
    patient_port: int = DEFAULT_PORTS["patient-service"]
    appointment_port: int = DEFAULT_PORTS["appointment-service"]
    bff_port: int = DEFAULT_PORTS["nav-bff"]
    sandbox_base_path: str = ""
    # point the services at an already-running FHIR server instead of the
    # bundled sandbox (the sandbox then never starts; seeding is unavailable)
    upstream_base: Optional[str] = None
    seed_path: Optional[str] = None
    patient_repository: str = "memory://"
    appointment_repository: str = "memory://"
    log_level: str = "error"
    ui_origin: str = "*"
    pidfile: str = field(
        default_factory=lambda: os.path.join(tempfile.gettempdir(), "pnav-suite.pid")
    )

    def ports(self) -> Dict[str, int]:
        return {
            "sandbox": self.sandbox_port,
            "patient-service": self.patient_port,
            "appointment-service": self.appointment_port,
            "nav-bff": self.bff_port,
        }

    def validate(self) -> None:
        fixed = [p for p in self.ports().values() if p != 0]
        if len(fixed) != len(set(fixed)):
            raise ConfigError("service ports must be distinct")
        for name, port in self.ports().items():
            if port < 0 or port > 65535:
                raise ConfigError(f"{name} port out of range: {port}")
        if self.upstream_base is not None:
            if not self.upstream_base.startswith(("http://", "https://")):
                raise ConfigError(
                    f"upstream_base must be an absolute http(s) URL: {self.upstream_base!r}"
                )
            if self.seed_path is not None:
                raise ConfigError("seeding applies to the bundled sandbox only")
        if self.seed_path is not None and not os.path.exists(self.seed_path):
            raise ConfigError(f"seed file does not exist: {self.seed_path}")
        for label, uri in (
            ("patient", self.patient_repository),
            ("appointment", self.appointment_repository),
        ):
            scheme = uri.split(":", 1)[0] if ":" in uri else uri
            if scheme not in ("memory", "file"):
                raise ConfigError(
                    f"{label} repository scheme {scheme!r} is not bundled; "
                    "register it before launching"
                )


def _section(data: Dict[str, Any], key: str) -> Dict[str, Any]:
    value = data.get(key) or {}
    if not isinstance(value, dict):
        raise ConfigError(f"config section {key!r} must be a mapping")
    return value


def load_config(
    path: Optional[str] = None, env: Optional[Dict[str, str]] = None
) -> SuiteConfig:
    """Build a SuiteConfig from (optional) YAML plus PNAV_* env overrides.

    Recognized env vars: PNAV_HOST, PNAV_SANDBOX_PORT, PNAV_PATIENT_PORT,
    PNAV_APPOINTMENT_PORT, PNAV_BFF_PORT, PNAV_SEED, PNAV_UPSTREAM_BASE,
    PNAV_PATIENT_REPOSITORY, PNAV_APPOINTMENT_REPOSITORY, PNAV_UI_ORIGIN,
    PNAV_LOG_LEVEL, PNAV_PIDFILE.
    """
    env = dict(os.environ if env is None else env)
    config = SuiteConfig()
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config top level must be a mapping")
        config.host = str(data.get("host", config.host))
        config.log_level = str(data.get("log_level", config.log_level))
        config.ui_origin = str(data.get("ui_origin", config.ui_origin))
        if data.get("pidfile"):
            config.pidfile = str(data["pidfile"])
        sandbox = _section(data, "sandbox")
        config.sandbox_port = int(sandbox.get("port", config.sandbox_port))
        config.sandbox_base_path = str(sandbox.get("base_path", ""))
        if sandbox.get("seed"):
            config.seed_path = str(sandbox["seed"])
        if data.get("upstream_base"):
            config.upstream_base = str(data["upstream_base"])
        patient = _section(data, "patient_service")
        config.patient_port = int(patient.get("port", config.patient_port))
        config.patient_repository = str(
            patient.get("repository", config.patient_repository)
        )
        appointment = _section(data, "appointment_service")
        config.appointment_port = int(
            appointment.get("port", config.appointment_port)
        )
        config.appointment_repository = str(
            appointment.get("repository", config.appointment_repository)
        )
        bff = _section(data, "bff")
        config.bff_port = int(bff.get("port", config.bff_port))

    overrides = {
        "HOST": ("host", str),
        "SANDBOX_PORT": ("sandbox_port", int),
        "PATIENT_PORT": ("patient_port", int),
        "APPOINTMENT_PORT": ("appointment_port", int),
        "BFF_PORT": ("bff_port", int),
        "SEED": ("seed_path", str),
        "UPSTREAM_BASE": ("upstream_base", str),
        "PATIENT_REPOSITORY": ("patient_repository", str),
        "APPOINTMENT_REPOSITORY": ("appointment_repository", str),
        "UI_ORIGIN": ("ui_origin", str),
        "LOG_LEVEL": ("log_level", str),
        "PIDFILE": ("pidfile", str),
    }
    for suffix, (attr, cast) in overrides.items():
        raw = env.get(ENV_PREFIX + suffix)
        if raw is not None:
            try:
                setattr(config, attr, cast(raw))
            except ValueError:
                raise ConfigError(f"{ENV_PREFIX}{suffix}={raw!r} is not valid") from None

    config.validate()
    return config
