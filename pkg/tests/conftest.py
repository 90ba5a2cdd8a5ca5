import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pnav.harness.config import SuiteConfig
from pnav.harness.suite import ServerHandle, launch_suite
from stubserver import StubServer


def ephemeral_config(**overrides) -> SuiteConfig:
    config = SuiteConfig(
        sandbox_port=0, patient_port=0, appointment_port=0, bff_port=0
    )
    for key, value in overrides.items():
        setattr(config, key, value)
    return config


@pytest.fixture
def suite():
    running = launch_suite(ephemeral_config())
    yield running
    running.shutdown()


@pytest.fixture
def stub_server():
    server = StubServer().start()
    yield server
    server.stop()


@pytest.fixture
def serve_app():
    """Run a single FastAPI app on an ephemeral port for one test."""
    handles = []

    def _serve(app, name="test-app"):
        handle = ServerHandle(name, app, "127.0.0.1", 0, "error")
        handle.start()
        handles.append(handle)
        return handle.base_url()

    yield _serve
    for handle in handles:
        handle.stop()
