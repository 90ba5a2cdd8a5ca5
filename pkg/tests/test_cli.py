import json
import os
import signal
import socket
import subprocess
import sys
import time

import pytest
import requests


def run_cli(*args, env=None, timeout=120):
    merged = dict(os.environ)
    if env:
        merged.update(env)
    return subprocess.run(
        [sys.executable, "-m", "pnav.cli", *args],
        capture_output=True,
        text=True,
        timeout=timeout,
        env=merged,
    )


def free_ports(n):
    sockets = [socket.socket() for _ in range(n)]
    try:
        for s in sockets:
            s.bind(("127.0.0.1", 0))
        return [s.getsockname()[1] for s in sockets]
    finally:
        for s in sockets:
            s.close()


def test_seed_generate_writes_a_deterministic_bundle(tmp_path):
    out = tmp_path / "seed.json"
    result = run_cli(
        "suite", "seed", "generate",
        "--patients", "3", "--appointments", "2",
        "--rng-seed", "9", "--out", str(out),
    )
    assert result.returncode == 0, result.stderr
    first = out.read_text()
    data = json.loads(first)
    assert data["resourceType"] == "Bundle" and data["type"] == "collection"
    assert len(data["entry"]) == 5
    run_cli(
        "suite", "seed", "generate",
        "--patients", "3", "--appointments", "2",
        "--rng-seed", "9", "--out", str(out),
    )
    assert out.read_text() == first


def test_seed_generate_rejects_impossible_requests(tmp_path):
    result = run_cli(
        "suite", "seed", "generate", "--patients", "0", "--appointments", "2",
        "--out", str(tmp_path / "x.json"),
    )
    assert result.returncode != 0


def test_scenario_subcommand_passes_and_writes_a_trace(tmp_path):
    trace = tmp_path / "trace.json"
    ports = free_ports(4)
    env = {
        "PNAV_SANDBOX_PORT": str(ports[0]),
        "PNAV_PATIENT_PORT": str(ports[1]),
        "PNAV_APPOINTMENT_PORT": str(ports[2]),
        "PNAV_BFF_PORT": str(ports[3]),
    }
    result = run_cli(
        "suite", "scenario", "register-patient", "--trace", str(trace), env=env
    )
    assert result.returncode == 0, result.stderr + result.stdout
    assert "scenario register-patient: PASS" in result.stdout
    data = json.loads(trace.read_text())
    assert data["passed"] is True
    assert len(data["hops"]) == 3


def test_scenario_subcommand_rejects_unknown_names():
    result = run_cli("suite", "scenario", "no-such-thing")
    assert result.returncode != 0


def test_suite_up_serves_until_down(tmp_path):
    ports = free_ports(4)
    pidfile = tmp_path / "suite.pid"
    env = dict(
        PNAV_SANDBOX_PORT=str(ports[0]),
        PNAV_PATIENT_PORT=str(ports[1]),
        PNAV_APPOINTMENT_PORT=str(ports[2]),
        PNAV_BFF_PORT=str(ports[3]),
        PNAV_PIDFILE=str(pidfile),
    )
    merged = dict(os.environ)
    merged.update(env)
    up = subprocess.Popen(
        [sys.executable, "-m", "pnav.cli", "suite", "up"],
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        text=True,
        env=merged,
    )
    try:
        bff = f"http://127.0.0.1:{ports[3]}"
        deadline = time.time() + 30
        ready = False
        while time.time() < deadline:
            if up.poll() is not None:
                out, err = up.communicate()
                pytest.fail(f"suite up exited early: {out}\n{err}")
            try:
                if requests.get(bff + "/health", timeout=1).status_code == 200:
                    ready = True
                    break
            except requests.RequestException:
                time.sleep(0.1)
        assert ready, "suite did not come up"
        # the pidfile lands just after the last readiness probe
        deadline = time.time() + 10
        while not pidfile.exists() and time.time() < deadline:
            time.sleep(0.05)
        assert pidfile.exists()
        assert json.loads(pidfile.read_text())["pid"] == up.pid

        home = requests.get(bff + "/nav/home", timeout=10)
        assert home.status_code == 200

        down = run_cli("suite", "down", env=env)
        assert down.returncode == 0, down.stderr
        assert up.wait(timeout=30) == 0
        with pytest.raises(requests.ConnectionError):
            requests.get(bff + "/health", timeout=2)
    finally:
        if up.poll() is None:
            up.send_signal(signal.SIGTERM)
            up.wait(timeout=15)


def test_suite_down_without_a_running_suite(tmp_path):
    env = {"PNAV_PIDFILE": str(tmp_path / "nothing.pid")}
    result = run_cli("suite", "down", env=env)
    assert result.returncode != 0
    assert "no running suite" in result.stderr
