"""Command line entry points: run the suite, replay scenarios, build seeds."""

import json
import os
import signal
import sys
import threading
import time
from typing import Optional

import click

from .harness import (
    ScenarioAssertionFailed,
    SCENARIO_NAMES,
    launch_suite,
    load_config,
    run_scenario,
    write_seed_file,
)
from .harness.suite import SERVICE_ORDER, SuiteError


@click.group()
def main() -> None:
    """Patient navigation suite tooling."""


@main.group()
def suite() -> None:
    """Run and drive the four-service suite."""


def _load(config_path: Optional[str], seed_path: Optional[str]):
    config = load_config(config_path)
    if seed_path:
        config.seed_path = seed_path
        config.validate()
    return config


@suite.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--seed", "seed_path", type=click.Path(exists=True), default=None)
def up(config_path: Optional[str], seed_path: Optional[str]) -> None:
    """Start sandbox, services and BFF; run until interrupted."""
    config = _load(config_path, seed_path)
    try:
        running = launch_suite(config)
    except SuiteError as exc:
        raise click.ClickException(str(exc))
    with open(config.pidfile, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "pid": os.getpid(),
                "services": {n: running.base_url(n) for n in SERVICE_ORDER},
            },
            fh,
        )
    for name in SERVICE_ORDER:
        click.echo(f"{name}: {running.base_url(name)}")
    click.echo("suite is up; Ctrl-C (or `pnav suite down`) to stop")

    stop = threading.Event()

    def _on_signal(signum, frame) -> None:
        stop.set()

    signal.signal(signal.SIGINT, _on_signal)
    signal.signal(signal.SIGTERM, _on_signal)
    try:
        while not stop.wait(0.5):
            pass
    finally:
        running.shutdown()
        try:
            os.remove(config.pidfile)
        except OSError:
            pass
        click.echo("suite stopped")


def _still_listening(url: str) -> bool:
    from urllib.parse import urlsplit
    import socket

    parts = urlsplit(url)
    probe = socket.socket()
    probe.settimeout(0.5)
    try:
        probe.connect((parts.hostname, parts.port))
    except OSError:
        return False
    else:
        return True
    finally:
        probe.close()


@suite.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def down(config_path: Optional[str]) -> None:
    """Stop a suite started by `pnav suite up`."""
    config = load_config(config_path)
    try:
        with open(config.pidfile, "r", encoding="utf-8") as fh:
            state = json.load(fh)
        pid = int(state["pid"])
        services = dict(state.get("services") or {})
    except (OSError, ValueError, KeyError):
        raise click.ClickException(f"no running suite found ({config.pidfile})")
    try:
        os.kill(pid, signal.SIGTERM)
    except ProcessLookupError:
        os.remove(config.pidfile)
        raise click.ClickException("suite process is already gone; removed stale pidfile")
    # wait for the ports to close, not for process reaping (the suite owner
    # may hold the exit status for a while)
    deadline = time.time() + 15
    while time.time() < deadline:
        if not any(_still_listening(url) for url in services.values()):
            try:
                os.remove(config.pidfile)
            except OSError:
                pass
            click.echo("suite stopped")
            return
        time.sleep(0.1)
    raise click.ClickException(f"suite process {pid} did not stop in time")


@suite.command()
@click.argument("name", type=click.Choice(SCENARIO_NAMES))
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--seed", "seed_path", type=click.Path(exists=True), default=None)
@click.option("--trace", "trace_path", type=click.Path(), default=None)
def scenario(
    name: str,
    config_path: Optional[str],
    seed_path: Optional[str],
    trace_path: Optional[str],
) -> None:
    """Launch an ephemeral suite, replay one scenario, tear it down."""
    config = _load(config_path, seed_path)
    try:
        running = launch_suite(config)
    except SuiteError as exc:
        raise click.ClickException(str(exc))
    report = None
    try:
        report = run_scenario(running, name)
    except ScenarioAssertionFailed as exc:
        report = exc.report
        report.failure = str(exc)
    finally:
        running.shutdown()
    for step in report.steps:
        mark = "ok" if step["ok"] else "FAIL"
        click.echo(f"[{mark}] {step['name']}: {step['detail']}")
    if trace_path:
        report.write(trace_path)
        click.echo(f"trace written to {trace_path}")
    if report.passed:
        click.echo(f"scenario {name}: PASS ({len(report.hops)} hops)")
    else:
        click.echo(f"scenario {name}: FAIL ({report.failure})")
        sys.exit(1)


@suite.group()
def seed() -> None:
    """Seed data tooling."""


@seed.command()
@click.option("--patients", type=int, required=True)
@click.option("--appointments", type=int, required=True)
@click.option("--rng-seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(), default="seed.json", show_default=True)
def generate(patients: int, appointments: int, rng_seed: int, out_path: str) -> None:
    """Write a deterministic collection bundle of demo resources."""
    if patients < 0 or appointments < 0:
        raise click.ClickException("counts must be non-negative")
    try:
        bundle = write_seed_file(out_path, patients, appointments, rng_seed)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    click.echo(
        f"wrote {len(bundle.entry)} resources "
        f"({patients} patients, {appointments} appointments) to {out_path}"
    )


if __name__ == "__main__":
    main()
