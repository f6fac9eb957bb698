"""Operator entry point.

Subcommands: run (daemon), simulate (scripted occupants on a virtual
clock), analyze (offline changepoint extraction from CSV), export
(retained session -> CSV), config print-defaults (parameter audit).

Exit codes: 0 ok, 2 config error, 3 device error, 4 data error.
"""

from __future__ import annotations

import configparser
import csv as csv_mod
import json
import logging
import signal as os_signal
import sys
from pathlib import Path

import click

from . import config as cfg
from .api import ApiServer
from .device import Scenario, OccupantScript, SerialBackend, SimulatedBackend, open_serial
from .errors import (
    ConfigInvalid,
    DataDirLocked,
    DeviceOpenFailed,
    HeartSwayError,
    InvalidScript,
    ParseError,
    SeriesTooShort,
    SessionNotFound,
    SessionPurged,
)
from .events import EventBus
from .replay import cue_sheet, schedule_rows
from .runtime import EventLoop, SystemClock, VirtualClock
from .session import Engine
from .signal import (
    FilterParams,
    PeltParams,
    StretchSample,
    movement_moments,
    rolling_outlier_filter,
)
from .store import TraceStore

EXIT_CONFIG = 2
EXIT_DEVICE = 3
EXIT_DATA = 4


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
@click.option("--verbose", is_flag=True, help="Debug logging.")
def main(verbose: bool):
    """HeartSway biodata trace capture/replay engine."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


@main.group("config")
def config_group():
    """Configuration helpers."""


@config_group.command("print-defaults")
def print_defaults():
    """Print every engine default in config-file form."""
    click.echo(cfg.print_defaults(), nl=False)


@main.command()
@click.option("--config", "config_path", type=click.Path(), help="Engine config file.")
@click.option("--sim", is_flag=True, help="Use the simulated device backend.")
@click.option("--woz", is_flag=True, help="Wizard-of-Oz mode: cue swings, do not actuate.")
@click.option("--seed-trace", type=click.Path(exists=True), help="Schedule JSON for the first occupant.")
@click.option("--bind", help="API bind address, host:port (default loopback).")
def run(config_path, sim, woz, seed_trace, bind):
    """Run the engine daemon against real or simulated hardware."""
    try:
        config = cfg.load_config(config_path)
    except ConfigInvalid as exc:
        _fail(EXIT_CONFIG, str(exc))
    if woz:
        config.woz_mode = True
    if seed_trace:
        config.seed_trace = Path(seed_trace)
    if bind:
        config.api_bind = bind
    if sim:
        config.device = "sim"

    loop = EventLoop(SystemClock())
    try:
        store = TraceStore(config.data_dir)
    except DataDirLocked as exc:
        _fail(EXIT_DEVICE, str(exc))

    try:
        if config.device == "sim":
            backend = SimulatedBackend(loop)
        else:
            backend = SerialBackend(loop, open_serial(config.device, config.serial_baud))
            backend.start_reader()
    except DeviceOpenFailed as exc:
        store.close()
        _fail(EXIT_DEVICE, str(exc))

    bus = EventBus()
    engine = Engine(config, store, backend, loop, bus)
    server = ApiServer(engine, bus, config.api_bind, config.console_dir)
    server.start()
    click.echo(f"engine up; api on http://{server.address}  data in {config.data_dir}")

    def on_signal(_sig, _frame):
        loop.post(engine.stop)
        loop.stop()

    os_signal.signal(os_signal.SIGINT, on_signal)
    os_signal.signal(os_signal.SIGTERM, on_signal)
    try:
        loop.post(engine.start)
        loop.run()
        engine.stop()
    finally:
        server.stop()
        backend.close()
        store.close()


@main.command()
@click.option("--config", "config_path", type=click.Path(), help="Engine config file.")
@click.option("--scenario", "scenario_path", type=click.Path(exists=True), required=True,
              help="Occupant scenario file (INI).")
@click.option("--out", "out_dir", type=click.Path(), help="Directory for run artifacts.")
@click.option("--woz", is_flag=True)
def simulate(config_path, scenario_path, out_dir, woz):
    """Run a scripted multi-occupant scenario on a virtual clock."""
    try:
        config = cfg.load_config(config_path)
        scenario = load_scenario(scenario_path)
    except (ConfigInvalid, InvalidScript) as exc:
        _fail(EXIT_CONFIG, str(exc))
    if woz:
        config.woz_mode = True
    try:
        store = TraceStore(config.data_dir)
    except DataDirLocked as exc:
        _fail(EXIT_DEVICE, str(exc))

    result = run_scenario(config, scenario, store)
    store.close()

    click.echo(
        f"scenario complete: {len(scenario.occupants)} occupants, "
        f"{result['beats_fired']} beat pulses, {result['swings_fired']} swing events"
    )
    for line in result["session_lines"]:
        click.echo(line)
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "io_log.csv", "w", newline="") as fh:
            writer = csv_mod.writer(fh)
            writer.writerow(["t_ms", "channel", "detail"])
            writer.writerows(result["io_log"])
        with open(out / "events.jsonl", "w") as fh:
            for event in result["events"]:
                fh.write(json.dumps(event.to_doc()) + "\n")
        click.echo(f"artifacts in {out}")


def run_scenario(config, scenario: Scenario, store: TraceStore) -> dict:
    """Drive a full scenario under a virtual clock; returns run artifacts.

    Shared by the simulate subcommand and the acceptance suite.
    """
    clock = VirtualClock(start_ms=0)
    loop = EventLoop(clock)
    backend = SimulatedBackend(loop, scenario)
    bus = EventBus()
    engine = Engine(config, store, backend, loop, bus)
    engine.start()
    horizon = scenario.end_ms() + config.grace_ms + 4 * config.presence.poll_period_ms + 2000
    loop.run(until_ms=horizon)
    engine.stop()

    beats = sum(1 for e in backend.io_log if e.channel == "vibrate")
    swings = sum(1 for e in backend.io_log if e.channel == "swing")
    lines = []
    for sid, purged in store.session_ids().items():
        lines.append(f"  session {sid}: {'purged' if purged else 'retained'}")
    return {
        "io_log": backend.io_log_rows(),
        "events": bus.tail(limit=10_000),
        "beats_fired": beats,
        "swings_fired": swings,
        "session_lines": lines,
        "engine": engine,
        "backend": backend,
        "bus": bus,
    }


def load_scenario(path: str) -> Scenario:
    """Parse an occupant scenario file (key-value INI)."""
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise InvalidScript(f"{path}: {exc}") from exc
    seed = parser.getint("scenario", "seed", fallback=0)
    occupants = []
    for section in parser.sections():
        if not section.startswith("occupant"):
            continue
        sec = parser[section]
        try:
            script = OccupantScript(
                duration_ms=sec.getint("duration_ms"),
                bpm_baseline=sec.getfloat("bpm_baseline", 60.0),
                bpm_drift_per_min=sec.getfloat("bpm_drift_per_min", 0.0),
                bpm_noise_sigma=sec.getfloat("bpm_noise_sigma", 0.0),
                stretch_baseline=sec.getfloat("stretch_baseline", 330.0),
                movement_shift=sec.getfloat("movement_shift", 60.0),
                stretch_noise_sigma=sec.getfloat("stretch_noise_sigma", 0.0),
                movement_times_ms=_int_list(sec.get("movement_times_ms", "")),
                absence_intervals_ms=_int_pairs(sec.get("absence_intervals_ms", "")),
            )
        except (ValueError, TypeError) as exc:
            raise InvalidScript(f"[{section}]: {exc}") from exc
        occupants.append((sec.getint("arrive_ms", 0), script))
    occupants.sort(key=lambda pair: pair[0])
    return Scenario(occupants=occupants, seed=seed)


def _int_list(raw: str) -> tuple[int, ...]:
    return tuple(int(v.strip()) for v in raw.split(",") if v.strip())


def _int_pairs(raw: str) -> tuple[tuple[int, int], ...]:
    pairs = []
    for chunk in raw.split(";"):
        if chunk.strip():
            a, b = chunk.split("-")
            pairs.append((int(a), int(b)))
    return tuple(pairs)


@main.command()
@click.argument("csv_path", type=click.Path(exists=True))
@click.option("--out", "out_dir", type=click.Path(), help="Directory for analysis outputs.")
@click.option("--window", default=100, show_default=True)
@click.option("--k-sigma", default=3.0, show_default=True)
@click.option("--penalty", default=10.0, show_default=True)
@click.option("--bandwidth", default=None, type=float, help="RBF gamma (default: median heuristic).")
def analyze(csv_path, out_dir, window, k_sigma, penalty, bandwidth):
    """Offline pipeline: CSV series -> filtered series + changepoint times."""
    try:
        samples = read_series_csv(csv_path)
    except ParseError as exc:
        _fail(EXIT_DATA, str(exc))
    fp = FilterParams(window=window, k_sigma=k_sigma)
    pp = PeltParams(penalty=penalty, kernel_bandwidth=bandwidth)
    try:
        moments = movement_moments(samples, fp, pp)
    except SeriesTooShort as exc:
        _fail(EXIT_DATA, f"series too short: {exc}")
    for m in moments:
        click.echo(m.t)

    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        kept, removed = rolling_outlier_filter([s.value for s in samples], fp)
        removed_set = set(int(i) for i in removed)
        with open(out / "filtered.csv", "w", newline="") as fh:
            writer = csv_mod.writer(fh)
            writer.writerow(["t_ms", "value"])
            for i, s in enumerate(samples):
                if i not in removed_set:
                    writer.writerow([s.t, f"{s.value:g}"])
        (out / "changepoints.csv").write_text(
            "t_ms\n" + "".join(f"{m.t}\n" for m in moments)
        )
        # Rehearsal cue sheet: offsets are relative to the first sample.
        pseudo = _pseudo_schedule(samples, moments)
        (out / "cuesheet.txt").write_text(pseudo)
        click.echo(f"analysis in {out}")


def _pseudo_schedule(samples, moments) -> str:
    from .replay import ReplaySchedule, cue_sheet as sheet

    t0 = samples[0].t
    period = samples[-1].t - t0 + 1
    schedule = ReplaySchedule(
        source_session="analysis",
        beat_offsets_ms=(),
        swing_offsets_ms=tuple(m.t - t0 for m in moments),
        loop_period_ms=period,
    )
    return sheet(schedule)


def read_series_csv(path: str) -> list[StretchSample]:
    """Parse `t_ms,value` rows; a header line is allowed. Raises ParseError
    with the 1-based line number of the first bad row."""
    samples = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv_mod.reader(fh), start=1):
            if not row or (lineno == 1 and row[0].strip().lower() in ("t_ms", "t")):
                continue
            try:
                if len(row) != 2:
                    raise ValueError(f"expected 2 columns, got {len(row)}")
                samples.append(StretchSample(t=int(row[0]), value=float(row[1])))
            except ValueError as exc:
                raise ParseError(lineno, str(exc)) from None
    return samples


@main.command()
@click.argument("selector")
@click.option("--config", "config_path", type=click.Path(), help="Engine config file.")
@click.option("--data-dir", type=click.Path(), help="Data directory (overrides config).")
@click.option("--out", "out_dir", type=click.Path(), default=".", show_default=True)
def export(selector, config_path, data_dir, out_dir):
    """Export a retained session as CSV files.

    SELECTOR is a session id, or `predecessor` for the prepared trace's
    source session.  Purged sessions refuse with a data error.
    """
    if data_dir is None:
        try:
            config = cfg.load_config(config_path)
            data_dir = config.data_dir
        except ConfigInvalid as exc:
            _fail(EXIT_CONFIG, str(exc))
    store = TraceStore(data_dir, acquire_lock=False)
    try:
        if selector == "predecessor":
            prepared = store.peek_prepared()
            if prepared is None:
                _fail(EXIT_DATA, "no prepared trace in store")
            selector = prepared.source_session
        try:
            record = store.read_session(selector)
        except SessionPurged:
            _fail(EXIT_DATA, f"session {selector} was purged (discard-after-use)")
        except SessionNotFound:
            _fail(EXIT_DATA, f"session {selector} not found")
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        bpm_path = out / f"{record.id}_bpm.csv"
        stretch_path = out / f"{record.id}_stretch.csv"
        with open(bpm_path, "w", newline="") as fh:
            writer = csv_mod.writer(fh)
            writer.writerow(["t_ms", "bpm"])
            writer.writerows((s.t, f"{s.bpm:g}") for s in record.bpm)
        with open(stretch_path, "w", newline="") as fh:
            writer = csv_mod.writer(fh)
            writer.writerow(["t_ms", "stretch"])
            writer.writerows((s.t, f"{s.value:g}") for s in record.stretch)
        click.echo(f"{bpm_path}\n{stretch_path}")
    finally:
        store.close()


@main.command("cue-sheet")
@click.option("--config", "config_path", type=click.Path(), help="Engine config file.")
@click.option("--data-dir", type=click.Path(), help="Data directory (overrides config).")
@click.option("--csv", "csv_path", type=click.Path(), help="Also write the schedule as kind,offset_ms CSV.")
def cue_sheet_cmd(config_path, data_dir, csv_path):
    """Print the WoZ cue sheet for the currently prepared trace."""
    if data_dir is None:
        try:
            config = cfg.load_config(config_path)
            data_dir = config.data_dir
        except ConfigInvalid as exc:
            _fail(EXIT_CONFIG, str(exc))
    store = TraceStore(data_dir, acquire_lock=False)
    try:
        prepared = store.peek_prepared()
        if prepared is None:
            _fail(EXIT_DATA, "no prepared trace in store")
        if csv_path:
            with open(csv_path, "w", newline="") as fh:
                writer = csv_mod.writer(fh)
                writer.writerow(["kind", "offset_ms"])
                writer.writerows(schedule_rows(prepared.schedule))
        click.echo(cue_sheet(prepared.schedule), nl=False)
    finally:
        store.close()


if __name__ == "__main__":
    main()
