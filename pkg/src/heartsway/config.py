"""Engine configuration: one declarative INI file plus environment overrides.

Defaults reproduce the deployed parameters exactly — outlier window 100,
3-sigma threshold, changepoint penalty 10, 30-point pages, 1 Hz stretch
sampling, 40% / 100 ms vibration pulses — so a bare `heartsway run` behaves
like the field installation.  Environment variables named
HEARTSWAY_<SECTION>_<KEY> override file values, e.g. HEARTSWAY_PELT_PENALTY.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .device import PresenceParams
from .errors import ConfigInvalid
from .replay import VibrationPulse
from .signal import FilterParams, PeltParams

ENV_PREFIX = "HEARTSWAY"

DEFAULTS_INI = """\
[engine]
data_dir =
device = sim
serial_baud = 115200
api_bind = 127.0.0.1:8787
woz_mode = false
seed_trace =
console_dir =

[filter]
window = 100
k_sigma = 3
min_window = 5

[pelt]
penalty = 10
kernel_bandwidth = auto

[replay]
page_size = 30

[vibration]
strength = 0.40
duration_ms = 100
motor_rated_rpm = 9000

[presence]
threshold_cm = 40
debounce_count = 3
poll_period_ms = 200

[stretch]
period_ms = 1000

[session]
grace_ms = 10000
max_session_ms = 3600000
woz_lead_ms = 3000
woz_late_ms = 1000
"""


@dataclass
class EngineConfig:
    data_dir: Path
    device: str = "sim"
    serial_baud: int = 115200
    api_bind: str = "127.0.0.1:8787"
    woz_mode: bool = False
    seed_trace: Optional[Path] = None
    console_dir: Optional[Path] = None
    filter: FilterParams = field(default_factory=FilterParams)
    pelt: PeltParams = field(default_factory=PeltParams)
    vibration: VibrationPulse = field(default_factory=VibrationPulse)
    presence: PresenceParams = field(default_factory=PresenceParams)
    page_size: int = 30
    stretch_period_ms: int = 1000
    grace_ms: int = 10_000
    max_session_ms: int = 3_600_000
    woz_lead_ms: int = 3000
    woz_late_ms: int = 1000


def print_defaults() -> str:
    """The audit surface: every default, in config-file form."""
    return DEFAULTS_INI


def load_config(path: Optional[str] = None, env: Optional[dict] = None) -> EngineConfig:
    """Parse defaults, then the config file (if given), then env overrides.

    Raises ConfigInvalid naming the offending section.key.
    """
    parser = configparser.ConfigParser()
    parser.read_string(DEFAULTS_INI)
    if path is not None:
        if not Path(path).exists():
            raise ConfigInvalid("config", f"file not found: {path}")
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except configparser.Error as exc:
            raise ConfigInvalid("config", str(exc)) from exc

    env = os.environ if env is None else env
    for key, value in env.items():
        if not key.startswith(ENV_PREFIX + "_"):
            continue
        _, section, option = key.split("_", 2)
        section = section.lower()
        option = option.lower()
        if parser.has_section(section) and parser.has_option(section, option):
            parser.set(section, option, value)

    def get(section: str, option: str, conv, *, required: bool = False):
        raw = parser.get(section, option, fallback="").strip()
        if not raw:
            if required:
                raise ConfigInvalid(f"{section}.{option}", "required but missing")
            return None
        try:
            return conv(raw)
        except (ValueError, TypeError) as exc:
            raise ConfigInvalid(f"{section}.{option}", f"bad value {raw!r}: {exc}") from exc

    def as_bool(raw: str) -> bool:
        lowered = raw.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValueError("expected a boolean")

    def as_bandwidth(raw: str) -> Optional[float]:
        if raw.lower() == "auto":
            return None
        value = float(raw)
        if value <= 0:
            raise ValueError("must be > 0 or 'auto'")
        return value

    data_dir = get("engine", "data_dir", Path, required=True)

    try:
        filter_params = FilterParams(
            window=get("filter", "window", int, required=True),
            k_sigma=get("filter", "k_sigma", float, required=True),
            min_window=get("filter", "min_window", int, required=True),
        )
    except ValueError as exc:
        raise ConfigInvalid("filter", str(exc)) from exc
    try:
        pelt_params = PeltParams(
            penalty=get("pelt", "penalty", float, required=True),
            kernel_bandwidth=get("pelt", "kernel_bandwidth", as_bandwidth),
        )
    except ValueError as exc:
        raise ConfigInvalid("pelt", str(exc)) from exc
    try:
        vibration = VibrationPulse(
            strength=get("vibration", "strength", float, required=True),
            duration_ms=get("vibration", "duration_ms", int, required=True),
            motor_rated_rpm=get("vibration", "motor_rated_rpm", int, required=True),
        )
    except ValueError as exc:
        raise ConfigInvalid("vibration", str(exc)) from exc
    try:
        presence = PresenceParams(
            threshold_cm=get("presence", "threshold_cm", float, required=True),
            debounce_count=get("presence", "debounce_count", int, required=True),
            poll_period_ms=get("presence", "poll_period_ms", int, required=True),
        )
    except ValueError as exc:
        raise ConfigInvalid("presence", str(exc)) from exc

    page_size = get("replay", "page_size", int, required=True)
    if page_size < 1:
        raise ConfigInvalid("replay.page_size", "must be >= 1")
    if page_size > 30:
        raise ConfigInvalid("replay.page_size", "controller pages hold at most 30 points")

    return EngineConfig(
        data_dir=data_dir,
        device=get("engine", "device", str) or "sim",
        serial_baud=get("engine", "serial_baud", int, required=True),
        api_bind=get("engine", "api_bind", str) or "127.0.0.1:8787",
        woz_mode=get("engine", "woz_mode", as_bool) or False,
        seed_trace=get("engine", "seed_trace", Path),
        console_dir=get("engine", "console_dir", Path),
        filter=filter_params,
        pelt=pelt_params,
        vibration=vibration,
        presence=presence,
        page_size=page_size,
        stretch_period_ms=get("stretch", "period_ms", int, required=True),
        grace_ms=get("session", "grace_ms", int, required=True),
        max_session_ms=get("session", "max_session_ms", int, required=True),
        woz_lead_ms=get("session", "woz_lead_ms", int, required=True),
        woz_late_ms=get("session", "woz_late_ms", int, required=True),
    )
