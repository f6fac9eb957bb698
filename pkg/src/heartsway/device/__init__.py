"""Hardware abstraction: presence sensing, simulated occupants, serial link."""

from .presence import PresenceDetector, PresenceParams, PresenceState
from .sim import (
    OCCUPIED_DISTANCE_CM,
    VACANT_DISTANCE_CM,
    IoLogEntry,
    OccupantScript,
    Scenario,
    SimulatedBackend,
    simulate_occupant,
)
from .serial_link import SerialBackend, open_serial

__all__ = [
    "PresenceDetector",
    "PresenceParams",
    "PresenceState",
    "OccupantScript",
    "Scenario",
    "SimulatedBackend",
    "SerialBackend",
    "IoLogEntry",
    "simulate_occupant",
    "open_serial",
    "OCCUPIED_DISTANCE_CM",
    "VACANT_DISTANCE_CM",
]
