"""HeartSway: a biodata trace capture/replay engine.

Records one hammock occupant's heart rate and body movements, compiles the
trace into a replay schedule when they leave, and plays it back (vibration
pulses and swing events) to the next occupant.  Only the immediate
predecessor's trace ever exists; older raw data is purged.
"""

__version__ = "0.1.0"
