"""Closed-loop wildfire digital-twin engine.

Sensor coverage optimization, fire localization and replay, spread
simulation, scenario-library matching and the human approval loop.
"""

from . import (commands, coverage, errors, geometry, incident_log, library,
               localization, spread, status)

__all__ = [
    "commands", "coverage", "errors", "geometry", "incident_log",
    "library", "localization", "spread", "status",
]

__version__ = "0.1.0"
