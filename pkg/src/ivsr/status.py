"""Live status log: fire events, spread snapshot, environment and assets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .geometry import Vec3


@dataclass
class Resource:
    kind: str                  # e.g. responder, fire_truck, helicopter, ambulance
    count: int
    position: Optional[Vec3] = None
    available: bool = True

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("resource count must be >= 0")


@dataclass
class StatusLog:
    fire_events: list = field(default_factory=list)
    spread_snapshot: Optional[object] = None       # spread.SpreadState
    env: Optional[object] = None                   # spread.Environment
    resources: list[Resource] = field(default_factory=list)
    alert_level: int = 0
    material_class: Optional[str] = None
    objects_in_path: set[str] = field(default_factory=set)
    outcomes: list[dict] = field(default_factory=list)

    def available_count(self, kind: str) -> int:
        return sum(r.count for r in self.resources
                   if r.kind == kind and r.available)

    def growth_series(self) -> list[tuple[float, float]]:
        if self.spread_snapshot is None:
            return []
        return self.spread_snapshot.growth_series()

    def spread_rate_kmh(self) -> float:
        """Radial growth rate of the burning region, from the area series."""
        series = self.growth_series()
        if len(series) < 2:
            return 0.0
        (t0, a0), (t1, a1) = series[0], series[-1]
        if t1 <= t0:
            return 0.0
        r0, r1 = math.sqrt(a0 / math.pi), math.sqrt(a1 / math.pi)
        return max(0.0, (r1 - r0) / (t1 - t0) * 3.6)

    def max_temp(self) -> float:
        return max((e.peak_temp for e in self.fire_events), default=0.0)
