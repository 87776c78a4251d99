"""Discrete-time fire spread over tessellated surfaces.

Each flame is an expanding sphere.  Patches whose centroid falls inside a
sphere start igniting and, after their material's ignition delay, burn
and spawn a new flame sphere of their own.  Humidity scales the expansion
speed; wind stretches the effective reach downwind.
"""

from __future__ import annotations

import copy
import hashlib
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import OutOfBounds, UnknownMaterial, UnknownPatch
from .geometry import Scene, Tessellation, Vec3, tessellate

DEFAULT_DT = 0.5
WIND_COEFF = 0.02          # reach gain per km/h of aligned wind
HUMIDITY_MIN = 0.5
HUMIDITY_MAX = 1.5

UNBURNED, IGNITING, BURNING = 0, 1, 2

DEFAULT_MATERIALS = [
    # shipped defaults, not measured constants
    ("dry-vegetation", 2.0, 1.0),
    ("wood", 8.0, 0.5),
    ("concrete", math.inf, 0.1),
]


@dataclass(frozen=True)
class MaterialProfile:
    tag: str
    ignition_delay: float      # seconds; inf marks non-flammable
    expansion_speed: float     # m/s

    def __post_init__(self):
        if self.ignition_delay < 0:
            raise ValueError("ignition_delay must be >= 0")
        if self.expansion_speed <= 0:
            raise ValueError("expansion_speed must be > 0")


def default_materials() -> list[MaterialProfile]:
    return [MaterialProfile(t, d, s) for t, d, s in DEFAULT_MATERIALS]


@dataclass(frozen=True)
class Environment:
    air_temp: float = 20.0
    humidity: float = 50.0
    wind_speed: float = 0.0       # km/h
    wind_direction: float = 0.0   # degrees, direction the wind blows toward

    def __post_init__(self):
        if not (0 <= self.humidity <= 100):
            raise ValueError("humidity must be in [0, 100]")
        if self.wind_speed < 0:
            raise ValueError("wind_speed must be >= 0")
        if not (0 <= self.wind_direction < 360):
            raise ValueError("wind_direction must be in [0, 360)")

    def wind_vector(self) -> np.ndarray:
        a = math.radians(self.wind_direction)
        return np.array([math.cos(a), math.sin(a), 0.0])


@dataclass
class FlameSource:
    id: int
    center: Vec3
    ignite_time: float
    base_speed: float
    radius: float = 0.0


def humidity_factor(humidity: float) -> float:
    return min(HUMIDITY_MAX, max(HUMIDITY_MIN, 1.5 - humidity / 100.0))


def effective_speed(base_speed: float, env: Environment,
                    toward: Optional[np.ndarray] = None) -> float:
    """Expansion speed after humidity damping and downwind boost."""
    v = base_speed * humidity_factor(env.humidity)
    if toward is not None and env.wind_speed > 0:
        align = max(0.0, float(toward @ env.wind_vector()))
        v *= 1.0 + WIND_COEFF * env.wind_speed * align
    return v


class SpreadState:
    """Owned by one driver; snapshots for queries are read-only."""

    def __init__(self, scene: Scene, tess: Tessellation,
                 materials: Sequence[MaterialProfile],
                 ignitions: Sequence[tuple[Vec3, float]],
                 env: Environment):
        self.scene = scene
        self.tess = tess
        self.env = env
        by_tag = {m.tag: m for m in materials}
        missing = {p.material_tag for p in tess} - set(by_tag)
        if missing:
            raise UnknownMaterial(f"no material profile for {sorted(missing)}")
        lo, hi = scene.bounds
        for point, _ in ignitions:
            a = point.as_array()
            if (a < lo.as_array() - 1e-9).any() or (a > hi.as_array() + 1e-9).any():
                raise OutOfBounds(f"ignition {point} outside scene bounds")

        n = len(tess)
        self.delay = np.array([by_tag[p.material_tag].ignition_delay for p in tess])
        self.speed = np.array([by_tag[p.material_tag].expansion_speed for p in tess])
        self.status = np.full(n, UNBURNED, dtype=np.int8)
        self.deadline = np.full(n, np.inf)
        self.burn_time = np.full(n, np.inf)
        self.sources: list[FlameSource] = []
        # ignition-origin patches catch fire at their ignite time
        self.origin_burns: list[tuple[float, int]] = []
        for point, t in ignitions:
            pid = self._nearest_patch(point)
            self._spawn(point, t, float(self.speed[pid]))
            self.origin_burns.append((t, pid))
        self.origin_burns.sort()
        self.sim_time = min((t for t, _ in self.origin_burns), default=0.0)
        self.burning_area_series: list[tuple[float, float]] = []

    # -- internal helpers -------------------------------------------------

    def _nearest_patch(self, point: Vec3) -> int:
        d = np.linalg.norm(self.tess.centroids - point.as_array(), axis=1)
        return int(np.argmin(d))

    def _spawn(self, center: Vec3, time: float, base_speed: float,
               radius: float = 0.0) -> None:
        self.sources.append(FlameSource(
            id=len(self.sources), center=center, ignite_time=time,
            base_speed=base_speed, radius=radius))

    def _burn_patch(self, pid: int, time: float, radius: float = 0.0) -> None:
        self.status[pid] = BURNING
        self.burn_time[pid] = time
        self._spawn(self.tess[pid].centroid, time, float(self.speed[pid]), radius)

    def _mark_burning(self, pid: int, time: float) -> None:
        # used for ignition origins, whose source already exists
        if self.status[pid] != BURNING:
            self.status[pid] = BURNING
            self.burn_time[pid] = time

    def burning_area(self) -> float:
        return float(self.tess.areas[self.status == BURNING].sum())

    # -- public API -------------------------------------------------------

    def step(self, dt: float = DEFAULT_DT) -> "SpreadState":
        if dt <= 0:
            raise ValueError("dt must be positive")
        t_new = self.sim_time + dt
        hf = humidity_factor(self.env.humidity)

        # grow spheres; sources lit mid-tick get the active fraction only
        for s in self.sources:
            s.radius += s.base_speed * hf * max(0.0, min(dt, t_new - s.ignite_time))

        # ignition-origin patches whose time has arrived start burning
        while self.origin_burns and self.origin_burns[0][0] <= t_new:
            t0, pid = self.origin_burns.pop(0)
            self._mark_burning(pid, t0)

        # coverage test: effective reach stretched downwind
        unburned = np.nonzero(self.status == UNBURNED)[0]
        if len(unburned) and self.sources:
            centers = np.array([s.center.as_array() for s in self.sources])
            radii = np.array([s.radius for s in self.sources])
            pts = self.tess.centroids[unburned]
            diff = pts[:, None, :] - centers[None, :, :]      # (P, S, 3)
            dist = np.linalg.norm(diff, axis=2)
            reach = np.broadcast_to(radii, dist.shape).copy()
            if self.env.wind_speed > 0:
                w = self.env.wind_vector()
                with np.errstate(invalid="ignore", divide="ignore"):
                    align = np.einsum("psk,k->ps", diff, w) / np.where(dist > 0, dist, 1.0)
                reach = radii * (1.0 + WIND_COEFF * self.env.wind_speed
                                 * np.clip(align, 0.0, None))
            covered = (dist <= reach + 1e-12).any(axis=1)
            flammable = np.isfinite(self.delay[unburned])
            hit = unburned[covered & flammable]
            self.status[hit] = IGNITING
            self.deadline[hit] = t_new + self.delay[hit]

        # igniting patches past their deadline catch fire, in patch order
        due = np.nonzero((self.status == IGNITING) & (self.deadline <= t_new))[0]
        for pid in due:
            t0 = float(self.deadline[pid])
            r0 = float(self.speed[pid]) * hf * (t_new - t0)
            self._burn_patch(int(pid), t0, r0)

        self.sim_time = t_new
        self.burning_area_series.append((t_new, self.burning_area()))
        return self

    def run(self, horizon: float, dt: float = DEFAULT_DT) -> "SpreadState":
        while self.sim_time < horizon - 1e-9:
            self.step(dt)
        return self

    def set_environment(self, env: Environment) -> "SpreadState":
        self.env = env
        return self

    def arrival_time(self, patch_id: int) -> Optional[float]:
        if not (0 <= patch_id < len(self.tess)):
            raise UnknownPatch(f"no patch {patch_id}")
        t = self.burn_time[patch_id]
        return float(t) if np.isfinite(t) else None

    def arrival_map(self) -> dict[int, float]:
        return {int(i): float(self.burn_time[i])
                for i in np.nonzero(np.isfinite(self.burn_time))[0]}

    def growth_series(self) -> list[tuple[float, float]]:
        return list(self.burning_area_series)

    def clone(self) -> "SpreadState":
        return copy.deepcopy(self)

    def state_hash(self) -> str:
        h = hashlib.sha256()
        h.update(np.float64(self.sim_time).tobytes())
        h.update(self.status.tobytes())
        h.update(self.deadline.tobytes())
        h.update(self.burn_time.tobytes())
        for s in self.sources:
            h.update(np.array([s.center.x, s.center.y, s.center.z,
                               s.ignite_time, s.base_speed, s.radius]).tobytes())
        return h.hexdigest()


def init(scene: Scene, materials: Sequence[MaterialProfile],
         ignitions: Sequence[tuple[Vec3, float]], env: Environment,
         patch_size: float = 0.5,
         tess: Optional[Tessellation] = None) -> SpreadState:
    if tess is None:
        tess = tessellate(scene, patch_size)
    return SpreadState(scene, tess, materials, ignitions, env)


def add_ignition(state: SpreadState, point: Vec3, time: float) -> SpreadState:
    """Register a new ignition point on a live simulation."""
    lo, hi = state.scene.bounds
    a = point.as_array()
    if (a < lo.as_array() - 1e-9).any() or (a > hi.as_array() + 1e-9).any():
        raise OutOfBounds(f"ignition {point} outside scene bounds")
    pid = state._nearest_patch(point)
    state._spawn(point, time, float(state.speed[pid]))
    state.origin_burns.append((time, pid))
    state.origin_burns.sort()
    return state
