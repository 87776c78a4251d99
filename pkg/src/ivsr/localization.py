"""Mapping 2D sensor detections through virtual cameras into 3D fire events."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from datetime import datetime
from typing import Optional, Sequence

import numpy as np

from .coverage import CameraPose
from .errors import LocalizationMiss, PixelOutOfRange
from .geometry import Ray, Scene, Vec3, ray_cast
from .incident_log import DetectionRecord

DEFAULT_MERGE_RADIUS = 0.5
DEFAULT_MERGE_WINDOW = 10.0

_event_counter = itertools.count(1)


@dataclass(frozen=True)
class FireEvent:
    id: str
    position: Vec3
    surface_id: str
    threat_level: str
    peak_temp: float
    pixel_count: int
    timestamp: datetime
    sensor_id: str


def pixel_to_ray(camera: CameraPose, column: int, row: int) -> Ray:
    """Ray through the center of pixel (column, row); origin at top-left."""
    if not (0 <= column < camera.pixel_cols):
        raise PixelOutOfRange(f"column {column} outside [0, {camera.pixel_cols})")
    if not (0 <= row < camera.pixel_rows):
        raise PixelOutOfRange(f"row {row} outside [0, {camera.pixel_rows})")
    u = (column + 0.5) / camera.pixel_cols * 2.0 - 1.0
    v = (row + 0.5) / camera.pixel_rows * 2.0 - 1.0
    return Ray(origin=camera.position, direction=camera.direction(u, v))


def project_to_pixel(camera: CameraPose, point: Vec3) -> tuple[float, float]:
    """Fractional (column, row) a world point maps to; inverse of pixel_to_ray."""
    d = camera.rotation().T @ (point - camera.position).as_array()
    if d[0] <= 0:
        raise ValueError("point is behind the camera")
    th = math.tan(math.radians(camera.h_fov) / 2)
    tv = math.tan(math.radians(camera.v_fov) / 2)
    u = -d[1] / d[0] / th
    v = -d[2] / d[0] / tv
    col = (u + 1.0) / 2.0 * camera.pixel_cols - 0.5
    row = (v + 1.0) / 2.0 * camera.pixel_rows - 0.5
    return col, row


def localize(scene: Scene, camera: CameraPose, record: DetectionRecord) -> FireEvent:
    """Raycast a detection's hottest pixel into the scene."""
    ray = pixel_to_ray(camera, record.column, record.row)
    hit = ray_cast(scene, ray)
    if hit is None:
        raise LocalizationMiss(
            f"detection pixel ({record.column}, {record.row}) leaves the scene")
    return FireEvent(
        id=f"fire-{next(_event_counter)}",
        position=hit.point,
        surface_id=hit.surface_id,
        threat_level=record.fire_threat_level,
        peak_temp=float(record.temperature),
        pixel_count=record.number,
        timestamp=record.start_datetime,
        sensor_id=record.sensor_id,
    )


def merge_events(events: Sequence[FireEvent],
                 radius: float = DEFAULT_MERGE_RADIUS,
                 window: float = DEFAULT_MERGE_WINDOW) -> list[FireEvent]:
    """Collapse events close in space and time (single-linkage clusters).

    Each cluster becomes one event at its centroid with the max peak
    temperature and summed pixel count; earliest timestamp wins.
    """
    if radius < 0 or window < 0:
        raise ValueError("radius and window must be non-negative")
    n = len(events)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            close = events[i].position.distance(events[j].position) <= radius
            dt = abs((events[i].timestamp - events[j].timestamp).total_seconds())
            if close and dt <= window and radius > 0:
                parent[find(i)] = find(j)

    clusters: dict[int, list[FireEvent]] = {}
    for i in range(n):
        clusters.setdefault(find(i), []).append(events[i])
    merged = []
    for members in clusters.values():
        members.sort(key=lambda e: (e.timestamp, e.id))
        if len(members) == 1:
            merged.append(members[0])
            continue
        c = np.mean([e.position.as_array() for e in members], axis=0)
        base = members[0]
        merged.append(replace(
            base,
            position=Vec3.from_array(c),
            peak_temp=max(e.peak_temp for e in members),
            pixel_count=sum(e.pixel_count for e in members)))
    merged.sort(key=lambda e: (e.timestamp, e.id))
    return merged
