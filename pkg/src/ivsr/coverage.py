"""Virtual-camera ray-grid coverage estimation and greedy sensor placement.

A camera shoots an n-by-n grid of rays through its view frustum; patches
containing at least one hit count as covered.  S0 is the total collidable
area, S1 the covered area and P1 = S1/S0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .geometry import (Hit, Ray, Scene, Tessellation, Vec3, ray_cast,
                       tessellate, total_area)

DEFAULT_PATCH_SIZE = 0.25
DEFAULT_RAYS_N = 10


@dataclass(frozen=True)
class CameraPose:
    position: Vec3
    yaw: float = 0.0      # degrees about +Z
    pitch: float = 0.0    # degrees, positive looks up
    roll: float = 0.0     # degrees about the view axis
    h_fov: float = 90.0
    v_fov: float = 60.0
    pixel_cols: int = 160
    pixel_rows: int = 120

    def __post_init__(self):
        if not (0 < self.h_fov < 180 and 0 < self.v_fov < 180):
            raise ValueError("field of view must be in (0, 180) degrees")
        if self.pixel_cols < 1 or self.pixel_rows < 1:
            raise ValueError("pixel grid must be at least 1x1")

    def rotation(self) -> np.ndarray:
        """World-from-camera rotation; camera x forward, y left, z up."""
        cy, sy = math.cos(math.radians(self.yaw)), math.sin(math.radians(self.yaw))
        cp, sp = math.cos(math.radians(-self.pitch)), math.sin(math.radians(-self.pitch))
        cr, sr = math.cos(math.radians(self.roll)), math.sin(math.radians(self.roll))
        rz = np.array([[cy, -sy, 0], [sy, cy, 0], [0, 0, 1]])
        ry = np.array([[cp, 0, sp], [0, 1, 0], [-sp, 0, cp]])
        rx = np.array([[1, 0, 0], [0, cr, -sr], [0, sr, cr]])
        return rz @ ry @ rx

    def direction(self, u: float, v: float) -> Vec3:
        """View direction for normalized plane coords u (right), v (down) in [-1, 1]."""
        return Vec3.from_array(self.directions(np.array([[u, v]]))[0])

    def directions(self, uv: np.ndarray) -> np.ndarray:
        """Unit view directions for an (n, 2) array of (u, v) plane coords."""
        th = math.tan(math.radians(self.h_fov) / 2)
        tv = math.tan(math.radians(self.v_fov) / 2)
        d_cam = np.stack([np.ones(len(uv)), -uv[:, 0] * th, -uv[:, 1] * tv], axis=1)
        d = d_cam @ self.rotation().T
        return d / np.linalg.norm(d, axis=1, keepdims=True)


@dataclass
class CoverageReport:
    s0: float
    s1: float
    p1: float
    hit_points: list[Hit]
    covered_patch_ids: set[int]
    overlap_area: float = 0.0


@dataclass
class PlacementResult:
    chosen: list[CameraPose]
    marginal_gains: list[float]
    union_s1: float
    overlap_area: float


def _grid_uv(n: int) -> np.ndarray:
    """Cell-center (u, v) coords of an n-by-n view-plane grid, row-major."""
    c = (np.arange(n) + 0.5) * 2.0 / n - 1.0
    v, u = np.meshgrid(c, c, indexing="ij")    # rows top to bottom
    return np.stack([u.ravel(), v.ravel()], axis=1)


def ray_grid(camera: CameraPose, n: int = DEFAULT_RAYS_N) -> list[Ray]:
    """n*n rays through the cell centers of an n-by-n grid on the view plane."""
    if n < 1:
        raise ValueError("n must be >= 1")
    dirs = camera.directions(_grid_uv(n))
    origin = camera.position
    return [Ray(origin=origin, direction=Vec3.from_array(d)) for d in dirs]


def _covered(scene: Scene, tess: Tessellation, camera: CameraPose, n: int
             ) -> tuple[set[int], list[Hit]]:
    from .geometry import ray_cast_many
    dirs = camera.directions(_grid_uv(n))
    origins = np.broadcast_to(camera.position.as_array(), dirs.shape)
    hit_mask, points, dists, sids = ray_cast_many(scene, origins, dirs)
    covered: set[int] = set()
    hits: list[Hit] = []
    for i in np.nonzero(hit_mask)[0]:
        point = Vec3.from_array(points[i])
        pid = tess.patch_at(sids[i], point)
        hits.append(Hit(point=point, surface_id=sids[i],
                        distance=float(dists[i]), patch_id=pid))
        if pid is not None:
            covered.add(pid)
    return covered, hits


def compute_coverage(scene: Scene, camera: CameraPose,
                     patch_size: float = DEFAULT_PATCH_SIZE,
                     n: int = DEFAULT_RAYS_N,
                     tess: Optional[Tessellation] = None) -> CoverageReport:
    if tess is None:
        tess = tessellate(scene, patch_size)
    s0 = total_area(scene)
    covered, hits = _covered(scene, tess, camera, n)
    s1 = tess.area_of(covered)
    return CoverageReport(s0=s0, s1=s1, p1=s1 / s0, hit_points=hits,
                          covered_patch_ids=covered)


def union_coverage(scene: Scene, cameras: Sequence[CameraPose],
                   patch_size: float = DEFAULT_PATCH_SIZE,
                   n: int = DEFAULT_RAYS_N,
                   tess: Optional[Tessellation] = None) -> CoverageReport:
    if not cameras:
        raise ValueError("at least one camera required")
    if tess is None:
        tess = tessellate(scene, patch_size)
    s0 = total_area(scene)
    union: set[int] = set()
    seen_twice: set[int] = set()
    hits: list[Hit] = []
    for cam in cameras:
        covered, h = _covered(scene, tess, cam, n)
        seen_twice |= union & covered
        union |= covered
        hits.extend(h)
    s1 = tess.area_of(union)
    return CoverageReport(s0=s0, s1=s1, p1=s1 / s0, hit_points=hits,
                          covered_patch_ids=union,
                          overlap_area=tess.area_of(seen_twice))


def greedy_placement(scene: Scene, candidates: Sequence[CameraPose], k: int,
                     min_gain: float = 0.0,
                     patch_size: float = DEFAULT_PATCH_SIZE,
                     n: int = DEFAULT_RAYS_N,
                     tess: Optional[Tessellation] = None) -> PlacementResult:
    """Pick up to k cameras maximizing marginal covered area.

    Stops early once the best marginal gain drops below min_gain.  Ties go
    to the earliest candidate in the list.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if k > 0 and not candidates:
        raise ValueError("candidates required when k > 0")
    if k == 0:
        return PlacementResult(chosen=[], marginal_gains=[], union_s1=0.0,
                               overlap_area=0.0)
    if tess is None:
        tess = tessellate(scene, patch_size)
    cover_sets = [_covered(scene, tess, cam, n)[0] for cam in candidates]
    chosen: list[CameraPose] = []
    gains: list[float] = []
    union: set[int] = set()
    seen_twice: set[int] = set()
    remaining = list(range(len(candidates)))
    while len(chosen) < k and remaining:
        best_i, best_gain = None, -1.0
        for i in remaining:
            gain = tess.area_of(cover_sets[i] - union)
            if gain > best_gain + 1e-12:
                best_i, best_gain = i, gain
        if best_i is None or best_gain < min_gain:
            break
        chosen.append(candidates[best_i])
        gains.append(best_gain)
        seen_twice |= union & cover_sets[best_i]
        union |= cover_sets[best_i]
        remaining.remove(best_i)
    return PlacementResult(chosen=chosen, marginal_gains=gains,
                           union_s1=tess.area_of(union),
                           overlap_area=tess.area_of(seen_twice))
