"""3D scene representation, tessellation into patches, ray and sphere queries.

Surfaces are triangle meshes with material tags.  Floors, walls and
ceilings are collidable and form the detectable area; loose objects are
non-collidable by default but can be flagged as occluders (they block
rays without contributing area).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional, Sequence

import numpy as np
from shapely.geometry import Polygon, box
from shapely.ops import unary_union

from .errors import EmptyScene

_EPS = 1e-9


@dataclass(frozen=True)
class Vec3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise ValueError("Vec3 components must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @staticmethod
    def from_array(a) -> "Vec3":
        return Vec3(float(a[0]), float(a[1]), float(a[2]))

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def scale(self, s: float) -> "Vec3":
        return Vec3(self.x * s, self.y * s, self.z * s)

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def norm(self) -> float:
        return math.sqrt(self.dot(self))

    def normalized(self) -> "Vec3":
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize zero vector")
        return self.scale(1.0 / n)

    def distance(self, other: "Vec3") -> float:
        return (self - other).norm()


class SurfaceKind(str, Enum):
    Floor = "Floor"
    Wall = "Wall"
    Ceiling = "Ceiling"
    Object = "Object"


_STRUCTURAL = {SurfaceKind.Floor, SurfaceKind.Wall, SurfaceKind.Ceiling}


@dataclass
class Surface:
    id: str
    kind: SurfaceKind
    vertices: np.ndarray       # (n, 3) meters
    indices: np.ndarray        # (m, 3) vertex indices
    material_tag: str = "default"
    collidable: Optional[bool] = None   # None -> kind default
    occluder: bool = False              # blocks rays but excluded from S0

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.indices = np.asarray(self.indices, dtype=int).reshape(-1, 3)
        if self.collidable is None:
            self.collidable = self.kind in _STRUCTURAL
        if np.any(self.triangle_areas() <= 0):
            raise ValueError(f"surface {self.id!r} has a degenerate triangle")

    def triangles(self) -> np.ndarray:
        """(m, 3, 3) triangle vertex array."""
        return self.vertices[self.indices]

    def triangle_areas(self) -> np.ndarray:
        t = self.triangles()
        cross = np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0])
        return 0.5 * np.linalg.norm(cross, axis=1)

    def area(self) -> float:
        return float(self.triangle_areas().sum())


@dataclass
class Scene:
    surfaces: list[Surface]
    bounds: tuple[Vec3, Vec3]
    _ray_data: Optional[dict] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        ids = [s.id for s in self.surfaces]
        if len(set(ids)) != len(ids):
            raise ValueError("surface ids must be unique")
        lo, hi = self.bounds
        for s in self.surfaces:
            v = s.vertices
            if (v < lo.as_array() - 1e-6).any() or (v > hi.as_array() + 1e-6).any():
                raise ValueError(f"surface {s.id!r} exceeds scene bounds")

    def collidable_surfaces(self) -> list[Surface]:
        return [s for s in self.surfaces if s.collidable]

    def surface(self, surface_id: str) -> Surface:
        for s in self.surfaces:
            if s.id == surface_id:
                return s
        raise KeyError(surface_id)

    def diagonal(self) -> float:
        lo, hi = self.bounds
        return (hi - lo).norm()

    def _blocking_triangles(self) -> dict:
        """Flattened triangle arrays for all ray-blocking surfaces, cached."""
        if self._ray_data is None:
            tris, sids = [], []
            # sorted by id so equal-distance ties resolve to the lowest id
            for s in sorted(self.surfaces, key=lambda s: s.id):
                if s.collidable or s.occluder:
                    t = s.triangles()
                    tris.append(t)
                    sids.extend([s.id] * len(t))
            if tris:
                t = np.concatenate(tris)
                self._ray_data = {
                    "v0": t[:, 0], "e1": t[:, 1] - t[:, 0], "e2": t[:, 2] - t[:, 0],
                    "sid": sids,
                    "collidable": np.array([self.surface(i).collidable for i in sids]),
                }
            else:
                self._ray_data = {"v0": np.zeros((0, 3)), "e1": np.zeros((0, 3)),
                                  "e2": np.zeros((0, 3)), "sid": [],
                                  "collidable": np.zeros(0, dtype=bool)}
        return self._ray_data


@dataclass(frozen=True)
class Ray:
    origin: Vec3
    direction: Vec3

    def __post_init__(self):
        if abs(self.direction.norm() - 1.0) > 1e-9:
            raise ValueError("ray direction must be unit length")


@dataclass(frozen=True)
class Patch:
    id: int
    surface_id: str
    cell_index: tuple[int, int]
    centroid: Vec3
    area: float
    material_tag: str


@dataclass(frozen=True)
class Hit:
    point: Vec3
    surface_id: str
    distance: float
    patch_id: Optional[int] = None


def ray_cast(scene: Scene, ray: Ray, tessellation: Optional["Tessellation"] = None) -> Optional[Hit]:
    """Nearest intersection of the ray with a collidable surface, or None.

    Occluder surfaces block rays: if the nearest blocking triangle belongs
    to a non-collidable occluder the ray yields no hit.
    """
    hit, points, dists, sids = ray_cast_many(
        scene, ray.origin.as_array()[None], ray.direction.as_array()[None])
    if not hit[0]:
        return None
    point = Vec3.from_array(points[0])
    patch_id = tessellation.patch_at(sids[0], point) if tessellation else None
    return Hit(point=point, surface_id=sids[0], distance=float(dists[0]),
               patch_id=patch_id)


def ray_cast_many(scene: Scene, origins: np.ndarray, directions: np.ndarray
                  ) -> tuple[np.ndarray, np.ndarray, np.ndarray, list]:
    """Vectorized nearest-hit query for a batch of rays.

    Returns (hit_mask, points, distances, surface_ids); surface_ids is a
    per-ray list with None for misses.  Semantics match ray_cast.
    """
    data = scene._blocking_triangles()
    origins = np.atleast_2d(np.asarray(origins, dtype=float))
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    nrays = len(origins)
    if len(data["sid"]) == 0:
        return (np.zeros(nrays, dtype=bool), np.zeros((nrays, 3)),
                np.full(nrays, np.inf), [None] * nrays)
    v0, e1, e2 = data["v0"], data["e1"], data["e2"]
    p = np.cross(directions[:, None, :], e2[None])            # (R, T, 3)
    det = np.einsum("ij,rij->ri", e1, p)
    ok = np.abs(det) > 1e-12
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    tv = origins[:, None, :] - v0[None]
    u = np.einsum("rij,rij->ri", tv, p) * inv
    q = np.cross(tv, e1[None])
    v = np.einsum("rj,rij->ri", directions, q) * inv
    t = np.einsum("ij,rij->ri", e2, q) * inv
    valid = ok & (u >= -1e-12) & (v >= -1e-12) & (u + v <= 1 + 1e-12) & (t > 1e-9)
    tbig = np.where(valid, t, np.inf)
    # triangles pre-sorted by surface id; first argmin breaks ties low
    best = np.argmin(tbig, axis=1)
    dist = tbig[np.arange(nrays), best]
    hit = np.isfinite(dist) & data["collidable"][best]
    points = origins + np.where(np.isfinite(dist), dist, 0.0)[:, None] * directions
    sids = [data["sid"][b] if h else None for b, h in zip(best, hit)]
    return hit, points, np.where(hit, dist, np.inf), sids


def _plane_basis(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = normal / np.linalg.norm(normal)
    a = np.zeros(3)
    a[np.argmin(np.abs(n))] = 1.0
    u = np.cross(n, a)
    u /= np.linalg.norm(u)
    v = np.cross(n, u)
    return u, v


class Tessellation:
    """Grid decomposition of every collidable surface into area patches.

    Each surface's coplanar triangle groups get a uniform grid of cells of
    side `patch_size`; boundary cells are clipped against the surface
    polygon so patch areas sum exactly to the surface area.
    """

    def __init__(self, scene: Scene, patch_size: float):
        if patch_size <= 0:
            raise ValueError("patch_size must be positive")
        if not scene.collidable_surfaces():
            raise EmptyScene("scene has no collidable surface")
        self.scene = scene
        self.patch_size = patch_size
        self.patches: list[Patch] = []
        self._groups: dict[str, list[dict]] = {}
        self._cells: dict[tuple[str, int, int, int], int] = {}
        for surf in scene.collidable_surfaces():
            self._tessellate_surface(surf)
        self.centroids = np.array([p.centroid.as_array() for p in self.patches])
        self.areas = np.array([p.area for p in self.patches])

    def _tessellate_surface(self, surf: Surface) -> None:
        tris = surf.triangles()
        normals = np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0])
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        # orient consistently so opposite-winding coplanar triangles group
        flip = np.argmax(np.abs(normals), axis=1)
        sign = np.sign(normals[np.arange(len(tris)), flip])
        normals *= sign[:, None]
        offsets = np.einsum("ij,ij->i", normals, tris[:, 0])
        groups: dict[tuple, list[int]] = {}
        for i in range(len(tris)):
            key = (tuple(np.round(normals[i], 6)), round(offsets[i], 6))
            groups.setdefault(key, []).append(i)
        self._groups[surf.id] = []
        ps = self.patch_size
        for g, ((nkey, _), members) in enumerate(sorted(groups.items())):
            n = np.array(nkey)
            n /= np.linalg.norm(n)
            u, v = _plane_basis(n)
            origin = tris[members[0]][0]
            polys = []
            for i in members:
                pts2 = [( (p - origin) @ u, (p - origin) @ v ) for p in tris[i]]
                poly = Polygon(pts2)
                if poly.area > 0:
                    polys.append(poly)
            region = unary_union(polys)
            minx, miny, maxx, maxy = region.bounds
            nx = max(1, math.ceil((maxx - minx) / ps - 1e-9))
            ny = max(1, math.ceil((maxy - miny) / ps - 1e-9))
            self._groups[surf.id].append({
                "normal": n, "offset": float(n @ origin), "u": u, "v": v,
                "origin": origin, "minx": minx, "miny": miny,
            })
            for ix in range(nx):
                for iy in range(ny):
                    cell = box(minx + ix * ps, miny + iy * ps,
                               min(minx + (ix + 1) * ps, maxx),
                               min(miny + (iy + 1) * ps, maxy))
                    inter = region.intersection(cell)
                    if inter.is_empty or inter.area <= 1e-12:
                        continue
                    c2 = inter.centroid
                    c3 = origin + c2.x * u + c2.y * v
                    pid = len(self.patches)
                    self.patches.append(Patch(
                        id=pid, surface_id=surf.id, cell_index=(ix, iy),
                        centroid=Vec3.from_array(c3), area=float(inter.area),
                        material_tag=surf.material_tag))
                    self._cells[(surf.id, g, ix, iy)] = pid

    def patch_at(self, surface_id: str, point: Vec3) -> Optional[int]:
        """Patch containing a point known to lie on the given surface."""
        p = point.as_array()
        for g, grp in enumerate(self._groups.get(surface_id, [])):
            if abs(grp["normal"] @ p - grp["offset"]) > 1e-6:
                continue
            rel = p - grp["origin"]
            px, py = rel @ grp["u"], rel @ grp["v"]
            ix = int((px - grp["minx"]) // self.patch_size)
            iy = int((py - grp["miny"]) // self.patch_size)
            for jx, jy in ((ix, iy), (ix - 1, iy), (ix, iy - 1), (ix - 1, iy - 1)):
                pid = self._cells.get((surface_id, g, jx, jy))
                if pid is not None:
                    return pid
        return None

    def __len__(self) -> int:
        return len(self.patches)

    def __iter__(self) -> Iterator[Patch]:
        return iter(self.patches)

    def __getitem__(self, i: int) -> Patch:
        return self.patches[i]

    def area_of(self, patch_ids) -> float:
        return float(sum(self.patches[i].area for i in set(patch_ids)))


def tessellate(scene: Scene, patch_size: float) -> Tessellation:
    return Tessellation(scene, patch_size)


def total_area(scene: Scene) -> float:
    """Total collidable area S0."""
    surfs = scene.collidable_surfaces()
    if not surfs:
        raise EmptyScene("scene has no collidable surface")
    return float(sum(s.area() for s in surfs))


def patches_within_sphere(patches: Sequence[Patch] | Tessellation, center: Vec3,
                          radius: float) -> list[int]:
    """Ids of patches whose centroid lies within `radius` of `center`."""
    if radius < 0:
        raise ValueError("radius must be non-negative")
    if isinstance(patches, Tessellation):
        d = np.linalg.norm(patches.centroids - center.as_array(), axis=1)
        return [patches.patches[i].id for i in np.nonzero(d <= radius)[0]]
    c = center.as_array()
    return [p.id for p in patches
            if np.linalg.norm(p.centroid.as_array() - c) <= radius]


# ---------------------------------------------------------------------------
# scene file i/o

def _axis_rect(kind, sid, material, lo, hi, axis, value) -> Surface:
    """Rectangle perpendicular to `axis` at `value`, spanning lo..hi."""
    axes = [a for a in range(3) if a != axis]
    corners = []
    for da, db in ((0, 0), (1, 0), (1, 1), (0, 1)):
        p = [0.0, 0.0, 0.0]
        p[axis] = value
        p[axes[0]] = lo[0] if da == 0 else hi[0]
        p[axes[1]] = lo[1] if db == 0 else hi[1]
        corners.append(p)
    return Surface(id=sid, kind=kind, vertices=np.array(corners),
                   indices=np.array([[0, 1, 2], [0, 2, 3]]), material_tag=material)


def make_room(width: float, depth: float, height: float,
              material: str = "default", closed: bool = True) -> Scene:
    """Axis-aligned room with floor at z=0; walls/ceiling when closed."""
    surfaces = [_axis_rect(SurfaceKind.Floor, "floor", material, (0, 0), (width, depth), 2, 0.0)]
    if closed:
        surfaces.append(_axis_rect(SurfaceKind.Ceiling, "ceiling", material,
                                   (0, 0), (width, depth), 2, height))
        surfaces += [
            _axis_rect(SurfaceKind.Wall, "wall-x0", material, (0, 0), (depth, height), 0, 0.0),
            _axis_rect(SurfaceKind.Wall, "wall-x1", material, (0, 0), (depth, height), 0, width),
            _axis_rect(SurfaceKind.Wall, "wall-y0", material, (0, 0), (width, height), 1, 0.0),
            _axis_rect(SurfaceKind.Wall, "wall-y1", material, (0, 0), (width, height), 1, depth),
        ]
    return Scene(surfaces=surfaces, bounds=(Vec3(0, 0, 0), Vec3(width, depth, height)))


def scene_to_dict(scene: Scene) -> dict:
    lo, hi = scene.bounds
    return {
        "surfaces": [
            {
                "id": s.id,
                "kind": s.kind.value,
                "material_tag": s.material_tag,
                "collidable": bool(s.collidable),
                "occluder": bool(s.occluder),
                "vertices": [float(x) for x in s.vertices.ravel()],
                "indices": [int(i) for i in s.indices.ravel()],
            }
            for s in scene.surfaces
        ],
        "bounds": {"min": [lo.x, lo.y, lo.z], "max": [hi.x, hi.y, hi.z]},
    }


def scene_from_dict(doc: dict) -> Scene:
    surfaces = []
    for sd in doc["surfaces"]:
        surfaces.append(Surface(
            id=sd["id"], kind=SurfaceKind(sd["kind"]),
            vertices=np.array(sd["vertices"], dtype=float).reshape(-1, 3),
            indices=np.array(sd["indices"], dtype=int).reshape(-1, 3),
            material_tag=sd.get("material_tag", "default"),
            collidable=sd.get("collidable"),
            occluder=sd.get("occluder", False)))
    b = doc["bounds"]
    return Scene(surfaces=surfaces,
                 bounds=(Vec3(*b["min"]), Vec3(*b["max"])))


def load_scene(path) -> Scene:
    with open(path, encoding="utf-8") as f:
        return scene_from_dict(json.load(f))


def save_scene(scene: Scene, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(scene_to_dict(scene), f, indent=2)
