"""Disaster simulation library: precomputed scenarios, feature extraction
and the similarity engine (weighted static distance + dynamic time warping).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import BadWeights, EmptyGrid, EmptyLibrary, EmptySeries
from .geometry import Scene, Vec3
from .spread import Environment, MaterialProfile, init as spread_init
from .status import StatusLog

SEVERITY = {"low": 0, "medium": 1, "high": 2}
MATERIAL_CLASSES = ("forest_dry_vegetation", "urban_industrial", "indoor_residential")
OBJECT_FLAGS = ("trees", "power_lines", "structures")

# min-max normalization ranges for numeric features (configuration, the
# source material gives example values only)
RANGES = {
    "severity": (0.0, 2.0),
    "responders": (0.0, 100.0),
    "fire_trucks": (0.0, 100.0),
    "helicopters": (0.0, 100.0),
    "ambulances": (0.0, 100.0),
    "wind_speed": (0.0, 120.0),
    "spread_rate": (0.0, 10.0),
    "max_temp": (0.0, 1200.0),
}

NUMERIC_FEATURES = tuple(RANGES)
ALL_FEATURES = NUMERIC_FEATURES + ("wind_direction", "material_class", "objects_in_path")

DEFAULT_ALPHA = 0.7    # static distance weight
DEFAULT_BETA = 0.3     # temporal (DTW) weight


@dataclass(frozen=True)
class FeatureVector:
    severity: int = 0                        # 0 low, 1 medium, 2 high
    responders: int = 0
    fire_trucks: int = 0
    helicopters: int = 0
    ambulances: int = 0
    material_class: Optional[str] = None
    wind_speed: float = 0.0
    wind_direction: float = 0.0
    spread_rate: float = 0.0                 # km/h
    max_temp: float = 0.0
    objects_in_path: frozenset = frozenset()

    def __post_init__(self):
        for name in ("responders", "fire_trucks", "helicopters", "ambulances"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not (0 <= self.wind_direction < 360):
            raise ValueError("wind_direction must be in [0, 360)")


@dataclass(frozen=True)
class Action:
    kind: str       # deploy_crew | deploy_truck | aerial_drop | deploy_drone
                    # | evacuate_zone | activate_sprinklers
    target: Union[Vec3, str]
    quantity: int = 1


@dataclass(frozen=True)
class InterventionPlan:
    id: str
    actions: tuple[Action, ...]
    effectiveness: float
    cost_efficiency: float
    response_speed: float

    def __post_init__(self):
        if not self.actions:
            raise ValueError("plan needs at least one action")
        for name in ("effectiveness", "cost_efficiency", "response_speed"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must be in [0, 1]")


@dataclass
class ScenarioRecord:
    id: str
    features: FeatureVector
    growth: list[float]                 # burning area per tick, non-decreasing
    plans: list[InterventionPlan]

    def __post_init__(self):
        if not self.plans:
            raise ValueError("scenario needs at least one plan")


@dataclass(frozen=True)
class MatchResult:
    scenario_id: str
    static_distance: float
    temporal_distance: float
    combined: float


def featurize(status_log: StatusLog) -> FeatureVector:
    """Deterministic feature extraction from the live status log."""
    return FeatureVector(
        severity=max(0, min(2, status_log.alert_level)),
        responders=status_log.available_count("responder"),
        fire_trucks=status_log.available_count("fire_truck"),
        helicopters=status_log.available_count("helicopter"),
        ambulances=status_log.available_count("ambulance"),
        material_class=status_log.material_class,
        wind_speed=status_log.env.wind_speed if status_log.env else 0.0,
        wind_direction=status_log.env.wind_direction if status_log.env else 0.0,
        spread_rate=status_log.spread_rate_kmh(),
        max_temp=status_log.max_temp(),
        objects_in_path=frozenset(status_log.objects_in_path),
    )


def normalized(name: str, value: float) -> float:
    lo, hi = RANGES[name]
    return min(1.0, max(0.0, (value - lo) / (hi - lo)))


def default_weights() -> dict[str, float]:
    return {name: 1.0 / len(ALL_FEATURES) for name in ALL_FEATURES}


def static_distance(a: FeatureVector, b: FeatureVector,
                    weights: Optional[dict[str, float]] = None) -> float:
    """Weighted per-feature distance; numeric features min-max normalized,
    wind direction angular, material class 0/1, object flags Jaccard."""
    if weights is None:
        weights = default_weights()
    if set(weights) != set(ALL_FEATURES):
        raise BadWeights(f"weights must cover exactly {ALL_FEATURES}")
    if any(w < 0 for w in weights.values()):
        raise BadWeights("weights must be non-negative")
    if abs(sum(weights.values()) - 1.0) > 1e-9:
        raise BadWeights("weights must sum to 1")
    total = 0.0
    for name in NUMERIC_FEATURES:
        total += weights[name] * abs(normalized(name, getattr(a, name))
                                     - normalized(name, getattr(b, name)))
    delta = abs(a.wind_direction - b.wind_direction)
    total += weights["wind_direction"] * min(delta, 360.0 - delta) / 180.0
    total += weights["material_class"] * (0.0 if a.material_class == b.material_class else 1.0)
    sa, sb = a.objects_in_path, b.objects_in_path
    if sa or sb:
        jaccard = 1.0 - len(sa & sb) / len(sa | sb)
    else:
        jaccard = 0.0
    total += weights["objects_in_path"] * jaccard
    return total


def dtw(s1: Sequence[float], s2: Sequence[float]) -> float:
    """Dynamic time warping with |a-b| local cost, normalized by path length.

    Minimizes total cost / path length over all monotone warping paths
    (match / insert / delete steps), via a path-length-indexed DP.
    """
    if len(s1) == 0 or len(s2) == 0:
        raise EmptySeries("dtw requires non-empty series")
    n, m = len(s1), len(s2)
    a = np.asarray(s1, dtype=float)
    b = np.asarray(s2, dtype=float)
    cost = np.abs(a[:, None] - b[None, :])
    maxlen = n + m - 1
    inf = np.inf
    # d[k][i, j]: min total cost of a path of k+1 cells ending at (i, j)
    d = np.full((maxlen, n, m), inf)
    d[0, 0, 0] = cost[0, 0]
    for k in range(1, maxlen):
        prev = d[k - 1]
        best = np.full((n, m), inf)
        best[1:, 1:] = np.minimum(best[1:, 1:], prev[:-1, :-1])
        best[1:, :] = np.minimum(best[1:, :], prev[:-1, :])
        best[:, 1:] = np.minimum(best[:, 1:], prev[:, :-1])
        d[k] = best + cost
    lengths = np.arange(1, maxlen + 1)
    ends = d[:, n - 1, m - 1]
    finite = np.isfinite(ends)
    return float(np.min(ends[finite] / lengths[finite]))


def resample(series: Sequence[float], length: int) -> np.ndarray:
    """Linear resampling onto a fixed-length grid."""
    s = np.asarray(series, dtype=float)
    if len(s) == 1:
        return np.full(length, s[0])
    x = np.linspace(0.0, 1.0, len(s))
    return np.interp(np.linspace(0.0, 1.0, length), x, s)


def growth_rates(series: Sequence[float], length: int = 32) -> np.ndarray:
    """Per-tick growth increments on a common grid, for temporal matching."""
    r = resample(series, length + 1)
    return np.diff(r)


class Library:
    """In-memory scenario collection; immutable once loaded."""

    def __init__(self, scenarios: Sequence[ScenarioRecord]):
        self.scenarios = list(scenarios)
        self._by_id = {s.id: s for s in self.scenarios}

    def __len__(self):
        return len(self.scenarios)

    def __iter__(self):
        return iter(self.scenarios)

    def get(self, scenario_id: str) -> ScenarioRecord:
        return self._by_id[scenario_id]

    def __contains__(self, scenario_id: str) -> bool:
        return scenario_id in self._by_id

    def find_plan(self, plan_id: str) -> Optional[tuple[ScenarioRecord, InterventionPlan]]:
        for s in self.scenarios:
            for p in s.plans:
                if p.id == plan_id:
                    return s, p
        return None


def match(library: Library, query: Union[StatusLog, FeatureVector], k: int = 3,
          query_growth: Optional[Sequence[float]] = None,
          weights: Optional[dict[str, float]] = None,
          alpha: float = DEFAULT_ALPHA, beta: float = DEFAULT_BETA,
          dtw_len: int = 32) -> list[MatchResult]:
    """Top-k scenarios by combined static + temporal distance, ascending."""
    if len(library) == 0:
        raise EmptyLibrary("scenario library is empty")
    if k < 1:
        raise ValueError("k must be >= 1")
    if isinstance(query, StatusLog):
        features = featurize(query)
        if query_growth is None:
            query_growth = [a for _, a in query.growth_series()]
    else:
        features = query
    qr = (growth_rates(query_growth, dtw_len)
          if query_growth is not None and len(query_growth) >= 1 else None)
    results = []
    for s in library:
        sd = static_distance(features, s.features, weights)
        if qr is not None and len(s.growth) >= 1:
            td = dtw(qr, growth_rates(s.growth, dtw_len))
        else:
            td = 0.0
        results.append(MatchResult(scenario_id=s.id, static_distance=sd,
                                   temporal_distance=td,
                                   combined=alpha * sd + beta * td))
    results.sort(key=lambda r: (r.combined, r.scenario_id))
    return results[:k]


# ---------------------------------------------------------------------------
# precomputation

# default mapping from material class to burn behaviour used when building
# libraries from a parameter grid
CLASS_MATERIALS = {
    "forest_dry_vegetation": MaterialProfile("dry-vegetation", 2.0, 1.0),
    "urban_industrial": MaterialProfile("urban", 4.0, 0.6),
    "indoor_residential": MaterialProfile("wood", 8.0, 0.5),
}


def precompute_library(scene: Scene, param_grid: dict,
                       plan_templates: Sequence[InterventionPlan],
                       horizon: float = 60.0, dt: float = 0.5,
                       patch_size: float = 1.0) -> list[ScenarioRecord]:
    """One simulated scenario per grid point of
    wind x humidity x material class x ignition site."""
    winds = param_grid.get("winds", [])            # (speed km/h, direction deg)
    humidities = param_grid.get("humidities", [])
    classes = param_grid.get("material_classes", [])
    sites = param_grid.get("ignition_sites", [])   # Vec3
    if not (winds and humidities and classes and sites):
        raise EmptyGrid("parameter grid must list winds, humidities, "
                        "material_classes and ignition_sites")
    if not plan_templates:
        raise ValueError("plan templates required")
    scenarios = []
    idx = 0
    for wind_speed, wind_dir in winds:
        for humidity in humidities:
            for cls in classes:
                profile = CLASS_MATERIALS[cls]
                materials = [MaterialProfile(t, profile.ignition_delay,
                                             profile.expansion_speed)
                             for t in {s.material_tag for s in scene.collidable_surfaces()}]
                for site in sites:
                    env = Environment(humidity=humidity, wind_speed=wind_speed,
                                      wind_direction=wind_dir)
                    state = spread_init(scene, materials, [(site, 0.0)], env,
                                        patch_size=patch_size)
                    state.run(horizon, dt)
                    growth = [a for _, a in state.growth_series()]
                    features = FeatureVector(
                        severity=2 if profile.expansion_speed >= 1.0 else 1,
                        material_class=cls,
                        wind_speed=wind_speed,
                        wind_direction=wind_dir,
                        spread_rate=StatusLog(spread_snapshot=state).spread_rate_kmh(),
                        max_temp=0.0,
                    )
                    scenarios.append(ScenarioRecord(
                        id=f"scenario-{idx:04d}",
                        features=features,
                        growth=growth,
                        plans=list(plan_templates)))
                    idx += 1
    return scenarios


# ---------------------------------------------------------------------------
# persistence: one JSON document per scenario in a directory

def _action_to_dict(a: Action) -> dict:
    target = ([a.target.x, a.target.y, a.target.z]
              if isinstance(a.target, Vec3) else a.target)
    return {"kind": a.kind, "target": target, "quantity": a.quantity}


def _action_from_dict(d: dict) -> Action:
    target = d["target"]
    if isinstance(target, list):
        target = Vec3(*target)
    return Action(kind=d["kind"], target=target, quantity=d.get("quantity", 1))


def scenario_to_dict(s: ScenarioRecord) -> dict:
    f = s.features
    return {
        "id": s.id,
        "features": {
            "severity": f.severity, "responders": f.responders,
            "fire_trucks": f.fire_trucks, "helicopters": f.helicopters,
            "ambulances": f.ambulances, "material_class": f.material_class,
            "wind_speed": f.wind_speed, "wind_direction": f.wind_direction,
            "spread_rate": f.spread_rate, "max_temp": f.max_temp,
            "objects_in_path": sorted(f.objects_in_path),
        },
        "growth": list(s.growth),
        "plans": [
            {"id": p.id, "actions": [_action_to_dict(a) for a in p.actions],
             "effectiveness": p.effectiveness,
             "cost_efficiency": p.cost_efficiency,
             "response_speed": p.response_speed}
            for p in s.plans
        ],
    }


def scenario_from_dict(doc: dict) -> ScenarioRecord:
    f = doc["features"]
    features = FeatureVector(
        severity=f.get("severity", 0), responders=f.get("responders", 0),
        fire_trucks=f.get("fire_trucks", 0), helicopters=f.get("helicopters", 0),
        ambulances=f.get("ambulances", 0), material_class=f.get("material_class"),
        wind_speed=f.get("wind_speed", 0.0),
        wind_direction=f.get("wind_direction", 0.0),
        spread_rate=f.get("spread_rate", 0.0), max_temp=f.get("max_temp", 0.0),
        objects_in_path=frozenset(f.get("objects_in_path", [])))
    plans = [InterventionPlan(
        id=p["id"],
        actions=tuple(_action_from_dict(a) for a in p["actions"]),
        effectiveness=p["effectiveness"],
        cost_efficiency=p["cost_efficiency"],
        response_speed=p["response_speed"]) for p in doc["plans"]]
    return ScenarioRecord(id=doc["id"], features=features,
                          growth=list(doc["growth"]), plans=plans)


def save_library(scenarios: Sequence[ScenarioRecord], directory) -> None:
    os.makedirs(directory, exist_ok=True)
    for s in scenarios:
        with open(os.path.join(directory, f"{s.id}.json"), "w", encoding="utf-8") as f:
            json.dump(scenario_to_dict(s), f, indent=2)


def load_library(directory) -> Library:
    scenarios = []
    for name in sorted(os.listdir(directory)):
        if name.endswith(".json"):
            with open(os.path.join(directory, name), encoding="utf-8") as f:
                scenarios.append(scenario_from_dict(json.load(f)))
    return Library(scenarios)
