"""Command-line entry points: coverage analysis, spread runs, library
builds and the gateway server."""

from __future__ import annotations

import json
import sys

import click

from .coverage import CameraPose, greedy_placement, union_coverage
from .geometry import Vec3, load_scene
from .library import (InterventionPlan, load_library, precompute_library,
                      save_library, scenario_to_dict, _action_from_dict)
from .spread import Environment, MaterialProfile, init as spread_init


def _camera_from_doc(doc: dict) -> CameraPose:
    return CameraPose(
        position=Vec3(*doc["position"]),
        yaw=doc.get("yaw", 0.0), pitch=doc.get("pitch", 0.0),
        roll=doc.get("roll", 0.0),
        h_fov=doc.get("h_fov", 90.0), v_fov=doc.get("v_fov", 60.0),
        pixel_cols=doc.get("pixel_cols", 160),
        pixel_rows=doc.get("pixel_rows", 120))


def _load_cameras(path) -> list[dict]:
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def _load_materials(path) -> list[MaterialProfile]:
    with open(path, encoding="utf-8") as f:
        docs = json.load(f)
    out = []
    for d in docs:
        delay = d["ignition_delay_s"]
        out.append(MaterialProfile(
            tag=d["tag"],
            ignition_delay=float("inf") if delay is None else float(delay),
            expansion_speed=float(d["expansion_speed_mps"])))
    return out


@click.group()
def main():
    """Wildfire digital-twin engine."""


@main.command()
@click.option("--scene", "scene_path", required=True, type=click.Path(exists=True))
@click.option("--cameras", "cameras_path", required=True, type=click.Path(exists=True))
@click.option("--patch-size", default=0.25, show_default=True)
@click.option("--rays-n", default=10, show_default=True)
@click.option("--k", default=0, help="greedy placement: pick k of the cameras")
@click.option("--min-gain", default=0.0, show_default=True)
@click.option("--hits", "hits_path", type=click.Path(), default=None,
              help="write ray hit points for plotting")
def coverage(scene_path, cameras_path, patch_size, rays_n, k, min_gain, hits_path):
    """Coverage report (and optional greedy placement) for a camera set."""
    scene = load_scene(scene_path)
    cameras = [_camera_from_doc(d) for d in _load_cameras(cameras_path)]
    report = union_coverage(scene, cameras, patch_size=patch_size, n=rays_n)
    out = {"s0": report.s0, "s1": report.s1, "p1": report.p1,
           "overlap_area": report.overlap_area,
           "covered_patches": len(report.covered_patch_ids)}
    if k > 0:
        placement = greedy_placement(scene, cameras, k, min_gain=min_gain,
                                     patch_size=patch_size, n=rays_n)
        out["placement"] = {
            "chosen": [cameras.index(c) for c in placement.chosen],
            "marginal_gains": placement.marginal_gains,
            "union_s1": placement.union_s1,
            "overlap_area": placement.overlap_area,
        }
    if hits_path:
        with open(hits_path, "w", encoding="utf-8") as f:
            json.dump([{"point": [h.point.x, h.point.y, h.point.z],
                        "surface_id": h.surface_id,
                        "distance": h.distance}
                       for h in report.hit_points], f)
    click.echo(json.dumps(out, indent=2))


@main.command()
@click.option("--scene", "scene_path", required=True, type=click.Path(exists=True))
@click.option("--materials", "materials_path", required=True,
              type=click.Path(exists=True))
@click.option("--ignite", multiple=True, required=True,
              help="ignition point x,y,z[,t]")
@click.option("--horizon", default=60.0, show_default=True)
@click.option("--dt", default=0.5, show_default=True)
@click.option("--patch-size", default=0.5, show_default=True)
@click.option("--humidity", default=50.0, show_default=True)
@click.option("--wind-speed", default=0.0, show_default=True)
@click.option("--wind-direction", default=0.0, show_default=True)
def spread(scene_path, materials_path, ignite, horizon, dt, patch_size,
           humidity, wind_speed, wind_direction):
    """Run a spread scenario and emit the arrival map and growth series."""
    scene = load_scene(scene_path)
    materials = _load_materials(materials_path)
    ignitions = []
    for spec in ignite:
        parts = [float(x) for x in spec.split(",")]
        t = parts[3] if len(parts) > 3 else 0.0
        ignitions.append((Vec3(parts[0], parts[1], parts[2]), t))
    env = Environment(humidity=humidity, wind_speed=wind_speed,
                      wind_direction=wind_direction)
    state = spread_init(scene, materials, ignitions, env, patch_size=patch_size)
    state.run(horizon, dt)
    click.echo(json.dumps({
        "arrival_map": {str(k): v for k, v in state.arrival_map().items()},
        "growth_series": state.growth_series(),
    }, indent=2))


@main.group()
def library():
    """Disaster simulation library commands."""


@library.command("build")
@click.option("--scene", "scene_path", required=True, type=click.Path(exists=True))
@click.option("--grid", "grid_path", required=True, type=click.Path(exists=True))
@click.option("--plans", "plans_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--horizon", default=60.0, show_default=True)
@click.option("--patch-size", default=1.0, show_default=True)
def library_build(scene_path, grid_path, plans_path, out_dir, horizon, patch_size):
    """Precompute one scenario per parameter-grid point."""
    scene = load_scene(scene_path)
    with open(grid_path, encoding="utf-8") as f:
        grid = json.load(f)
    grid["winds"] = [tuple(w) for w in grid.get("winds", [])]
    grid["ignition_sites"] = [Vec3(*p) for p in grid.get("ignition_sites", [])]
    with open(plans_path, encoding="utf-8") as f:
        plan_docs = json.load(f)
    templates = [InterventionPlan(
        id=p["id"],
        actions=tuple(_action_from_dict(a) for a in p["actions"]),
        effectiveness=p["effectiveness"],
        cost_efficiency=p["cost_efficiency"],
        response_speed=p["response_speed"]) for p in plan_docs]
    scenarios = precompute_library(scene, grid, templates, horizon=horizon,
                                   patch_size=patch_size)
    save_library(scenarios, out_dir)
    click.echo(f"wrote {len(scenarios)} scenarios to {out_dir}")


@main.command()
@click.option("--scene", "scene_path", required=True, type=click.Path(exists=True))
@click.option("--library", "library_dir", required=True, type=click.Path(exists=True))
@click.option("--materials", "materials_path", required=True,
              type=click.Path(exists=True))
@click.option("--sensors", "sensors_path", required=True,
              type=click.Path(exists=True))
@click.option("--log", "log_path", default="detections.log", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--sim-speed", default=1.0, show_default=True,
              help="tick-rate multiplier over the default 2 Hz driver")
@click.option("--patch-size", default=0.5, show_default=True)
def serve(scene_path, library_dir, materials_path, sensors_path, log_path,
          port, host, sim_speed, patch_size):
    """Run the gateway service."""
    import uvicorn
    from .gateway import Twin, create_app
    scene = load_scene(scene_path)
    cameras = {}
    for doc in _load_cameras(sensors_path):
        cameras[doc.get("sensor_id", "")] = _camera_from_doc(doc)
    twin = Twin(scene=scene, cameras=cameras,
                materials=_load_materials(materials_path),
                library=load_library(library_dir), log_path=log_path,
                patch_size=patch_size)
    app = create_app(twin, sim_speed=sim_speed)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
