import math

import numpy as np
import pytest

from conftest import floor_scene
from ivsr.errors import OutOfBounds, UnknownMaterial, UnknownPatch
from ivsr.geometry import Vec3, make_room
from ivsr.spread import (Environment, MaterialProfile, SpreadState,
                         add_ignition, effective_speed, humidity_factor,
                         init)

VEG = MaterialProfile("dry-vegetation", 2.0, 1.0)


def veg_floor(w=20.0, d=20.0):
    return floor_scene(w, d, material="dry-vegetation")


def sim(scene=None, ignitions=((Vec3(10, 10, 0), 0.0),), env=None,
        materials=(VEG,), patch_size=1.0):
    scene = scene if scene is not None else veg_floor()
    env = env if env is not None else Environment(humidity=50)
    return init(scene, list(materials), list(ignitions), env,
                patch_size=patch_size)


class TestInit:
    def test_single_ignition_single_source(self):
        state = sim()
        assert len(state.sources) == 1
        assert state.sources[0].radius == 0.0
        assert state.sim_time == 0.0
        assert (state.status == 0).all()

    def test_unknown_material(self):
        with pytest.raises(UnknownMaterial):
            sim(materials=[MaterialProfile("plastic", 1.0, 1.0)])

    def test_out_of_bounds_ignition(self):
        with pytest.raises(OutOfBounds):
            sim(ignitions=[(Vec3(100, 100, 0), 0.0)])

    def test_two_ignitions_two_sources(self):
        state = sim(ignitions=[(Vec3(5, 5, 0), 0.0), (Vec3(15, 15, 0), 1.0)])
        assert len(state.sources) == 2


class TestStep:
    def test_radius_after_one_second(self):
        state = sim(env=Environment(humidity=50))  # humidity factor 1.0
        state.step(1.0)
        assert state.sources[0].radius == pytest.approx(1.0)

    def test_arrival_is_travel_plus_delay(self):
        state = sim()
        state.run(12.0, 0.5)
        src = state.sources[0].center
        pid = state._nearest_patch(Vec3(15, 10, 0))
        d = state.tess[pid].centroid.distance(src)
        arrival = state.arrival_time(pid)
        assert arrival is not None
        assert abs(arrival - (d / 1.0 + 2.0)) <= 0.5 + 1e-9

    def test_wind_speeds_up_downwind_arrival(self):
        # hand-evaluated effective speed: 1 * (1 + 0.02*20) = 1.4 m/s downwind
        env = Environment(humidity=50, wind_speed=20, wind_direction=0)
        state = sim(env=env)
        state.run(12.0, 0.5)
        src = state.sources[0].center
        pid = state._nearest_patch(Vec3(15, 10, 0))
        d = state.tess[pid].centroid.distance(src)
        v_eff = effective_speed(1.0, env, toward=np.array([1.0, 0, 0]))
        assert v_eff == pytest.approx(1.4)
        arrival = state.arrival_time(pid)
        assert abs(arrival - (d / v_eff + 2.0)) <= 0.5 + 1e-9

    def test_monotone_transitions(self):
        state = sim()
        prev = state.status.copy()
        for _ in range(20):
            state.step(0.5)
            assert (state.status >= prev).all()
            prev = state.status.copy()


class TestEnvironment:
    def test_invalid_ranges(self):
        with pytest.raises(ValueError):
            Environment(humidity=140)
        with pytest.raises(ValueError):
            Environment(wind_speed=-1)
        with pytest.raises(ValueError):
            Environment(wind_direction=360)

    def test_doubling_wind_mid_run_shortens_downwind(self):
        target = Vec3(17, 10, 0)
        base_env = Environment(humidity=50, wind_speed=10, wind_direction=0)
        a = sim(env=base_env)
        b = sim(env=base_env)
        for _ in range(8):
            a.step(0.5)
            b.step(0.5)
        b.set_environment(Environment(humidity=50, wind_speed=20,
                                      wind_direction=0))
        a.run(20.0, 0.5)
        b.run(20.0, 0.5)
        pid = a._nearest_patch(target)
        assert b.arrival_time(pid) <= a.arrival_time(pid)

    def test_identical_env_identical_continuation(self):
        a, b = sim(), sim()
        for _ in range(6):
            a.step(0.5)
            b.step(0.5)
        b.set_environment(Environment(humidity=50))
        for _ in range(6):
            a.step(0.5)
            b.step(0.5)
        assert a.state_hash() == b.state_hash()

    def test_humidity_clamp(self):
        assert humidity_factor(100) == 0.5
        assert humidity_factor(0) == 1.5
        assert effective_speed(2.0, Environment(humidity=100)) == pytest.approx(1.0)


class TestArrivalTime:
    def test_origin_patch_burns_at_ignite_time(self):
        state = sim(ignitions=[(Vec3(10, 10, 0), 3.0)])
        state.run(8.0, 0.5)
        pid = state._nearest_patch(Vec3(10, 10, 0))
        assert state.arrival_time(pid) == pytest.approx(3.0)

    def test_monotone_in_distance(self):
        state = sim()
        state.run(14.0, 0.5)
        src = state.sources[0].center
        rows = []
        for x in (11, 12, 13, 14, 15):
            pid = state._nearest_patch(Vec3(x, 10, 0))
            rows.append((state.tess[pid].centroid.distance(src),
                         state.arrival_time(pid)))
        rows.sort()
        arrivals = [a for _, a in rows]
        assert all(arrivals[i] <= arrivals[i + 1] + 1e-9
                   for i in range(len(arrivals) - 1))

    def test_unreachable_surface_absent(self):
        state = sim()
        state.run(3.0, 0.5)
        far = state._nearest_patch(Vec3(1, 1, 0))
        assert state.arrival_time(far) is None

    def test_unknown_patch(self):
        state = sim()
        with pytest.raises(UnknownPatch):
            state.arrival_time(10**6)

    def test_zero_wind_isotropy(self):
        state = sim()
        state.run(12.0, 0.5)
        src = state.sources[0].center
        # probe centroids mirrored about the source at (10, 10)
        east = state._nearest_patch(Vec3(13.5, 9.5, 0))
        west = state._nearest_patch(Vec3(6.5, 10.5, 0))
        de = state.tess[east].centroid.distance(src)
        dw = state.tess[west].centroid.distance(src)
        assert de == pytest.approx(dw)
        assert abs(state.arrival_time(east) - state.arrival_time(west)) <= 0.5


class TestGrowthSeries:
    def test_no_ignition_all_zero(self):
        state = init(veg_floor(), [VEG], [], Environment(), patch_size=1.0)
        state.run(3.0, 0.5)
        assert all(a == 0.0 for _, a in state.growth_series())

    def test_non_decreasing(self):
        state = sim()
        state.run(10.0, 0.5)
        areas = [a for _, a in state.growth_series()]
        assert all(areas[i] <= areas[i + 1] + 1e-9 for i in range(len(areas) - 1))

    def test_differences_match_recount(self):
        state = sim()
        areas = []
        for _ in range(20):
            state.step(0.5)
            # recount burning area directly from patch state
            areas.append(float(state.tess.areas[state.status == 2].sum()))
        series = [a for _, a in state.growth_series()]
        assert series == pytest.approx(areas)


class TestDeterminism:
    def test_repeated_runs_identical_hash(self):
        hashes = {sim().run(10.0, 0.5).state_hash() for _ in range(5)}
        assert len(hashes) == 1

    def test_tick_refinement(self):
        coarse = sim().run(12.0, 0.5)
        fine = sim().run(12.0, 0.25)
        src = coarse.sources[0].center
        for x in (12, 13, 14):
            pid = coarse._nearest_patch(Vec3(x, 10, 0))
            a, b = coarse.arrival_time(pid), fine.arrival_time(pid)
            assert a is not None and b is not None
            assert abs(a - b) <= 0.5 + 1e-9


class TestAddIgnition:
    def test_live_ignition_spreads(self):
        state = sim(ignitions=[])
        state.run(2.0, 0.5)
        add_ignition(state, Vec3(10, 10, 0), state.sim_time)
        state.run(6.0, 0.5)
        assert state.burning_area() > 0

    def test_out_of_bounds(self):
        state = sim()
        with pytest.raises(OutOfBounds):
            add_ignition(state, Vec3(-5, 0, 0), 0.0)


class TestNonFlammable:
    def test_concrete_never_burns(self):
        scene = floor_scene(20, 20, material="concrete")
        state = init(scene, [MaterialProfile("concrete", math.inf, 0.1)],
                     [(Vec3(10, 10, 0), 0.0)], Environment(), patch_size=1.0)
        state.run(10.0, 0.5)
        # only the forced ignition origin burns; nothing spreads
        assert int((state.status == 2).sum()) == 1
