import numpy as np
import pytest

from ivsr.geometry import Scene, Surface, SurfaceKind, Vec3, make_room

# log lines as printed by the sensor firmware
TABLE1_LINE = ('{"FireThreatLevel": "probable fire", '
               '"StartDateTime": "2024-03-17 07:05:36.137095", '
               '"CPUTemperature": 50.1, "SensorId": "", "Column": "107", '
               '"Row": "67", "Temperature": "107", "Number": "400"}')

TABLE2_LINES = [
    '{"FireThreatLevel": "fire hazard", "StartDateTime": "2024-02-26 10:25:54.334260", "CPUTemperature": 49.1, "SensorId": "", "Column": "76", "Row": "39", "Temperature": "71", "Number": "1007"}',
    '{"FireThreatLevel": "probable fire", "StartDateTime": "2024-02-27 21:40:09.074818", "CPUTemperature": 56.0, "SensorId": "", "Column": "83", "Row": "50", "Temperature": "72", "Number": "1073"}',
    '{"FireThreatLevel": "probable fire", "StartDateTime": "2024-03-04 04:46:13.202399", "CPUTemperature": 50.1, "SensorId": "", "Column": "79", "Row": "79", "Temperature": "69", "Number": "315"}',
    '{"FireThreatLevel": "probable fire", "StartDateTime": "2024-03-10 04:17:32.398583", "CPUTemperature": 49.1, "SensorId": "", "Column": "83", "Row": "73", "Temperature": "78", "Number": "412"}',
    '{"FireThreatLevel": "probable fire", "StartDateTime": "2024-03-17 05:52:32.027040", "CPUTemperature": 47.2, "SensorId": "", "Column": "97", "Row": "58", "Temperature": "148", "Number": "626"}',
    '{"FireThreatLevel": "probable fire", "StartDateTime": "2024-03-17 06:44:15.698722", "CPUTemperature": 47.7, "SensorId": "", "Column": "80", "Row": "66", "Temperature": "66", "Number": "417"}',
]


@pytest.fixture
def room():
    return make_room(10.0, 10.0, 3.0)


@pytest.fixture
def floor_only():
    return make_room(10.0, 10.0, 3.0, closed=False)


def floor_scene(width, depth, height=3.0, material="default"):
    return make_room(width, depth, height, material=material, closed=False)


def object_box(sid="box", size=1.0, at=(4.0, 4.0, 0.0), collidable=False,
               occluder=False, material="default"):
    """Axis-aligned cube authored as one Object surface."""
    x, y, z = at
    s = size
    verts = np.array([
        [x, y, z], [x + s, y, z], [x + s, y + s, z], [x, y + s, z],
        [x, y, z + s], [x + s, y, z + s], [x + s, y + s, z + s], [x, y + s, z + s],
    ])
    faces = np.array([
        [0, 1, 2], [0, 2, 3],          # bottom
        [4, 5, 6], [4, 6, 7],          # top
        [0, 1, 5], [0, 5, 4],          # sides
        [1, 2, 6], [1, 6, 5],
        [2, 3, 7], [2, 7, 6],
        [3, 0, 4], [3, 4, 7],
    ])
    return Surface(id=sid, kind=SurfaceKind.Object, vertices=verts,
                   indices=faces, material_tag=material,
                   collidable=collidable, occluder=occluder)


# ---------------------------------------------------------------------------
# acceptance summary: one pass/fail line per acceptance criterion

_ACCEPTANCE_RESULTS = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and report.when == "call":
        name = report.nodeid.split("::")[-1]
        _ACCEPTANCE_RESULTS[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, outcome in _ACCEPTANCE_RESULTS.items():
        label = name.replace("test_", "", 1)
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{status}] {label}")
