import numpy as np
import pytest

from farscope.cli import preset_config
from farscope.farfield import assemble_F
from farscope.scene import RefractiveScene, build_curve, discretize

K = 5.0
WAVELENGTH = 2 * np.pi / K


def disk_scene(n=2 + 2j, radius=1.0, k=K, **kw):
    return RefractiveScene(build_curve("disk", radius=radius), n, n, k, **kw)


def preset_scene(name, k=K):
    return preset_config(name, {"k": str(k)}).scene()


@pytest.fixture(scope="session")
def presets():
    return {name: preset_scene(name) for name in ("example1", "example2", "example3")}


@pytest.fixture(scope="session")
def example2_F16():
    scene = preset_scene("example2")
    grid = discretize(scene, WAVELENGTH / 10)
    return assemble_F(scene, grid, 16)


@pytest.fixture(scope="session")
def preset_F32(presets):
    out = {}
    for name, scene in presets.items():
        out[name] = assemble_F(scene, discretize(scene, WAVELENGTH / 10), 32)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(module.REPORT, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
        terminalreporter.write_line(line)
