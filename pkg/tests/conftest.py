import numpy as np
import pytest

from thermgrid import Box, HeatSource, Scenario, SinkPatch, build_fabric, calibrate
from thermgrid.fabrics import CALIBRATION_TARGETS


def slab(layers, h=2.0, width=None, sinks=(SinkPatch("zmin", 300.0),), sources=(), **kw):
    """Prism stacked along z from ``(thickness_nm, material, label)`` layers."""
    w = h if width is None else width
    boxes, z = [], 0.0
    for thickness, material, label in layers:
        boxes.append(Box((0, 0, z), (w, w, thickness), material, label))
        z += thickness
    return Scenario(tuple(boxes), h, tuple(sinks), tuple(sources), **kw)


@pytest.fixture
def small_block():
    """8x8x8 nm silicon block on a tungsten foot, heated in the block."""
    return Scenario(
        (Box((0, 0, 0), (8, 8, 4), "W", "foot"), Box((0, 0, 4), (8, 8, 8), "Si_nw", "block")),
        2.0, (SinkPatch("zmin", 300.0),), (HeatSource("block", power=1e-7),),
    )


@pytest.fixture(scope="session")
def skybridge_power():
    return calibrate(build_fabric("skybridge"), CALIBRATION_TARGETS["skybridge"]).power


@pytest.fixture(scope="session")
def skybridge_baseline(skybridge_power):
    return build_fabric("skybridge", power=skybridge_power)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
