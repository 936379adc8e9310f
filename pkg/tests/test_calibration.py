import numpy as np
import pytest

from thermgrid import Box, HeatSource, Scenario, SinkPatch, calibrate, steady_state, Terminal
from thermgrid.errors import NoResponse, ScenarioError


def test_hits_target(small_block):
    cal = calibrate(small_block, 350.0)
    assert abs(cal.peak_T - 350.0) <= 1.0
    T = steady_state(small_block.with_power(cal.power))
    assert np.nanmax(T.to_array()) == pytest.approx(350.0, abs=1e-6)


def test_linear_in_power(small_block):
    a = calibrate(small_block, 310.0).power
    b = calibrate(small_block, 320.0).power
    assert b == pytest.approx(2 * a, rel=1e-9)


def test_independent_of_probe_power(small_block):
    a = calibrate(small_block, 330.0, P0=1e-9).power
    b = calibrate(small_block, 330.0, P0=1e-5).power
    assert a == pytest.approx(b, rel=1e-9)


def test_target_equal_ambient(small_block):
    cal = calibrate(small_block, 300.0)
    assert cal.power == 0.0
    assert cal.peak_T == 300.0


def test_target_below_ambient(small_block):
    with pytest.raises(ScenarioError):
        calibrate(small_block, 290.0)


def test_region_label(small_block):
    cal = calibrate(small_block, 340.0, label="foot")
    T = steady_state(small_block.with_power(cal.power)).to_array()
    assert np.nanmax(T[:2]) == pytest.approx(340.0, abs=1e-6)
    assert np.nanmax(T) > 340.0


def test_no_sources():
    s = Scenario((Box((0, 0, 0), (4, 4, 4), "W", "w"),), 2.0, (SinkPatch(),))
    with pytest.raises(NoResponse):
        calibrate(s, 350.0)


def test_decoupled_heater():
    # the heater sits on an island with a sink of its own; the probe region never warms
    s = Scenario(
        (Box((0, 0, 0), (4, 4, 4), "W", "probe"), Box((20, 0, 0), (4, 4, 4), "W", "heater")),
        2.0, (SinkPatch(),), (HeatSource("heater", power=1e-8),),
    )
    with pytest.raises(NoResponse):
        calibrate(s, 350.0, label="probe")


def test_joule_sources_rejected(small_block):
    from dataclasses import replace

    s = replace(small_block, sources=small_block.sources + (HeatSource("foot", mode="joule"),),
                terminals=(Terminal("foot", 0.0),))
    with pytest.raises(ScenarioError):
        calibrate(s, 350.0)
