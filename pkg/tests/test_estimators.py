import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from thermgrid import Box, HeatSource, Scenario, SinkPatch, SteadyThermalSolver, TransientThermalSolver, voxelize
from thermgrid.electrical import prescribed_power_to_density
from thermgrid.errors import FloatingComponent
from thermgrid.pipeline import steady_state


def test_params_and_clone():
    est = SteadyThermalSolver(tol=1e-9, preconditioner="amg")
    assert est.get_params() == {"tol": 1e-9, "max_iter": None, "preconditioner": "amg"}
    c = clone(est).set_params(tol=1e-11)
    assert c.tol == 1e-11 and est.tol == 1e-9
    tr = TransientThermalSolver(dt_ns=0.5, probes=("a",))
    assert clone(tr).get_params()["dt_ns"] == 0.5


def test_predict_matches_pipeline(small_block):
    grid = voxelize(small_block)
    Q = prescribed_power_to_density(grid, small_block.sources)
    est = SteadyThermalSolver().fit(grid, sinks=small_block.sinks)
    T = est.predict(Q)
    assert np.allclose(T.values, steady_state(small_block).values, rtol=1e-10)
    assert est.score(Q, T) == 0.0
    # the fitted operator is reused for new inputs
    assert np.allclose(est.predict(2 * Q.to_array(0.0)).values - 300, 2 * (T.values - 300), rtol=1e-8)


def test_fit_accepts_scenario(small_block):
    est = SteadyThermalSolver().fit(small_block)
    assert est.n_unknowns_ == voxelize(small_block).active.sum()


def test_not_fitted():
    with pytest.raises(NotFittedError):
        SteadyThermalSolver().predict(np.zeros((1, 1, 1)))


def test_heat_on_floating_component():
    s = Scenario((Box((0, 0, 0), (4, 4, 4), "W", "base"), Box((0, 0, 8), (4, 4, 4), "W", "island")), 2.0, (SinkPatch(),))
    grid = voxelize(s)
    est = SteadyThermalSolver().fit(grid)
    Q = prescribed_power_to_density(grid, [HeatSource("island", power=1e-9)])
    with pytest.raises(FloatingComponent):
        est.predict(Q)


def test_transient_estimator(small_block):
    grid = voxelize(small_block)
    Q = prescribed_power_to_density(grid, small_block.sources)
    est = TransientThermalSolver(dt_ns=0.5, t_end_ns=20.0, probes=["block"], hold=True).fit(grid)
    trace = est.predict(Q)
    steady = SteadyThermalSolver().fit(grid).predict(Q)
    assert abs(trace.column("block")[-1] - steady.values.max()) <= 0.1
