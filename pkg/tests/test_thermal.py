import numpy as np
import pytest
import scipy.sparse as sp

from thermgrid import Box, HeatSource, Scenario, SinkPatch, assemble_steady, face_conductance, solve_steady, voxelize
from thermgrid.electrical import prescribed_power_to_density
from thermgrid.errors import FloatingComponent, ScenarioError, SolverDivergence
from thermgrid.pipeline import assemble_scenario, steady_state
from thermgrid.solvers import pcg
from thermgrid.thermal import default_sinks
from thermgrid.verify import heated_slab_error, series_interface_oracle

from conftest import slab


def test_face_conductance():
    assert face_conductance(13.0, 13.0, 2e-9) == pytest.approx(2.6e-8, rel=1e-14)
    assert face_conductance(13.0, 167.0, 2e-9) == pytest.approx(2e-9 * 2 * 13 * 167 / 180, rel=1e-14)
    assert face_conductance(13.0, 0.0, 2e-9) == 0.0


def test_two_voxel_equilibrium():
    s = slab([(4.0, "W", "w")], h=2.0)
    T = solve_steady(assemble_steady(voxelize(s), None, s.sinks))
    assert np.array_equal(T.values, [300.0, 300.0])


def test_series_slab():
    s = slab([(50.0, "Si_nw", "a"), (50.0, "W", "b")], sinks=(SinkPatch("zmin", 300.0), SinkPatch("zmax", 400.0)))
    T = solve_steady(assemble_steady(voxelize(s), None, s.sinks)).to_array()[:, 0, 0]
    T_int = (13 * T[24] + 167 * T[25]) / 180
    assert T_int == pytest.approx(series_interface_oracle(), rel=1e-8)
    assert series_interface_oracle() == pytest.approx(392.78, abs=5e-3)


def test_heated_slab_peak_and_convergence():
    e4, _ = heated_slab_error(4.0)
    e2, peak = heated_slab_error(2.0)
    assert peak == pytest.approx(1e15 * (100e-9) ** 2 / 26, rel=1e-6)
    assert 3.2 <= e4 / e2 <= 4.8


def test_identity_and_dense_oracle(rng):
    b = rng.standard_normal(7)
    x, _ = pcg(sp.identity(7), b)
    assert np.allclose(x, b)
    B = rng.standard_normal((5, 5))
    A = B @ B.T + 5 * np.eye(5)
    x, info = pcg(A, b[:5], tol=1e-14)
    assert np.allclose(x, np.linalg.solve(A, b[:5]), rtol=1e-9, atol=1e-12)


def test_iteration_cap():
    s = slab([(100.0, "Si_nw", "a")], sinks=(SinkPatch("zmin", 300.0), SinkPatch("zmax", 400.0)))
    system = assemble_steady(voxelize(s), None, s.sinks)
    with pytest.raises(SolverDivergence) as err:
        solve_steady(system, max_iter=2, preconditioner="none")
    assert err.value.iterations == 2 and err.value.x is not None


def test_no_sink_is_floating():
    s = slab([(8.0, "W", "w")], sinks=())
    with pytest.raises(FloatingComponent):
        assemble_steady(voxelize(s), None, ())


def test_heated_island_is_floating():
    s = Scenario(
        (Box((0, 0, 0), (4, 4, 4), "W", "base"), Box((0, 0, 8), (4, 4, 4), "W", "island")),
        2.0, (SinkPatch(),), (HeatSource("island", power=1e-9),),
    )
    grid = voxelize(s)
    with pytest.raises(FloatingComponent) as err:
        assemble_scenario(s, grid)
    assert err.value.size == 8


def test_unheated_island_is_pinned():
    s = Scenario(
        (Box((0, 0, 0), (4, 4, 4), "W", "base"), Box((0, 0, 8), (4, 4, 4), "W", "island")),
        2.0, (SinkPatch(),), (HeatSource("base", power=1e-9),),
    )
    T = steady_state(s).to_array()
    assert np.all(T[4:6] == 300.0)
    assert T[:2].max() > 300.0


def test_negative_heat_rejected():
    s = slab([(8.0, "W", "w")])
    grid = voxelize(s)
    with pytest.raises(ScenarioError):
        assemble_steady(grid, -np.ones(grid.shape), s.sinks)


def test_default_sink():
    (patch,) = default_sinks()
    assert patch.face == "zmin" and patch.T == 300.0


def test_zero_source_is_ambient(small_block):
    T = steady_state(small_block.with_power(0.0))
    assert np.all(T.values == 300.0)


def test_sink_override_maximum_principle(small_block):
    from dataclasses import replace

    s = replace(small_block, sinks=(SinkPatch("zmin", 320.0),))
    T = steady_state(s)
    assert T.values.min() >= 320.0


def test_balance_and_symmetry(small_block):
    system = assemble_scenario(small_block)
    assert system.is_symmetric()
    dense = system.A.toarray()
    assert np.all(np.linalg.eigvalsh(dense) > 0)
    T = solve_steady(system)
    assert T.info["balance_residual"] <= 1e-6
    assert T.info["sink_flux"] == pytest.approx(1e-7, rel=1e-6)


def _layered(rng, sinks=(SinkPatch(),)):
    mats = ["W", "Si_nw", "HfO2", "Ti", "Al2O3"]
    boxes = [Box((0, 0, 0), (12, 12, 4), "W", "foot")]
    for i in range(6):
        lo = tuple(int(v) * 2 for v in rng.integers(0, 4, 2)) + (4.0 + 2 * i,)
        boxes.append(Box(lo, (4, 4, 2), mats[i % 5], f"b{i}"))
    boxes.insert(1, Box((0, 0, 4), (12, 12, 12), "Si_nw", "body"))
    return Scenario(tuple(boxes), 2.0, sinks)


def test_linearity_and_superposition(rng):
    s = _layered(rng)
    grid = voxelize(s)
    Q1 = prescribed_power_to_density(grid, [HeatSource("b1", power=2e-7)]).to_array(0.0)
    Q2 = prescribed_power_to_density(grid, [HeatSource("b4", power=5e-7)]).to_array(0.0)
    solve = lambda Q: solve_steady(assemble_steady(grid, Q, s.sinks)).values - 300.0
    r1, r2 = solve(Q1), solve(Q2)
    assert np.allclose(solve(3.5 * Q1), 3.5 * r1, rtol=1e-8, atol=1e-12)
    assert np.allclose(solve(Q1 + Q2), r1 + r2, rtol=1e-8, atol=1e-12)


def test_mirror_symmetry():
    boxes = (
        Box((0, 0, 0), (20, 8, 4), "W", "foot"),
        Box((2, 0, 4), (6, 8, 6), "Si_nw", "left"),
        Box((8, 0, 4), (4, 8, 4), "HfO2", "mid"),
        Box((12, 0, 4), (6, 8, 6), "Si_nw", "right"),
    )
    s = Scenario(boxes, 2.0, (SinkPatch(),), (HeatSource("left", power=1e-7), HeatSource("right", power=1e-7)))
    T = steady_state(s).to_array()
    assert np.allclose(T, T[:, :, ::-1], rtol=0, atol=1e-9, equal_nan=True)


def test_maximum_principle_random(rng):
    s = _layered(rng)
    grid = voxelize(s)
    Q = rng.uniform(0, 1e16, grid.shape) * grid.active
    T = solve_steady(assemble_steady(grid, Q, s.sinks))
    assert T.values.min() >= 300.0
    T0 = solve_steady(assemble_steady(grid, None, s.sinks))
    assert np.all(T0.values == 300.0)


def test_amg_and_jacobi_agree(small_block):
    system = assemble_scenario(small_block)
    a = solve_steady(system, preconditioner="jacobi").values
    b = solve_steady(system, preconditioner="amg").values
    assert np.allclose(a, b, rtol=1e-9)


def test_partial_sink_patch():
    s = Scenario((Box((0, 0, 0), (8, 8, 8), "W", "blk"),), 2.0, (SinkPatch("zmin", 300.0, rect=(0, 0, 4, 4)),),
                 (HeatSource("blk", power=1e-7),))
    grid = voxelize(s)
    assert grid.face_mask(s.sinks[0]).sum() == 4
    T = steady_state(s).to_array()
    assert T[0, 0, 0] < T[0, 3, 3]
