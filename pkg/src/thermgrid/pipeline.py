"""Scenario-level drivers: voxelize, build heat, assemble and solve."""
from __future__ import annotations

from typing import Sequence

from .electrical import scenario_heat_density
from .fields import ScalarField
from .geometry import Scenario, VoxelGrid, voxelize
from .thermal import DEFAULT_TOL, LinearSystem, TransientTrace, assemble_steady, run_transient, solve_steady


def assemble_scenario(scenario: Scenario, grid: VoxelGrid | None = None, tol: float = DEFAULT_TOL) -> LinearSystem:
    grid = voxelize(scenario) if grid is None else grid
    Q = scenario_heat_density(scenario, grid, tol=tol)
    return assemble_steady(grid, Q, scenario.sinks)


def steady_state(
    scenario: Scenario, tol: float = DEFAULT_TOL, max_iter: int | None = None,
    preconditioner: str = "auto", grid: VoxelGrid | None = None,
) -> ScalarField:
    """Steady temperature (K) of ``scenario``; ``field.grid`` is the voxel grid."""
    system = assemble_scenario(scenario, grid, tol=tol)
    return solve_steady(system, tol=tol, max_iter=max_iter, preconditioner=preconditioner)


def transient_run(
    scenario: Scenario, t_end_ns: float = 200.0, dt_ns: float = 0.1, probes: Sequence[str] = (),
    hold: bool = False, tol: float = DEFAULT_TOL, max_iter: int | None = None,
    preconditioner: str = "auto", sample_every: int = 1,
) -> TransientTrace:
    """Probe trace from ambient under the scenario's schedule (or held on)."""
    system = assemble_scenario(scenario, tol=tol)
    return run_transient(
        system, t_end_ns, dt_ns, probes=probes, schedule=scenario.schedule, hold=hold,
        tol=tol, max_iter=max_iter, preconditioner=preconditioner, sample_every=sample_every,
    )
