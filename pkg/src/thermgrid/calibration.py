"""Heater-power calibration against a target peak temperature.

Temperature rise is linear in source power, so one solve at a probe power
fixes the answer; a second solve confirms it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import NoResponse, ScenarioError, SolverDivergence
from .fields import ScalarField
from .geometry import Scenario, voxelize
from .pipeline import assemble_scenario
from .thermal import DEFAULT_TOL, solve_steady


@dataclass
class CalibrationResult:
    power: float
    peak_T: float
    T_target: float
    T_ambient: float
    region: list | None
    probe_power: float
    probe_rise: float
    field: ScalarField | None = field(default=None, repr=False)


def _region_max(T: ScalarField, region) -> float:
    arr = T.to_array()
    if region is None:
        return float(np.nanmax(arr))
    sel = np.zeros(arr.shape, dtype=bool)
    for pattern in region:
        sel |= T.grid.label_mask(pattern)
    sel &= ~np.isnan(arr)
    if not sel.any():
        raise NoResponse(f"calibration region {region} matches no solved voxel")
    return float(arr[sel].max())


def calibrate(
    scenario: Scenario,
    T_target: float,
    label: str | Sequence[str] | None = None,
    tol_K: float = 1.0,
    P0: float | None = None,
    tol: float = DEFAULT_TOL,
    preconditioner: str = "auto",
) -> CalibrationResult:
    """Common heater power that puts the peak over ``label`` at ``T_target``.

    ``label`` is a region pattern or list of patterns; ``None`` uses the
    scenario's ``calibration_region`` metadata, falling back to the whole
    grid. All prescribed-power sources are scaled together.
    """
    if not any(s.mode == "prescribed_power" for s in scenario.sources):
        raise NoResponse("scenario has no prescribed-power heat sources to calibrate")
    if any(s.mode == "joule" for s in scenario.sources):
        raise ScenarioError("calibration scales prescribed sources only; remove joule sources first")
    if label is None:
        label = scenario.meta.get("calibration_region")
    region = None if label is None else ([label] if isinstance(label, str) else list(label))

    if P0 is None:
        powers = [s.power for s in scenario.sources if s.power > 0]
        P0 = powers[0] if powers else 1e-6
    probe = scenario.with_power(P0)
    grid = voxelize(probe)
    system = assemble_scenario(probe, grid, tol=tol)
    T_amb = system.T_ref
    if T_target < T_amb:
        raise ScenarioError(f"target {T_target} K is below the ambient {T_amb} K")
    if T_target == T_amb:
        zero = solve_steady(system.with_heat(np.zeros(system.n)), tol=tol, preconditioner=preconditioner)
        return CalibrationResult(0.0, _region_max(zero, region), T_target, T_amb, region, P0, 0.0, zero)

    T0 = solve_steady(system, tol=tol, preconditioner=preconditioner)
    rise0 = _region_max(T0, region) - T_amb
    if not rise0 > 0:
        raise NoResponse("heaters do not raise the temperature of the calibration region")
    power = P0 * (T_target - T_amb) / rise0
    # the heat vector scales with the common power, so the operator is reused
    confirm = solve_steady(
        system.with_heat(system.heat * (power / P0)), tol=tol, preconditioner=preconditioner, x0=None
    )
    peak = _region_max(confirm, region)
    if abs(peak - T_target) > tol_K:
        raise SolverDivergence(
            f"confirming solve reached {peak:.4f} K, outside {tol_K} K of {T_target} K"
        )
    return CalibrationResult(power, peak, T_target, T_amb, region, P0, rise0, confirm)


__all__ = ["calibrate", "CalibrationResult"]
