"""Input checks shared by the solvers and estimators."""
from __future__ import annotations

import math

import numpy as np

from .errors import FieldMismatch, ScenarioError, UnitMismatch
from .fields import ScalarField
from .geometry import Scenario, VoxelGrid, voxelize


def check_grid(grid) -> VoxelGrid:
    """Accept a VoxelGrid or a Scenario (voxelized on the fly)."""
    if isinstance(grid, Scenario):
        return voxelize(grid)
    if not isinstance(grid, VoxelGrid):
        raise TypeError(f"expected VoxelGrid or Scenario, got {type(grid).__name__}")
    return grid


def check_field(field, grid: VoxelGrid, unit: str | None = None) -> ScalarField:
    if not isinstance(field, ScalarField):
        raise TypeError(f"expected ScalarField, got {type(field).__name__}")
    if unit is not None and field.unit != unit:
        raise UnitMismatch(f"expected field in {unit}, got {field.unit}")
    if not field.grid.same_layout(grid):
        raise FieldMismatch("field was computed on a different grid")
    return field


def heat_array(Q, grid: VoxelGrid) -> np.ndarray:
    """Full-grid heat density array from a field, an array or None."""
    if Q is None:
        return np.zeros(grid.shape)
    if isinstance(Q, ScalarField):
        check_field(Q, grid, "W/m^3")
        return Q.to_array(fill=0.0)
    arr = np.asarray(Q, dtype=float)
    if arr.shape != grid.shape:
        raise FieldMismatch(f"heat density shape {arr.shape} does not match grid {grid.shape}")
    return arr


def check_positive(value, name: str, allow_zero: bool = False) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ScenarioError(f"{name} must be a number, got {value!r}")
    if not math.isfinite(value) or value < 0 or (value == 0 and not allow_zero):
        raise ScenarioError(f"{name} must be {'>= 0' if allow_zero else '> 0'}, got {value}")
    return value
