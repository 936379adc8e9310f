"""Per-voxel scalar fields."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FieldMismatch, UnitMismatch
from .geometry import VoxelGrid

UNITS = ("K", "V", "W/m^3")


@dataclass(eq=False)
class ScalarField:
    """Values on the voxels selected by ``mask``.

    ``values`` is 1-D, ordered like ``grid.material_idx[mask]`` (C order, x
    fastest). ``info`` carries solver diagnostics such as sink flux.
    """

    grid: VoxelGrid
    values: np.ndarray
    unit: str
    mask: np.ndarray
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.unit not in UNITS:
            raise UnitMismatch(f"unknown unit tag {self.unit!r}")
        self.values = np.asarray(self.values, dtype=float)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.shape != self.grid.shape:
            raise FieldMismatch("mask shape does not match grid")
        if self.values.shape != (int(self.mask.sum()),):
            raise FieldMismatch(f"expected {int(self.mask.sum())} values, got {self.values.shape}")

    def __len__(self):
        return self.values.size

    def to_array(self, fill: float = np.nan) -> np.ndarray:
        out = np.full(self.grid.shape, fill, dtype=float)
        out[self.mask] = self.values
        return out

    @classmethod
    def from_array(cls, grid: VoxelGrid, array, unit: str, mask=None, info=None) -> "ScalarField":
        array = np.asarray(array, dtype=float)
        if mask is None:
            mask = grid.active
        return cls(grid, array[mask], unit, mask, dict(info or {}))

    def max(self) -> float:
        return float(self.values.max()) if self.values.size else float("nan")

    def min(self) -> float:
        return float(self.values.min()) if self.values.size else float("nan")
