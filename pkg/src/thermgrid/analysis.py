"""Hotspot metrics, per-layer profiles and before/after comparisons."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import AmbientMismatch, UnitMismatch
from .fields import ScalarField
from .geometry import VoxelGrid
from .validation import check_field


def _num(x):
    """JSON-safe float (NaN becomes None)."""
    if x is None:
        return None
    x = float(x)
    return None if math.isnan(x) else x


def _unnum(x):
    return float("nan") if x is None else float(x)


@dataclass
class HotspotReport:
    """Peak temperature and where it sits, plus per-layer and per-region maxima.

    ``peak_location`` holds the voxel ``index`` as (z, y, x), the voxel
    centre in nm and the region label there. ``power`` is the per-source
    heater power when known (calibrated runs record it for provenance).
    """

    peak_T: float
    peak_location: dict
    per_z_layer_max: list
    per_region_max: dict
    sink_flux: float = float("nan")
    source_power: float = float("nan")
    balance_residual: float = float("nan")
    T_ambient: float = float("nan")
    power: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def peak_label(self) -> str:
        return self.peak_location["label"]

    @property
    def rise(self) -> float:
        return self.peak_T - self.T_ambient

    def region_max(self, patterns: str | Sequence[str]) -> float:
        """Largest per-region maximum among labels matching any pattern."""
        from .geometry import label_matches

        if isinstance(patterns, str):
            patterns = [patterns]
        vals = [T for lab, T in self.per_region_max.items() if any(label_matches(lab, p) for p in patterns)]
        if not vals:
            raise KeyError(f"no region matches {list(patterns)}")
        return max(vals)

    def to_dict(self) -> dict:
        return {
            "peak_T": self.peak_T,
            "peak_location": dict(self.peak_location),
            "per_z_layer_max": [[int(k), float(T)] for k, T in self.per_z_layer_max],
            "per_region_max": {k: float(v) for k, v in self.per_region_max.items()},
            "sink_flux": _num(self.sink_flux),
            "source_power": _num(self.source_power),
            "balance_residual": _num(self.balance_residual),
            "T_ambient": _num(self.T_ambient),
            "power": self.power,
            "meta": dict(self.meta),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "HotspotReport":
        loc = dict(data["peak_location"])
        loc["index"] = tuple(loc["index"])
        loc["center_nm"] = tuple(loc["center_nm"])
        return cls(
            peak_T=float(data["peak_T"]),
            peak_location=loc,
            per_z_layer_max=[(int(k), float(T)) for k, T in data["per_z_layer_max"]],
            per_region_max={k: float(v) for k, v in data["per_region_max"].items()},
            sink_flux=_unnum(data.get("sink_flux")),
            source_power=_unnum(data.get("source_power")),
            balance_residual=_unnum(data.get("balance_residual")),
            T_ambient=_unnum(data.get("T_ambient")),
            power=data.get("power"),
            meta=dict(data.get("meta", {})),
        )

    def to_json(self, indent: int = 1) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "HotspotReport":
        return cls.from_dict(json.loads(text))

    def to_text(self, layers: bool = False) -> str:
        loc = self.peak_location
        rows = [
            ("peak_T [K]", f"{self.peak_T:.4f}"),
            ("peak label", loc["label"]),
            ("peak index (z,y,x)", " ".join(str(i) for i in loc["index"])),
            ("peak centre (x,y,z) [nm]", " ".join(f"{c:g}" for c in loc["center_nm"])),
            ("ambient [K]", f"{self.T_ambient:.4f}"),
            ("source power [W]", f"{self.source_power:.6e}"),
            ("sink flux [W]", f"{self.sink_flux:.6e}"),
            ("balance residual", f"{self.balance_residual:.3e}"),
        ]
        if self.power is not None:
            rows.append(("heater power [W]", f"{self.power:.6e}"))
        out = _columns(rows)
        regions = sorted(self.per_region_max.items(), key=lambda kv: -kv[1])
        out += "\n\n" + _columns([("region", "max_T [K]")] + [(k, f"{v:.4f}") for k, v in regions])
        if layers:
            out += "\n\n" + _columns([("z index", "max_T [K]")] + [(str(k), f"{T:.4f}") for k, T in self.per_z_layer_max])
        return out


@dataclass
class ComparisonReport:
    """Effect of a design change on the peak temperature.

    Percentages are reported two ways: relative to the baseline absolute
    temperature and relative to the baseline rise above ambient.
    """

    baseline_peak: float
    variant_peak: float
    delta_K: float
    pct_reduction_absolute: float
    pct_reduction_of_rise: float
    T_ambient: float

    def to_dict(self) -> dict:
        return {k: _num(v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, data: Mapping) -> "ComparisonReport":
        return cls(**{k: _unnum(data[k]) for k in cls.__dataclass_fields__})

    def to_json(self, indent: int = 1) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    def to_text(self) -> str:
        return _columns([
            ("baseline peak [K]", f"{self.baseline_peak:.4f}"),
            ("variant peak [K]", f"{self.variant_peak:.4f}"),
            ("delta [K]", f"{self.delta_K:.4f}"),
            ("reduction, absolute [%]", f"{self.pct_reduction_absolute:.2f}"),
            ("reduction of rise [%]", f"{self.pct_reduction_of_rise:.2f}"),
            ("ambient [K]", f"{self.T_ambient:.4f}"),
        ])


def _columns(rows) -> str:
    width = max(len(r[0]) for r in rows)
    return "\n".join(f"{a.ljust(width)}  {b}" for a, b in rows)


def _temperature(field: ScalarField, grid: VoxelGrid | None) -> tuple[np.ndarray, VoxelGrid]:
    if not isinstance(field, ScalarField):
        raise UnitMismatch("expected a ScalarField")
    if field.unit != "K":
        raise UnitMismatch(f"expected a temperature field in K, got {field.unit}")
    grid = field.grid if grid is None else grid
    check_field(field, grid)
    return field.to_array(), grid


def hotspot(field: ScalarField, grid: VoxelGrid | None = None, power: float | None = None) -> HotspotReport:
    """Summarise a temperature field.

    Ties for the peak go to the lexicographically smallest (z, y, x) index.
    """
    T, grid = _temperature(field, grid)
    defined = ~np.isnan(T)
    if not defined.any():
        raise UnitMismatch("temperature field holds no values")
    # nanargmax returns the first maximum in C order, i.e. smallest (z, y, x)
    flat = int(np.nanargmax(T))
    idx = tuple(int(i) for i in np.unravel_index(flat, T.shape))
    centre = tuple(float(grid.origin[a] + (idx[2 - a] + 0.5) * grid.spacing) for a in range(3))

    per_layer = []
    for k in range(T.shape[0]):
        layer = T[k]
        if np.any(~np.isnan(layer)):
            per_layer.append((k, float(np.nanmax(layer))))

    per_region = {}
    lab = grid.label_idx
    for i, name in enumerate(grid.labels):
        sel = (lab == i) & defined
        if sel.any():
            per_region[name] = float(T[sel].max())

    info = field.info or {}
    return HotspotReport(
        peak_T=float(T.flat[flat]),
        peak_location={"index": idx, "center_nm": centre, "label": grid.label_at(idx)},
        per_z_layer_max=per_layer,
        per_region_max=per_region,
        sink_flux=float(info.get("sink_flux", float("nan"))),
        source_power=float(info.get("source_power", float("nan"))),
        balance_residual=float(info.get("balance_residual", float("nan"))),
        T_ambient=float(info.get("T_ref", float("nan"))),
        power=power,
    )


def compare(base: HotspotReport, variant: HotspotReport, ambient_tol: float = 1e-9) -> ComparisonReport:
    """Peak reduction from ``base`` to ``variant``; negative means the variant is hotter."""
    Ta, Tv = base.T_ambient, variant.T_ambient
    if not (math.isnan(Ta) and math.isnan(Tv)) and not abs(Ta - Tv) <= ambient_tol:
        raise AmbientMismatch(f"reports have different ambients: {Ta} K vs {Tv} K")
    delta = base.peak_T - variant.peak_T
    pct_abs = 100.0 * delta / base.peak_T
    rise = base.peak_T - Ta
    if delta == 0:
        pct_rise = 0.0
    elif rise > 0:
        pct_rise = 100.0 * delta / rise
    else:
        pct_rise = float("nan")
    return ComparisonReport(base.peak_T, variant.peak_T, delta, pct_abs, pct_rise, Ta)


def tier_profile(field: ScalarField, grid: VoxelGrid | None = None) -> list[tuple[float, float, float]]:
    """``(z_nm, max_T, mean_T)`` for each voxel layer holding any solved voxel, bottom up.

    The mean is over solved voxels of the layer; voxels are equal in volume,
    so this is the volume-weighted mean.
    """
    T, grid = _temperature(field, grid)
    z = grid.centers("z")
    rows = []
    for k in range(T.shape[0]):
        vals = T[k][~np.isnan(T[k])]
        if vals.size:
            rows.append((float(z[k]), float(vals.max()), float(vals.mean())))
    return rows


def tier_max(field: ScalarField, patterns: str | Sequence[str], grid: VoxelGrid | None = None) -> float:
    """Maximum temperature over voxels whose label matches any of ``patterns``."""
    T, grid = _temperature(field, grid)
    if isinstance(patterns, str):
        patterns = [patterns]
    sel = np.zeros(grid.shape, dtype=bool)
    for p in patterns:
        sel |= grid.label_mask(p)
    sel &= ~np.isnan(T)
    if not sel.any():
        raise KeyError(f"no solved voxel matches {list(patterns)}")
    return float(T[sel].max())


__all__ = ["HotspotReport", "ComparisonReport", "hotspot", "compare", "tier_profile", "tier_max"]
