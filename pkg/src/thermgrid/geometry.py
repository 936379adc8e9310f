"""Axis-aligned box geometry, scenarios and voxelization.

Coordinates are in nanometres with z pointing away from the heat sink.
Voxel arrays are indexed ``[z, y, x]`` so that C-order flattening runs x
fastest, which is also the ordering used by the VTK export.
"""
from __future__ import annotations

import fnmatch
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    AlignmentError,
    EmptyScenario,
    InvalidProperty,
    PlacementError,
    ScenarioError,
)
from .materials import VOID, Material, MaterialDB, builtin_library, merge_overrides

FACES = ("xmin", "xmax", "ymin", "ymax", "zmin", "zmax")
# per face: (array axis in [z, y, x] order, side) and the in-plane coordinate axes (x=0, y=1, z=2)
_FACE_AXES = {
    "xmin": (2, 0, (1, 2)),
    "xmax": (2, 1, (1, 2)),
    "ymin": (1, 0, (0, 2)),
    "ymax": (1, 1, (0, 2)),
    "zmin": (0, 0, (0, 1)),
    "zmax": (0, 1, (0, 1)),
}
MAX_VOXELS = 200_000_000
_EPS = 1e-9


def _triple(values, what) -> tuple[float, float, float]:
    values = tuple(float(v) for v in values)
    if len(values) != 3 or not all(math.isfinite(v) for v in values):
        raise ScenarioError(f"{what} must be three finite numbers, got {values!r}")
    return values


def _strict_keys(data: Mapping, allowed: set, what: str):
    extra = set(data) - allowed
    if extra:
        raise ScenarioError(f"unknown {what} field(s): {sorted(extra)}")


@dataclass(frozen=True)
class Box:
    """Material block. ``size`` is (L, W, T) along (x, y, z)."""

    min_corner: tuple[float, float, float]
    size: tuple[float, float, float]
    material: str
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "min_corner", _triple(self.min_corner, "min_corner"))
        object.__setattr__(self, "size", _triple(self.size, "size"))
        if any(s <= 0 for s in self.size):
            raise ScenarioError(f"box {self.label!r}: size components must be > 0, got {self.size}")

    @property
    def max_corner(self) -> tuple[float, float, float]:
        return tuple(c + s for c, s in zip(self.min_corner, self.size))

    @property
    def volume_nm3(self) -> float:
        return self.size[0] * self.size[1] * self.size[2]

    def overlaps(self, other: "Box") -> bool:
        lo, hi = self.min_corner, self.max_corner
        olo, ohi = other.min_corner, other.max_corner
        return all(lo[i] < ohi[i] - _EPS and olo[i] < hi[i] - _EPS for i in range(3))

    def to_dict(self) -> dict:
        return {
            "min_corner": list(self.min_corner),
            "size": list(self.size),
            "material": self.material,
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Box":
        _strict_keys(data, {"min_corner", "size", "material", "label"}, "box")
        return cls(tuple(data["min_corner"]), tuple(data["size"]), data["material"], data.get("label", ""))

    @classmethod
    def from_bounds(cls, lo, hi, material: str, label: str = "") -> "Box":
        return cls(tuple(lo), tuple(h - l for l, h in zip(lo, hi)), material, label)


@dataclass(frozen=True)
class SinkPatch:
    """Dirichlet patch on an exterior face of the grid.

    ``rect`` restricts the patch to ``(u0, v0, u1, v1)`` in the face's two
    in-plane coordinates (x, y for z faces); ``label`` restricts it to voxels
    carrying a matching region label.
    """

    face: str = "zmin"
    T: float = 300.0
    rect: tuple[float, float, float, float] | None = None
    label: str | None = None

    def __post_init__(self):
        if self.face not in FACES:
            raise ScenarioError(f"sink face must be one of {FACES}, got {self.face!r}")
        T = float(self.T)
        if not math.isfinite(T) or T <= 0:
            raise ScenarioError(f"sink temperature must be a positive finite kelvin value, got {self.T!r}")
        object.__setattr__(self, "T", T)
        if self.rect is not None:
            rect = tuple(float(v) for v in self.rect)
            if len(rect) != 4 or rect[2] <= rect[0] or rect[3] <= rect[1]:
                raise ScenarioError(f"sink rect must be (u0, v0, u1, v1) with u1>u0, v1>v0, got {self.rect!r}")
            object.__setattr__(self, "rect", rect)

    def to_dict(self) -> dict:
        return {"face": self.face, "T": self.T, "rect": list(self.rect) if self.rect else None, "label": self.label}

    @classmethod
    def from_dict(cls, data: Mapping) -> "SinkPatch":
        _strict_keys(data, {"face", "T", "rect", "label"}, "sink")
        rect = data.get("rect")
        return cls(data.get("face", "zmin"), data.get("T", 300.0), tuple(rect) if rect else None, data.get("label"))


@dataclass(frozen=True)
class HeatSource:
    region_label: str
    mode: str = "prescribed_power"
    power: float = 0.0

    def __post_init__(self):
        if self.mode not in ("prescribed_power", "joule"):
            raise ScenarioError(f"heat source mode must be 'prescribed_power' or 'joule', got {self.mode!r}")
        power = float(self.power)
        if not math.isfinite(power) or power < 0:
            raise InvalidProperty(f"heat source {self.region_label!r}: power must be >= 0, got {self.power!r}")
        object.__setattr__(self, "power", power)

    def to_dict(self) -> dict:
        return {"region_label": self.region_label, "mode": self.mode, "power": self.power}

    @classmethod
    def from_dict(cls, data: Mapping) -> "HeatSource":
        _strict_keys(data, {"region_label", "mode", "power"}, "source")
        return cls(data["region_label"], data.get("mode", "prescribed_power"), data.get("power", 0.0))


@dataclass(frozen=True)
class SourceSchedule:
    """On-first square wave: sources are on during ``[0, duty*period)``."""

    period_ns: float = 100.0
    duty: float = 0.5

    def __post_init__(self):
        if not self.period_ns > 0:
            raise ScenarioError(f"schedule period must be > 0, got {self.period_ns}")
        if not 0 < self.duty <= 1:
            raise ScenarioError(f"schedule duty must lie in (0, 1], got {self.duty}")

    @property
    def on_ns(self) -> float:
        return self.duty * self.period_ns

    def is_on(self, t_ns: float) -> bool:
        phase = math.fmod(t_ns, self.period_ns)
        if phase < 0:
            phase += self.period_ns
        # tolerate round-off right below a period boundary
        if self.period_ns - phase < 1e-9 * self.period_ns:
            phase = 0.0
        return phase < self.on_ns - 1e-9 * self.period_ns

    def to_dict(self) -> dict:
        return {"period_ns": self.period_ns, "duty": self.duty}

    @classmethod
    def from_dict(cls, data: Mapping) -> "SourceSchedule":
        _strict_keys(data, {"period_ns", "duty"}, "schedule")
        return cls(float(data.get("period_ns", 100.0)), float(data.get("duty", 0.5)))


@dataclass(frozen=True)
class Terminal:
    label: str
    V: float

    def to_dict(self) -> dict:
        return {"label": self.label, "V": float(self.V)}

    @classmethod
    def from_dict(cls, data: Mapping) -> "Terminal":
        _strict_keys(data, {"label", "V"}, "terminal")
        return cls(data["label"], float(data["V"]))


@dataclass(frozen=True)
class Scenario:
    """Complete simulation input: geometry, sinks, sources and schedule."""

    boxes: tuple[Box, ...]
    spacing: float = 2.0
    sinks: tuple[SinkPatch, ...] = ()
    sources: tuple[HeatSource, ...] = ()
    schedule: SourceSchedule = field(default_factory=SourceSchedule)
    terminals: tuple[Terminal, ...] | None = None
    materials: tuple[Material, ...] = ()
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "boxes", tuple(self.boxes))
        object.__setattr__(self, "sinks", tuple(self.sinks))
        object.__setattr__(self, "sources", tuple(self.sources))
        object.__setattr__(self, "materials", tuple(self.materials))
        if self.terminals is not None:
            object.__setattr__(self, "terminals", tuple(self.terminals))
        spacing = float(self.spacing)
        if not spacing > 0:
            raise ScenarioError(f"spacing must be > 0, got {self.spacing}")
        object.__setattr__(self, "spacing", spacing)

    @property
    def labels(self) -> list[str]:
        seen = {}
        for box in self.boxes:
            seen.setdefault(box.label, None)
        return list(seen)

    def material_db(self, db: MaterialDB | None = None) -> MaterialDB:
        return merge_overrides(db if db is not None else builtin_library(), self.materials)

    def bounds(self) -> tuple[tuple[float, float, float], tuple[float, float, float]]:
        if not self.boxes:
            raise EmptyScenario("scenario has no boxes")
        lo = tuple(min(b.min_corner[i] for b in self.boxes) for i in range(3))
        hi = tuple(max(b.max_corner[i] for b in self.boxes) for i in range(3))
        return lo, hi

    def boxes_matching(self, pattern: str) -> list[Box]:
        return [b for b in self.boxes if label_matches(b.label, pattern)]

    def validate(self):
        labels = set(self.labels)
        for src in self.sources:
            if not any(label_matches(lab, src.region_label) for lab in labels):
                raise ScenarioError(f"heat source references unknown region {src.region_label!r}")
        for term in self.terminals or ():
            if not any(label_matches(lab, term.label) for lab in labels):
                raise ScenarioError(f"terminal references unknown region {term.label!r}")

    def with_power(self, power: float) -> "Scenario":
        """Copy with every prescribed source set to ``power`` watts."""
        sources = tuple(
            replace(s, power=power) if s.mode == "prescribed_power" else s for s in self.sources
        )
        return replace(self, sources=sources)

    def to_dict(self) -> dict:
        return {
            "spacing": self.spacing,
            "boxes": [b.to_dict() for b in self.boxes],
            "sinks": [s.to_dict() for s in self.sinks],
            "sources": [s.to_dict() for s in self.sources],
            "schedule": self.schedule.to_dict(),
            "electrical": None if self.terminals is None else {"terminals": [t.to_dict() for t in self.terminals]},
            "materials": [m.to_dict() for m in self.materials],
            "meta": dict(self.meta),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Scenario":
        _strict_keys(
            data, {"spacing", "boxes", "sinks", "sources", "schedule", "electrical", "materials", "meta"}, "scenario"
        )
        electrical = data.get("electrical")
        terminals = None
        if electrical is not None:
            _strict_keys(electrical, {"terminals"}, "electrical")
            terminals = tuple(Terminal.from_dict(t) for t in electrical.get("terminals", []))
        return cls(
            boxes=tuple(Box.from_dict(b) for b in data.get("boxes", [])),
            spacing=data.get("spacing", 2.0),
            sinks=tuple(SinkPatch.from_dict(s) for s in data.get("sinks", [])),
            sources=tuple(HeatSource.from_dict(s) for s in data.get("sources", [])),
            schedule=SourceSchedule.from_dict(data.get("schedule", {})),
            terminals=terminals,
            materials=tuple(Material.from_dict(m) for m in data.get("materials", [])),
            meta=dict(data.get("meta", {})),
        )

    def to_json(self, path: str | Path | None = None, indent: int = 1) -> str:
        text = json.dumps(self.to_dict(), indent=indent)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, source: str | Path) -> "Scenario":
        path = Path(source)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ScenarioError(f"cannot read scenario file {str(source)!r}: {exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"scenario file {str(source)!r} is not valid JSON: {exc}") from exc
        try:
            return cls.from_dict(data)
        except (KeyError, TypeError) as exc:
            raise ScenarioError(f"malformed scenario file {str(source)!r}: {exc!r}") from exc


def label_matches(label: str, pattern: str) -> bool:
    """Exact match, or shell-style glob when the pattern holds wildcards."""
    if any(ch in pattern for ch in "*?["):
        return fnmatch.fnmatchcase(label, pattern)
    return label == pattern


class VoxelGrid:
    """Uniform voxel grid with per-voxel material and region label.

    ``material_idx`` and ``label_idx`` are ``int16`` arrays of shape
    ``(nz, ny, nx)``; ``-1`` marks an uncovered (``ambient_void``) voxel or an
    unlabelled one. Arrays are read-only after construction.
    """

    def __init__(self, spacing, origin, material_idx, label_idx, palette, labels):
        self.spacing = float(spacing)
        self.origin = tuple(float(o) for o in origin)
        self.material_idx = np.asarray(material_idx, dtype=np.int16)
        self.label_idx = np.asarray(label_idx, dtype=np.int16)
        if self.material_idx.ndim != 3 or self.material_idx.shape != self.label_idx.shape:
            raise ScenarioError("material and label arrays must share one 3-D shape")
        if min(self.material_idx.shape) < 1:
            raise ScenarioError("grid needs at least one voxel along every axis")
        self.palette: tuple[Material, ...] = tuple(palette)
        self.labels: tuple[str, ...] = tuple(labels)
        self.material_idx.setflags(write=False)
        self.label_idx.setflags(write=False)
        self._cache: dict = {}

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.material_idx.shape

    @property
    def dims(self) -> tuple[int, int, int]:
        nz, ny, nx = self.shape
        return nx, ny, nz

    @property
    def size(self) -> int:
        return self.material_idx.size

    @property
    def spacing_m(self) -> float:
        return self.spacing * 1e-9

    @property
    def voxel_volume_m3(self) -> float:
        return self.spacing_m**3

    def _property(self, attr: str) -> np.ndarray:
        if attr not in self._cache:
            table = np.array([getattr(m, attr) for m in self.palette] + [0.0])
            # index -1 picks the trailing zero
            arr = table[self.material_idx]
            arr.setflags(write=False)
            self._cache[attr] = arr
        return self._cache[attr]

    @property
    def k(self) -> np.ndarray:
        return self._property("k")

    @property
    def sigma(self) -> np.ndarray:
        return self._property("sigma")

    @property
    def rho_cp(self) -> np.ndarray:
        return self._property("rho_cp")

    @property
    def active(self) -> np.ndarray:
        """Thermally active voxels (covered by some box)."""
        if "active" not in self._cache:
            arr = self.material_idx >= 0
            arr.setflags(write=False)
            self._cache["active"] = arr
        return self._cache["active"]

    def material_name_at(self, idx) -> str:
        m = int(self.material_idx[tuple(idx)])
        return VOID if m < 0 else self.palette[m].name

    def label_at(self, idx) -> str:
        lab = int(self.label_idx[tuple(idx)])
        return "" if lab < 0 else self.labels[lab]

    def label_mask(self, pattern: str) -> np.ndarray:
        ids = [i for i, lab in enumerate(self.labels) if label_matches(lab, pattern)]
        if not ids:
            return np.zeros(self.shape, dtype=bool)
        return np.isin(self.label_idx, ids)

    def material_mask(self, name: str) -> np.ndarray:
        ids = [i for i, m in enumerate(self.palette) if m.name == name]
        if not ids:
            return np.zeros(self.shape, dtype=bool)
        return np.isin(self.material_idx, ids)

    def centers(self, axis: str) -> np.ndarray:
        """Voxel centre coordinates (nm) along ``x``, ``y`` or ``z``."""
        i = "xyz".index(axis)
        n = self.dims[i]
        return self.origin[i] + (np.arange(n) + 0.5) * self.spacing

    def face_mask(self, patch: SinkPatch) -> np.ndarray:
        """Boolean (nz, ny, nx) mask of active voxels whose ``patch.face`` is Dirichlet."""
        axis, side, (ua, va) = _FACE_AXES[patch.face]
        mask = np.zeros(self.shape, dtype=bool)
        index = [slice(None)] * 3
        index[axis] = 0 if side == 0 else -1
        index = tuple(index)
        plane = self.active[index].copy()
        if patch.rect is not None:
            u = self.centers("xyz"[ua])
            v = self.centers("xyz"[va])
            # plane axes are the remaining array axes in [z, y, x] order, i.e. (v, u)
            inside_u = (u >= patch.rect[0]) & (u <= patch.rect[2])
            inside_v = (v >= patch.rect[1]) & (v <= patch.rect[3])
            plane &= inside_v[:, None] & inside_u[None, :]
        if patch.label is not None:
            plane &= self.label_mask(patch.label)[index]
        mask[index] = plane
        return mask

    def same_layout(self, other: "VoxelGrid") -> bool:
        return (
            self is other
            or (
                self.shape == other.shape
                and self.spacing == other.spacing
                and self.origin == other.origin
                and np.array_equal(self.material_idx, other.material_idx)
            )
        )

    def __eq__(self, other):
        if not isinstance(other, VoxelGrid):
            return NotImplemented
        return (
            self.same_layout(other)
            and self.palette == other.palette
            and self.labels == other.labels
            and np.array_equal(self.label_idx, other.label_idx)
        )

    __hash__ = None

    def __repr__(self):
        return f"VoxelGrid(dims={self.dims}, spacing={self.spacing} nm, active={int(self.active.sum())})"


def _on_lattice(value: float, spacing: float) -> bool:
    q = value / spacing
    return abs(q - round(q)) <= 1e-9 * max(1.0, abs(q))


def voxelize(scenario: Scenario, db: MaterialDB | None = None) -> VoxelGrid:
    """Paint the scenario's boxes in order onto a uniform grid.

    Later boxes overwrite earlier ones. The grid spans the bounding box of all
    boxes; uncovered voxels stay ``ambient_void`` and are treated as adiabatic
    non-conductors.
    """
    if not scenario.boxes:
        raise EmptyScenario("scenario has no boxes")
    h = scenario.spacing
    for box in scenario.boxes:
        for c in box.min_corner + box.size:
            if not _on_lattice(c, h):
                raise AlignmentError(
                    f"box {box.label!r} ({box.min_corner} + {box.size}) is not aligned to the {h} nm grid"
                )
    db = scenario.material_db(db)
    lo, hi = scenario.bounds()
    n = [int(round((hi[i] - lo[i]) / h)) for i in range(3)]
    if n[0] * n[1] * n[2] > MAX_VOXELS:
        raise ScenarioError(f"grid of {n[0]}x{n[1]}x{n[2]} voxels exceeds the {MAX_VOXELS} voxel guard")

    palette: list[Material] = []
    mat_ids: dict[str, int] = {}
    labels: list[str] = []
    label_ids: dict[str, int] = {}
    material_idx = np.full((n[2], n[1], n[0]), -1, dtype=np.int16)
    label_idx = np.full((n[2], n[1], n[0]), -1, dtype=np.int16)
    for box in scenario.boxes:
        if box.material not in mat_ids:
            mat_ids[box.material] = len(palette)
            palette.append(db.lookup(box.material))
        if box.label and box.label not in label_ids:
            label_ids[box.label] = len(labels)
            labels.append(box.label)
        i0 = [int(round((box.min_corner[i] - lo[i]) / h)) for i in range(3)]
        i1 = [int(round((box.max_corner[i] - lo[i]) / h)) for i in range(3)]
        sl = (slice(i0[2], i1[2]), slice(i0[1], i1[1]), slice(i0[0], i1[0]))
        material_idx[sl] = mat_ids[box.material]
        label_idx[sl] = label_ids.get(box.label, -1)
    return VoxelGrid(h, lo, material_idx, label_idx, palette, labels)


def add_dielectric_medium(
    scenario: Scenario, margin: float = 60.0, material: str = "dielectric_fill", sink_face: str = "zmin"
) -> Scenario:
    """Prepend a fill box enclosing every box plus ``margin`` (not past the sink face)."""
    if margin < 0:
        raise ScenarioError(f"dielectric margin must be >= 0, got {margin}")
    lo, hi = scenario.bounds()
    lo = [c - margin for c in lo]
    hi = [c + margin for c in hi]
    axis = "xyz".index(sink_face[0])
    if sink_face.endswith("min"):
        lo[axis] += margin
    else:
        hi[axis] -= margin
    fill = Box.from_bounds(lo, hi, material, "dielectric_medium")
    meta = dict(scenario.meta)
    meta["dielectric_margin_nm"] = margin
    return replace(scenario, boxes=(fill,) + scenario.boxes, meta=meta)


# Extraction feature dimensions (L, W, T) in nm. The connector's 43.5 nm length
# is rounded to 44 so that it sits on the 2 nm lattice.
JUNCTION_SIZE = (210.0, 60.0, 16.0)
CONNECTOR_SIZE = (44.0, 58.0, 16.0)
PILLAR_SECTION = (36.0, 36.0)
# fill and bulk substrate may be painted over by extraction features
NON_LOGIC_MATERIALS = frozenset({"dielectric_fill", "Si_bulk"})


def _union_bounds(boxes: Sequence[Box]):
    lo = tuple(min(b.min_corner[i] for b in boxes) for i in range(3))
    hi = tuple(max(b.max_corner[i] for b in boxes) for i in range(3))
    return lo, hi


def add_extraction_features(
    scenario: Scenario,
    placement: str | None = None,
    pillar_gap: float = 0.0,
    junction_material: str = "Al2O3",
    metal_material: str = "W",
) -> Scenario:
    """Attach a thermal junction, metal connector and heat pillar.

    The junction plate rests on the top face of the ``placement`` region,
    centred on it in y and running along +x from its x-minimum. The pillar
    rises from the sink plane on the +y side of the placement column,
    ``pillar_gap`` nm clear of the nearest logic block, and its top meets the
    underside of the junction and of the connector, which abuts the junction
    on +y.
    """
    if placement is None:
        placement = scenario.meta.get("extraction_placement")
    if not placement:
        raise PlacementError("no placement label given and the scenario names no default")
    targets = scenario.boxes_matching(placement)
    if not targets:
        raise PlacementError(f"placement region {placement!r} not found")
    if pillar_gap < 0:
        raise PlacementError(f"pillar gap must be >= 0, got {pillar_gap}")
    (bx0, by0, bz0), (bx1, by1, bz1) = _union_bounds(targets)
    sink_z = scenario.bounds()[0][2]
    logic = [b for b in scenario.boxes if b.material not in NON_LOGIC_MATERIALS]

    jl, jw, jt = JUNCTION_SIZE
    cl, cw, ct = CONNECTOR_SIZE
    pw, pd = PILLAR_SECTION
    yc = 0.5 * (by0 + by1)
    junction = Box((bx0, yc - jw / 2, bz1), (jl, jw, jt), junction_material, "thermal_junction")
    px = 0.5 * (bx0 + bx1) - pw / 2
    # nearest logic face on +y within the pillar's x/z shadow
    column = [
        b for b in logic
        if b.min_corner[0] < px + pw and b.max_corner[0] > px
        and b.min_corner[2] < bz1 and b.max_corner[2] > sink_z
        and b.max_corner[1] > by0
    ]
    py = max(b.max_corner[1] for b in column) + pillar_gap if column else by1 + pillar_gap
    j_edge = yc + jw / 2
    py = min(py, j_edge)
    if py + pd > j_edge + cw:
        raise PlacementError("pillar would extend past the connector")
    connector = Box((px + pw / 2 - cl / 2, j_edge, bz1), (cl, cw, ct), metal_material, "metal_connector")
    pillar = Box((px, py, sink_z), (pw, pd, bz1 - sink_z), metal_material, "heat_pillar")

    for feature in (junction, connector, pillar):
        for box in logic:
            if feature.overlaps(box):
                raise PlacementError(f"{feature.label} would occlude logic block {box.label!r}")

    if scenario.sinks:
        centre = (px + pw / 2, py + pd / 2)
        covered = any(
            s.face == "zmin"
            and (s.rect is None or (s.rect[0] <= centre[0] <= s.rect[2] and s.rect[1] <= centre[1] <= s.rect[3]))
            for s in scenario.sinks
        )
        if not covered:
            raise PlacementError("heat pillar foot lies outside every zmin sink patch")
    meta = dict(scenario.meta)
    meta["extraction_placement"] = placement
    meta["extraction"] = True
    return replace(scenario, boxes=scenario.boxes + (junction, connector, pillar), meta=meta)
