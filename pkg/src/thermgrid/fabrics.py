"""NAND-gate presets for the three transistor-level 3-D fabrics.

Block dimensions follow the reference device dimensions. Where a block's
position is not fixed by them, the coordinates are approximations that keep
the footprints, z-extents and stacking order. Presets are authored on a
1 nm lattice and snapped to coarser grids by :func:`build_fabric`.

Every transistor ``tN`` carries heat sources on its drain block and on its
gated channel (``tN_gate_channel``); the gate metal itself carries no
current. ``t1`` is nearest the heat sink.
"""
from __future__ import annotations

import math
from dataclasses import replace

from .errors import PresetSpacingError, ScenarioError
from .geometry import (
    Box,
    HeatSource,
    Scenario,
    SinkPatch,
    SourceSchedule,
    add_dielectric_medium,
    add_extraction_features,
)

FABRICS = ("m3d", "sn3d", "skybridge")
HEAT_SINK_AREA = (600.0, 300.0)
AMBIENT_K = 300.0
DEFAULT_MARGIN = 60.0
# baseline peak temperatures (K) each fabric is calibrated to
CALIBRATION_TARGETS = {"skybridge": 650.0, "m3d": 420.0, "sn3d": 330.0}


def _box(x0, y0, z0, L, W, T, material, label):
    return Box((x0, y0, z0), (L, W, T), material, label)


def _sink(cx, cy, T=AMBIENT_K):
    w, d = HEAT_SINK_AREA
    return SinkPatch("zmin", T, (cx - w / 2, cy - d / 2, cx + w / 2, cy + d / 2))


def _sources(transistors, power):
    out = []
    for t in transistors:
        out.append(HeatSource(f"{t}_drain", "prescribed_power", power))
        out.append(HeatSource(f"{t}_gate_channel", "prescribed_power", power))
    return out


# --------------------------------------------------------------------------- Skybridge

SKYBRIDGE_ROLES = {3: ("EVA", "A", "PRE"), 4: ("EVA", "B", "A", "PRE")}
SKYBRIDGE_PITCH = 56.0  # one V-GAA transistor along the nanowire


def _skybridge_transistor(i: int, z0: float) -> list[Box]:
    """One junctionless V-GAA transistor on the 16x16 nm nanowire at x,y in [0, 16]."""
    t = f"t{i}"
    return [
        # gate oxide shell first; the channel paints over its core
        _box(-2, -2, z0 + 20, 20, 20, 16, "HfO2", f"{t}_gate_oxide"),
        _box(0, 0, z0, 16, 16, 10, "silicide", f"{t}_source"),
        _box(0, 0, z0 + 10, 16, 16, 10, "Si_nw", f"{t}_spacer_low"),
        _box(0, 0, z0 + 20, 16, 16, 16, "Si_nw", f"{t}_gate_channel"),
        _box(0, 0, z0 + 36, 16, 16, 10, "Si_nw", f"{t}_spacer_high"),
        _box(0, 0, z0 + 46, 16, 16, 10, "silicide", f"{t}_drain"),
        # Ti electrodes on the +x side of source and drain
        _box(16, 0, z0, 12, 16, 10, "Ti", f"{t}_source_contact"),
        _box(16, 0, z0 + 46, 12, 16, 10, "Ti", f"{t}_drain_contact"),
        # TiN gate electrode outside the oxide on -x
        _box(-8, 0, z0 + 22, 6, 16, 10, "TiN", f"{t}_gate_electrode"),
        # Si3N4 spacers on -x beside the spacer segments
        _box(-16, 0, z0 + 10, 16, 16, 10, "Si3N4", f"{t}_spacer_low_ins"),
        _box(-16, 0, z0 + 36, 16, 16, 10, "Si3N4", f"{t}_spacer_high_ins"),
    ]


def skybridge(stack: int = 3, power: float = 1e-6) -> Scenario:
    """Dynamic NAND on one vertical nanowire; the wire foot sits on the heat sink."""
    if stack not in SKYBRIDGE_ROLES:
        raise ScenarioError(f"Skybridge stack must be 3 or 4 transistors, got {stack}")
    boxes: list[Box] = []
    names = []
    for i in range(1, stack + 1):
        boxes += _skybridge_transistor(i, (i - 1) * SKYBRIDGE_PITCH)
        names.append(f"t{i}")
    top = names[-1]
    meta = {
        "fabric": "skybridge",
        "stack": stack,
        "transistors": names,
        "roles": dict(zip(names, SKYBRIDGE_ROLES[stack])),
        "top_transistor": top,
        "bottom_transistor": names[0],
        "extraction_placement": f"{top}_drain",
        "probe": f"{top}_drain",
        "calibration_region": [f"{top}_*"],
        "tiers": {n: [f"{n}_*"] for n in names},
    }
    return Scenario(
        boxes=tuple(boxes), spacing=1.0, sinks=(_sink(8, 8),),
        sources=tuple(_sources(names, power)), schedule=SourceSchedule(), meta=meta,
    )


# --------------------------------------------------------------------------- M3D

M3D_FOOTPRINT = (183.0, 145.0)
M3D_HEIGHT = 1400.0
M3D_SUBSTRATE = 80.0
M3D_TOP_TIER_Z = 206.0  # bottom of the top device layer; ILVs span 96..206


def _planar_fet(t, x_src, z0, y0, flip=False):
    """Planar FET: source | channel | drain along x (reversed when ``flip``), gate stack above.

    Source/drain blocks are 24x24x32 nm centred on the 32 nm wide channel
    band starting at ``y0``; oxide is 3 nm, gate metal 32 nm, one Si3N4
    spacer sits on the source side of the gate.
    """
    sd_y = y0 + 4
    if not flip:
        xs, xc, xd = x_src, x_src + 24, x_src + 40
        x_sp = xc - 10
    else:
        xd, xc, xs = x_src - 64, x_src - 40, x_src - 24
        x_sp = xc + 16
    zt = z0 + 32
    return [
        _box(xs, sd_y, z0, 24, 24, 32, "silicide", f"{t}_source"),
        _box(xc, y0, z0, 16, 32, 32, "Si_nw", f"{t}_gate_channel"),
        _box(xd, sd_y, z0, 24, 24, 32, "Ti", f"{t}_drain"),
        _box(xc, y0, zt, 16, 32, 3, "HfO2", f"{t}_gate_oxide"),
        _box(xc, y0, zt + 3, 16, 32, 32, "TiN", f"{t}_gate_electrode"),
        _box(x_sp, sd_y + 4, zt, 10, 16, 16, "Si3N4", f"{t}_spacer"),
    ]


def m3d(power: float = 1e-6) -> Scenario:
    """Transistor-level monolithic 3-D NAND.

    Two parallel PMOS sit in the bulk substrate with a shared drain; two
    series NMOS form the top tier on an adiabatic inter-layer gap. Output and
    ground inter-layer vias (50x50x110 nm, W) join the tiers through Al
    lines, and an Al via stack on input B reaches the 1.4 um stack height.
    Exact x/y placement of vias and lines is approximate.
    """
    fx, fy = M3D_FOOTPRINT
    band = 93.0  # y of the 32 nm device band
    zb = M3D_SUBSTRATE - 32  # bottom devices embedded in the substrate surface
    zt = M3D_TOP_TIER_Z
    boxes = [_box(0, 0, 0, fx, fy, M3D_SUBSTRATE, "Si_bulk", "substrate")]
    # bottom tier: t1 source at x=40 running +x, t2 mirrored, drains abut at x=104
    boxes += _planar_fet("t1", 40, zb, band)
    boxes += _planar_fet("t2", 168, zb, band, flip=True)
    # top tier: t4 (ground side) then t3 (output side)
    boxes += _planar_fet("t4", 44, zt, band)
    boxes += _planar_fet("t3", 108, zt, band)
    z_m1 = M3D_SUBSTRATE
    boxes += [
        _box(82, 30, z_m1, 44, 91, 16, "Al", "m1_bottom_out"),
        _box(82, 30, z_m1, 88, 63, 16, "Al", "m1_bottom_bus"),
        _box(20, 30, z_m1, 50, 50, 16, "Al", "m1_bottom_gnd"),
        _box(118, 30, z_m1 + 16, 50, 50, 110, "W", "ilv_out"),
        _box(20, 30, z_m1 + 16, 50, 50, 110, "W", "ilv_gnd"),
        _box(150, 30, zt, 22, 67, 16, "Al", "m1_top_out"),
        _box(46, 30, zt, 20, 67, 16, "Al", "m1_top_gnd"),
    ]
    gate_top = zt + 32 + 3 + 32
    boxes.append(_box(68, band + 8, gate_top, 16, 16, M3D_HEIGHT - gate_top, "Al", "beol_input_b"))
    names = ["t1", "t2", "t3", "t4"]
    meta = {
        "fabric": "m3d",
        "transistors": names,
        "roles": {"t1": "PMOS_A", "t2": "PMOS_B", "t3": "NMOS_A", "t4": "NMOS_B"},
        "top_transistor": "t3",
        "bottom_transistor": "t1",
        "extraction_placement": "t3_drain",
        "probe": "t3_*",
        "calibration_region": ["t3_*", "t4_*", "m1_top_*"],
        "tiers": {
            "bottom": ["t1_*", "t2_*", "m1_bottom_*"],
            "top": ["t3_*", "t4_*", "m1_top_*"],
        },
    }
    return Scenario(
        boxes=tuple(boxes), spacing=1.0, sinks=(_sink(fx / 2, fy / 2),),
        sources=tuple(_sources(names, power)), schedule=SourceSchedule(), meta=meta,
    )


# --------------------------------------------------------------------------- SN3D

SN3D_FOOTPRINT = (174.0, 114.0)
SN3D_SUBSTRATE = 20.0


def _sn3d_tier(z0, transistors, contacts):
    """One tier of the stacked horizontal nanowire: three Ni contacts, two GAA FETs.

    ``transistors`` maps the A and B gate positions to (name, drain_side)
    where drain_side is "left" or "right".
    """
    boxes = []
    wy, wz = 49.0, z0 + 9
    # wire first; contacts, gates and extensions paint over it
    boxes.append(_box(15, wy, wz, 144, 16, 16, "Si_nw", f"wire_{contacts[0]}"))
    for (x_gate, (t, drain_side)) in zip((49.0, 109.0), transistors):
        boxes.append(_box(x_gate, 41, z0, 16, 32, 34, "TiN", f"{t}_gate_electrode"))
        boxes.append(_box(x_gate, wy - 3, wz - 3, 16, 22, 22, "HfO2", f"{t}_gate_oxide"))
        boxes.append(_box(x_gate, wy, wz, 16, 16, 16, "Si_nw", f"{t}_gate_channel"))
        left, right = (x_gate - 10, x_gate + 16)
        d, s = (left, right) if drain_side == "left" else (right, left)
        boxes.append(_box(d, wy, wz, 10, 16, 16, "Si_nw", f"{t}_drain_ext"))
        boxes.append(_box(s, wy, wz, 10, 16, 16, "Si_nw", f"{t}_source_ext"))
        for x in (left, right):
            side = "d" if x == d else "s"
            boxes.append(_box(x, wy - 16, wz, 10, 16, 16, "Si3N4", f"{t}_spacer_{side}_lo"))
            boxes.append(_box(x, wy + 16, wz, 10, 16, 16, "Si3N4", f"{t}_spacer_{side}_hi"))
    for x, name in zip((15.0, 75.0, 135.0), contacts[1:]):
        boxes.append(_box(x, 41, z0, 24, 32, 34, "Ni", name))
    return boxes


def sn3d(power: float = 1e-6) -> Scenario:
    """Stacked horizontal nanowire NAND.

    Bottom tier: two n-type GAA FETs in series (out | A | mid | B | ground).
    Top tier: two p-type GAA FETs in parallel (out | A | vdd | B | out).
    The left output contact is common to both tiers; the other two stacked
    contacts are separated by 5 nm Su-8 horizontal insulation, so the right
    p-type drain sits directly above the ground contact. A Ni connector ties
    the two top output contacts, and the A and B gates are common to both
    tiers through a TiN bridge.
    """
    fx, fy = SN3D_FOOTPRINT
    zs = SN3D_SUBSTRATE
    z_top = zs + 34 + 5
    boxes = [_box(0, 0, 0, fx, fy, zs, "Si_bulk", "substrate")]
    boxes += _sn3d_tier(zs, [("t1", "left"), ("t2", "left")], ["bottom", "cc_out", "cc_mid", "cc_gnd"])
    boxes.append(_box(15, 41, zs + 34, 24, 32, 5, "Ni", "cc_out"))
    for x, name in zip((75.0, 135.0), ("hi_mid", "hi_gnd")):
        boxes.append(_box(x, 41, zs + 34, 24, 32, 5, "Su8", name))
    for x, name in zip((49.0, 109.0), ("cg_a_bridge", "cg_b_bridge")):
        boxes.append(_box(x, 41, zs + 34, 16, 32, 5, "TiN", name))
    boxes += _sn3d_tier(z_top, [("t3", "left"), ("t4", "right")], ["top", "cc_out", "cc_vdd", "cc_out_b"])
    boxes += [
        _box(15, 21, z_top + 9, 144, 12, 16, "Ni", "out_connector"),
        _box(15, 33, z_top + 9, 24, 8, 16, "Ni", "out_stub_a"),
        _box(135, 33, z_top + 9, 24, 8, 16, "Ni", "out_stub_b"),
    ]
    names = ["t1", "t2", "t3", "t4"]
    # drain heat goes into the Ni drain electrodes
    drains = {"t1": "cc_out", "t2": "cc_mid", "t3": "cc_out", "t4": "cc_out_b"}
    sources = []
    for t in names:
        sources.append(HeatSource(drains[t], "prescribed_power", power))
        sources.append(HeatSource(f"{t}_gate_channel", "prescribed_power", power))
    meta = {
        "fabric": "sn3d",
        "transistors": names,
        "roles": {"t1": "N_A", "t2": "N_B", "t3": "P_A", "t4": "P_B"},
        "top_transistor": "t4",
        "bottom_transistor": "t1",
        "extraction_placement": "t4_gate_electrode",
        "probe": "t4_gate_*",
        "calibration_region": ["t3_*", "t4_*", "cc_vdd", "cc_out_b"],
        "drains": drains,
        "tiers": {
            "bottom": ["t1_*", "t2_*", "cc_mid", "cc_gnd"],
            "top": ["t3_*", "t4_*", "cc_vdd", "cc_out_b"],
        },
    }
    return Scenario(
        boxes=tuple(boxes), spacing=1.0, sinks=(_sink(fx / 2, fy / 2),),
        sources=tuple(sources), schedule=SourceSchedule(), meta=meta,
    )


# --------------------------------------------------------------------------- registry

_BUILDERS = {"skybridge": skybridge, "m3d": m3d, "sn3d": sn3d}


def preset(kind: str, **kwargs) -> Scenario:
    kind = kind.lower()
    if kind not in _BUILDERS:
        raise ScenarioError(f"unknown fabric {kind!r}; choose from {FABRICS}")
    return _BUILDERS[kind](**kwargs)


def snap_to_spacing(scenario: Scenario, spacing: float) -> Scenario:
    """Move every box face to the nearest multiple of ``spacing`` nm.

    Shared faces stay shared, so abutting blocks keep touching. Raises
    ``PresetSpacingError`` if a block would collapse to zero thickness.
    """
    spacing = float(spacing)
    if spacing <= 0 or abs(spacing - round(spacing)) > 1e-9:
        raise PresetSpacingError(f"preset spacing must be a positive whole number of nm, got {spacing}")

    def snap(v):
        return math.floor(v / spacing + 0.5) * spacing

    boxes = []
    for b in scenario.boxes:
        lo = [snap(c) for c in b.min_corner]
        hi = [snap(c) for c in b.max_corner]
        if any(h <= l for l, h in zip(lo, hi)):
            raise PresetSpacingError(f"block {b.label!r} vanishes on a {spacing:g} nm grid")
        boxes.append(Box.from_bounds(lo, hi, b.material, b.label))
    return replace(scenario, boxes=tuple(boxes), spacing=spacing)


def build_fabric(
    kind: str,
    dielectric: bool = False,
    extraction: bool = False,
    spacing: float = 2.0,
    stack: int = 3,
    power: float = 1e-6,
    margin: float = DEFAULT_MARGIN,
    placement: str | None = None,
) -> Scenario:
    """Preset NAND scenario, optionally wrapped in dielectric and fitted with extraction.

    The dielectric medium is added first so that it matches the
    dielectric-only variant; the extraction features then paint over it.
    """
    kind = kind.lower()
    kwargs = {"power": power}
    if kind == "skybridge":
        kwargs["stack"] = stack
    scenario = snap_to_spacing(preset(kind, **kwargs), spacing)
    if dielectric:
        scenario = add_dielectric_medium(scenario, margin)
    if extraction:
        scenario = add_extraction_features(scenario, placement)
    meta = dict(scenario.meta, dielectric=dielectric, extraction=extraction, spacing_nm=spacing)
    return replace(scenario, meta=meta)
