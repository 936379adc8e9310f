"""Field and trace export: legacy VTK for 3-D fields, CSV for probe traces."""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .errors import IoError
from .fields import ScalarField
from .geometry import VoxelGrid
from .thermal import TransientTrace

VTK_HEADER = "# vtk DataFile Version 3.0"
VALUES_PER_LINE = 6


def _write_text(path, text: str):
    path = Path(path)
    tmp = path.with_name(path.name + ".part")
    try:
        tmp.write_text(text)
        os.replace(tmp, path)
    except OSError as exc:
        try:
            tmp.unlink()
        except OSError:
            pass
        raise IoError(f"cannot write {path}: {exc}") from exc
    return path


def vtk_text(array: np.ndarray, grid: VoxelGrid, name: str, title: str = "thermgrid field") -> str:
    """Legacy STRUCTURED_POINTS text for an (nz, ny, nx) array on ``grid``.

    Lengths are in nm. Values are written with ``repr`` so they read back
    bit-exactly; voxels without a value are written as ``nan``.
    """
    array = np.asarray(array, dtype=float)
    if array.shape != grid.shape:
        raise IoError(f"array shape {array.shape} does not match grid {grid.shape}")
    nx, ny, nz = grid.dims
    h = grid.spacing
    ox, oy, oz = (o + 0.5 * h for o in grid.origin)
    lines = [
        VTK_HEADER,
        title.replace("\n", " ")[:255],
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {nx} {ny} {nz}",
        f"ORIGIN {ox!r} {oy!r} {oz!r}",
        f"SPACING {h!r} {h!r} {h!r}",
        f"POINT_DATA {grid.size}",
        f"SCALARS {name} double 1",
        "LOOKUP_TABLE default",
    ]
    flat = [repr(float(v)) for v in array.ravel(order="C")]
    for i in range(0, len(flat), VALUES_PER_LINE):
        lines.append(" ".join(flat[i:i + VALUES_PER_LINE]))
    return "\n".join(lines) + "\n"


def export_vtk(field: ScalarField, path, grid: VoxelGrid | None = None) -> Path:
    """Write ``field`` as a legacy VTK file; the scalar array is named by its unit."""
    grid = field.grid if grid is None else grid
    if field.grid is not grid and not field.grid.same_layout(grid):
        raise IoError("field belongs to a different grid")
    return _write_text(path, vtk_text(field.to_array(), grid, field.unit))


def read_vtk(path) -> dict:
    """Parse a file written by :func:`export_vtk`.

    Returns ``dims`` (nx, ny, nz), ``origin`` and ``spacing`` in nm, the
    scalar ``name`` and ``values`` shaped (nz, ny, nx).
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines or lines[0].strip() != VTK_HEADER:
        raise IoError(f"{path}: not a legacy VTK 3.0 file")
    head = {}
    i = 2
    while i < len(lines):
        parts = lines[i].split()
        i += 1
        if not parts:
            continue
        key = parts[0]
        head[key] = parts[1:]
        if key == "LOOKUP_TABLE":
            break
    try:
        nx, ny, nz = (int(v) for v in head["DIMENSIONS"])
        spacing = tuple(float(v) for v in head["SPACING"])
        origin = tuple(float(v) for v in head["ORIGIN"])
        name = head["SCALARS"][0]
        values = np.array([float(tok) for line in lines[i:] for tok in line.split()])
    except (KeyError, ValueError) as exc:
        raise IoError(f"{path}: malformed VTK file ({exc})") from exc
    if values.size != nx * ny * nz:
        raise IoError(f"{path}: expected {nx * ny * nz} values, found {values.size}")
    return {
        "dims": (nx, ny, nz),
        "origin": origin,
        "spacing": spacing,
        "name": name,
        "values": values.reshape(nz, ny, nx),
    }


def export_csv(trace: TransientTrace, path) -> Path:
    """Write ``t_ns,<probe1>,...`` with one row per sample at full float precision.

    An empty trace is an error and leaves no file behind.
    """
    if trace is None or len(trace) == 0 or not trace.probes:
        raise IoError("refusing to export an empty trace")
    rows = [",".join(["t_ns"] + list(trace.probes))]
    for t, temps in zip(trace.times_ns, trace.temperatures):
        rows.append(",".join([repr(float(t))] + [repr(float(v)) for v in temps]))
    return _write_text(path, "\n".join(rows) + "\n")


def read_csv(path) -> TransientTrace:
    try:
        data = Path(path).read_text().splitlines()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if not data or not data[0].startswith("t_ns"):
        raise IoError(f"{path}: missing t_ns header")
    probes = data[0].split(",")[1:]
    rows = np.array([[float(v) for v in line.split(",")] for line in data[1:] if line])
    return TransientTrace(rows[:, 0], probes, rows[:, 1:])


__all__ = ["export_vtk", "read_vtk", "vtk_text", "export_csv", "read_csv"]
