"""Static current flow and Joule heating.

Solves div(sigma grad V) = 0 on conducting voxels with terminal regions held at
fixed potentials, then spreads each face's dissipation ``G dV^2`` half-and-half
onto its two voxels. That split makes the total Joule power equal the
terminal power ``sum V_t I_t`` to solver precision.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy import ndimage

from .errors import EmptyRegion, FieldMismatch, FloatingTerminal, NoTerminals, ScenarioError
from .fields import ScalarField
from .geometry import HeatSource, Scenario, Terminal, VoxelGrid
from .solvers import pcg
from .thermal import DEFAULT_TOL, compact_index, conductance_matrix, interior_faces
from .validation import check_field

_NEIGHBOURS = ndimage.generate_binary_structure(3, 1)


def conductor_mask(grid: VoxelGrid) -> np.ndarray:
    return grid.active & (grid.sigma > 0)


def solve_potential(
    grid: VoxelGrid, terminals: Sequence[Terminal], tol: float = DEFAULT_TOL,
    max_iter: int | None = None, preconditioner: str = "jacobi",
) -> ScalarField:
    """Potential (V) on every conductor component that touches a terminal.

    Components without a terminal are left out of the returned field's mask.
    ``info`` holds per-terminal currents (A, positive out of the terminal)
    and the solver residual.
    """
    terminals = list(terminals or ())
    if not terminals:
        raise NoTerminals("electrical solve needs at least one terminal")
    cond = conductor_mask(grid)
    fixed = np.full(grid.shape, np.nan)
    term_masks = []
    for term in terminals:
        m = grid.label_mask(term.label) & cond
        if not m.any():
            raise FloatingTerminal(f"terminal {term.label!r} overlaps no conducting voxel")
        fixed[m] = float(term.V)
        term_masks.append(m)
    is_fixed = ~np.isnan(fixed)

    comp, ncomp = ndimage.label(cond, structure=_NEIGHBOURS)
    driven = np.zeros(ncomp + 1, dtype=bool)
    driven[np.unique(comp[is_fixed])] = True
    driven[0] = False
    solved = driven[comp]
    # a component whose terminals share one voltage is exactly equipotential
    for c in np.unique(comp[is_fixed]):
        levels = np.unique(fixed[is_fixed & (comp == c)])
        if levels.size == 1:
            member = comp == c
            fixed[member] = levels[0]
            is_fixed |= member

    a, b, g = interior_faces(grid.sigma, solved, grid.spacing_m)
    free = solved & ~is_fixed
    V = np.where(is_fixed, fixed, np.nan)
    info: dict = {"iterations": 0, "residual": 0.0}
    if free.any():
        index = compact_index(free)
        ia, ib = index.ravel()[a], index.ravel()[b]
        both = (ia >= 0) & (ib >= 0)
        n = int(free.sum())
        L = conductance_matrix(n, ia[both], ib[both], g[both])
        # faces from a free voxel to a terminal voxel move to the RHS
        diag = np.zeros(n)
        rhs = np.zeros(n)
        fixed_flat = fixed.ravel()
        for src, dst in ((ia, b), (ib, a)):
            sel = (src >= 0) & ~np.isnan(fixed_flat[dst])
            np.add.at(diag, src[sel], g[sel])
            np.add.at(rhs, src[sel], g[sel] * fixed_flat[dst[sel]])
        A = (L + sp.diags(diag)).tocsr()
        x, info = pcg(A, rhs, tol=tol, max_iter=max_iter, preconditioner=preconditioner)
        V[free] = x

    Vflat = V.ravel()
    currents = {}
    for term, m in zip(terminals, term_masks):
        mflat = m.ravel()
        out = 0.0
        for src, dst, sgn in ((a, b, 1.0), (b, a, 1.0)):
            sel = mflat[src] & ~mflat[dst]
            out += sgn * float(np.sum(g[sel] * (Vflat[src[sel]] - Vflat[dst[sel]])))
        currents[term.label] = currents.get(term.label, 0.0) + out
    info = dict(info, terminal_currents=currents, terminal_power=float(
        sum(float(t.V) * currents[t.label] for t in _unique_terminals(terminals))
    ))
    return ScalarField.from_array(grid, V, "V", mask=solved, info=info)


def _unique_terminals(terminals):
    seen = {}
    for t in terminals:
        seen.setdefault(t.label, t)
    return seen.values()


def joule_heat(grid: VoxelGrid, V: ScalarField) -> ScalarField:
    """Volumetric Joule heat sigma |grad V|^2 (W/m^3) on all active voxels."""
    if not isinstance(V, ScalarField) or V.unit != "V":
        raise FieldMismatch("joule_heat needs a potential field in volts")
    check_field(V, grid)
    a, b, g = interior_faces(grid.sigma, V.mask, grid.spacing_m)
    Vflat = V.to_array().ravel()
    p = g * (Vflat[a] - Vflat[b]) ** 2
    per_voxel = 0.5 * (np.bincount(a, weights=p, minlength=grid.size) + np.bincount(b, weights=p, minlength=grid.size))
    Q = per_voxel.reshape(grid.shape) / grid.voxel_volume_m3
    return ScalarField.from_array(grid, Q, "W/m^3", info={"total_power": float(p.sum())})


def prescribed_power_to_density(grid: VoxelGrid, sources: Sequence[HeatSource]) -> ScalarField:
    """Spread each prescribed source's power uniformly over its region."""
    Q = np.zeros(grid.shape)
    vol = grid.voxel_volume_m3
    for src in sources:
        if src.mode != "prescribed_power":
            continue
        region = grid.label_mask(src.region_label) & grid.active
        count = int(region.sum())
        if count == 0:
            raise EmptyRegion(f"heat source region {src.region_label!r} has no voxels")
        Q[region] += src.power / (count * vol)
    return ScalarField.from_array(grid, Q, "W/m^3")


def scenario_heat_density(scenario: Scenario, grid: VoxelGrid, tol: float = DEFAULT_TOL) -> ScalarField:
    """Total heat density from all of a scenario's sources."""
    Q = prescribed_power_to_density(grid, scenario.sources).to_array(fill=0.0)
    joule_sources = [s for s in scenario.sources if s.mode == "joule"]
    if joule_sources:
        if not scenario.terminals:
            raise ScenarioError("joule heat sources need electrical terminals")
        Qj = joule_heat(grid, solve_potential(grid, scenario.terminals, tol=tol)).to_array(fill=0.0)
        region = np.zeros(grid.shape, dtype=bool)
        for src in joule_sources:
            region |= grid.label_mask(src.region_label)
        Q += np.where(region, Qj, 0.0)
    return ScalarField.from_array(grid, Q, "W/m^3")
