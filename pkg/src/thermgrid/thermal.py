"""Finite-volume heat conduction on voxel grids.

Cell-centred scheme with a 7-point stencil. Interior faces use the
harmonic-mean conductivity, which is exact for series layers. A Dirichlet
patch acts on the voxel's outer face through a half-cell conductance
``2 k h``, so the sink temperature sits on the boundary plane itself.

Unknowns are temperature rises above the lowest sink temperature; this keeps
the right-hand side equal to the injected heat for the usual single-sink case.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy import ndimage

from .errors import FloatingComponent, ScenarioError
from .fields import ScalarField
from .geometry import FACES, SinkPatch, SourceSchedule, VoxelGrid
from .solvers import make_preconditioner, pcg
from .validation import check_field, check_positive, heat_array

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_SINK_T = 300.0
_NEIGHBOURS = ndimage.generate_binary_structure(3, 1)


def face_conductance(kA, kB, spacing):
    """Conductance (W/K) of the face shared by two cubic cells of side ``spacing`` (m).

    ``spacing**2 * k_harm / spacing`` with ``k_harm = 2 kA kB / (kA + kB)``;
    zero when either side does not conduct.
    """
    kA = np.asarray(kA, dtype=float)
    kB = np.asarray(kB, dtype=float)
    total = kA + kB
    with np.errstate(divide="ignore", invalid="ignore"):
        k_harm = np.where((kA > 0) & (kB > 0), 2.0 * kA * kB / np.where(total > 0, total, 1.0), 0.0)
    out = spacing * k_harm
    return float(out) if out.ndim == 0 else out


def compact_index(mask: np.ndarray) -> np.ndarray:
    """Map each voxel to its row number among ``mask`` voxels (-1 elsewhere)."""
    index = np.full(mask.shape, -1, dtype=np.int64)
    index[mask] = np.arange(int(mask.sum()))
    return index


def interior_faces(coeff: np.ndarray, mask: np.ndarray, spacing_m: float):
    """All faces between two ``mask`` voxels as ``(flat_a, flat_b, G)`` arrays.

    ``flat_*`` are C-order flat voxel indices.
    """
    shape = mask.shape
    flat = np.arange(mask.size).reshape(shape)
    out_a, out_b, out_g = [], [], []
    for axis in range(3):
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        lo, hi = tuple(lo), tuple(hi)
        both = mask[lo] & mask[hi]
        if not both.any():
            continue
        g = face_conductance(coeff[lo][both], coeff[hi][both], spacing_m)
        keep = g > 0
        out_a.append(flat[lo][both][keep])
        out_b.append(flat[hi][both][keep])
        out_g.append(np.atleast_1d(g)[keep])
    if not out_a:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, np.zeros(0)
    return np.concatenate(out_a), np.concatenate(out_b), np.concatenate(out_g)


def conductance_matrix(n: int, rows_a, rows_b, g) -> sp.csr_matrix:
    """Graph Laplacian ``sum_f G_f (e_a - e_b)(e_a - e_b)^T`` in CSR form."""
    diag = np.bincount(rows_a, weights=g, minlength=n) + np.bincount(rows_b, weights=g, minlength=n)
    rows = np.concatenate([rows_a, rows_b, np.arange(n)])
    cols = np.concatenate([rows_b, rows_a, np.arange(n)])
    vals = np.concatenate([-g, -g, diag])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


@dataclass(eq=False)
class LinearSystem:
    """Steady conduction system ``A theta = b`` over the solved voxels.

    ``theta`` is the rise above ``T_ref``. ``mask`` marks the voxels in the
    system; ``pinned`` marks source-free components without a sink, which are
    held at ``T_ref`` and left out of the matrix.
    """

    grid: VoxelGrid
    A: sp.csr_matrix
    b: np.ndarray
    mask: np.ndarray
    pinned: np.ndarray
    T_ref: float
    dirichlet_G: np.ndarray
    dirichlet_rise: np.ndarray
    heat: np.ndarray
    laplacian: sp.csr_matrix = field(repr=False)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def is_symmetric(self, rtol: float = 1e-12) -> bool:
        diff = abs(self.A - self.A.T)
        scale = abs(self.A).max() if self.A.nnz else 1.0
        return diff.max() <= rtol * scale if diff.nnz else True

    def with_heat(self, heat: np.ndarray) -> "LinearSystem":
        """Same operator, new injected heat per row (W)."""
        heat = np.asarray(heat, dtype=float)
        b = heat + self.dirichlet_G * self.dirichlet_rise
        return LinearSystem(
            self.grid, self.A, b, self.mask, self.pinned, self.T_ref,
            self.dirichlet_G, self.dirichlet_rise, heat, self.laplacian,
        )

    def sink_flux(self, theta: np.ndarray) -> float:
        """Net heat (W) leaving through Dirichlet faces for rise vector ``theta``."""
        return float(np.sum(self.dirichlet_G * (theta - self.dirichlet_rise)))

    def expand(self, theta: np.ndarray, info=None) -> ScalarField:
        T = np.full(self.grid.shape, np.nan)
        T[self.mask] = theta + self.T_ref
        T[self.pinned] = self.T_ref
        return ScalarField.from_array(self.grid, T, "K", mask=self.grid.active, info=info)

    def restrict(self, T: ScalarField) -> np.ndarray:
        return T.to_array()[self.mask] - self.T_ref


def _dirichlet_faces(grid: VoxelGrid, sinks: Sequence[SinkPatch]):
    """Per-voxel summed Dirichlet conductance and conductance-weighted temperature."""
    h = grid.spacing_m
    G = np.zeros(grid.shape)
    GT = np.zeros(grid.shape)
    for face in FACES:
        T_face = np.full(grid.shape, np.nan)
        for patch in sinks:
            if patch.face == face:
                T_face[grid.face_mask(patch)] = patch.T
        hit = ~np.isnan(T_face)
        if hit.any():
            g = 2.0 * grid.k[hit] * h
            G[hit] += g
            GT[hit] += g * T_face[hit]
    return G, GT


def assemble_steady(
    grid: VoxelGrid, Q=None, sinks: Sequence[SinkPatch] = (), allow_floating: bool = False,
) -> LinearSystem:
    """Build the SPD conduction system for heat density ``Q`` (W/m^3).

    Raises ``FloatingComponent`` when no sink face exists or when a connected
    component carrying heat has no sink; source-free floating components are
    pinned at the reference temperature with a warning.

    ``allow_floating`` keeps sink-less components in the system unpinned. The
    matrix is then only semi-definite, which is fine for transient stepping
    (the capacitance term restores definiteness) but not for a steady solve.
    Without sinks the reference temperature is 300 K.
    """
    sinks = tuple(sinks)
    q_arr = heat_array(Q, grid)
    if np.any(q_arr[grid.active] < 0):
        raise ScenarioError("heat density must be >= 0")
    G_d, GT_d = _dirichlet_faces(grid, sinks)
    has_sink = G_d > 0
    if not has_sink.any() and not allow_floating:
        raise FloatingComponent(
            "no Dirichlet sink touches the conducting region", size=int(grid.active.sum())
        )
    T_ref = min(p.T for p in sinks) if sinks else DEFAULT_SINK_T

    pinned = np.zeros(grid.shape, dtype=bool)
    if not allow_floating:
        labels, ncomp = ndimage.label(grid.active, structure=_NEIGHBOURS)
        grounded = np.zeros(ncomp + 1, dtype=bool)
        grounded[np.unique(labels[has_sink])] = True
        grounded[0] = True
        heated = np.zeros(ncomp + 1, dtype=bool)
        heated[np.unique(labels[q_arr > 0])] = True
        floating = ~grounded
        if np.any(floating & heated):
            bad = int(np.flatnonzero(floating & heated)[0])
            size = int(np.sum(labels == bad))
            raise FloatingComponent(f"heated component of {size} voxels has no path to a sink", size=size)
        pinned = floating[labels] & grid.active
        if pinned.any():
            log.warning("pinning %d voxels in sink-less, source-free components at %.1f K", int(pinned.sum()), T_ref)
    mask = grid.active & ~pinned
    n = int(mask.sum())
    index = compact_index(mask)

    a, b_, g = interior_faces(grid.k, mask, grid.spacing_m)
    L = conductance_matrix(n, index.ravel()[a], index.ravel()[b_], g)
    dG = G_d[mask]
    with np.errstate(invalid="ignore", divide="ignore"):
        d_rise = np.where(dG > 0, GT_d[mask] / np.where(dG > 0, dG, 1.0) - T_ref, 0.0)
    A = (L + sp.diags(dG)).tocsr()
    heat = q_arr[mask] * grid.voxel_volume_m3
    rhs = heat + dG * d_rise
    return LinearSystem(grid, A, rhs, mask, pinned, T_ref, dG, d_rise, heat, L)


def solve_steady(
    system: LinearSystem, tol: float = DEFAULT_TOL, max_iter: int | None = None,
    preconditioner: str = "jacobi", M=None, x0=None,
) -> ScalarField:
    """PCG solve of ``system``; returns temperature in K with balance diagnostics."""
    theta, info = pcg(system.A, system.b, x0=x0, tol=tol, max_iter=max_iter, M=M, preconditioner=preconditioner)
    return system.expand(theta, info=_steady_info(system, theta, info))


def _steady_info(system: LinearSystem, theta: np.ndarray, info: dict) -> dict:
    flux = system.sink_flux(theta)
    power = float(system.heat.sum())
    scale = max(abs(power), float(np.sum(system.dirichlet_G * np.abs(system.dirichlet_rise))))
    residual = abs(power - flux) / scale if scale > 0 else 0.0
    return dict(info, sink_flux=flux, source_power=power, balance_residual=residual, T_ref=system.T_ref)


def capacitance(grid: VoxelGrid, mask: np.ndarray) -> np.ndarray:
    """Per-voxel heat capacity rho*cp*V (J/K) on ``mask`` voxels."""
    return grid.rho_cp[mask] * grid.voxel_volume_m3


def step_transient(system: LinearSystem, T_n: ScalarField, Q=None, dt: float = 1e-10,
                   tol: float = DEFAULT_TOL, max_iter=None, preconditioner="jacobi") -> ScalarField:
    """One backward-Euler step of length ``dt`` seconds.

    Solves ``(C/dt + A) T_{n+1} = (C/dt) T_n + q`` on the system's operator.
    """
    dt = check_positive(dt, "dt")
    grid = system.grid
    check_field(T_n, grid, "K")
    heat = heat_array(Q, grid)[system.mask] * grid.voxel_volume_m3
    C = capacitance(grid, system.mask)
    lhs = (system.A + sp.diags(C / dt)).tocsr()
    theta_n = system.restrict(T_n)
    rhs = C / dt * theta_n + heat + system.dirichlet_G * system.dirichlet_rise
    theta, info = pcg(lhs, rhs, x0=theta_n, tol=tol, max_iter=max_iter, preconditioner=preconditioner)
    return system.expand(theta, info=dict(info))


@dataclass
class TransientTrace:
    """Probe temperatures (K) sampled at ``times_ns``; one column per probe."""

    times_ns: np.ndarray
    probes: list[str]
    temperatures: np.ndarray
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times_ns = np.asarray(self.times_ns, dtype=float)
        self.temperatures = np.asarray(self.temperatures, dtype=float).reshape(self.times_ns.size, len(self.probes))
        if self.times_ns.size > 1 and np.any(np.diff(self.times_ns) <= 0):
            raise ValueError("trace times must be strictly increasing")

    def __len__(self):
        return self.times_ns.size

    def column(self, probe: str) -> np.ndarray:
        return self.temperatures[:, self.probes.index(probe)]


def _divides(segment: float, dt: float) -> bool:
    q = segment / dt
    return abs(q - round(q)) <= 1e-9 * max(1.0, q)


class TransientStepper:
    """Backward-Euler integrator with a fixed step and cached operator.

    The heat vector is switched between ``heat_on`` and zero; only two
    right-hand-side variants ever occur, so the left operator and its
    preconditioner are built once.
    """

    def __init__(self, system: LinearSystem, dt_s: float, tol=DEFAULT_TOL, max_iter=None, preconditioner="jacobi"):
        self.system = system
        self.dt = check_positive(dt_s, "dt")
        self.C = capacitance(system.grid, system.mask)
        self.lhs = (system.A + sp.diags(self.C / self.dt)).tocsr()
        self.tol = tol
        self.max_iter = max_iter
        self.M = make_preconditioner(self.lhs, preconditioner)
        self.boundary = system.dirichlet_G * system.dirichlet_rise
        self.iterations = 0
        self._last = None

    def step(self, theta: np.ndarray, heat: np.ndarray | None) -> np.ndarray:
        rhs = self.C / self.dt * theta + self.boundary
        if heat is not None:
            rhs = rhs + heat
        # linear extrapolation is usually the better first guess while the source
        # state is unchanged, but it overshoots on fast decays; keep whichever fits
        x0 = theta
        if self._last is not None and self._last[0] is heat:
            guess = 2.0 * theta - self._last[1]
            if np.linalg.norm(rhs - self.lhs @ guess) < np.linalg.norm(rhs - self.lhs @ theta):
                x0 = guess
        out, info = pcg(self.lhs, rhs, x0=x0, tol=self.tol, max_iter=self.max_iter, M=self.M)
        self.iterations += info["iterations"]
        self._last = (heat, theta)
        return out


def probe_masks(grid: VoxelGrid, system: LinearSystem, probes: Iterable[str]) -> dict[str, np.ndarray]:
    """Row selections (within ``system.mask``) for each probe label pattern."""
    out = {}
    for probe in probes:
        sel = grid.label_mask(probe)[system.mask]
        if not sel.any():
            raise ScenarioError(f"probe {probe!r} matches no solved voxel")
        out[probe] = sel
    return out


def run_transient(
    system: LinearSystem,
    t_end_ns: float,
    dt_ns: float = 0.1,
    probes: Sequence[str] = (),
    schedule: SourceSchedule | None = None,
    hold: bool = False,
    T0: ScalarField | None = None,
    sample_every: int = 1,
    tol: float = DEFAULT_TOL,
    max_iter=None,
    preconditioner: str = "jacobi",
) -> TransientTrace:
    """Integrate from ``T0`` (default: uniform at the reference temperature).

    ``system.heat`` is applied while the schedule is on (always, if ``hold``).
    The step from ``t_n`` uses the source state at ``t_n``; ``dt`` must divide
    the on and off segments so switching lands on step boundaries.
    """
    t_end_ns = check_positive(t_end_ns, "t_end")
    dt_ns = check_positive(dt_ns, "dt")
    schedule = schedule or SourceSchedule()
    if not hold:
        off = schedule.period_ns - schedule.on_ns
        if not _divides(schedule.on_ns, dt_ns) or (off > 0 and not _divides(off, dt_ns)):
            raise ScenarioError(
                f"dt={dt_ns} ns does not divide the schedule's on/off segments "
                f"({schedule.on_ns} ns / {off} ns)"
            )
    nsteps = int(round(t_end_ns / dt_ns))
    if abs(nsteps * dt_ns - t_end_ns) > 1e-9 * t_end_ns:
        raise ScenarioError(f"dt={dt_ns} ns does not divide t_end={t_end_ns} ns")
    probes = list(probes)
    sel = probe_masks(system.grid, system, probes)
    stepper = TransientStepper(system, dt_ns * 1e-9, tol=tol, max_iter=max_iter, preconditioner=preconditioner)
    theta = np.zeros(system.n) if T0 is None else system.restrict(check_field(T0, system.grid, "K"))
    heat = system.heat if np.any(system.heat) else None

    def sample(theta):
        return [float(theta[sel[p]].max()) + system.T_ref for p in probes]

    times = [0.0]
    rows = [sample(theta)]
    for n in range(nsteps):
        t = n * dt_ns
        on = hold or schedule.is_on(t)
        theta = stepper.step(theta, heat if on else None)
        if (n + 1) % sample_every == 0 or n + 1 == nsteps:
            times.append((n + 1) * dt_ns)
            rows.append(sample(theta))
    final = system.expand(theta)
    return TransientTrace(
        np.array(times), probes, np.array(rows).reshape(len(times), len(probes)),
        info={"iterations": stepper.iterations, "steps": nsteps, "dt_ns": dt_ns, "final": final},
    )


def default_sinks(T: float = DEFAULT_SINK_T, rect=None) -> list[SinkPatch]:
    """Heat-sink bottom face at ``T`` kelvin; every other face stays adiabatic."""
    return [SinkPatch("zmin", T, rect)]


apply_sinks = default_sinks


def rc_time_constant(k: float, rho_cp: float, spacing_m: float) -> float:
    """Time constant of one cubic voxel tied to a sink through one face."""
    G = 2.0 * k * spacing_m
    C = rho_cp * spacing_m**3
    return C / G


__all__ = [
    "face_conductance", "assemble_steady", "solve_steady", "step_transient", "run_transient",
    "LinearSystem", "TransientTrace", "TransientStepper", "default_sinks", "apply_sinks",
    "capacitance", "rc_time_constant",
]
