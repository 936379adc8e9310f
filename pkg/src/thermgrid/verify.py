"""Analytic oracle suite run by ``thermgrid verify``.

Each check builds a tiny structure whose answer is known in closed form and
compares the discrete solution against it.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .electrical import joule_heat, prescribed_power_to_density, solve_potential
from .geometry import Box, HeatSource, Scenario, SinkPatch, Terminal, voxelize
from .materials import Material, builtin_library
from .solvers import pcg
from .thermal import assemble_steady, face_conductance, run_transient, solve_steady, step_transient

T_LO, T_HI = 300.0, 400.0


@dataclass
class OracleResult:
    name: str
    passed: bool
    value: float
    expected: float
    error: float
    limit: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status}  {self.name:<34} value={self.value:.10g} expected={self.expected:.10g} "
                f"err={self.error:.3e} (limit {self.limit:.1e})")


def _result(name, value, expected, limit, relative=True, error=None):
    if error is None:
        error = abs(value - expected)
        if relative:
            error /= abs(expected)
    return OracleResult(name, bool(error <= limit), float(value), float(expected), float(error), limit)


def column(layers, h=2.0, sinks=(), sources=(), materials=(), terminals=None):
    """1x1xN voxel column stacked along z from ``(thickness_nm, material, label)`` layers."""
    boxes, z = [], 0.0
    for thickness, material, label in layers:
        boxes.append(Box((0, 0, z), (h, h, thickness), material, label))
        z += thickness
    return Scenario(tuple(boxes), h, tuple(sinks), tuple(sources), terminals=terminals, materials=tuple(materials))


def _two_ends(lo=T_LO, hi=T_HI):
    return (SinkPatch("zmin", lo), SinkPatch("zmax", hi))


def linear_slab(h=2.0, L=100.0, k_name="Si_nw"):
    s = column([(L, k_name, "slab")], h, _two_ends())
    grid = voxelize(s)
    T = solve_steady(assemble_steady(grid, None, s.sinks)).to_array()[:, 0, 0]
    z = grid.centers("z")
    exact = T_LO + (T_HI - T_LO) * z / L
    err = float(np.max(np.abs(T - exact) / exact))
    return _result("linear slab profile", float(T[-1]), float(exact[-1]), 1e-8, error=err)


def series_interface_oracle(L1=50.0, L2=50.0, k1=13.0, k2=167.0, lo=T_LO, hi=T_HI):
    R1, R2 = L1 / k1, L2 / k2
    return lo + (hi - lo) * R1 / (R1 + R2)


def series_slab(h=2.0):
    s = column([(50.0, "Si_nw", "a"), (50.0, "W", "b")], h, _two_ends())
    grid = voxelize(s)
    T = solve_steady(assemble_steady(grid, None, s.sinks)).to_array()[:, 0, 0]
    n1 = int(round(50.0 / h))
    k1, k2 = 13.0, 167.0
    # flux continuity across the interface with half-cell distances on both sides
    T_int = (k1 * T[n1 - 1] + k2 * T[n1]) / (k1 + k2)
    return _result("series slab interface", T_int, series_interface_oracle(), 1e-8)


def heated_slab_error(h, L=100.0, Q=1e15, k=13.0):
    """Max nodal error against the exact parabola and the discrete peak rise."""
    s = column([(L, "Si_nw", "slab")], h, (SinkPatch("zmin", T_LO),))
    grid = voxelize(s)
    q = np.full(grid.shape, Q)
    T = solve_steady(assemble_steady(grid, q, s.sinks)).to_array()[:, 0, 0]
    z = grid.centers("z") * 1e-9
    Lm = L * 1e-9
    exact = T_LO + Q / k * (Lm * z - z**2 / 2)
    return float(np.max(np.abs(T - exact))), float(T.max() - T_LO)


def heated_slab_convergence(L=100.0, Q=1e15, k=13.0):
    e1, _ = heated_slab_error(4.0, L, Q, k)
    e2, peak = heated_slab_error(2.0, L, Q, k)
    ratio = e1 / e2
    expected_peak = Q * (L * 1e-9) ** 2 / (2 * k)
    ok_ratio = 3.2 <= ratio <= 4.8
    res = _result("heated slab peak rise", peak, expected_peak, 1e-6)
    return [res, OracleResult("heated slab refinement ratio", ok_ratio, ratio, 4.0, abs(ratio - 4.0), 0.8)]


def lumped_cube(h=2.0, n=4, Q=1e15, dt=1e-10, steps=10):
    """Adiabatic cube: every backward-Euler step adds exactly Q dt / (rho cp)."""
    s = Scenario((Box((0, 0, 0), (n * h,) * 3, "Si_nw", "cube"),), h)
    grid = voxelize(s)
    system = assemble_steady(grid, np.full(grid.shape, Q), (), allow_floating=True)
    T = system.expand(np.zeros(system.n))
    rho_cp = builtin_library()["Si_nw"].rho_cp
    worst = 0.0
    for _ in range(steps):
        before = T.values.mean()
        T = step_transient(system, T, np.full(grid.shape, Q), dt)
        worst = max(worst, abs((T.values.mean() - before) / (Q * dt / rho_cp) - 1.0))
    rise = T.values.mean() - system.T_ref
    return _result("adiabatic cube heating", rise, Q * dt * steps / rho_cp, 1e-3, error=worst)


def bath_decay(h=2.0, steps=100):
    """Single voxel tied to a bath through one face; per-step decay versus exp(-dt/tau)."""
    s = column([(h, "Si_nw", "voxel")], h, (SinkPatch("zmin", T_LO),))
    grid = voxelize(s)
    mat = builtin_library()["Si_nw"]
    tau = mat.rho_cp * grid.spacing_m**2 / (2 * mat.k)
    dt = tau / 100
    system = assemble_steady(grid, None, s.sinks)
    T = system.expand(np.array([1.0]))
    worst = 0.0
    for _ in range(steps):
        prev = T.values[0] - T_LO
        T = step_transient(system, T, None, dt)
        worst = max(worst, abs((T.values[0] - T_LO) / prev / math.exp(-dt / tau) - 1.0))
    return _result("bath decay per step", T.values[0] - T_LO, math.exp(-steps * dt / tau), 1e-3, error=worst)


BAR_SIGMA = 1e6


def electrical_bar(h=2.0, L=160.0, dV=0.8):
    """Bar with end-voxel terminals whose centres are ``L`` apart."""
    bar = Material("bar_metal", 10.0, 1000.0, 500.0, BAR_SIGMA)
    layers = [(h, "bar_metal", "term_lo"), (L - h, "bar_metal", "bar"), (h, "bar_metal", "term_hi")]
    s = column(layers, h, materials=[bar], terminals=(Terminal("term_lo", 0.0), Terminal("term_hi", dV)))
    grid = voxelize(s)
    V = solve_potential(grid, s.terminals)
    z = grid.centers("z")
    exact_V = dV * (z - z[0]) / L
    vals = V.to_array()[:, 0, 0]
    v_err = float(np.max(np.abs(vals - exact_V)) / dV)
    Q = joule_heat(grid, V)
    total = float(np.nansum(Q.to_array()) * grid.voxel_volume_m3)
    A = (h * 1e-9) ** 2
    expected = dV**2 * BAR_SIGMA * A / (L * 1e-9)
    # each face's power is split between its two voxels, so the end voxels carry half
    q = Q.to_array()[1:-1, 0, 0]
    E = dV / (L * 1e-9)
    q_err = float(np.max(np.abs(q - BAR_SIGMA * E**2)) / (BAR_SIGMA * E**2))
    return [
        _result("electrical bar potential", vals[len(vals) // 2], exact_V[len(vals) // 2], 1e-8, error=v_err),
        _result("electrical bar Joule density", float(q.mean()), BAR_SIGMA * E**2, 1e-8, error=q_err),
        _result("electrical bar Joule power", total, expected, 1e-8),
    ]


def heated_pillar(h=2.0, width=4.0, height=100.0, P=1e-7, k_name="W"):
    """Pillar on a sink with all heat in its top layer: a 1-D resistance chain.

    Layer ``i`` sits ``(i + 1/2) h`` above the sink, so its rise is
    ``P (i + 1/2) h / (k A)`` and the layer maxima climb monotonically.
    """
    s = Scenario(
        (Box((0, 0, 0), (width, width, height - h), k_name, "pillar"),
         Box((0, 0, height - h), (width, width, h), k_name, "heater")),
        h, (SinkPatch("zmin", T_LO),), (HeatSource("heater", power=P),),
    )
    grid = voxelize(s)
    Q = prescribed_power_to_density(grid, s.sources).to_array()
    T = solve_steady(assemble_steady(grid, Q, s.sinks))
    from .analysis import tier_profile

    rows = tier_profile(T)
    maxima = np.array([r[1] for r in rows])
    k = builtin_library()[k_name].k
    A = (width * 1e-9) ** 2
    z = np.array([r[0] for r in rows]) * 1e-9
    exact = T_LO + P * z / (k * A)
    err = float(np.max(np.abs(maxima - exact)) / (maxima[-1] - T_LO))
    mono = bool(np.all(np.diff(maxima) >= 0))
    return [
        _result("heated pillar layer chain", float(maxima[-1]), float(exact[-1]), 1e-8, error=err),
        OracleResult("heated pillar monotone in z", mono, float(np.min(np.diff(maxima))), 0.0, 0.0, 0.0),
    ]


def held_plateau(h=2.0, L=100.0, Q=1e15, t_end_ns=20.0, dt_ns=0.1):
    """Held-on source: the end of the transient trace equals the steady solve."""
    s = column([(L, "Si_nw", "slab")], h, (SinkPatch("zmin", T_LO),))
    grid = voxelize(s)
    system = assemble_steady(grid, np.full(grid.shape, Q), s.sinks)
    steady = float(np.nanmax(solve_steady(system).to_array()))
    trace = run_transient(system, t_end_ns, dt_ns, probes=["slab"], hold=True)
    final = float(trace.temperatures[-1, 0])
    return _result("held source reaches steady", final, steady, 0.1, relative=False)


def face_conductance_check():
    g = face_conductance(13.0, 167.0, 2e-9)
    return _result("face conductance 13|167", g, 2e-9 * 2 * 13 * 167 / 180, 1e-14)


def random_spd(seed=0, n=5):
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((n, n))
    A = B @ B.T + n * np.eye(n)
    b = rng.standard_normal(n)
    x, _ = pcg(A, b, tol=1e-14)
    exact = np.linalg.solve(A, b)
    err = float(np.max(np.abs(x - exact)) / np.max(np.abs(exact)))
    return _result("5x5 SPD against dense solve", float(x[0]), float(exact[0]), 1e-9, error=err)


def prescribed_density_check():
    s = Scenario((Box((0, 0, 0), (16, 16, 16), "Si_nw", "blk"),), 2.0, sources=(HeatSource("blk", power=1e-6),))
    grid = voxelize(s)
    Q = prescribed_power_to_density(grid, s.sources).values
    return _result("prescribed power density", float(Q.mean()), 1e-6 / 4.096e-24, 1e-12)


def run_all() -> tuple[list[OracleResult], float]:
    start = time.perf_counter()
    results = [linear_slab(), series_slab()]
    results += heated_slab_convergence()
    results += [lumped_cube(), bath_decay()]
    results += [held_plateau()]
    results += electrical_bar()
    results += heated_pillar()
    results += [face_conductance_check(), random_spd(), prescribed_density_check()]
    return results, time.perf_counter() - start


__all__ = ["run_all", "OracleResult", "series_interface_oracle", "column"]
