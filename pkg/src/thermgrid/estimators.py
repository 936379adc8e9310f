"""Estimator-style wrappers around the thermal solvers.

``fit`` takes a voxel grid (and sink patches) and assembles the conduction
operator once; ``predict`` maps a heat-density field to a temperature field
or probe trace. Parameters follow the scikit-learn conventions so the
solvers can be cloned, configured with ``set_params`` and inspected with
``get_params``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .errors import FloatingComponent
from .fields import ScalarField
from .geometry import SourceSchedule, VoxelGrid
from .solvers import make_preconditioner
from .thermal import (
    DEFAULT_TOL,
    LinearSystem,
    TransientTrace,
    assemble_steady,
    default_sinks,
    run_transient,
    solve_steady,
)
from .validation import check_grid, heat_array


class _ThermalEstimator(BaseEstimator):
    def fit(self, X: VoxelGrid, y=None, sinks=None):
        """Assemble the operator for grid ``X``; ``sinks`` defaults to a 300 K bottom face."""
        grid = check_grid(X)
        sinks = default_sinks() if sinks is None else list(sinks)
        self.system_: LinearSystem = assemble_steady(grid, None, sinks)
        self.grid_ = grid
        self.n_unknowns_ = self.system_.n
        return self

    def _system_for(self, Q) -> LinearSystem:
        check_is_fitted(self, "system_")
        q = heat_array(Q, self.grid_)
        if np.any(q[self.system_.pinned] > 0):
            raise FloatingComponent(
                "heat lands on a component with no path to a sink", size=int(self.system_.pinned.sum())
            )
        return self.system_.with_heat(q[self.system_.mask] * self.grid_.voxel_volume_m3)


class SteadyThermalSolver(_ThermalEstimator):
    """Steady conduction: ``predict(Q)`` returns the temperature field (K)."""

    def __init__(self, tol: float = DEFAULT_TOL, max_iter: int | None = None, preconditioner: str = "jacobi"):
        self.tol = tol
        self.max_iter = max_iter
        self.preconditioner = preconditioner

    def fit(self, X, y=None, sinks=None):
        super().fit(X, y, sinks)
        # the preconditioner depends only on the operator
        self.M_ = make_preconditioner(self.system_.A, self.preconditioner)
        return self

    def predict(self, Q) -> ScalarField:
        system = self._system_for(Q)
        return solve_steady(system, tol=self.tol, max_iter=self.max_iter, M=self.M_)

    def score(self, Q, T_true: ScalarField) -> float:
        """Negative max-norm error (K) against a reference temperature field."""
        T = self.predict(Q)
        return -float(np.nanmax(np.abs(T.to_array() - T_true.to_array())))


class TransientThermalSolver(_ThermalEstimator):
    """Backward-Euler transient: ``predict(Q)`` returns the probe trace."""

    def __init__(
        self, dt_ns: float = 0.1, t_end_ns: float = 200.0, probes=(), period_ns: float = 100.0,
        duty: float = 0.5, hold: bool = False, sample_every: int = 1, tol: float = DEFAULT_TOL,
        max_iter: int | None = None, preconditioner: str = "jacobi",
    ):
        self.dt_ns = dt_ns
        self.t_end_ns = t_end_ns
        self.probes = probes
        self.period_ns = period_ns
        self.duty = duty
        self.hold = hold
        self.sample_every = sample_every
        self.tol = tol
        self.max_iter = max_iter
        self.preconditioner = preconditioner

    def predict(self, Q, T0: ScalarField | None = None) -> TransientTrace:
        system = self._system_for(Q)
        return run_transient(
            system, self.t_end_ns, self.dt_ns, probes=list(self.probes),
            schedule=SourceSchedule(self.period_ns, self.duty), hold=self.hold, T0=T0,
            sample_every=self.sample_every, tol=self.tol, max_iter=self.max_iter,
            preconditioner=self.preconditioner,
        )


__all__ = ["SteadyThermalSolver", "TransientThermalSolver"]
