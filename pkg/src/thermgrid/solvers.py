"""Preconditioned conjugate gradients for the SPD systems built here."""
from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sp

from .errors import SolverDivergence

log = logging.getLogger(__name__)

PRECONDITIONERS = ("jacobi", "amg", "auto", "none")
# "auto" switches to multigrid above this many unknowns
AUTO_AMG_SIZE = 100_000


class JacobiPreconditioner:
    def __init__(self, A):
        d = A.diagonal()
        if np.any(d <= 0):
            raise SolverDivergence("matrix has a non-positive diagonal entry; not SPD")
        self.inv_diag = 1.0 / d

    def __call__(self, r):
        return self.inv_diag * r


class AMGPreconditioner:
    """One smoothed-aggregation V-cycle per application (pyamg)."""

    def __init__(self, A):
        import pyamg
        from pyamg.relaxation.smoothing import change_smoothers

        ml = pyamg.smoothed_aggregation_solver(A.tocsr(), symmetry="symmetric", max_coarse=500)
        # coarse levels come back as 1x1-block BSR, whose Gauss-Seidel kernel is several times slower
        for level in ml.levels:
            level.A = level.A.tocsr()
            for attr in ("P", "R"):
                if hasattr(level, attr):
                    setattr(level, attr, getattr(level, attr).tocsr())
        sweep = ("gauss_seidel", {"sweep": "symmetric"})
        change_smoothers(ml, sweep, sweep)
        self._ml = ml
        self._M = ml.aspreconditioner(cycle="V")

    def __call__(self, r):
        return self._M.matvec(r)


def make_preconditioner(A, kind: str = "jacobi"):
    if kind == "auto":
        kind = "amg" if A.shape[0] > AUTO_AMG_SIZE else "jacobi"
    if kind == "jacobi":
        return JacobiPreconditioner(A)
    if kind == "amg":
        return AMGPreconditioner(A)
    if kind == "none":
        return lambda r: r
    raise ValueError(f"unknown preconditioner {kind!r}; choose from {PRECONDITIONERS}")


def pcg(A, b, x0=None, tol=1e-10, max_iter=None, M=None, preconditioner="jacobi"):
    """Solve ``A x = b`` for symmetric positive definite ``A``.

    Stops once ``||b - A x|| <= tol * ||b||``. Returns ``(x, info)`` with the
    iteration count and final relative residual. Raises ``SolverDivergence``
    when ``max_iter`` (default ``50 * n``) is exhausted; the exception carries
    the last iterate and the smallest residual seen.
    """
    A = sp.csr_matrix(A) if not sp.issparse(A) else A.tocsr()
    b = np.asarray(b, dtype=float)
    n = b.size
    if max_iter is None:
        max_iter = max(50 * n, 100)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), {"iterations": 0, "residual": 0.0}
    if M is None:
        M = make_preconditioner(A, preconditioner)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x
    rnorm = np.linalg.norm(r)
    best = rnorm
    if rnorm <= tol * bnorm:
        return x, {"iterations": 0, "residual": rnorm / bnorm}
    z = M(r)
    p = z.copy()
    rz = r @ z
    for it in range(1, max_iter + 1):
        Ap = A @ p
        pAp = p @ Ap
        if pAp <= 0:
            raise SolverDivergence(
                "non-positive curvature in CG; matrix is not positive definite",
                residual=best / bnorm, iterations=it, x=x,
            )
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        rnorm = np.linalg.norm(r)
        best = min(best, rnorm)
        if rnorm <= tol * bnorm:
            # recompute the true residual to guard against drift in the recurrence
            true_r = np.linalg.norm(b - A @ x)
            if true_r <= tol * bnorm:
                return x, {"iterations": it, "residual": true_r / bnorm}
            r = b - A @ x
        z = M(r)
        rz_new = r @ z
        p *= rz_new / rz
        p += z
        rz = rz_new
    raise SolverDivergence(
        f"CG did not reach relative residual {tol:g} in {max_iter} iterations "
        f"(best {best / bnorm:.3e})",
        residual=best / bnorm, iterations=max_iter, x=x,
    )
