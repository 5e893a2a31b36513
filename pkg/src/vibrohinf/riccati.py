"""Stabilizing solutions of the continuous-time Riccati equation

    -A^T R - R A + R D R - C = 0

with a possibly indefinite quadratic weight ``D`` (the H-infinity case
``D = B1 B1^T - gamma^-2 B2 B2^T``), plus the Lyapunov solves used by the
asymptotic expansion.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionError, Infeasible, NumericalFailure, PreconditionError
from .matkit import (
    HURWITZ_MARGIN,
    Definiteness,
    as_matrix,
    definiteness,
    eigenvalues,
    solve_sylvester,
    symmetrize,
)

__all__ = [
    "StabilizingSolution",
    "Feasibility",
    "riccati_residual",
    "solve_stabilizing_are",
    "solve_lyapunov",
    "is_feasible",
]

logger = logging.getLogger(__name__)

IMAG_AXIS_TOL = 1e-8
X1_COND_MAX = 1e12
RESIDUAL_RTOL = 1e-9
NEWTON_MAXITER = 30


@dataclass(frozen=True)
class StabilizingSolution:
    R: np.ndarray
    closed_loop: np.ndarray
    residual_norm: float
    stability_margin: float
    newton_steps: int = 0

    @property
    def positive_definite(self) -> bool:
        return definiteness(self.R) is Definiteness.POSITIVE_DEFINITE


def riccati_residual(A, D, C, R) -> np.ndarray:
    return -A.T @ R - R @ A + R @ D @ R - C


def _problem_scale(A, D, C) -> float:
    return 1.0 + np.linalg.norm(A) + np.linalg.norm(D) + np.linalg.norm(C)


def _residual_tol(A, D, C, R) -> float:
    return RESIDUAL_RTOL * (1.0 + np.linalg.norm(R)) ** 2 * _problem_scale(A, D, C)


def _check_inputs(Abar, Dbar, Cbar):
    A = as_matrix(Abar, "Abar", square=True)
    D = symmetrize(Dbar, "Dbar")
    C = symmetrize(Cbar, "Cbar")
    if D.shape != A.shape or C.shape != A.shape:
        raise DimensionError("Abar, Dbar, Cbar must share dimensions")
    return A, D, C


def solve_stabilizing_are(Abar, Dbar, Cbar) -> StabilizingSolution:
    """Stabilizing solution of ``-A^T R - R A + R D R - C = 0``.

    The stable invariant subspace ``[X1; X2]`` of the Hamiltonian
    ``[[A, -D], [-C, -A^T]]`` is taken from an ordered real Schur form,
    ``R = X2 X1^{-1}`` is symmetrized and then polished by Newton steps,
    each a Lyapunov solve on the current closed loop ``A - D R``.

    Raises
    ------
    Infeasible
        Hamiltonian eigenvalues on (or within ``1e-8`` of) the imaginary
        axis, a singular ``X1``, or a closed loop that is not Hurwitz.
    NumericalFailure
        Newton refinement stagnates above the residual tolerance.
    """
    A, D, C = _check_inputs(Abar, Dbar, Cbar)
    n = A.shape[0]
    H = np.block([[A, -D], [-C, -A.T]])
    h_scale = max(1.0, np.linalg.norm(H))
    lam = np.linalg.eigvals(H)
    if np.min(np.abs(lam.real)) <= IMAG_AXIS_TOL * h_scale:
        raise Infeasible("Hamiltonian has eigenvalues on the imaginary axis")
    _, Z, sdim = scipy.linalg.schur(H, output="real", sort="lhp")
    if sdim != n:
        raise Infeasible(f"stable subspace has dimension {sdim}, expected {n}")
    X1, X2 = Z[:n, :n], Z[n:, :n]
    if np.linalg.cond(X1) > X1_COND_MAX:
        raise Infeasible("stable subspace is not a graph (X1 singular)")
    R = np.linalg.solve(X1.T, X2.T).T
    R = 0.5 * (R + R.T)

    tol = _residual_tol(A, D, C, R)
    res = riccati_residual(A, D, C, R)
    res_norm = np.linalg.norm(res)
    steps = 0
    while steps < NEWTON_MAXITER:
        if res_norm <= 1e-3 * tol:
            break
        Acl = A - D @ R
        try:
            delta = solve_sylvester(Acl.T, Acl, -res)
        except NumericalFailure:
            break
        R_new = R + 0.5 * (delta + delta.T)
        res_new = riccati_residual(A, D, C, R_new)
        new_norm = np.linalg.norm(res_new)
        steps += 1
        if not new_norm < res_norm:
            break
        R, res, res_norm = R_new, res_new, new_norm
    tol = _residual_tol(A, D, C, R)
    if res_norm > tol:
        raise NumericalFailure(
            f"Newton refinement stagnated: residual {res_norm:.3e} > {tol:.3e}"
        )
    Acl = A - D @ R
    margin = -eigenvalues(Acl).max_real_part
    if margin <= HURWITZ_MARGIN:
        raise Infeasible(f"closed loop is not Hurwitz (margin {margin:.3e})")
    logger.debug("ARE solved: residual %.2e, margin %.3e, %d Newton steps",
                 res_norm, margin, steps)
    return StabilizingSolution(R, Acl, float(res_norm), float(margin), steps)


def solve_lyapunov(Acl, W) -> np.ndarray:
    """Solve ``Acl^T R + R Acl + W = 0`` for Hurwitz ``Acl``."""
    Acl = as_matrix(Acl, "Acl", square=True)
    W = symmetrize(W, "W")
    if eigenvalues(Acl).max_real_part >= -HURWITZ_MARGIN:
        raise PreconditionError("Acl is not Hurwitz")
    X = solve_sylvester(Acl.T, Acl, W)
    return 0.5 * (X + X.T)


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    certificate: StabilizingSolution | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.feasible


def is_feasible(Abar, Dbar, Cbar) -> Feasibility:
    """Decide whether a stabilizing positive definite solution exists."""
    try:
        sol = solve_stabilizing_are(Abar, Dbar, Cbar)
    except Infeasible as exc:
        return Feasibility(False, None, exc.reason)
    except NumericalFailure as exc:
        return Feasibility(False, None, f"numerical failure: {exc}")
    if not sol.positive_definite:
        return Feasibility(False, sol, "stabilizing solution is not positive definite")
    return Feasibility(True, sol, "")
