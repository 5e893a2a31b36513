"""Fast-time change of variables that removes the ``(1/eps) sin(t/eps) K``
term from the Riccati equation, and averaging of the transformed
coefficients.

With ``Psi(tau) = exp(K^T (cos tau - 1))`` the substitution
``R = Psi P Psi^T`` turns the vibrated Riccati equation into

    dP/dtau = eps (-cA^T P - P cA + P cD P - cC),

    cA = Psi^T A Psi^{-T},  cD = Psi^T D Psi,  cC = Psi^{-1} C Psi^{-T}.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import periodic
from .errors import DimensionError, PreconditionError, TransformError
from .matkit import as_matrix, is_hurwitz, mat_exp
from .periodic import DEFAULT_GRID, PeriodicMatrix

__all__ = [
    "Convention",
    "SystemSpec",
    "AveragedSystem",
    "psi",
    "coefficients_at",
    "transform_system",
    "averaged_are_input",
]

PSI_COND_MAX = 1e12


class Convention(str, Enum):
    PAPER = "paper"          # Psi(0) = I
    ZERO_MEAN = "zero_mean"  # exponent has zero period mean


@dataclass(frozen=True)
class SystemSpec:
    """Plant ``x' = A x + (1/eps) sin(t/eps) K x + B1 u + B2 w``, ``z = L x``.

    ``B1`` may have zero columns (no control input); the plant must then
    be Hurwitz on its own.
    """

    A: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    L: np.ndarray
    K: np.ndarray | None = None
    gamma: float = 1.0
    epsilon: float = 0.1

    def __post_init__(self):
        A = as_matrix(self.A, "A", square=True)
        n = A.shape[0]
        B1 = np.array(self.B1, dtype=float).reshape(n, -1) if np.size(self.B1) else np.zeros((n, 0))
        B2 = np.array(self.B2, dtype=float).reshape(n, -1) if np.size(self.B2) else np.zeros((n, 0))
        L = as_matrix(self.L, "L")
        K = np.zeros((n, n)) if self.K is None else as_matrix(self.K, "K", square=True)
        if L.shape[1] != n or K.shape != (n, n):
            raise DimensionError("L must have n columns and K must be n x n")
        if not np.all(np.isfinite(B1)) or not np.all(np.isfinite(B2)):
            raise ValueError("B1 and B2 must be finite")
        if not self.gamma > 0:
            raise PreconditionError("gamma must be positive")
        if not self.epsilon > 0:
            raise PreconditionError("epsilon must be positive")
        if not np.any(B1) and not is_hurwitz(A):
            raise PreconditionError("B1 = 0 requires a Hurwitz A (not stabilizable)")
        for name, val in (("A", A), ("B1", B1), ("B2", B2), ("L", L), ("K", K)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "epsilon", float(self.epsilon))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def p(self) -> int:
        return self.B1.shape[1]

    @property
    def q(self) -> int:
        return self.B2.shape[1]

    @property
    def m(self) -> int:
        return self.L.shape[0]

    def D(self, gamma: float | None = None) -> np.ndarray:
        g = self.gamma if gamma is None else gamma
        D = self.B1 @ self.B1.T - (self.B2 @ self.B2.T) / g**2
        return 0.5 * (D + D.T)

    @property
    def C(self) -> np.ndarray:
        # L^T L, so that |z|^2 = x^T C x
        return self.L.T @ self.L

    def replace(self, **changes) -> "SystemSpec":
        fields = dict(A=self.A, B1=self.B1, B2=self.B2, L=self.L, K=self.K,
                      gamma=self.gamma, epsilon=self.epsilon)
        fields.update(changes)
        return SystemSpec(**fields)


def _phase(tau, convention: Convention | str) -> np.ndarray:
    convention = Convention(convention)
    c = np.cos(tau)
    return c - 1.0 if convention is Convention.PAPER else c


def psi(K, tau: float, convention: Convention | str = Convention.PAPER) -> np.ndarray:
    """``exp(K^T (cos tau - 1))`` (paper) or ``exp(K^T cos tau)`` (zero_mean)."""
    K = as_matrix(K, "K", square=True)
    return mat_exp(K.T * _phase(tau, convention))


def coefficients_at(spec: SystemSpec, taus, convention=Convention.PAPER,
                    gamma: float | None = None, check: bool = True):
    """Transformed coefficients at arbitrary fast times.

    Returns ``(cA, cD, cC, Psi)`` as stacks of shape ``(len(taus), n, n)``.
    """
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    n = spec.n
    A, D, C = spec.A, spec.D(gamma), spec.C
    Kt = spec.K.T
    phases = _phase(taus, convention)
    # Psi depends on tau only through the phase; reuse exponentials.
    uniq, inverse = np.unique(np.round(phases, 15), return_inverse=True)
    if not np.any(Kt):
        psis = np.broadcast_to(np.eye(n), (len(uniq), n, n))
        inv = psis
    else:
        psis = np.stack([mat_exp(Kt * c) for c in uniq])
        inv = np.stack([mat_exp(-Kt * c) for c in uniq])
        if check:
            conds = np.linalg.norm(psis, 2, axis=(1, 2)) * np.linalg.norm(inv, 2, axis=(1, 2))
            if np.max(conds) > PSI_COND_MAX:
                raise TransformError(
                    f"Psi condition number {np.max(conds):.2e} exceeds {PSI_COND_MAX:.0e}"
                )
    Pt, Pinv = psis.transpose(0, 2, 1), inv
    PinvT = inv.transpose(0, 2, 1)
    cA = Pt @ A @ PinvT
    cD = Pt @ D @ psis
    cC = Pinv @ C @ PinvT
    cD = 0.5 * (cD + cD.transpose(0, 2, 1))
    cC = 0.5 * (cC + cC.transpose(0, 2, 1))
    return cA[inverse], cD[inverse], cC[inverse], np.asarray(psis)[inverse]


@dataclass(frozen=True)
class AveragedSystem:
    """Averages and grid samples of the transformed plant coefficients."""

    spec: SystemSpec
    A_bar: np.ndarray
    D_bar: np.ndarray
    C_bar: np.ndarray
    A_per: PeriodicMatrix
    D_per: PeriodicMatrix
    C_per: PeriodicMatrix
    psi_per: PeriodicMatrix
    convention: Convention
    gamma: float
    # gamma-independent pieces of cD: Psi^T B1 B1^T Psi and Psi^T B2 B2^T Psi
    _D_parts: tuple = field(repr=False, compare=False, default=())

    @property
    def grid_size(self) -> int:
        return self.A_per.grid_size

    def D_bar_at(self, gamma: float) -> np.ndarray:
        """Average of ``Psi^T (B1 B1^T - gamma^-2 B2 B2^T) Psi`` at another level."""
        ctrl, dist = self._D_parts
        D = ctrl - dist / gamma**2
        return 0.5 * (D + D.T)

    def with_gamma(self, gamma: float) -> "AveragedSystem":
        return transform_system(self.spec.replace(gamma=gamma), self.grid_size, self.convention)


def transform_system(spec: SystemSpec, grid_size: int = DEFAULT_GRID,
                     convention: Convention | str = Convention.PAPER) -> AveragedSystem:
    """Sample the transformed coefficients on ``[0, 2 pi)`` and average them."""
    convention = Convention(convention)
    taus = np.arange(grid_size) * (2.0 * np.pi / grid_size)
    cA, cD, cC, psis = coefficients_at(spec, taus, convention)
    A_per = PeriodicMatrix(cA)
    D_per = PeriodicMatrix(cD, symmetric=True)
    C_per = PeriodicMatrix(cC, symmetric=True)
    psi_per = PeriodicMatrix(psis)
    Pt = psis.transpose(0, 2, 1)
    ctrl = (Pt @ (spec.B1 @ spec.B1.T) @ psis).mean(axis=0)
    dist = (Pt @ (spec.B2 @ spec.B2.T) @ psis).mean(axis=0)
    return AveragedSystem(
        spec=spec,
        A_bar=periodic.average(A_per),
        D_bar=periodic.average(D_per),
        C_bar=periodic.average(C_per),
        A_per=A_per,
        D_per=D_per,
        C_per=C_per,
        psi_per=psi_per,
        convention=convention,
        gamma=spec.gamma,
        _D_parts=(ctrl, dist),
    )


def averaged_are_input(avg: AveragedSystem) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The ``(A_bar, D_bar, C_bar)`` triple of the averaged Riccati equation."""
    D = avg.D_bar
    C = avg.C_bar
    return avg.A_bar.copy(), 0.5 * (D + D.T), 0.5 * (C + C.T)
