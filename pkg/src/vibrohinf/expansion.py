"""Asymptotic series for the periodic stabilizing Riccati solution.

In fast time the transformed equation reads ``dP/dtau = eps F(P, tau)``.
Substituting

    P_N = R_0 + sum_{k=1..N} eps^k (R_k + Pi_k(tau)) + eps^{N+1} Pi_{N+1}(tau)

and matching powers of ``eps`` gives ``dPi_{k+1}/dtau = B_k(tau)`` with the
order-k bracket

    B_k = -cA^T S_k - S_k cA + sum_{i+j=k} S_i cD S_j - [k = 0] cC,

where ``S_0 = R_0`` and ``S_k = R_k + Pi_k``. The mean of ``B_k`` must
vanish: for ``k = 0`` that is the averaged Riccati equation, for ``k >= 1``
a Lyapunov equation in ``R_k`` on the averaged closed loop. Every ``Pi_k``
is kept at zero mean, so the constant of integration lives in ``R_k``.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import periodic
from .errors import InfeasiblePrecondition, PreconditionError
from .periodic import PeriodicMatrix
from .riccati import StabilizingSolution, is_feasible, solve_lyapunov
from .vibration import AveragedSystem, averaged_are_input, psi

__all__ = [
    "MAX_ORDER",
    "Coordinates",
    "ExpansionSeries",
    "order_bracket",
    "build_series",
    "series_samples",
    "eval_series",
]

MAX_ORDER = 8


class Coordinates(str, Enum):
    FAST_P = "fast_P"
    ORIGINAL_R = "original_R"


@dataclass(frozen=True)
class ExpansionSeries:
    order: int
    constants: list[np.ndarray]       # R_0 .. R_N
    periodics: list[PeriodicMatrix]   # Pi_1 .. Pi_{N+1}
    closed_loop_avg: np.ndarray
    source: AveragedSystem
    certificate: StabilizingSolution

    @property
    def grid_size(self) -> int:
        return self.source.grid_size


def _sym(X: np.ndarray) -> np.ndarray:
    return X + X.transpose(0, 2, 1)


def _bracket(S: list[np.ndarray], k: int, cA, cD, cC) -> np.ndarray:
    """Order-k bracket on the grid; ``S[j]`` are sample stacks of S_j."""
    out = -_sym(S[k] @ cA)
    for i in range(k + 1):
        j = k - i
        if i < j:
            out = out + _sym(S[i] @ cD @ S[j])
        elif i == j:
            X = S[i] @ cD @ S[i]
            out = out + 0.5 * _sym(X)
    if k == 0:
        out = out - cC
    return out


def _stacks(series_or_avg: AveragedSystem):
    return (series_or_avg.A_per.samples, series_or_avg.D_per.samples,
            series_or_avg.C_per.samples)


def _partial_sums(series: ExpansionSeries) -> list[np.ndarray]:
    G = series.grid_size
    S = [np.broadcast_to(series.constants[0], (G,) + series.constants[0].shape)]
    for k in range(1, series.order + 1):
        S.append(series.constants[k][None] + series.periodics[k - 1].samples)
    return S


def order_bracket(series: ExpansionSeries, k: int) -> PeriodicMatrix:
    """Full order-k bracket of a built series (``k <= order``)."""
    if not 0 <= k <= series.order:
        raise ValueError(f"k must be in [0, {series.order}]")
    cA, cD, cC = _stacks(series.source)
    return PeriodicMatrix(_bracket(_partial_sums(series), k, cA, cD, cC), symmetric=True)


def build_series(avg: AveragedSystem, N: int) -> ExpansionSeries:
    """Constant parts ``R_0..R_N`` and zero-mean periodic parts ``Pi_1..Pi_{N+1}``.

    Raises
    ------
    InfeasiblePrecondition
        The averaged Riccati equation has no stabilizing positive definite
        solution.
    """
    if not 0 <= N <= MAX_ORDER:
        raise PreconditionError(f"order must be in [0, {MAX_ORDER}]")
    feas = is_feasible(*averaged_are_input(avg))
    if not feas:
        raise InfeasiblePrecondition(f"averaged Riccati equation infeasible: {feas.reason}")
    cert = feas.certificate
    R0 = cert.R
    Acl = cert.closed_loop
    cA, cD, cC = _stacks(avg)
    G = avg.grid_size

    constants = [R0]
    periodics: list[PeriodicMatrix] = []
    S = [np.broadcast_to(R0, (G,) + R0.shape)]
    for k in range(N + 1):
        if k >= 1:
            Pi_k = periodics[k - 1].samples
            S.append(Pi_k)
            known = _bracket(S, k, cA, cD, cC).mean(axis=0)
            R_k = solve_lyapunov(Acl, -0.5 * (known + known.T))
            constants.append(R_k)
            S[k] = R_k[None] + Pi_k
        B_k = PeriodicMatrix(_bracket(S, k, cA, cD, cC), symmetric=True)
        periodics.append(periodic.zero_mean_antiderivative(periodic.detrend(B_k)))
    return ExpansionSeries(N, constants, periodics, Acl, avg, cert)


def series_samples(series: ExpansionSeries, eps: float) -> PeriodicMatrix:
    """``P_N(tau)`` on the series grid."""
    out = np.broadcast_to(series.constants[0], (series.grid_size,)
                          + series.constants[0].shape).copy()
    for k in range(1, series.order + 1):
        out += eps**k * (series.constants[k][None] + series.periodics[k - 1].samples)
    out += eps ** (series.order + 1) * series.periodics[series.order].samples
    return PeriodicMatrix(out, symmetric=True)


def eval_series(series: ExpansionSeries, eps: float, t,
                coordinates: Coordinates | str = Coordinates.FAST_P) -> np.ndarray:
    """Evaluate the truncated series at original time ``t`` (``tau = t/eps``).

    ``fast_P`` returns ``P_N(tau)``; ``original_R`` returns
    ``Psi(tau) P_N(tau) Psi(tau)^T``.
    """
    if not eps > 0:
        raise PreconditionError("eps must be positive")
    coordinates = Coordinates(coordinates)
    tau = np.asarray(t, dtype=float) / eps
    P = np.asarray(series.constants[0], dtype=float)
    for k in range(1, series.order + 1):
        P = P + eps**k * (series.constants[k] + periodic.eval(series.periodics[k - 1], tau))
    P = P + eps ** (series.order + 1) * periodic.eval(series.periodics[series.order], tau)
    if coordinates is Coordinates.ORIGINAL_R:
        K = series.source.spec.K
        conv = series.source.convention
        if np.ndim(tau) == 0:
            Psi = psi(K, float(tau), conv)
            P = Psi @ P @ Psi.T
        else:
            Psi = np.stack([psi(K, float(s), conv) for s in tau])
            P = Psi @ P @ Psi.transpose(0, 2, 1)
    P = np.broadcast_to(P, np.shape(tau) + series.constants[0].shape)
    return 0.5 * (P + np.swapaxes(P, -1, -2))
