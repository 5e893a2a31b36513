"""Periodic matrix functions sampled on a uniform grid.

A :class:`PeriodicMatrix` stores ``F(tau_j)`` at ``tau_j = j * period / N``.
Averages use the periodic trapezoidal rule (the plain sample mean), which
is spectrally accurate for smooth integrands; interpolation, derivatives
and antiderivatives go through the discrete Fourier transform.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import AsymmetryError, DimensionError, NonPeriodicAntiderivative
from .matkit import SYMMETRY_RTOL, as_matrix

__all__ = [
    "DEFAULT_GRID",
    "MIN_GRID",
    "PeriodicMatrix",
    "average",
    "detrend",
    "zero_mean_antiderivative",
    "derivative",
    "eval",
]

TWO_PI = 2.0 * np.pi
DEFAULT_GRID = 128
MIN_GRID = 16


@dataclass(frozen=True)
class PeriodicMatrix:
    """Uniform samples of a periodic matrix-valued function.

    Parameters
    ----------
    samples : ndarray, shape (grid_size, rows, cols)
    period : float
    symmetric : bool
        When set, every sample must be symmetric; samples are symmetrized
        on construction.
    """

    samples: np.ndarray
    period: float = TWO_PI
    symmetric: bool = False

    def __post_init__(self):
        s = np.array(self.samples, dtype=float)
        if s.ndim == 1:
            s = s[:, None, None]
        if s.ndim != 3:
            raise DimensionError(f"samples must be (grid, rows, cols), got {s.shape}")
        N = s.shape[0]
        if N < MIN_GRID or N % 2:
            raise DimensionError(f"grid_size must be even and >= {MIN_GRID}, got {N}")
        if not self.period > 0:
            raise ValueError("period must be positive")
        if not np.all(np.isfinite(s)):
            raise ValueError("samples contain non-finite values")
        if self.symmetric:
            if s.shape[1] != s.shape[2]:
                raise DimensionError("symmetric flag needs square samples")
            skew = np.abs(s - s.transpose(0, 2, 1)).max(initial=0.0)
            if skew > SYMMETRY_RTOL * max(np.abs(s).max(initial=0.0), 1e-300):
                raise AsymmetryError("samples flagged symmetric are not")
            s = 0.5 * (s + s.transpose(0, 2, 1))
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def grid_size(self) -> int:
        return self.samples.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.samples.shape[1:]

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.grid_size) * (self.period / self.grid_size)

    @classmethod
    def from_function(
        cls,
        func: Callable[[float], np.ndarray],
        grid_size: int = DEFAULT_GRID,
        period: float = TWO_PI,
        symmetric: bool = False,
    ) -> "PeriodicMatrix":
        taus = np.arange(grid_size) * (period / grid_size)
        samples = np.stack([np.atleast_2d(np.asarray(func(t), dtype=float)) for t in taus])
        return cls(samples, period, symmetric)

    @classmethod
    def constant(cls, E, grid_size: int = DEFAULT_GRID, period: float = TWO_PI,
                 symmetric: bool = False) -> "PeriodicMatrix":
        E = as_matrix(E)
        return cls(np.broadcast_to(E, (grid_size,) + E.shape).copy(), period, symmetric)

    def with_samples(self, samples: np.ndarray, symmetric: bool | None = None) -> "PeriodicMatrix":
        sym = self.symmetric if symmetric is None else symmetric
        return PeriodicMatrix(samples, self.period, sym)

    def __call__(self, tau):
        return eval(self, tau)


def average(F: PeriodicMatrix) -> np.ndarray:
    """Period mean of ``F``; exact for constant samples."""
    s = F.samples
    avg = s[0].copy() if np.all(s == s[0]) else s.mean(axis=0)
    if F.symmetric:
        avg = 0.5 * (avg + avg.T)
    return avg


def detrend(F: PeriodicMatrix) -> PeriodicMatrix:
    """``F`` minus its period mean."""
    return F.with_samples(F.samples - average(F)[None])


def _harmonics(F: PeriodicMatrix) -> tuple[np.ndarray, np.ndarray]:
    N = F.grid_size
    coeffs = np.fft.rfft(F.samples, axis=0)
    wavenumbers = np.arange(coeffs.shape[0]) * (TWO_PI / F.period)
    # The Nyquist mode has no well-defined derivative on an even grid.
    coeffs[N // 2] = 0.0
    return coeffs, wavenumbers


def derivative(F: PeriodicMatrix) -> PeriodicMatrix:
    """Spectral derivative ``dF/dtau`` on the grid."""
    coeffs, w = _harmonics(F)
    d = np.fft.irfft(coeffs * (1j * w)[:, None, None], n=F.grid_size, axis=0)
    return F.with_samples(d)


def zero_mean_antiderivative(F: PeriodicMatrix, rtol: float = 1e-10) -> PeriodicMatrix:
    """Periodic antiderivative of a zero-mean ``F`` with zero mean itself."""
    mean = average(F)
    scale = np.abs(F.samples).max(initial=0.0)
    if np.abs(mean).max(initial=0.0) > rtol * max(scale, 1e-300):
        raise NonPeriodicAntiderivative(
            "input has nonzero mean; its antiderivative is not periodic"
        )
    coeffs, w = _harmonics(F)
    w = w.copy()
    coeffs[0] = 0.0
    w[0] = 1.0
    G = np.fft.irfft(coeffs / (1j * w)[:, None, None], n=F.grid_size, axis=0)
    return F.with_samples(G)


def eval(F: PeriodicMatrix, tau):
    """Trigonometric interpolation of ``F`` at ``tau`` (scalar or 1-D array).

    Returns a single matrix for scalar ``tau`` and a stack otherwise.
    """
    N = F.grid_size
    taus = np.atleast_1d(np.asarray(tau, dtype=float)) % F.period
    coeffs = np.fft.rfft(F.samples, axis=0) / N
    m = np.arange(coeffs.shape[0])
    weights = np.full(m.shape, 2.0)
    weights[0] = 1.0
    weights[-1] = 1.0  # Nyquist coefficient is real: contributes c cos(N tau / 2)
    phase = np.exp(1j * np.outer(taus, m) * (TWO_PI / F.period))
    out = np.einsum("tm,mij->tij", phase * weights, coeffs).real
    if F.symmetric:
        out = 0.5 * (out + out.transpose(0, 2, 1))
    if np.ndim(tau) == 0:
        return out[0]
    return out
