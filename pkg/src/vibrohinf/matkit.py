"""Dense real linear algebra for small matrices.

Everything here operates on ``float64`` numpy arrays of dimension at most
:data:`MAX_DIM`. The functions are pure.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import AsymmetryError, DimensionError, NoUniqueSolution, NumericalFailure

__all__ = [
    "MAX_DIM",
    "HURWITZ_MARGIN",
    "Definiteness",
    "SpectrumReport",
    "as_matrix",
    "symmetrize",
    "mat_exp",
    "eigenvalues",
    "is_hurwitz",
    "solve_sylvester",
    "definiteness",
]

MAX_DIM = 32
HURWITZ_MARGIN = 1e-7
SYMMETRY_RTOL = 1e-9

# Pade coefficients and backward-error thresholds (Higham 2005).
_PADE_THETA = {
    3: 1.495585217958292e-2,
    5: 2.539398330063230e-1,
    7: 9.504178996162932e-1,
    9: 2.097847961257068e0,
    13: 5.371920351148152e0,
}
_PADE_B = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
         960960.0, 16380.0, 182.0, 1.0),
}


def as_matrix(M, name: str = "matrix", square: bool = False) -> np.ndarray:
    """Validate and convert ``M`` to a 2-D finite float64 array."""
    arr = np.array(M, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if square and arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    if max(arr.shape) > MAX_DIM:
        raise DimensionError(f"{name} exceeds the {MAX_DIM}x{MAX_DIM} size cap")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def symmetrize(S, name: str = "matrix", rtol: float = SYMMETRY_RTOL) -> np.ndarray:
    """Return ``(S + S^T)/2``; raise if ``S`` is asymmetric beyond ``rtol``."""
    S = as_matrix(S, name, square=True)
    scale = np.linalg.norm(S)
    if np.linalg.norm(S - S.T) > rtol * max(scale, np.finfo(float).tiny):
        raise AsymmetryError(f"{name} is not symmetric")
    return 0.5 * (S + S.T)


def _pade(M: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    b = _PADE_B[m]
    n = M.shape[0]
    ident = np.eye(n)
    M2 = M @ M
    if m == 13:
        M4 = M2 @ M2
        M6 = M4 @ M2
        U = M @ (M6 @ (b[13] * M6 + b[11] * M4 + b[9] * M2)
                 + b[7] * M6 + b[5] * M4 + b[3] * M2 + b[1] * ident)
        V = (M6 @ (b[12] * M6 + b[10] * M4 + b[8] * M2)
             + b[6] * M6 + b[4] * M4 + b[2] * M2 + b[0] * ident)
        return U, V
    powers = [ident, M2]
    for _ in range(2, (m + 1) // 2):
        powers.append(powers[-1] @ M2)
    U = M @ sum(b[2 * j + 1] * powers[j] for j in range(len(powers)))
    V = sum(b[2 * j] * powers[j] for j in range(len(powers)))
    return U, V


def mat_exp(M) -> np.ndarray:
    """Matrix exponential by scaling and squaring with diagonal Pade.

    The approximant degree is chosen from {3, 5, 7, 9, 13} by the 1-norm
    of ``M``; above the degree-13 threshold the matrix is scaled by a power
    of two and the result squared back.
    """
    M = as_matrix(M, "M", square=True)
    norm1 = np.linalg.norm(M, 1)
    if norm1 == 0.0:
        return np.eye(M.shape[0])
    for m in (3, 5, 7, 9):
        if norm1 <= _PADE_THETA[m]:
            U, V = _pade(M, m)
            return np.linalg.solve(V - U, V + U)
    s = max(0, int(np.ceil(np.log2(norm1 / _PADE_THETA[13]))))
    U, V = _pade(M / 2.0**s, 13)
    E = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        E = E @ E
    return E


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray
    max_real_part: float
    spectral_radius: float


def eigenvalues(M) -> SpectrumReport:
    """Eigenvalues of a real square matrix with summary statistics."""
    M = as_matrix(M, "M", square=True)
    try:
        lam = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"QR iteration failed: {exc}") from exc
    lam = lam.astype(complex)
    return SpectrumReport(
        eigenvalues=lam,
        max_real_part=float(np.max(lam.real)),
        spectral_radius=float(np.max(np.abs(lam))),
    )


def is_hurwitz(M, margin: float = HURWITZ_MARGIN) -> bool:
    return eigenvalues(M).max_real_part < -margin


def solve_sylvester(A, B, Q) -> np.ndarray:
    """Solve ``A X + X B + Q = 0`` through the Kronecker-product system.

    With row-major vectorization, ``vec(A X) = (A kron I) vec(X)`` and
    ``vec(X B) = (I kron B^T) vec(X)``.
    """
    A = as_matrix(A, "A", square=True)
    B = as_matrix(B, "B", square=True)
    Q = as_matrix(Q, "Q")
    n, m = A.shape[0], B.shape[0]
    if Q.shape != (n, m):
        raise DimensionError(f"Q must be {n}x{m}, got {Q.shape}")
    lam_a = np.linalg.eigvals(A)
    lam_b = np.linalg.eigvals(B)
    gap = np.min(np.abs(lam_a[:, None] + lam_b[None, :]))
    scale = np.linalg.norm(A) + np.linalg.norm(B)
    if gap <= 1e-13 * max(scale, 1.0):
        raise NoUniqueSolution("spectra of A and -B intersect")
    op = np.kron(A, np.eye(m)) + np.kron(np.eye(n), B.T)
    try:
        x = np.linalg.solve(op, -Q.reshape(-1))
    except np.linalg.LinAlgError as exc:
        raise NoUniqueSolution(str(exc)) from exc
    return x.reshape(n, m)


class Definiteness(str, Enum):
    POSITIVE_DEFINITE = "positive_definite"
    POSITIVE_SEMIDEFINITE = "positive_semidefinite"
    INDEFINITE = "indefinite"


def definiteness(S) -> Definiteness:
    """Classify a symmetric matrix with a diagonally pivoted Cholesky sweep.

    Pivots above ``1e-12 * ||S||`` are eliminated; a pivot below
    ``-tol`` proves indefiniteness; if the largest remaining pivot is
    within ``tol`` the trailing Schur complement must vanish for the
    matrix to be semidefinite.
    """
    W = symmetrize(S, "S")
    scale = np.linalg.norm(W)
    if scale == 0.0:
        return Definiteness.POSITIVE_SEMIDEFINITE
    tol = 1e-12 * scale
    while W.shape[0]:
        diag = np.diag(W)
        if np.min(diag) < -tol:
            return Definiteness.INDEFINITE
        p = int(np.argmax(diag))
        piv = diag[p]
        if piv <= tol:
            # remaining block must be numerically zero
            if np.max(np.abs(W)) <= 10 * tol:
                return Definiteness.POSITIVE_SEMIDEFINITE
            return Definiteness.INDEFINITE
        col = W[:, p].copy()
        W = W - np.outer(col, col) / piv
        W = np.delete(np.delete(W, p, axis=0), p, axis=1)
    return Definiteness.POSITIVE_DEFINITE
