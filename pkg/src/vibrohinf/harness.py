"""Independent numerical checks of the asymptotic solution.

* ``reference_solution``: the periodic Riccati orbit by single shooting
  (fixed-step RK4 over one period, Newton on ``P(2 pi) - P(0)``).
* ``defect``: residual of the truncated series in the Riccati ODE.
* ``floquet``: monodromy of the closed loop over one fast period.
* ``simulate``: time-domain runs of the vibrated plant and the game
  functional ``|z|^2 + |u|^2 - gamma^2 |w|^2``.
* ``hinf_norm_sweep``: frequency-response oracle for the H-infinity norm.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import periodic
from .errors import DivergenceError, NoReferenceError, PreconditionError
from .expansion import ExpansionSeries, build_series, series_samples
from .hinf import GainPair
from .matkit import Definiteness, as_matrix, definiteness, eigenvalues
from .periodic import PeriodicMatrix
from .vibration import AveragedSystem, SystemSpec, coefficients_at

__all__ = [
    "FastTables",
    "ShootingResult",
    "VerificationReport",
    "SimulationResult",
    "SaddleCheck",
    "DEFAULT_STEPS",
    "EPSILON_SWEEP",
    "fast_tables",
    "shoot",
    "reference_solution",
    "defect",
    "floquet",
    "convergence_order",
    "certify_epsilon",
    "zero_signal",
    "bump_signal",
    "noise_signal",
    "default_horizon",
    "simulate",
    "simulate_many",
    "saddle_point_check",
    "hinf_norm_sweep",
]

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
DEFAULT_STEPS = 4096
EPSILON_SWEEP = (0.2, 0.1, 0.05, 0.025, 0.0125)
FLOQUET_MARGIN = 1e-9
BLOWUP = 1e8


# --------------------------------------------------------------------------
# fast-time integration


@dataclass(frozen=True)
class FastTables:
    """Transformed coefficients at the RK4 nodes ``tau = i h / 2``."""

    steps: int
    taus: np.ndarray
    cA: np.ndarray
    cD: np.ndarray
    cC: np.ndarray
    psi: np.ndarray

    @property
    def h(self) -> float:
        return TWO_PI / self.steps


def fast_tables(avg: AveragedSystem, steps: int = DEFAULT_STEPS) -> FastTables:
    taus = np.arange(2 * steps + 1) * (np.pi / steps)
    cA, cD, cC, psis = coefficients_at(avg.spec, taus, avg.convention, gamma=avg.gamma)
    return FastTables(steps, taus, cA, cD, cC, psis)


def _riccati_rhs(P, eps, cA, cD, cC):
    PA = P @ cA
    return eps * (-(PA + np.swapaxes(PA, -1, -2)) + P @ cD @ P - cC)


def _integrate_period(P0: np.ndarray, eps: float, tab: FastTables,
                      keep: bool = False):
    """RK4 over one period for a batch ``P0`` of shape (b, n, n)."""
    P = P0.copy()
    h = tab.h
    traj = [P.copy()] if keep else None
    for i in range(tab.steps):
        a, m, b = 2 * i, 2 * i + 1, 2 * i + 2
        k1 = _riccati_rhs(P, eps, tab.cA[a], tab.cD[a], tab.cC[a])
        k2 = _riccati_rhs(P + 0.5 * h * k1, eps, tab.cA[m], tab.cD[m], tab.cC[m])
        k3 = _riccati_rhs(P + 0.5 * h * k2, eps, tab.cA[m], tab.cD[m], tab.cC[m])
        k4 = _riccati_rhs(P + h * k3, eps, tab.cA[b], tab.cD[b], tab.cC[b])
        P = P + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if keep:
            traj.append(P.copy())
        if i % 256 == 0 and (not np.all(np.isfinite(P)) or np.abs(P).max() > BLOWUP):
            raise DivergenceError(f"Riccati integration blew up at tau = {i * h:.3f}")
    if not np.all(np.isfinite(P)) or np.abs(P).max() > BLOWUP:
        raise DivergenceError("Riccati integration blew up")
    return (P, np.stack(traj, axis=1)) if keep else P


def _vech_basis(n: int) -> list[np.ndarray]:
    basis = []
    for i in range(n):
        for j in range(i, n):
            E = np.zeros((n, n))
            E[i, j] = E[j, i] = 1.0
            basis.append(E)
    return basis


def _vech(S: np.ndarray) -> np.ndarray:
    return S[np.triu_indices(S.shape[0])]


def _unvech(v: np.ndarray, n: int) -> np.ndarray:
    S = np.zeros((n, n))
    S[np.triu_indices(n)] = v
    return S + np.triu(S, 1).T


@dataclass(frozen=True)
class ShootingResult:
    P0: np.ndarray
    orbit: PeriodicMatrix           # on the averaged-system grid
    trajectory: np.ndarray          # all RK4 nodes, shape (steps + 1, n, n)
    closure_error: float
    newton_iterations: int
    floquet_radius: float


def shoot(avg: AveragedSystem, eps: float, init=None, steps: int = DEFAULT_STEPS,
          tables: FastTables | None = None, maxiter: int = 50,
          rtol: float = 1e-11) -> ShootingResult:
    """Periodic orbit of ``dP/dtau = eps F(P, tau)`` by Newton shooting.

    Unknowns are the ``n(n+1)/2`` upper-triangular entries of ``P(0)``;
    the Jacobian of ``P(0) -> P(2 pi) - P(0)`` is formed by forward
    differences, all perturbed orbits integrated as one batch.
    """
    if not eps > 0:
        raise PreconditionError("eps must be positive")
    if steps % avg.grid_size:
        raise PreconditionError("steps must be a multiple of the grid size")
    tab = tables if tables is not None else fast_tables(avg, steps)
    n = avg.spec.n
    if init is None:
        init = build_series(avg, 0).constants[0]
    P0 = as_matrix(init, "init", square=True)
    P0 = 0.5 * (P0 + P0.T)
    basis = _vech_basis(n)
    nb = len(basis)
    res_norm = np.inf
    it = 0
    while True:
        delta = 1e-7 * (1.0 + np.linalg.norm(P0))
        batch = np.stack([P0] + [P0 + delta * E for E in basis])
        end = _integrate_period(batch, eps, tab)
        G = np.array([_vech(end[j] - batch[j]) for j in range(nb + 1)])
        res_norm = np.linalg.norm(G[0])
        if res_norm <= rtol * (1.0 + np.linalg.norm(P0)):
            break
        if it >= maxiter:
            raise NoReferenceError(
                f"shooting did not converge in {maxiter} Newton steps "
                f"(closure {res_norm:.3e})"
            )
        J = (G[1:] - G[0]).T / delta
        try:
            step = np.linalg.solve(J, -G[0])
        except np.linalg.LinAlgError as exc:
            raise NoReferenceError(f"singular shooting Jacobian: {exc}") from exc
        P0 = P0 + _unvech(step, n)
        it += 1
    _, traj = _integrate_period(P0[None], eps, tab, keep=True)
    traj = traj[0]
    traj = 0.5 * (traj + traj.transpose(0, 2, 1))
    stride = steps // avg.grid_size
    orbit = PeriodicMatrix(traj[:-1:stride], symmetric=True)
    mono = _floquet_from_nodes(traj, eps, tab)
    radius = eigenvalues(mono).spectral_radius
    return ShootingResult(P0, orbit, traj, float(np.linalg.norm(traj[-1] - traj[0])),
                          it, radius)


def reference_solution(avg: AveragedSystem, eps: float, init=None,
                       steps: int = DEFAULT_STEPS,
                       tables: FastTables | None = None) -> PeriodicMatrix:
    """Stabilizing periodic Riccati orbit (transformed coordinates) on the grid.

    The periodic Riccati equation has several periodic orbits when ``D`` is
    indefinite, and Newton converges to whichever is nearest. If the orbit
    reached from ``init`` is not stabilizing, shooting is restarted once
    from the averaged solution ``R_0``.

    Raises
    ------
    NoReferenceError
        Newton did not converge, or no stabilizing orbit was found.
    """
    tab = tables if tables is not None else fast_tables(avg, steps)
    res = shoot(avg, eps, init, steps, tab)
    if not res.floquet_radius < 1.0 - FLOQUET_MARGIN and init is not None:
        logger.info("orbit from init has Floquet radius %.6f; restarting from R_0",
                    res.floquet_radius)
        res = shoot(avg, eps, None, steps, tab)
    if not res.floquet_radius < 1.0 - FLOQUET_MARGIN:
        raise NoReferenceError(
            f"periodic orbit is not stabilizing (Floquet radius {res.floquet_radius:.6f})"
        )
    return res.orbit


# --------------------------------------------------------------------------
# defect and Floquet


def defect(series: ExpansionSeries, eps: float) -> float:
    """Sup over the grid of ``|dP_N/dtau - eps F(P_N, tau)|`` (spectral norm)."""
    PN = series_samples(series, eps)
    dP = periodic.derivative(PN).samples
    src = series.source
    F = _riccati_rhs(PN.samples, eps, src.A_per.samples, src.D_per.samples,
                     src.C_per.samples)
    return float(np.max(np.linalg.norm(dP - F, 2, axis=(1, 2))))


def _rk4_linear(coef: Callable[[int], np.ndarray], n: int, steps: int, h: float):
    """Fundamental matrix of ``x' = M(tau) x``; ``coef(i)`` is M at node i h/2."""
    X = np.eye(n)
    for i in range(steps):
        Ma, Mm, Mb = coef(2 * i), coef(2 * i + 1), coef(2 * i + 2)
        k1 = Ma @ X
        k2 = Mm @ (X + 0.5 * h * k1)
        k3 = Mm @ (X + 0.5 * h * k2)
        k4 = Mb @ (X + h * k3)
        X = X + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(X)) or np.abs(X).max() > BLOWUP:
            raise DivergenceError("closed-loop integration blew up")
    return X


def _floquet_from_nodes(traj: np.ndarray, eps: float, tab: FastTables) -> np.ndarray:
    # RK4 with step 2h reusing the shooting nodes as half-steps
    M = eps * (tab.cA[::2] - tab.cD[::2] @ traj)
    return _rk4_linear(lambda i: M[i], traj.shape[1], tab.steps // 2, 2 * tab.h)


def floquet(spec: SystemSpec, P_of_tau: PeriodicMatrix, eps: float,
            avg: AveragedSystem | None = None, form: str = "transformed",
            steps: int = 2048, convention="paper") -> tuple[np.ndarray, float]:
    """Closed-loop monodromy over one fast period and its spectral radius.

    ``P_of_tau`` is the Riccati solution in transformed coordinates.
    ``form="transformed"`` integrates ``x' = eps (cA - cD P) x``;
    ``form="original"`` integrates ``x' = [eps A + sin(tau) K - eps D R] x``
    with ``R = Psi P Psi^T``. Both give similar monodromies.
    """
    if not eps > 0:
        raise PreconditionError("eps must be positive")
    if avg is not None:
        convention = avg.convention
        gamma = avg.gamma
    else:
        gamma = spec.gamma
    taus = np.arange(2 * steps + 1) * (np.pi / steps)
    P = periodic.eval(P_of_tau, taus)
    cA, cD, _, psis = coefficients_at(spec, taus, convention, gamma=gamma)
    h = TWO_PI / steps
    if form == "transformed":
        M = eps * (cA - cD @ P)
    elif form == "original":
        R = psis @ P @ psis.transpose(0, 2, 1)
        M = (eps * spec.A)[None] + np.sin(taus)[:, None, None] * spec.K[None] \
            - eps * spec.D(gamma)[None] @ R
    else:
        raise ValueError(f"unknown form {form!r}")
    mono = _rk4_linear(lambda i: M[i], spec.n, steps, h)
    return mono, eigenvalues(mono).spectral_radius


# --------------------------------------------------------------------------
# convergence study


@dataclass
class VerificationReport:
    order: int
    epsilon_grid: list[float]
    defect_sup: list[float]
    series_error_sup: list[float]
    defect_orders: list[float]
    error_orders: list[float]
    estimated_orders: tuple[float, float]   # (defect, error), least-squares slopes
    floquet_radius: list[float]             # closed loop with the series
    reference_floquet_radius: list[float]   # closed loop with the shooting orbit
    positive_definite_ok: list[bool]
    epsilon_star: float | None
    exact_regime: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def certified(self) -> bool:
        if self.exact_regime:
            return True
        return self.estimated_orders[1] > self.order + 0.5


def _slopes(eps: Sequence[float], vals: Sequence[float]) -> tuple[list[float], float]:
    le, lv = np.log2(eps), np.log2(vals)
    pair = [float((lv[i] - lv[i + 1]) / (le[i] - le[i + 1])) for i in range(len(eps) - 1)]
    fit = float(np.polyfit(le, lv, 1)[0])
    return pair, fit


def _dyadic(eps_list: Sequence[float]) -> bool:
    return all(np.isclose(a / b, 2.0, rtol=1e-9) for a, b in zip(eps_list, eps_list[1:]))


def convergence_order(avg: AveragedSystem, eps_list: Sequence[float] = (0.1, 0.05, 0.025),
                      N: int = 1, steps: int = DEFAULT_STEPS,
                      tables: FastTables | None = None,
                      series: ExpansionSeries | None = None,
                      floor: float = 1e-10,
                      references: dict | None = None) -> VerificationReport:
    """Error and defect of the order-N series against the shooting orbit.

    ``references`` is an optional ``{eps: ShootingResult}`` cache, filled
    in place, so several orders can share the shooting solves.
    """
    eps_list = [float(e) for e in eps_list]
    if len(eps_list) < 3 or not _dyadic(eps_list):
        raise PreconditionError("eps_list must hold >= 3 dyadically decreasing values")
    tab = tables if tables is not None else fast_tables(avg, steps)
    ser = series if series is not None else build_series(avg, N)
    if ser.order != N:
        raise PreconditionError("series order does not match N")
    defects, errors, radii, ref_radii, pd_ok = [], [], [], [], []
    for eps in eps_list:
        PN = series_samples(ser, eps)
        if references is not None and eps in references:
            ref = references[eps]
        else:
            ref = shoot(avg, eps, init=PN.samples[0], steps=steps, tables=tab)
            if references is not None:
                references[eps] = ref
        errors.append(float(np.max(np.linalg.norm(ref.orbit.samples - PN.samples, 2,
                                                  axis=(1, 2)))))
        defects.append(defect(ser, eps))
        _, rad = floquet(avg.spec, PN, eps, avg=avg, steps=steps // 2)
        radii.append(rad)
        ref_radii.append(ref.floquet_radius)
        ok = all(definiteness(S) is Definiteness.POSITIVE_DEFINITE for S in PN.samples)
        ok = ok and all(definiteness(S) is Definiteness.POSITIVE_DEFINITE
                        for S in ref.orbit.samples)
        pd_ok.append(ok)
        logger.info("eps=%g N=%d error=%.3e defect=%.3e floquet=%.6f",
                    eps, N, errors[-1], defects[-1], rad)
    notes = []
    exact = max(errors) <= floor and max(defects) <= floor
    if exact:
        notes.append("exact regime: errors at numerical floor, orders not meaningful")
        d_pair, e_pair = [0.0] * (len(eps_list) - 1), [0.0] * (len(eps_list) - 1)
        d_fit = e_fit = 0.0
    else:
        d_pair, d_fit = _slopes(eps_list, defects)
        e_pair, e_fit = _slopes(eps_list, errors)
    passing = [e for e, r, p in zip(eps_list, radii, pd_ok) if r < 1 - FLOQUET_MARGIN and p]
    return VerificationReport(
        order=N,
        epsilon_grid=eps_list,
        defect_sup=defects,
        series_error_sup=errors,
        defect_orders=d_pair,
        error_orders=e_pair,
        estimated_orders=(d_fit, e_fit),
        floquet_radius=radii,
        reference_floquet_radius=ref_radii,
        positive_definite_ok=pd_ok,
        epsilon_star=max(passing) if passing else None,
        exact_regime=exact,
        notes=notes,
    )


@dataclass(frozen=True)
class EpsilonCertificate:
    epsilon: float
    floquet_radius: float
    positive_definite: bool
    reference_converged: bool

    @property
    def ok(self) -> bool:
        return (self.reference_converged and self.positive_definite
                and self.floquet_radius < 1.0 - FLOQUET_MARGIN)


def certify_epsilon(avg: AveragedSystem, N: int = 2,
                    eps_grid: Sequence[float] = EPSILON_SWEEP,
                    steps: int = DEFAULT_STEPS,
                    tables: FastTables | None = None,
                    references: dict | None = None):
    """Per-eps stability/definiteness certificates and the largest passing eps.

    Returns ``(epsilon_star, certificates)``; ``epsilon_star`` is ``None`` if
    no eps passes. Nothing is extrapolated beyond the grid.
    """
    tab = tables if tables is not None else fast_tables(avg, steps)
    ser = build_series(avg, N)
    certs = []
    for eps in eps_grid:
        PN = series_samples(ser, eps)
        pd = all(definiteness(S) is Definiteness.POSITIVE_DEFINITE for S in PN.samples)
        try:
            _, rad = floquet(avg.spec, PN, eps, avg=avg, steps=steps // 2)
        except DivergenceError:
            rad = np.inf
        try:
            if references is not None and eps in references:
                ref = references[eps]
            else:
                ref = shoot(avg, eps, init=PN.samples[0], steps=steps, tables=tab)
                if references is not None:
                    references[eps] = ref
            converged = ref.floquet_radius < 1.0 - FLOQUET_MARGIN
        except (NoReferenceError, DivergenceError):
            converged = False
        certs.append(EpsilonCertificate(float(eps), float(rad), pd, converged))
    passing = [c.epsilon for c in certs if c.ok]
    return (max(passing) if passing else None), certs


# --------------------------------------------------------------------------
# time-domain simulation

# A signal maps times (scalar or array) to values of shape t.shape + (q,).
Signal = Callable[[np.ndarray], np.ndarray]


def zero_signal(q: int) -> Signal:
    return lambda t: np.zeros(np.shape(t) + (q,))


def bump_signal(direction, amplitude: float = 1.0, center: float = 1.0,
                width: float = 0.25) -> Signal:
    """Gaussian pulse ``amplitude * exp(-((t - center)/width)^2 / 2) * direction``."""
    d = np.atleast_1d(np.asarray(direction, dtype=float))

    def w(t):
        t = np.asarray(t, dtype=float)
        return (amplitude * np.exp(-0.5 * ((t - center) / width) ** 2))[..., None] * d

    return w


def noise_signal(seed: int, q: int, duration: float = 20.0, bandwidth: float = 2.0,
                 harmonics: int = 16) -> Signal:
    """Seeded band-limited noise under a ``sin^2`` window on ``[0, duration]``."""
    rng = np.random.default_rng(seed)
    freqs = rng.uniform(0.0, bandwidth, size=(q, harmonics))
    phases = rng.uniform(0.0, TWO_PI, size=(q, harmonics))
    amps = rng.normal(size=(q, harmonics)) / np.sqrt(harmonics)

    def w(t):
        t = np.asarray(t, dtype=float)
        tt = t[..., None, None]
        vals = np.sum(amps * np.sin(freqs * tt + phases), axis=-1)
        win = np.where((t >= 0.0) & (t <= duration), np.sin(np.pi * t / duration) ** 2, 0.0)
        return win[..., None] * vals

    return w


@dataclass
class SimulationResult:
    time_grid: np.ndarray
    state_trajectory: np.ndarray
    z_trajectory: np.ndarray
    u_trajectory: np.ndarray
    w_trajectory: np.ndarray
    J_value: float
    gain_estimate: float
    z_energy: float
    w_energy: float
    u_energy: float


def default_horizon(closed_loop: np.ndarray, time_constants: float = 40.0) -> float:
    """``time_constants / |max Re lambda|`` of a Hurwitz closed loop."""
    rate = -eigenvalues(closed_loop).max_real_part
    if rate <= 0:
        raise PreconditionError("closed loop is not Hurwitz")
    return time_constants / rate


def simulate_many(spec: SystemSpec, gains: GainPair | Callable[[float], GainPair] | None,
                  signals: Sequence[Signal], horizon: float, step: float, x0=None,
                  worst_case_after: float | None = None) -> list[SimulationResult]:
    """RK4 runs of the vibrated plant under ``u = -Ku x``, one per signal.

    The disturbance is ``w_signal(t)``; if ``worst_case_after`` is set, the
    saddle feedback ``Kw x`` is added from that time on. ``J_value`` is the
    trapezoidal integral of ``|z|^2 + |u|^2 - gamma^2 |w|^2``. All signals
    are integrated together as one batch.
    """
    if not (horizon > 0 and step > 0):
        raise PreconditionError("horizon and step must be positive")
    n, p, q = spec.n, spec.p, spec.q
    nb = len(signals)
    steps = int(round(horizon / step))
    h = horizon / steps
    A, B1, B2, K, eps = spec.A, spec.B1, spec.B2, spec.K, spec.epsilon
    vibrated = bool(np.any(K))
    if gains is None:
        fixed = GainPair(np.zeros((p, n)), np.zeros((q, n)), spec.gamma)
    elif isinstance(gains, GainPair):
        fixed = gains
    else:
        fixed = None

    half = np.arange(2 * steps + 1) * (0.5 * h)
    W_open = np.stack([np.asarray(s(half), dtype=float).reshape(2 * steps + 1, q)
                       for s in signals])
    engaged = (np.zeros_like(half, dtype=bool) if worst_case_after is None
               else half >= worst_case_after)

    def inputs(j, X):
        g = fixed if fixed is not None else gains(half[j])
        U = -X @ g.Ku.T
        Wv = W_open[:, j]
        if engaged[j]:
            Wv = Wv + X @ g.Kw.T
        return U, Wv

    def rhs(j, X):
        U, Wv = inputs(j, X)
        dX = X @ A.T + U @ B1.T + Wv @ B2.T
        if vibrated:
            dX = dX + (np.sin(half[j] / eps) / eps) * (X @ K.T)
        return dX

    Xs = np.zeros((steps + 1, nb, n))
    if x0 is not None:
        Xs[0] = np.asarray(x0, dtype=float)
    X = Xs[0]
    for i in range(steps):
        a = 2 * i
        k1 = rhs(a, X)
        k2 = rhs(a + 1, X + 0.5 * h * k1)
        k3 = rhs(a + 1, X + 0.5 * h * k2)
        k4 = rhs(a + 2, X + h * k3)
        X = X + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        Xs[i + 1] = X
        if i % 512 == 0 and (not np.all(np.isfinite(X)) or np.abs(X).max() > BLOWUP):
            raise DivergenceError(f"simulation blew up at t = {(i + 1) * h:.3f}")
    if not np.all(np.isfinite(Xs)) or np.abs(Xs).max() > BLOWUP:
        raise DivergenceError("simulation blew up")
    ts = half[::2]
    Us = np.zeros((steps + 1, nb, p))
    Ws = np.zeros((steps + 1, nb, q))
    for i in range(steps + 1):
        Us[i], Ws[i] = inputs(2 * i, Xs[i])
    Zs = Xs @ spec.L.T
    results = []
    for b in range(nb):
        X_b, Z_b, U_b, W_b = Xs[:, b], Zs[:, b], Us[:, b], Ws[:, b]
        z_e = float(np.trapezoid(np.sum(Z_b**2, axis=1), ts))
        u_e = float(np.trapezoid(np.sum(U_b**2, axis=1), ts))
        w_e = float(np.trapezoid(np.sum(W_b**2, axis=1), ts))
        J = z_e + u_e - spec.gamma**2 * w_e
        gain = float(np.sqrt(z_e / w_e)) if w_e > 0 else 0.0
        results.append(SimulationResult(ts, X_b, Z_b, U_b, W_b, J, gain, z_e, w_e, u_e))
    return results


def simulate(spec: SystemSpec, gains: GainPair | Callable[[float], GainPair] | None,
             w_signal: Signal, horizon: float, step: float, x0=None,
             worst_case_after: float | None = None) -> SimulationResult:
    """Single-signal form of :func:`simulate_many`."""
    return simulate_many(spec, gains, [w_signal], horizon, step, x0, worst_case_after)[0]


@dataclass(frozen=True)
class SaddleCheck:
    handover_time: float
    J_after_handover: float
    storage_at_handover: float
    storage_final: float
    saddle_gap: float

    @property
    def energy_scale(self) -> float:
        return self.storage_at_handover


def saddle_point_check(spec: SystemSpec, R, pulse: Signal, handover_time: float,
                       horizon: float, step: float) -> SaddleCheck:
    """Play ``(u*, w*)`` from the state a disturbance pulse leaves behind.

    Over ``[handover, T]`` with both saddle feedbacks engaged, the game
    functional equals ``x(h)^T R x(h) - x(T)^T R x(T)``: the game restarted
    at the handover state has value zero once its initial storage is
    subtracted. ``saddle_gap`` is ``J_after_handover - storage_at_handover``;
    its only exact contribution is the truncation term ``-x(T)^T R x(T)``.
    """
    R = np.asarray(R, dtype=float)
    gains = GainPair(spec.B1.T @ R, (spec.B2.T @ R) / spec.gamma**2, spec.gamma)

    def cut_pulse(t):
        t = np.asarray(t, dtype=float)
        return np.where((t < handover_time)[..., None], pulse(t), 0.0)

    sim = simulate(spec, gains, cut_pulse, horizon, step, worst_case_after=handover_time)
    ts = sim.time_grid
    i0 = int(np.searchsorted(ts, handover_time - 1e-12))
    integrand = (np.sum(sim.z_trajectory**2, axis=1) + np.sum(sim.u_trajectory**2, axis=1)
                 - spec.gamma**2 * np.sum(sim.w_trajectory**2, axis=1))
    J_after = float(np.trapezoid(integrand[i0:], ts[i0:]))
    x_h, x_T = sim.state_trajectory[i0], sim.state_trajectory[-1]
    V_h, V_T = float(x_h @ R @ x_h), float(x_T @ R @ x_T)
    return SaddleCheck(float(ts[i0]), J_after, V_h, V_T, J_after - V_h)

# --------------------------------------------------------------------------
# frequency-domain oracle


def hinf_norm_sweep(A, B, L, points: int = 2000, w_min: float = 1e-4,
                    w_max: float = 1e4) -> tuple[float, float]:
    """``sup_w sigma_max(L (i w I - A)^{-1} B)`` for Hurwitz ``A``.

    A logarithmic sweep (plus ``w = 0``) locates the peak, which is then
    refined by a bounded scalar search between the neighbouring samples.
    Returns ``(peak, w_peak)``.
    """
    A = as_matrix(A, "A", square=True)
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    L = as_matrix(L, "L")
    n = A.shape[0]

    def gain(w: float) -> float:
        G = L @ np.linalg.solve(1j * w * np.eye(n) - A, B)
        return float(np.linalg.svd(G, compute_uv=False)[0])

    omegas = np.concatenate([[0.0], np.logspace(np.log10(w_min), np.log10(w_max), points)])
    vals = np.array([gain(w) for w in omegas])
    i = int(np.argmax(vals))
    best, w_best = vals[i], omegas[i]
    lo, hi = omegas[max(i - 1, 0)], omegas[min(i + 1, len(omegas) - 1)]
    if hi > lo:
        opt = minimize_scalar(lambda w: -gain(w), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-10 * max(1.0, hi)})
        if -opt.fun > best:
            best, w_best = -opt.fun, float(opt.x)
    return float(best), float(w_best)
