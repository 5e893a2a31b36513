import numpy as np
import pytest

from vibrohinf.errors import NoReferenceError, PreconditionError
from vibrohinf.expansion import build_series, series_samples
from vibrohinf.harness import (
    _integrate_period,
    bump_signal,
    convergence_order,
    default_horizon,
    defect,
    fast_tables,
    floquet,
    noise_signal,
    reference_solution,
    saddle_point_check,
    shoot,
    simulate,
    simulate_many,
    zero_signal,
)
from vibrohinf.hinf import controller_gains, example_plant, gamma_star
from vibrohinf.matkit import Definiteness, definiteness, mat_exp
from vibrohinf.periodic import PeriodicMatrix
from vibrohinf.riccati import is_feasible
from vibrohinf.vibration import SystemSpec, averaged_are_input, transform_system


@pytest.fixture(scope="module")
def k0_avg():
    return transform_system(example_plant(0.0, 5.0), 64)


@pytest.fixture(scope="module")
def warm_ref(example_avg, example_tables, reference_cache):
    """Shooting orbit at eps = 0.05 from the order-3 warm start."""
    ser = build_series(example_avg, 3)
    init = series_samples(ser, 0.05).samples[0]
    if 0.05 not in reference_cache:
        reference_cache[0.05] = shoot(example_avg, 0.05, init=init, tables=example_tables)
    return ser, reference_cache[0.05]


# -- shooting reference ----------------------------------------------------------

def test_reference_time_invariant(k0_avg):
    R0 = build_series(k0_avg, 0).constants[0]
    ref = reference_solution(k0_avg, 0.1, steps=1024)
    assert np.abs(ref.samples - R0).max() <= 1e-10


def test_reference_matches_series(warm_ref):
    ser, ref = warm_ref
    err = np.abs(ref.orbit.samples - series_samples(ser, 0.05).samples).max()
    assert err <= 50 * 0.05**4
    assert ref.floquet_radius < 1


def test_reference_self_consistent(warm_ref, example_tables):
    _, ref = warm_ref
    end = _integrate_period(ref.P0[None], 0.05, example_tables)[0]
    assert np.abs(end - ref.P0).max() <= 1e-9
    for S in ref.orbit.samples:
        assert np.array_equal(S, S.T)
        assert definiteness(S) is Definiteness.POSITIVE_DEFINITE


@pytest.mark.slow
def test_basin_far_start(example_avg, example_tables):
    # Plain Newton from 5x the warm start converges to another periodic
    # orbit that is not stabilizing; the reference rejects it and recovers.
    eps = 0.01
    ser = build_series(example_avg, 3)
    warm = series_samples(ser, eps).samples[0]
    stray = shoot(example_avg, eps, init=5 * warm, tables=example_tables)
    good = shoot(example_avg, eps, init=warm, tables=example_tables)
    assert stray.floquet_radius > 1
    assert np.abs(stray.orbit.samples - good.orbit.samples).max() > 1
    ref = reference_solution(example_avg, eps, init=5 * warm, tables=example_tables)
    assert np.abs(ref.samples - good.orbit.samples).max() <= 1e-8


def test_reference_rejects_nonconvergence(example_avg, example_tables):
    with pytest.raises(NoReferenceError):
        shoot(example_avg, 0.05, init=np.eye(2), tables=example_tables, maxiter=0)


def test_shoot_validation(example_avg):
    with pytest.raises(PreconditionError):
        shoot(example_avg, -0.1)
    with pytest.raises(PreconditionError):
        shoot(example_avg, 0.1, steps=1000)


# -- defect -------------------------------------------------------------------

def test_defect_time_invariant(k0_avg):
    ser = build_series(k0_avg, 2)
    for eps in (0.2, 0.05, 0.01):
        assert defect(ser, eps) <= 1e-10


def test_defect_slope_first_order(example_avg):
    ser = build_series(example_avg, 1)
    d = [defect(ser, e) for e in (0.1, 0.05, 0.025, 0.0125)]
    for a, b in zip(d, d[1:]):
        assert 8 * 0.7 <= a / b <= 8 * 1.4


def test_defect_improves_with_order(example_avg):
    assert defect(build_series(example_avg, 2), 0.05) < defect(build_series(example_avg, 0), 0.05)


# -- Floquet ---------------------------------------------------------------------

def test_floquet_time_invariant(k0_avg):
    ser = build_series(k0_avg, 0)
    spec, eps = k0_avg.spec, 0.1
    R0 = ser.constants[0]
    P = PeriodicMatrix.constant(R0, 64, symmetric=True)
    want = mat_exp(2 * np.pi * eps * (spec.A - spec.D() @ R0))
    for form in ("transformed", "original"):
        mono, rad = floquet(spec, P, eps, avg=k0_avg, form=form, steps=1024)
        np.testing.assert_allclose(mono, want, atol=1e-10)
        assert rad < 1


def test_floquet_example_forms_agree(example_avg):
    eps = 0.05
    P = series_samples(build_series(example_avg, 2), eps)
    m1, r1 = floquet(example_avg.spec, P, eps, avg=example_avg)
    m2, r2 = floquet(example_avg.spec, P, eps, avg=example_avg, form="original")
    assert r1 < 1 and r2 < 1
    # Similar monodromies: Psi(2 pi) = Psi(0) = I, so the matrices coincide.
    np.testing.assert_allclose(m1, m2, atol=1e-8)


def test_floquet_unstable_fixture():
    spec = SystemSpec(A=[[0.1, 1.0], [0.0, -1.0]], B1=np.eye(2), B2=[[0.0], [1.0]],
                      L=np.eye(2), gamma=2.0)
    P = PeriodicMatrix.constant(np.zeros((2, 2)), 32, symmetric=True)
    mono, rad = floquet(spec, P, 0.1, steps=512)
    assert rad > 1
    assert rad == pytest.approx(np.exp(2 * np.pi * 0.1 * 0.1), rel=1e-10)


def test_floquet_bad_form(example_avg):
    P = PeriodicMatrix.constant(np.eye(2), 32, symmetric=True)
    with pytest.raises(ValueError):
        floquet(example_avg.spec, P, 0.1, avg=example_avg, form="sideways")


# -- convergence report -------------------------------------------------------------

def test_convergence_time_invariant(k0_avg):
    rep = convergence_order(k0_avg, (0.1, 0.05, 0.025), N=1, steps=512)
    assert rep.exact_regime
    assert any("exact regime" in n for n in rep.notes)
    assert all(np.isfinite(rep.estimated_orders))
    assert rep.epsilon_star == 0.1


def test_convergence_requires_dyadic(example_avg):
    with pytest.raises(PreconditionError):
        convergence_order(example_avg, (0.1, 0.07, 0.02), N=1)
    with pytest.raises(PreconditionError):
        convergence_order(example_avg, (0.1, 0.05), N=1)


# -- simulation and the game functional -----------------------------------------------

def test_zero_disturbance_gives_zero():
    spec = example_plant(0.0, 5.0)
    sim = simulate(spec, None, zero_signal(spec.q), 5.0, 0.05)
    assert np.abs(sim.state_trajectory).max() == 0.0
    assert sim.J_value == 0.0
    n = len(sim.time_grid)
    assert all(len(a) == n for a in (sim.state_trajectory, sim.z_trajectory,
                                     sim.u_trajectory, sim.w_trajectory))


def test_noise_signal_is_seeded_and_windowed():
    a, b = noise_signal(3, 2), noise_signal(3, 2)
    t = np.linspace(-1, 25, 101)
    np.testing.assert_array_equal(a(t), b(t))
    assert np.all(a(np.array([-0.5, 20.5])) == 0.0)
    assert not np.array_equal(a(t), noise_signal(4, 2)(t))


def test_saddle_value_scalar(scalar_spec):
    R = is_feasible(*averaged_are_input(transform_system(scalar_spec, 16))).certificate.R
    chk = saddle_point_check(scalar_spec, R, bump_signal([1.0], 1.0, 1.0, 0.25), 2.0,
                             40.0, 0.01)
    assert chk.energy_scale > 0
    assert abs(chk.saddle_gap) <= 1e-3 * chk.energy_scale


@pytest.fixture(scope="module")
def k0_game():
    spec0 = example_plant(0.0, 3.8)
    avg = transform_system(spec0, 16)
    R = build_series(avg, 0).constants[0]
    return spec0, R, controller_gains(R, spec0), default_horizon(avg.A_bar - avg.D_bar @ R)


def test_gain_bound_at_3_8(k0_game):
    spec, R, gains, horizon = k0_game
    runs = simulate_many(spec, gains, [noise_signal(s, 1) for s in range(20)], horizon, 0.05)
    for sim in runs:
        assert sim.J_value <= 1e-6
        assert sim.gain_estimate <= 3.8


def test_step_halving_game_value(k0_game):
    spec, R, gains, _ = k0_game
    w = noise_signal(7, 1)
    a = simulate(spec, gains, w, 300.0, 0.05).J_value
    b = simulate(spec, gains, w, 300.0, 0.025).J_value
    assert abs(a - b) <= 0.01 * abs(b)


def test_step_halving_series_error(warm_ref, example_avg):
    ser, ref = warm_ref
    PN = series_samples(ser, 0.05).samples
    coarse = shoot(example_avg, 0.05, init=ref.P0, steps=2048)
    e_fine = np.abs(ref.orbit.samples - PN).max()
    e_coarse = np.abs(coarse.orbit.samples - PN).max()
    assert abs(e_fine - e_coarse) <= 0.01 * e_fine


def test_default_horizon():
    assert default_horizon(np.diag([-0.5, -2.0])) == pytest.approx(80.0)
    with pytest.raises(PreconditionError):
        default_horizon(np.diag([0.1, -1.0]))


def test_simulate_validation():
    spec = example_plant(0.0, 5.0)
    with pytest.raises(PreconditionError):
        simulate(spec, None, zero_signal(1), 0.0, 0.1)


def test_vibrated_simulation_runs(example_avg):
    spec = example_avg.spec.replace(epsilon=0.05)
    ser = build_series(example_avg, 1)
    from vibrohinf.expansion import eval_series

    def gains(t):
        return controller_gains(eval_series(ser, 0.05, t, "original_R"), spec, check=False)

    sim = simulate(spec, gains, bump_signal([1.0], 1.0, 1.0, 0.25), 8.0, 0.05 * 2 * np.pi / 64)
    assert np.isfinite(sim.J_value)
    assert sim.gain_estimate <= spec.gamma + 0.01


# -- order invariants ----------------------------------------------------------------

@pytest.fixture(scope="module")
def reports(example_avg, example_tables, reference_cache):
    return {N: convergence_order(example_avg, (0.1, 0.05, 0.025), N, tables=example_tables,
                                 references=reference_cache) for N in (0, 1, 2)}


@pytest.mark.parametrize("N", [
    pytest.param(0, marks=pytest.mark.xfail(strict=True, reason=(
        "odd-order constants vanish for even-in-tau coefficients, so the error of an "
        "even-order series drops one extra order (measured 2.0, not 1 +- 0.5)"))),
    1,
    pytest.param(2, marks=pytest.mark.xfail(strict=True, reason=(
        "even-order superconvergence: measured error order about 4, not 3 +- 0.5"))),
])
def test_stated_order_invariant(reports, N):
    rep = reports[N]
    for d, e in zip(rep.defect_orders, rep.error_orders):
        assert abs(d - (N + 2)) <= 0.5
        assert abs(e - (N + 1)) <= 0.5
        assert abs((d - e) - 1) <= 0.5


@pytest.mark.parametrize("N", [0, 1, 2])
def test_observed_order_structure(reports, N):
    rep = reports[N]
    expected_error = N + 2 if N % 2 == 0 else N + 1
    for d, e in zip(rep.defect_orders, rep.error_orders):
        assert abs(d - (N + 2)) <= 0.5
        assert abs(e - expected_error) <= 0.5
    assert all(rep.positive_definite_ok)
    assert rep.certified
