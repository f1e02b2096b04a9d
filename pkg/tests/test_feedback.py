import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_physical_state
from tcdyn import MeanFieldState, RotatingFrame, SystemParams, Trajectory, integrate_ode
from tcdyn import _kernels
from tcdyn.errors import NonFiniteState, StepTooLarge, ValidationError, WindowTooShort
from tcdyn.feedback import (
    NO_FEEDBACK, FeedbackScheme, SteadyKind, Variant, detect_steady, feedback_signal,
    integrate_dde, mirror_delay, periodicity, rhs_with_feedback, run_until_steady,
)
from tcdyn.model import conjugacy_defect, rhs_lab, rhs_rotating, to_lab, to_rotating
from tcdyn.steady_state import all_fixed_points

VARIANTS = [Variant.JZ, Variant.OMEGA1, Variant.MIRROR]
X0 = MeanFieldState.physical(a1=0.3, a2=0.2 + 0.1j, jm=0.185, jz=0.076).to_array()
FIG4 = SystemParams(g=5.0, kappa=0.5)


def synthetic(n1, dt=0.05):
    t = np.arange(len(n1)) * dt
    a = np.sqrt(n1).astype(complex)
    states = np.zeros((len(t), 7), complex)
    states[:, 0] = states[:, 1] = a
    states[:, 2] = states[:, 3] = 0.1
    return Trajectory(t, states, SystemParams(), dt=dt)


@pytest.mark.parametrize("variant", VARIANTS)
def test_feedback_vanishes_for_equal_history(variant, rng):
    p = SystemParams()
    x = random_physical_state(rng)
    s = FeedbackScheme(variant, 0.7, 1.3)
    assert np.allclose(rhs_with_feedback(x, x, p, s), rhs_lab(x, p), rtol=0, atol=1e-15)


@pytest.mark.parametrize("variant", VARIANTS)
def test_zero_gain_is_uncontrolled(variant, rng):
    p = SystemParams()
    x, xd = random_physical_state(rng), random_physical_state(rng)
    frame = RotatingFrame(1.7)
    s = FeedbackScheme(variant, 0.0, 1.0)
    assert np.array_equal(rhs_with_feedback(x, xd, p, s, frame), rhs_rotating(x, p, frame))


@pytest.mark.parametrize("variant", [Variant.NONE] + VARIANTS)
def test_kernel_matches_reference_field(variant, rng):
    p = SystemParams()
    s = FeedbackScheme(variant, 0.4, 1.1) if variant != Variant.NONE else NO_FEEDBACK
    frame = RotatingFrame(2.3)
    x, xd = random_physical_state(rng), random_physical_state(rng)
    out = np.empty(7, complex)
    _kernels.rhs_into(out, x, xd, p.vector(), frame.omega, s.code, s.lam,
                      np.exp(1j * frame.omega * s.tau))
    assert np.allclose(out, rhs_with_feedback(x, xd, p, s, frame), rtol=1e-14, atol=1e-14)


def test_mirror_feedback_vanishes_on_orbit():
    p = SystemParams(kappa=0.005)
    fp = all_fixed_points(p)[-1]
    tau = mirror_delay(fp)
    s = FeedbackScheme(Variant.MIRROR, 1.0, tau)
    t = 3.7
    now, past = to_lab(fp.state, fp.omega, t), to_lab(fp.state, fp.omega, t - tau)
    assert np.allclose(rhs_with_feedback(now, past, p, s), rhs_lab(now, p), atol=1e-13)


def test_no_scheme_matches_ode(baseline):
    a = integrate_dde(X0, baseline, None, dt=1e-3, T=10, save_every=50)
    b = integrate_ode(X0, baseline, dt=1e-3, T=10, save_every=50)
    assert np.max(np.abs(a.states - b.states)) <= 1e-12


@pytest.mark.parametrize("variant", VARIANTS)
def test_zero_gain_matches_ode_long(variant, baseline):
    s = FeedbackScheme(variant, 0.0, 1.0)
    a = integrate_dde(X0, baseline, s, dt=1e-3, T=100, save_every=100)
    b = integrate_ode(X0, baseline, dt=1e-3, T=100, save_every=100)
    assert np.max(np.abs(a.states - b.states)) <= 1e-10


def test_step_too_large(baseline):
    with pytest.raises(StepTooLarge):
        integrate_dde(X0, baseline, FeedbackScheme(Variant.JZ, 0.1, 0.05), dt=0.01, T=1)


@pytest.mark.parametrize("kw", [{"T": -1.0}, {"dt": 0.0}, {"save_every": 0}])
def test_integrate_dde_validates(baseline, kw):
    args = dict(dt=1e-3, T=1.0, save_every=1) | kw
    with pytest.raises(ValidationError):
        integrate_dde(X0, baseline, NO_FEEDBACK, **args)


def test_scheme_validates():
    with pytest.raises(ValidationError):
        FeedbackScheme(Variant.JZ, 0.1, 0.0)
    with pytest.raises(ValidationError):
        FeedbackScheme(Variant.JZ, math.inf, 1.0)


def test_runaway_gain_raises_nonfinite():
    with pytest.raises(NonFiniteState) as info:
        integrate_dde(X0, FIG4, FeedbackScheme(Variant.JZ, -50.0, 1.0), dt=1e-3, T=20)
    err = info.value
    assert 0 < err.time < 20
    assert np.all(np.isfinite(err.trajectory.states))


@pytest.mark.parametrize("variant", VARIANTS)
def test_conjugacy_preserved(variant):
    p = SystemParams(kappa=0.005)
    s = FeedbackScheme(variant, 0.5, 1.0)
    tr = integrate_dde(X0, p, s, dt=1e-3, T=50, save_every=10)
    assert conjugacy_defect(tr.states) <= 1e-9


def test_jz_feedback_fourth_order():
    s = FeedbackScheme(Variant.JZ, 0.4, 1.0)
    ends = [integrate_dde(X0, FIG4, s, dt=dt, T=5, save_every=1).states[-1]
            for dt in (0.02, 0.01, 0.005)]
    e1, e2 = np.max(np.abs(ends[0] - ends[2])), np.max(np.abs(ends[1] - ends[2]))
    # ratio of (h - h/4) to (h/2 - h/4) errors is 15/1 * ... = 17 for order 4
    assert 10 < e1 / e2 < 25


def test_halving_step_changes_little():
    s = FeedbackScheme(Variant.JZ, 0.4, 1.0)
    a = integrate_dde(X0, FIG4, s, dt=2e-3, T=20, save_every=50)
    b = integrate_dde(X0, FIG4, s, dt=1e-3, T=20, save_every=100)
    assert np.max(np.abs(a.states - b.states)) <= 1e-6


@pytest.mark.parametrize("variant", [Variant.JZ, Variant.OMEGA1])
def test_non_invasive_on_fixed_point(variant):
    p = SystemParams(kappa=0.005)
    fp = all_fixed_points(p)[-1]
    s = FeedbackScheme(variant, 0.8, 1.0)
    tr = integrate_dde(fp.state, p, s, dt=1e-3, T=20, frame=fp.frame, save_every=100)
    assert np.max(np.abs(tr.states - fp.state)) <= 1e-9
    assert np.nanmax(feedback_signal(tr)) <= 1e-9


def test_mirror_lab_and_rotating_agree():
    p = SystemParams(kappa=0.005)
    fp = all_fixed_points(p)[-1]
    s = FeedbackScheme(Variant.MIRROR, 1.0, mirror_delay(fp))
    lab = integrate_dde(X0, p, s, dt=1e-3, T=20, save_every=100)
    rot = integrate_dde(X0, p, s, dt=1e-3, T=20, frame=fp.frame, save_every=100)
    for a, b in zip(lab.observables()[:3], rot.observables()[:3]):
        assert np.max(np.abs(a - b)) <= 1e-8
    assert np.max(np.abs(to_rotating(lab.states, fp.omega, lab.t) - rot.states)) <= 1e-7


@pytest.mark.parametrize("variant", VARIANTS)
def test_resume_equals_single_run(variant):
    p = SystemParams(kappa=0.005)
    s = FeedbackScheme(variant, 0.3, 1.5)
    full = integrate_dde(X0, p, s, dt=1e-3, T=6, save_every=10)
    part = integrate_dde(X0, p, s, dt=1e-3, T=2.5, save_every=10)
    rest = integrate_dde(part, p, s, dt=1e-3, T=3.5, save_every=10)
    assert rest.t[0] == pytest.approx(part.t[-1])
    assert np.max(np.abs(rest.states[-1] - full.states[-1])) <= 1e-13


def test_resume_rejects_other_step(baseline):
    s = FeedbackScheme(Variant.JZ, 0.3, 1.0)
    part = integrate_dde(X0, baseline, s, dt=1e-3, T=2)
    with pytest.raises(ValidationError):
        integrate_dde(part, baseline, s, dt=2e-3, T=2)


def test_warmup_disables_gain():
    s = FeedbackScheme(Variant.JZ, 0.4, 1.0)
    a = integrate_dde(X0, FIG4, s, dt=1e-3, T=5, save_every=100, warmup=5)
    b = integrate_ode(X0, FIG4, dt=1e-3, T=5, save_every=100)
    assert np.max(np.abs(a.states - b.states)) <= 1e-12
    c = integrate_dde(X0, FIG4, s, dt=1e-3, T=5, save_every=100, warmup=2)
    assert np.max(np.abs(c.states[:21] - b.states[:21])) <= 1e-12
    assert np.max(np.abs(c.states[-1] - b.states[-1])) > 1e-6


def test_constant_is_fixed_point():
    cls = detect_steady(synthetic(np.full(2001, 2.0)), window=20)
    assert cls.kind == SteadyKind.FIXED_POINT


@pytest.mark.parametrize("omega", [2.0, 3.3, 0.7])
def test_sinusoid_is_limit_cycle(omega):
    t = np.arange(8001) * 0.05
    cls = detect_steady(synthetic(1 + 0.1 * np.sin(omega * t)), window=200)
    assert cls.kind == SteadyKind.LIMIT_CYCLE
    assert cls.period == pytest.approx(2 * np.pi / omega, rel=0.02)


@given(st.floats(0.5, 5.0), st.floats(0.0, 6.0))
def test_periodicity_recovers_period(omega, phase):
    t = np.arange(4000) * 0.05
    period, frac = periodicity(np.sin(omega * t + phase), 0.05)
    assert period == pytest.approx(2 * np.pi / omega, rel=0.02)
    assert frac > 0.99


def test_noise_is_undecided(rng):
    cls = detect_steady(synthetic(1 + 0.1 * rng.random(8001)), window=200)
    assert cls.kind == SteadyKind.UNDECIDED


def test_short_window_rejected():
    with pytest.raises(WindowTooShort):
        detect_steady(synthetic(np.ones(100)), window=200)


@pytest.mark.slow
def test_region_c_limit_cycle_and_stabilization():
    fps = all_fixed_points(FIG4)
    cls, _ = run_until_steady(X0, FIG4, NO_FEEDBACK, dt=1e-3, T_max=1000, fixed_points=fps)
    assert cls.kind == SteadyKind.LIMIT_CYCLE
    s = FeedbackScheme(Variant.JZ, 0.4, 1.0)
    cls, tr = run_until_steady(X0, FIG4, s, dt=1e-3, T_max=3000, fixed_points=fps)
    assert cls.kind == SteadyKind.FIXED_POINT
    assert cls.diagnostics["fp_distance"] <= 1e-6
    assert np.nanmax(feedback_signal(tr)[-2000:]) <= 1e-6
