import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_physical_state
from tcdyn import SystemParams
from tcdyn.delay import (
    boundary_omegas, boundary_points, boundary_tau, char_det, chebyshev, collocation_matrix,
    control_diagram, delay_linearization, extract_char_coefficients, full_collocation_matrix,
    newton_root, rightmost_real_part, rightmost_root,
)
from tcdyn.errors import DiscretizationSuspect, NoValidBranch, UnsupportedScheme
from tcdyn.feedback import FeedbackScheme, Variant, integrate_dde, rhs_with_feedback
from tcdyn.stability import analyzed_fixed_points

FIG4 = SystemParams(g=5.0, kappa=0.5)
FIG6 = SystemParams(kappa=0.005)
# frozen crossing frequencies of the Jz boundary at lambda = 0.4 (companion roots + Newton)
OMEGAS_FIG4 = [4.074520235753156, 4.265921143296047]


@pytest.fixture(scope="module")
def fig4_fp():
    return analyzed_fixed_points(FIG4)[1]


@pytest.fixture(scope="module")
def fig6_fps():
    return analyzed_fixed_points(FIG6)[1:]


def jz_lin(fp, lam=0.4, tau=1.0):
    return delay_linearization(fp, FIG4, FeedbackScheme(Variant.JZ, lam, tau))


def cofactor_adjugate(M):
    n = len(M)
    adj = np.empty_like(M)
    for i in range(n):
        for j in range(n):
            minor = np.delete(np.delete(M, j, axis=0), i, axis=1)
            adj[i, j] = (-1) ** (i + j) * np.linalg.det(minor)
    return adj


def test_jz_structure(fig4_fp):
    lin = jz_lin(fig4_fp)
    B = np.zeros((7, 7))
    B[6, 6] = 0.4
    assert np.array_equal(lin.B, B)


def test_omega1_delayed_jacobian_matches_finite_differences(fig6_fps, rng):
    fp = fig6_fps[0]
    s = FeedbackScheme(Variant.OMEGA1, 0.3, 1.0)
    lin = delay_linearization(fp, FIG6, s)
    eps = 1e-6
    # physical directions only: n2 = Re(a2* a2) is not holomorphic off the manifold
    for _ in range(5):
        d = random_physical_state(rng)
        fwd = rhs_with_feedback(fp.state, fp.state + eps * d, FIG6, s, fp.frame)
        bwd = rhs_with_feedback(fp.state, fp.state - eps * d, FIG6, s, fp.frame)
        fd = (fwd - bwd) / (2 * eps)
        assert np.max(np.abs(lin.B @ d - fd)) <= 1e-6 * np.max(np.abs(lin.B @ d))
    a1, a1s, a2, a2s = fp.state[:4]
    assert lin.B[0, 2] == pytest.approx(-0.3j * a2s * a1)
    assert lin.B[1, 3] == pytest.approx(0.3j * a2 * a1s)


def test_mirror_unsupported(fig6_fps):
    with pytest.raises(UnsupportedScheme):
        delay_linearization(fig6_fps[1], FIG6, FeedbackScheme(Variant.MIRROR, 1.0, 1.0))


def test_zero_gain_reduces_to_spectrum(fig4_fp):
    lin = jz_lin(fig4_fp, lam=0.0)
    assert np.all(lin.B == 0)
    for ev in np.linalg.eigvals(lin.A):
        assert abs(char_det(ev, lin)) <= 1e-8 * lin.scale


@pytest.mark.parametrize("variant", [Variant.JZ, Variant.OMEGA1])
def test_rank_one_lemma(variant, fig4_fp, fig6_fps, rng):
    fp, p = (fig4_fp, FIG4) if variant == Variant.JZ else (fig6_fps[1], FIG6)
    lin = delay_linearization(fp, p, FeedbackScheme(variant, 0.6, 1.3))
    for _ in range(10):
        L = complex(*rng.normal(size=2))
        M = lin.A - lin.B - L * np.eye(7)
        oracle = np.linalg.det(M) + np.exp(-L * lin.tau) * (lin.v @ cofactor_adjugate(M) @ lin.u)
        assert abs(char_det(L, lin) - oracle) <= 1e-10 * max(1.0, abs(oracle))


@pytest.mark.parametrize("variant", [Variant.JZ, Variant.OMEGA1])
def test_coefficient_reconstruction(variant, fig4_fp, fig6_fps, rng):
    fp, p = (fig4_fp, FIG4) if variant == Variant.JZ else (fig6_fps[1], FIG6)
    lin = delay_linearization(fp, p, FeedbackScheme(variant, 0.4, 1.7))
    coeffs = extract_char_coefficients(lin)
    for W in rng.uniform(-6, 6, size=20):
        ref = char_det(1j * W, lin)
        assert abs(coeffs.evaluate(W) - ref) <= 1e-8 * max(1.0, abs(ref))


def test_degrees(fig4_fp, fig6_fps):
    c = extract_char_coefficients(jz_lin(fig4_fp))
    assert (c.degree_A, c.degree_B) == (6, 7)
    for fp in fig6_fps:
        lin = delay_linearization(fp, FIG6, FeedbackScheme(Variant.OMEGA1, 0.02, 1.0))
        assert extract_char_coefficients(lin).degree_A <= 4


@given(st.floats(1e-4, 2.0))
def test_small_gain_degrees_stable(lam):
    fp = analyzed_fixed_points(FIG4)[1]
    c = extract_char_coefficients(jz_lin(fp, lam=lam))
    assert (c.degree_A, c.degree_B) == (6, 7)


def test_exactly_two_crossing_frequencies(fig4_fp):
    coeffs = extract_char_coefficients(jz_lin(fig4_fp))
    omegas = boundary_omegas(coeffs)
    assert omegas == pytest.approx(OMEGAS_FIG4, rel=1e-10)
    q = coeffs.boundary_polynomial()
    qscale = np.max(np.abs(q))
    for W in omegas:
        assert abs(np.polynomial.polynomial.polyval(W, q)) <= 1e-7 * qscale * max(1, W) ** 14


def test_crossings_shrink_onto_unstable_pair(fig4_fp):
    w_unstable = abs(max(fig4_fp.eigenvalues, key=lambda z: z.real).imag)
    widths = []
    for lam in (0.4, 0.1, 0.05):
        lo, hi = boundary_omegas(extract_char_coefficients(jz_lin(fig4_fp, lam=lam)))
        assert lo < w_unstable < hi
        widths.append(hi - lo)
    assert widths[0] > widths[1] > widths[2]
    assert widths[2] < 0.05


def test_tau_periodicity(fig4_fp):
    coeffs = extract_char_coefficients(jz_lin(fig4_fp))
    for W in OMEGAS_FIG4:
        t0, t1, t2 = (boundary_tau(W, coeffs, z)[0] for z in (0, 1, 2))
        assert t1 - t0 == pytest.approx(2 * np.pi / W, abs=1e-8)
        assert t2 - t1 == pytest.approx(2 * np.pi / W, abs=1e-8)


def test_boundary_points_are_roots(fig4_fp):
    lin = jz_lin(fig4_fp)
    pts = boundary_points(lin, tau_max=6.0)
    # four periods of each crossing frequency fit below tau = 6
    assert len(pts) == 8
    assert [b.tau for b in pts[:3]] == pytest.approx([0.15796, 1.33702, 1.70002], abs=1e-5)
    for b in pts:
        assert abs(char_det(1j * b.Omega, lin.at(tau=b.tau))) <= 1e-6 * lin.scale


def test_no_valid_branch(fig4_fp):
    coeffs = extract_char_coefficients(jz_lin(fig4_fp))
    with pytest.raises(NoValidBranch):
        boundary_tau(1.0, coeffs, 0)


def test_chebyshev_differentiates_polynomials():
    x, D = chebyshev(8)
    assert np.allclose(D @ x ** 3, 3 * x ** 2, atol=1e-12)


def test_rightmost_without_delay_coupling(fig4_fp):
    lin = jz_lin(fig4_fp, lam=0.0)
    ref = max(np.linalg.eigvals(lin.A).real)
    assert rightmost_real_part(lin) == pytest.approx(ref, abs=1e-6)
    assert ref == pytest.approx(0.0306375392654731, abs=1e-12)


def test_stabilized_point_is_negative(fig4_fp):
    assert rightmost_real_part(jz_lin(fig4_fp)) < 0


@pytest.mark.parametrize("tau", [0.5, 1.0, 2.5])
def test_reduced_matches_full_collocation(fig4_fp, tau):
    lin = jz_lin(fig4_fp, tau=tau)
    N = 16
    red = np.linalg.eigvals(collocation_matrix(lin, N))
    full = np.linalg.eigvals(full_collocation_matrix(lin, N))
    # rank-one reduction drops only the modes with zero delayed coupling
    r_red = max(z.real for z in red if abs(z) > 1e-6)
    r_full = max(z.real for z in full if abs(z) > 1e-6)
    assert r_red == pytest.approx(r_full, abs=1e-8)


def test_newton_refines_to_root(fig4_fp):
    lin = jz_lin(fig4_fp)
    r = rightmost_root(lin)
    L, ok = newton_root(lin, r)
    assert ok and abs(L - r) <= 1e-10
    assert abs(char_det(r, lin)) <= 1e-9 * lin.scale


def test_sign_change_at_boundary(fig4_fp):
    lin = jz_lin(fig4_fp)
    b = boundary_points(lin, 6.0)[0]
    f = lambda t: rightmost_real_part(lin.at(tau=t))
    lo, hi = b.tau - 0.05, b.tau + 0.05
    assert f(lo) * f(hi) < 0
    while hi - lo > 1e-6:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if f(mid) * f(lo) > 0 else (lo, mid)
    assert abs(0.5 * (lo + hi) - b.tau) <= 1e-5


def test_discretization_suspect(fig4_fp):
    with pytest.raises(DiscretizationSuspect):
        rightmost_root(jz_lin(fig4_fp, tau=5.0), n_cheb=2, max_doublings=1)


@pytest.mark.parametrize("lam, tau", [(0.4, 1.0), (0.6, 0.8), (0.1, 1.0), (0.4, 3.0)])
def test_spectrum_predicts_dde_growth(fig4_fp, lam, tau):
    lin = jz_lin(fig4_fp, lam, tau)
    r = rightmost_real_part(lin)
    s = FeedbackScheme(Variant.JZ, lam, tau)
    x0 = fig4_fp.state.copy()
    x0[6] += 1e-6
    tr = integrate_dde(x0, FIG4, s, dt=1e-3, T=60, frame=fig4_fp.frame, save_every=100)
    d = np.abs(tr.states[:, 6] - fig4_fp.jz)
    late = d[-100:].max()
    assert (late < 1e-6) == (r < 0)


def test_control_diagram_zero_row(fig4_fp):
    taus = np.linspace(0.5, 3, 6)
    cd = control_diagram(fig4_fp, FIG4, FeedbackScheme(Variant.JZ, 0.1, 1.0), taus,
                         [0.0, 0.4], n_cheb=16)
    ref = max(fig4_fp.eigenvalues.real)
    assert np.allclose(cd.rightmost[0], ref, atol=1e-6)
    assert cd.stable[1].any() and not cd.stable[0].any()
    assert all(b.lam == 0.4 for b in cd.boundary)


def test_boundaries_separate_stable_region(fig4_fp):
    taus = np.linspace(0.1, 6, 60)
    lams = np.linspace(0.1, 1.0, 10)
    cd = control_diagram(fig4_fp, FIG4, FeedbackScheme(Variant.JZ, 0.1, 1.0), taus, lams,
                         n_cheb=16)
    assert cd.valid.all()
    assert cd.stable.any()
    dt = taus[1] - taus[0]
    for i, lam in enumerate(lams):
        flips = taus[:-1][np.diff(cd.stable[i].astype(int)) != 0]
        btaus = [b.tau for b in cd.boundary if b.lam == lam]
        for t in flips:
            assert min(abs(t + dt / 2 - bt) for bt in btaus) <= dt
