"""Linear stability of fixed points under delayed feedback.

The linearized controlled dynamics around a fixed point read

    dv/dt = (A - B) v(t) + B v(t - tau),        B = u v^T (rank one),

so the characteristic function is det[(A - B) + B e^{-L tau} - L I]. With
L = i Omega it splits into a delayed and an undelayed polynomial in Omega,
which gives closed-form stability boundaries in the (tau, lambda) plane.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import partial

import numpy as np

from .errors import (
    DiscretizationSuspect, NoValidBranch, NonRealCoefficient, NumericalError, UnsupportedScheme,
)
from .feedback import FeedbackScheme, Variant
from .model import SystemParams
from .parallel import ordered_map
from .stability import EPS_GAUGE, jacobian
from .steady_state import FixedPoint, FPKind

P = np.polynomial.polynomial
N_NODES = 16


@dataclass(frozen=True)
class DelayLinearization:
    """A plus the factored delayed part B = lam * u1 v^T."""

    A: np.ndarray
    u1: np.ndarray
    v: np.ndarray
    lam: float
    tau: float
    variant: Variant
    gauge_mode: bool = True

    @property
    def u(self) -> np.ndarray:
        return self.lam * self.u1

    @property
    def B(self) -> np.ndarray:
        return np.outer(self.u, self.v)

    @property
    def scale(self) -> float:
        """Magnitude scale for determinant residuals."""
        return max(1.0, float(np.linalg.norm(self.A)) ** 7)

    def at(self, lam: float | None = None, tau: float | None = None) -> "DelayLinearization":
        return replace(self, lam=self.lam if lam is None else float(lam),
                       tau=self.tau if tau is None else float(tau))


def delay_linearization(fp: FixedPoint, p: SystemParams, scheme: FeedbackScheme) -> DelayLinearization:
    """Linearization of a controlled system around `fp` in its co-rotating frame."""
    A = jacobian(fp, p)
    e7 = np.zeros(7, complex)
    e7[6] = 1.0
    if scheme.variant == Variant.JZ:
        u1, v = e7, e7.copy()
    elif scheme.variant == Variant.OMEGA1:
        a1, a1s, a2, a2s = fp.state[:4]
        u1 = np.array([-1j * a1, 1j * a1s, 0, 0, 0, 0, 0], complex)
        v = np.array([0, 0, a2s, a2, 0, 0, 0], complex)
    else:
        raise UnsupportedScheme(f"no rank-one delay linearization for {scheme.variant.value}",
                                field="variant")
    return DelayLinearization(A, u1, v, float(scheme.lam), float(scheme.tau), scheme.variant,
                              gauge_mode=fp.kind == FPKind.NONTRIVIAL)


def char_matrix(Lam: complex, lin: DelayLinearization) -> np.ndarray:
    B = lin.B
    return lin.A - B + B * np.exp(-Lam * lin.tau) - Lam * np.eye(len(lin.A))


def char_det(Lam: complex, lin: DelayLinearization) -> complex:
    """Characteristic function (LU-based determinant of the assembled matrix)."""
    return complex(np.linalg.det(char_matrix(Lam, lin)))


# --- coefficients of the characteristic quasi-polynomial -------------------

_PARITY = np.array([1, 1, -1, -1, 1, 1, -1, -1] * 2, dtype=float)


@dataclass
class CharCoefficients:
    """char(i Omega) = e^{-i Omega tau} sum c_j A_j Omega^j + sum c_j B_j Omega^j.

    `A`, `B` are real, padded to length 8 (index = power of Omega); `c` holds
    the parity factors 1 (even j) and i (odd j).
    """

    A: np.ndarray
    B: np.ndarray
    tau: float
    raw_A: np.ndarray = field(repr=False, default=None)
    raw_B: np.ndarray = field(repr=False, default=None)

    @property
    def c(self) -> np.ndarray:
        return np.where(np.arange(8) % 2 == 0, 1.0 + 0j, 1j)

    @staticmethod
    def _degree(x: np.ndarray) -> int:
        big = np.nonzero(np.abs(x) > 1e-12 * max(np.max(np.abs(x)), 1e-300))[0]
        return int(big[-1]) if len(big) else -1

    @property
    def degree_A(self) -> int:
        return self._degree(self.A)

    @property
    def degree_B(self) -> int:
        return self._degree(self.B)

    def blocks(self, Omega) -> tuple:
        """(C1, C2, C3, C4) at real Omega."""
        W = np.asarray(Omega, float)
        powers = W[..., None] ** np.arange(8)
        ev = np.arange(8) % 2 == 0
        C1 = (powers * np.where(ev, self.B, 0)).sum(-1)
        C4 = (powers * np.where(~ev, self.B, 0)).sum(-1)
        C2 = (powers * np.where(ev, self.A, 0)).sum(-1)
        C3 = (powers * np.where(~ev, self.A, 0)).sum(-1)
        return C1, C2, C3, C4

    def evaluate(self, Omega: float, tau: float | None = None) -> complex:
        tau = self.tau if tau is None else tau
        pw = Omega ** np.arange(8)
        a = np.sum(self.c * self.A * pw)
        b = np.sum(self.c * self.B * pw)
        return complex(np.exp(-1j * Omega * tau) * a + b)

    def boundary_polynomial(self) -> np.ndarray:
        """Power-basis coefficients of C1^2 + C4^2 - C2^2 - C3^2 in Omega (degree 14)."""
        ev = np.arange(8) % 2 == 0
        C1, C4 = np.where(ev, self.B, 0), np.where(~ev, self.B, 0)
        C2, C3 = np.where(ev, self.A, 0), np.where(~ev, self.A, 0)
        q = P.polysub(P.polyadd(P.polymul(C1, C1), P.polymul(C4, C4)),
                      P.polyadd(P.polymul(C2, C2), P.polymul(C3, C3)))
        out = np.zeros(15)
        out[:len(q)] = q
        return out


def _interpolate(fun, n: int = N_NODES, radius: float = 1.0) -> np.ndarray:
    """Power-basis coefficients of a polynomial of degree < n from samples on a circle."""
    nodes = radius * np.exp(2j * np.pi * np.arange(n) / n)
    vals = np.array([fun(z) for z in nodes])
    return np.fft.fft(vals) / n / radius ** np.arange(n)


def extract_char_coefficients(lin: DelayLinearization, rtol: float = 1e-8) -> CharCoefficients:
    """Recover the undelayed and delayed polynomials by interpolation.

    B-part: det(A - B - L I). A-part: v^T adj(A - B - L I) u, which equals
    lam * v^T adj(A - L I) u1 and is evaluated as the bordered determinant
    lam * det([[A - L I, u1], [-v^T, 0]]), so no adjugate is formed and small
    gains do not suffer from cancellation.
    """
    n = len(lin.A)
    A0 = lin.A - lin.B
    I = np.eye(n)
    border = np.zeros((n + 1, n + 1), complex)
    border[:n, n] = lin.u1
    border[n, :n] = -lin.v

    def bordered(z):
        border[:n, :n] = lin.A - z * I
        return np.linalg.det(border)

    pb = _interpolate(lambda z: np.linalg.det(A0 - z * I))
    pa = lin.lam * _interpolate(bordered)
    out = []
    for name, raw in (("B", pb), ("A", pa)):
        x = raw * _PARITY
        scale = np.max(np.abs(x))
        bad = np.abs(x.imag) > rtol * max(scale, 1e-300)
        if np.any(bad):
            j = int(np.nonzero(bad)[0][0])
            raise NonRealCoefficient(f"{name}_{j} = {x[j]:.6g} is not real")
        if np.any(np.abs(x[8:]) > 1e-10 * max(scale, 1e-300)):
            raise NumericalError(f"{name}-polynomial degree exceeds 7")
        out.append(x.real[:8].copy())
    B, A = out
    return CharCoefficients(A, B, lin.tau, raw_A=pa[:8], raw_B=pb[:8])


def boundary_omegas(coeffs: CharCoefficients, imag_tol: float = 1e-7) -> list[float]:
    """Distinct positive crossing frequencies Omega (purely imaginary roots i Omega)."""
    q = coeffs.boundary_polynomial()
    q = np.trim_zeros(q, "b")
    if len(q) < 2:
        return []
    roots = P.polyroots(q)
    dq = P.polyder(q)
    cand = []
    for r in roots:
        if abs(r.imag) > imag_tol * max(1.0, abs(r.real)) or r.real <= 0:
            continue
        w = r.real
        for _ in range(3):
            d = P.polyval(w, dq)
            if d == 0:
                break
            w -= P.polyval(w, q) / d
        if w > 1e-6:
            cand.append(w)
    cand.sort()
    out: list[float] = []
    for w in cand:
        if out and abs(w - out[-1]) <= 1e-8 * max(1.0, w):
            continue
        C1, C2, C3, C4 = coeffs.blocks(w)
        den = C2 * C2 + C3 * C3
        if den == 0 or abs((C3 * C4 + C1 * C2) / den) > 1 + 1e-10:
            continue
        out.append(float(w))
    return out


def boundary_tau(Omega: float, coeffs: CharCoefficients, z: int, tol: float = 1e-6) -> list[float]:
    """Delays at which i*Omega solves the characteristic equation, on branch z."""
    C1, C2, C3, C4 = coeffs.blocks(Omega)
    den = C2 * C2 + C3 * C3
    scale = max(abs(C1), abs(C2), abs(C3), abs(C4))
    if den == 0:
        raise NoValidBranch("delayed polynomial vanishes at this Omega")
    arg = -(C3 * C4 + C1 * C2) / den
    if abs(arg) > 1 + 1e-10:
        raise NoValidBranch(f"arccos argument {arg:.12g} outside [-1, 1]")
    theta = math.acos(min(1.0, max(-1.0, arg)))
    valid = []
    for th in (theta, 2 * math.pi - theta):
        r1 = C1 + C2 * math.cos(th) + C3 * math.sin(th)
        r2 = C4 + C3 * math.cos(th) - C2 * math.sin(th)
        if max(abs(r1), abs(r2)) <= tol * scale:
            valid.append(th)
    if not valid:
        raise NoValidBranch(f"no arccos branch satisfies both equations at Omega={Omega:.6g}")
    taus = sorted({(th + 2 * math.pi * z) / Omega for th in valid})
    return [t for t in taus if t > 0]


@dataclass(frozen=True)
class BoundaryPoint:
    Omega: float
    tau: float
    lam: float
    z: int


def boundary_points(lin: DelayLinearization, tau_max: float) -> list[BoundaryPoint]:
    """All boundary points with 0 < tau <= tau_max at the gain of `lin`."""
    if lin.lam == 0:
        return []
    coeffs = extract_char_coefficients(lin)
    pts = []
    for W in boundary_omegas(coeffs):
        zmax = int(math.ceil(tau_max * W / (2 * math.pi))) + 1
        for z in range(-1, zmax + 1):
            try:
                taus = boundary_tau(W, coeffs, z)
            except NoValidBranch:
                break
            pts.extend(BoundaryPoint(W, t, lin.lam, z) for t in taus if t <= tau_max)
    return sorted(pts, key=lambda b: (b.tau, b.Omega))


# --- rightmost characteristic root ------------------------------------------

def chebyshev(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Chebyshev points x_j = cos(pi j / N) and the differentiation matrix."""
    if N == 0:
        return np.array([1.0]), np.zeros((1, 1))
    x = np.cos(np.pi * np.arange(N + 1) / N)
    c = np.ones(N + 1)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(N + 1)
    X = x[:, None] - x[None, :]
    D = np.outer(c, 1 / c) / (X + np.eye(N + 1))
    D -= np.diag(D.sum(axis=1))
    return x, D


def collocation_matrix(lin: DelayLinearization, N: int) -> np.ndarray:
    """Discretized infinitesimal generator, reduced by the rank-one structure.

    Only the scalar history s(theta) = v^T x(t + theta) on [-tau, 0] is needed;
    it lives on Chebyshev nodes theta_j = tau (x_j - 1)/2, j = 1..N, with
    s(0) = v^T x(t).
    """
    n = len(lin.A)
    _, D = chebyshev(N)
    D = D * (2.0 / lin.tau)
    M = np.zeros((n + N, n + N), complex)
    M[:n, :n] = lin.A - lin.B
    M[:n, n + N - 1] = lin.u
    M[n:, :n] = np.outer(D[1:, 0], lin.v)
    M[n:, n:] = D[1:, 1:]
    return M


def full_collocation_matrix(lin: DelayLinearization, N: int) -> np.ndarray:
    """Same generator discretized on the full 7-dimensional history (reference)."""
    n = len(lin.A)
    _, D = chebyshev(N)
    D = D * (2.0 / lin.tau)
    M = np.kron(D, np.eye(n)).astype(complex)
    M[:n, :] = 0
    M[:n, :n] = lin.A - lin.B
    M[:n, N * n:] = lin.B
    return M


def newton_root(lin: DelayLinearization, L0: complex, maxit: int = 30) -> tuple[complex, bool]:
    """Newton iteration on char_det using d/dL log det M = tr(M^-1 M')."""
    L = complex(L0)
    B = lin.B
    I = np.eye(len(lin.A))
    for _ in range(maxit):
        e = np.exp(-L * lin.tau)
        M = lin.A - B + B * e - L * I
        dM = -lin.tau * B * e - I
        try:
            tr = np.trace(np.linalg.solve(M, dM))
        except np.linalg.LinAlgError:
            return L, True
        if not np.isfinite(tr) or tr == 0:
            return L, bool(np.isfinite(tr))
        step = -1.0 / tr
        L += step
        if abs(step) <= 1e-13 * (1 + abs(L)):
            return L, True
    return L, False


def _rightmost_once(lin, N, search_bound, eps_gauge, refine, n_refine=4):
    ev = np.linalg.eigvals(collocation_matrix(lin, N))
    if search_bound is not None:
        ev = ev[np.abs(ev.imag) <= search_bound]
    if lin.gauge_mode:
        i = int(np.argmin(np.abs(ev)))
        if abs(ev[i]) <= eps_gauge:
            ev = np.delete(ev, i)
    ev = ev[np.argsort(-ev.real)]
    if refine:
        ev = ev.copy()
        for i in range(min(n_refine, len(ev))):
            L, ok = newton_root(lin, ev[i])
            if ok and abs(L - ev[i]) <= 1e-2 * (1 + abs(ev[i])):
                if not (lin.gauge_mode and abs(L) <= eps_gauge):
                    ev[i] = L
    return ev[np.argmax(ev.real)]


def rightmost_root(lin: DelayLinearization, search_bound: float | None = None, n_cheb: int = 24,
                   refine: bool = True, check: bool = True, eps_gauge: float = EPS_GAUGE,
                   max_doublings: int = 3) -> complex:
    """Characteristic root with the largest real part (gauge zero mode excluded)."""
    if not lin.tau > 0:
        raise NumericalError("tau must be positive")
    r = _rightmost_once(lin, n_cheb, search_bound, eps_gauge, refine)
    if not check:
        return r
    N = n_cheb
    change = math.inf
    for _ in range(max_doublings):
        N *= 2
        r2 = _rightmost_once(lin, N, search_bound, eps_gauge, refine)
        change = abs(r2.real - r.real)
        r = r2
        if change < 1e-6:
            return r
    if change > 1e-4:
        raise DiscretizationSuspect(f"rightmost real part moved by {change:.3g} on refinement",
                                    value=r.real)
    return r


def rightmost_real_part(lin: DelayLinearization, search_bound: float | None = None,
                        n_cheb: int = 24, **kw) -> float:
    return float(rightmost_root(lin, search_bound, n_cheb, **kw).real)


@dataclass
class ControlDiagram:
    taus: np.ndarray
    lambdas: np.ndarray
    rightmost: np.ndarray          # shape (len(lambdas), len(taus)); NaN where invalid
    valid: np.ndarray
    boundary: list[BoundaryPoint]
    errors: dict = field(default_factory=dict)

    @property
    def stable(self) -> np.ndarray:
        return self.valid & (self.rightmost < 0)


def _row(lam, lin, taus, n_cheb, check):
    vals, errs = [], []
    for t in taus:
        try:
            vals.append(rightmost_real_part(lin.at(lam=lam, tau=t), n_cheb=n_cheb, check=check))
            errs.append(None)
        except (NumericalError, np.linalg.LinAlgError) as exc:
            vals.append(math.nan)
            errs.append(f"{type(exc).__name__}: {exc}")
    return vals, errs


def control_diagram(fp: FixedPoint, p: SystemParams, scheme: FeedbackScheme, tau_grid,
                    lambda_grid, n_cheb: int = 24, boundaries: bool = True, check: bool = True,
                    workers: int | None = None) -> ControlDiagram:
    """Rightmost real part over the (tau, lambda) grid plus analytic boundary points."""
    taus = np.asarray(tau_grid, float)
    lams = np.asarray(lambda_grid, float)
    lin = delay_linearization(fp, p, scheme)
    rows = ordered_map(partial(_row, lin=lin, taus=taus, n_cheb=n_cheb, check=check), lams, workers)
    R = np.array([r[0] for r in rows], float).reshape(len(lams), len(taus))
    errors = {(i, j): e for i, r in enumerate(rows) for j, e in enumerate(r[1]) if e}
    pts: list[BoundaryPoint] = []
    if boundaries:
        for lam in lams:
            if lam == 0:
                continue
            try:
                pts.extend(boundary_points(lin.at(lam=lam), float(taus.max())))
            except NumericalError as exc:
                errors[("boundary", float(lam))] = str(exc)
    return ControlDiagram(taus, lams, R, np.isfinite(R), pts, errors)
