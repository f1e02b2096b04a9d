"""Analytic fixed points: the trivial solution plus co-rotating lasing states."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateCubic, NotPhysical
from .model import LAB, RotatingFrame, SystemParams, observables, rhs_rotating

ROOT_IMAG_TOL = 1e-9
BOUNDARY_TOL = 1e-12


class FPKind(str, enum.Enum):
    TRIVIAL = "Trivial"
    NONTRIVIAL = "NonTrivial"


class Stability(str, enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    MARGINAL = "Marginal"
    UNCLASSIFIED = "Unclassified"


@dataclass
class FixedPoint:
    frame: RotatingFrame
    state: np.ndarray
    kind: FPKind
    physical: bool = True
    eigenvalues: np.ndarray | None = None
    stability: Stability = Stability.UNCLASSIFIED
    info: dict = field(default_factory=dict)

    @property
    def omega(self) -> float:
        return self.frame.omega

    @property
    def n1(self) -> float:
        return observables(self.state)[0]

    @property
    def n2(self) -> float:
        return observables(self.state)[1]

    @property
    def jz(self) -> float:
        return float(self.state[6].real)

    @property
    def obs(self) -> np.ndarray:
        """(n1, n2, jz) used for matching trajectories to fixed points."""
        n1, n2, jz, _ = observables(self.state)
        return np.array([n1, n2, jz])


def cubic_coefficients(p: SystemParams) -> np.ndarray:
    """Coefficients (highest degree first) of the frequency condition in omega.

    This is the expanded form of
        G_D (w1s + w2s)(k^2 + w1s w2s) + k D_s (2k^2 + w1s^2 + w2s^2) = 0,
    with w_is = w_i - omega and D_s = delta - omega.
    """
    k, gd, d = p.kappa, p.gamma_D, p.delta
    w1, w2 = p.omega1, p.omega2
    s, q = w1 + w2, w1 * w1 + w2 * w2
    c3 = -2 * (gd + k)
    c2 = 2 * d * k + 3 * gd * s + 2 * k * s
    c1 = -2 * d * k * s - 2 * gd * k * k - gd * (q + 4 * w1 * w2) - 2 * k ** 3 - k * q
    c0 = 2 * d * k ** 3 + d * k * q + gd * k * k * s + gd * w1 * w2 * s
    return np.array([c3, c2, c1, c0])


def frequency_condition(p: SystemParams, omega) -> np.ndarray:
    """Direct (unexpanded) evaluation of the frequency condition."""
    omega = np.asarray(omega, dtype=float)
    w1s, w2s, ds = p.omega1 - omega, p.omega2 - omega, p.delta - omega
    k = p.kappa
    return (p.gamma_D * (w1s + w2s) * (k * k + w1s * w2s)
            + k * ds * (2 * k * k + w1s ** 2 + w2s ** 2))


def jz_complex(p: SystemParams, omega: float) -> complex:
    """Stationary inversion required by J+- != 0 before imposing realness."""
    w1s, w2s, ds = p.omega1 - omega, p.omega2 - omega, p.delta - omega
    k = p.kappa
    num = (p.gamma_D - 1j * ds) * (k - 1j * w1s) * (k - 1j * w2s)
    return num / (2 * p.g ** 2 * (2 * k - 1j * w1s - 1j * w2s))


def _polish(c: np.ndarray, r: float) -> float:
    # one Newton step on the cubic to remove companion-matrix rounding
    dc = np.polyder(c)
    d = np.polyval(dc, r)
    if d != 0:
        step = np.polyval(c, r) / d
        if abs(step) < 1e-6 * max(1.0, abs(r)):
            r -= step
    return r


def characteristic_frequencies(p: SystemParams) -> list[float]:
    """Real roots omega of the frequency condition, ascending (0 to 3 values)."""
    c = cubic_coefficients(p)
    if abs(c[0]) < 1e-14:
        raise DegenerateCubic(f"leading coefficient {c[0]:.3g} vanishes")
    monic = c / c[0]
    companion = np.zeros((3, 3))
    companion[0, :] = -monic[1:]
    companion[1, 0] = companion[2, 1] = 1.0
    roots = np.linalg.eigvals(companion)
    real = [r.real for r in roots if abs(r.imag) <= ROOT_IMAG_TOL * max(1.0, abs(r.real))]
    return sorted(_polish(c, r) for r in real)


def jz_stationary(p: SystemParams, omega: float) -> float:
    w1s, w2s, ds = p.omega1 - omega, p.omega2 - omega, p.delta - omega
    k, gd = p.kappa, p.gamma_D
    return (k * (gd ** 2 + ds ** 2) * (2 * k * k + w1s ** 2 + w2s ** 2)
            / (2 * p.g ** 2 * gd * (4 * k * k + (w1s + w2s) ** 2)))


def dipole_product(p: SystemParams, omega: float, jz0: float) -> float:
    """Stationary J+ J- given the inversion jz0."""
    w1s, w2s = p.omega1 - omega, p.omega2 - omega
    k = p.kappa
    return (p.gamma_T * (p.z0 - jz0) * (k * k + w1s ** 2) * (k * k + w2s ** 2)
            / (2 * p.g ** 2 * k * (2 * k * k + w1s ** 2 + w2s ** 2)))


def build_fixed_point(p: SystemParams, omega: float) -> FixedPoint:
    """Lasing state co-rotating at `omega` (a root of the frequency condition)."""
    jz0 = jz_stationary(p, omega)
    if jz0 > p.z0 + BOUNDARY_TOL:
        raise NotPhysical(
            f"stationary inversion {jz0:.6g} exceeds z0={p.z0:.6g}: J+J- would be negative",
            condition="jz0 > z0 (J+J- < 0)",
        )
    if jz0 >= p.z0 - BOUNDARY_TOL:
        jz0, r = p.z0, 0.0
    else:
        r = float(np.sqrt(dipole_product(p, omega, jz0)))
    g, k = p.g, p.kappa
    a1 = -1j * g * r / (k + 1j * (p.omega1 - omega))
    a2 = -1j * g * r / (k + 1j * (p.omega2 - omega))
    state = np.array([a1, np.conj(a1), a2, np.conj(a2), r, r, jz0], dtype=complex)
    return FixedPoint(RotatingFrame(float(omega)), state, FPKind.NONTRIVIAL, True,
                      info={"jpjm": r * r})


def trivial_fixed_point(p: SystemParams) -> FixedPoint:
    state = np.zeros(7, dtype=complex)
    state[6] = p.z0
    return FixedPoint(LAB, state, FPKind.TRIVIAL, True)


def all_fixed_points(p: SystemParams, omegas: list[float] | None = None) -> list[FixedPoint]:
    """Trivial FP followed by one FP per physical root (ascending omega).

    `omegas` may be supplied to reuse roots, which do not depend on g.
    """
    out = [trivial_fixed_point(p)]
    for w in characteristic_frequencies(p) if omegas is None else omegas:
        try:
            out.append(build_fixed_point(p, w))
        except NotPhysical:
            continue
    return out


def residual(fp: FixedPoint, p: SystemParams) -> float:
    return float(np.max(np.abs(rhs_rotating(fp.state, p, fp.frame))))
