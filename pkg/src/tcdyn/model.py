"""Mean-field two-mode Tavis-Cummings laser: parameters, states, vector field.

All frequencies and rates are in units of the atomic splitting Delta, times
in units of 1/Delta. The state vector is stored as 7 independent complex
components in the order (a1, a1*, a2, a2*, J+, J-, Jz).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ModeOrderViolation, NoLasingThreshold, NonPositiveRate, ValidationError

STATE_DIM = 7
COMPONENTS = ("a1", "a1s", "a2", "a2s", "jp", "jm", "jz")
INVERSION_CONVENTIONS = ("sigma", "spin")


@dataclass(frozen=True)
class SystemParams:
    """Physical parameters.

    `inversion` selects the normalization of the bare inversion z0:
    "sigma" uses z0 = (gu - gd)/(gu + gd), bounded by 1; "spin" uses half of
    that, bounded by 1/2. Only the product g^2 z0 enters the dynamics, so the
    two conventions differ by a rescaling of g.
    """

    omega1: float = 2.0
    omega2: float = 4.0
    delta: float = 1.0
    g: float = 2.0
    kappa: float = 0.01
    gamma_up: float = 0.2
    gamma_down: float = 0.1
    inversion: str = "sigma"

    def __post_init__(self):
        for name in ("omega1", "omega2", "delta", "g", "kappa", "gamma_up", "gamma_down"):
            val = getattr(self, name)
            if not isinstance(val, (int, float, np.floating, np.integer)) or not math.isfinite(val):
                raise ValidationError(f"{name} must be a finite real number, got {val!r}", field=name)
            object.__setattr__(self, name, float(val))
        for name in ("g", "kappa", "gamma_up", "gamma_down"):
            if getattr(self, name) <= 0:
                raise NonPositiveRate(f"{name} must be strictly positive", field=name)
        if self.omega1 >= self.omega2:
            raise ModeOrderViolation("omega1 must be smaller than omega2", field="omega1")
        if self.inversion not in INVERSION_CONVENTIONS:
            raise ValidationError(
                f"inversion must be one of {INVERSION_CONVENTIONS}", field="inversion"
            )

    @property
    def gamma_T(self) -> float:
        return self.gamma_up + self.gamma_down

    @property
    def gamma_D(self) -> float:
        return self.gamma_T / 2

    @property
    def z0(self) -> float:
        z = (self.gamma_up - self.gamma_down) / self.gamma_T
        return z if self.inversion == "sigma" else z / 2

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)

    def vector(self) -> np.ndarray:
        """Flat float array consumed by the compiled kernels."""
        return np.array(
            [self.omega1, self.omega2, self.delta, self.g, self.kappa,
             self.gamma_D, self.gamma_T, self.z0]
        )


def derive_params(**raw) -> SystemParams:
    """Build validated parameters from raw keyword values (defaults fill the rest)."""
    unknown = set(raw) - set(SystemParams.__dataclass_fields__)
    if unknown:
        raise ValidationError(f"unknown parameter(s): {sorted(unknown)}", field=sorted(unknown)[0])
    return SystemParams(**raw)


@dataclass(frozen=True)
class RotatingFrame:
    omega: float = 0.0

    def shifted(self, p: SystemParams) -> tuple[float, float, float]:
        """(omega1_s, omega2_s, delta_s)."""
        return p.omega1 - self.omega, p.omega2 - self.omega, p.delta - self.omega


LAB = RotatingFrame(0.0)


@dataclass(frozen=True)
class MeanFieldState:
    a1: complex = 0j
    a1s: complex = 0j
    a2: complex = 0j
    a2s: complex = 0j
    jp: complex = 0j
    jm: complex = 0j
    jz: complex = 0j

    @classmethod
    def physical(cls, a1: complex = 0, a2: complex = 0, jm: complex = 0, jz: float = 0.0):
        """Construct a state on the physical manifold from its free components."""
        jz = complex(jz)
        if abs(jz.imag) > 0:
            raise ValidationError("jz must be real on the physical manifold", field="jz")
        a1, a2, jm = complex(a1), complex(a2), complex(jm)
        return cls(a1, a1.conjugate(), a2, a2.conjugate(), jm.conjugate(), jm, jz)

    @classmethod
    def from_array(cls, x) -> "MeanFieldState":
        x = np.asarray(x, dtype=complex)
        if x.shape != (STATE_DIM,):
            raise ValidationError(f"state must have shape (7,), got {x.shape}")
        return cls(*(complex(c) for c in x))

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, c) for c in COMPONENTS], dtype=complex)

    def __array__(self, dtype=None, copy=None):
        arr = self.to_array()
        return arr if dtype is None else arr.astype(dtype)


def as_state_array(state) -> np.ndarray:
    x = np.asarray(state, dtype=complex)
    if x.shape[-1] != STATE_DIM:
        raise ValidationError(f"state must have trailing dimension 7, got {x.shape}")
    return x


def conjugacy_defect(state) -> float:
    """Max deviation from the physical manifold (conjugate pairs, real jz)."""
    x = as_state_array(state)
    d = np.maximum.reduce([
        np.abs(x[..., 1] - np.conj(x[..., 0])),
        np.abs(x[..., 3] - np.conj(x[..., 2])),
        np.abs(x[..., 4] - np.conj(x[..., 5])),
        np.abs(x[..., 6].imag),
    ])
    return float(np.max(d))


def _field(x: np.ndarray, w1: float, w2: float, d: float, p: SystemParams) -> np.ndarray:
    a1, a1s, a2, a2s, jp, jm, jz = (x[..., k] for k in range(STATE_DIM))
    g, k, gd, gt = p.g, p.kappa, p.gamma_D, p.gamma_T
    out = np.empty_like(x)
    out[..., 0] = (-k - 1j * w1) * a1 - 1j * g * jm
    out[..., 1] = (-k + 1j * w1) * a1s + 1j * g * jp
    out[..., 2] = (-k - 1j * w2) * a2 - 1j * g * jm
    out[..., 3] = (-k + 1j * w2) * a2s + 1j * g * jp
    out[..., 4] = (-gd + 1j * d) * jp - 2j * g * (a1s + a2s) * jz
    out[..., 5] = (-gd - 1j * d) * jm + 2j * g * (a1 + a2) * jz
    out[..., 6] = gt * (p.z0 - jz) + 1j * g * (a1s + a2s) * jm - 1j * g * (a1 + a2) * jp
    return out


def rhs_lab(state, p: SystemParams) -> np.ndarray:
    """Time derivative of the 7-component state in the laboratory frame.

    Accepts a single state or any array with trailing dimension 7.
    """
    return _field(as_state_array(state), p.omega1, p.omega2, p.delta, p)


def rhs_rotating(state, p: SystemParams, frame: RotatingFrame) -> np.ndarray:
    """Vector field in a frame co-rotating at `frame.omega`."""
    w1, w2, d = frame.shifted(p)
    return _field(as_state_array(state), w1, w2, d, p)


def frame_phase_factors(omega: float, t) -> np.ndarray:
    """Multipliers taking lab components to the frame rotating at omega at time t.

    a and J- rotate as e^{+i omega t}, their conjugate partners as e^{-i omega t},
    jz is unchanged.
    """
    t = np.asarray(t, dtype=float)
    e = np.exp(1j * omega * t)
    ones = np.ones_like(e)
    return np.stack([e, e.conj(), e, e.conj(), e.conj(), e, ones], axis=-1)


def to_rotating(state_lab, omega: float, t=0.0) -> np.ndarray:
    return as_state_array(state_lab) * frame_phase_factors(omega, t)


def to_lab(state_rot, omega: float, t=0.0) -> np.ndarray:
    return as_state_array(state_rot) / frame_phase_factors(omega, t)


def u1_rotate(state, phi: float) -> np.ndarray:
    """Apply the U(1) symmetry: a_i, J- pick up e^{-i phi}, partners e^{+i phi}."""
    return as_state_array(state) * frame_phase_factors(-phi, 1.0)


def observables(state) -> tuple:
    """(n1, n2, jz, dipole) with n_i = Re(a_i* a_i) and dipole = |J+|."""
    x = as_state_array(state)
    n1 = np.real(x[..., 1] * x[..., 0])
    n2 = np.real(x[..., 3] * x[..., 2])
    jz = np.real(x[..., 6])
    dip = np.abs(x[..., 4])
    if x.ndim == 1:
        return float(n1), float(n2), float(jz), float(dip)
    return n1, n2, jz, dip


def one_mode_threshold(p: SystemParams, mode_index: int = 1) -> float:
    """Critical coupling of the single-mode laser built from mode `mode_index`."""
    if p.z0 <= 0:
        raise NoLasingThreshold("no lasing threshold without population inversion (z0 <= 0)")
    if mode_index not in (1, 2):
        raise ValidationError("mode_index must be 1 or 2", field="mode_index")
    w = p.omega1 if mode_index == 1 else p.omega2
    k, gd = p.kappa, p.gamma_D
    return math.sqrt(k * gd / (2 * p.z0) * (1 + (w - p.delta) ** 2 / (k + gd) ** 2))


@dataclass
class Trajectory:
    """Uniformly sampled solution. `states` has shape (len(t), 7)."""

    t: np.ndarray
    states: np.ndarray
    params: SystemParams
    frame: RotatingFrame = LAB
    scheme: object = None
    dt: float = 0.0
    # ring-buffer continuation data written by the DDE integrator
    tail: object = field(default=None, repr=False)

    @property
    def frame_tag(self) -> str:
        return "Lab" if self.frame.omega == 0 else f"Rotating({self.frame.omega:.17g})"

    def observables(self):
        return observables(self.states)

    def lab_states(self) -> np.ndarray:
        if self.frame.omega == 0:
            return self.states
        return to_lab(self.states, self.frame.omega, self.t)


def _rk4_step(f, x, h):
    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_ode(x0, p: SystemParams, dt: float = 1e-3, T: float = 100.0,
                  frame: RotatingFrame = LAB, method: str = "rk4",
                  save_every: int = 1, rtol: float = 1e-10, atol: float = 1e-12) -> Trajectory:
    """Integrate the uncontrolled equations.

    method="rk4" is a plain fixed-step reference implementation; "rk45" uses
    scipy's adaptive Dormand-Prince solver and reports on the same grid.
    """
    if not (dt > 0 and T > 0):
        raise ValidationError("dt and T must be positive", field="T" if T <= 0 else "dt")
    n = int(round(T / dt))
    x = as_state_array(x0).astype(complex).copy()
    ts = np.arange(0, n + 1, save_every) * dt
    f = lambda y: rhs_rotating(y, p, frame)
    if method == "rk4":
        out = np.empty((len(ts), STATE_DIM), complex)
        out[0] = x
        j = 1
        for step in range(1, n + 1):
            x = _rk4_step(f, x, dt)
            if step % save_every == 0:
                out[j] = x
                j += 1
    elif method == "rk45":
        from scipy.integrate import solve_ivp

        def fr(_t, y):
            return f(y[:7] + 1j * y[7:]).view(float).reshape(-1, 2).T.ravel()

        y0 = np.concatenate([x.real, x.imag])
        sol = solve_ivp(fr, (0, ts[-1]), y0, t_eval=ts, rtol=rtol, atol=atol)
        if not sol.success:
            from .errors import ConvergenceFailure
            raise ConvergenceFailure(sol.message)
        out = (sol.y[:7] + 1j * sol.y[7:]).T
    else:
        raise ValidationError(f"unknown method {method!r}", field="method")
    return Trajectory(ts, out, p, frame, None, dt)
