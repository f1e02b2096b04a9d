"""Time-delayed (Pyragas) feedback, DDE integration, and attractor detection.

Each control adds lam * [x(t - tau) - x(t)] to the equation of motion of the
controlled quantity, so the control vanishes on any stationary state:
  JzPyragas      d/dt jz  += lam [jz(t-tau) - jz(t)]
  Omega1Pyragas  omega1   -> omega1 + lam [n2(t-tau) - n2(t)]   (a1, a1* equations)
  MirrorPyragas  d/dt a1  += lam [a1(t-tau) - a1(t)], and the conjugate for a1*
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import NonFiniteState, StepTooLarge, ValidationError, WindowTooShort
from .model import (
    LAB, STATE_DIM, RotatingFrame, SystemParams, Trajectory, as_state_array, observables,
)
from .steady_state import FixedPoint, all_fixed_points


class Variant(str, enum.Enum):
    NONE = "None"
    JZ = "JzPyragas"
    OMEGA1 = "Omega1Pyragas"
    MIRROR = "MirrorPyragas"


_CODES = {Variant.NONE: _kernels.NONE, Variant.JZ: _kernels.JZ,
          Variant.OMEGA1: _kernels.OMEGA1, Variant.MIRROR: _kernels.MIRROR}


@dataclass(frozen=True)
class FeedbackScheme:
    variant: Variant = Variant.NONE
    lam: float = 0.0
    tau: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if not math.isfinite(self.lam):
            raise ValidationError("lambda must be finite", field="lambda")
        if self.variant != Variant.NONE and not (self.tau > 0 and math.isfinite(self.tau)):
            raise ValidationError("tau must be positive for an active scheme", field="tau")

    @property
    def active(self) -> bool:
        return self.variant != Variant.NONE

    @property
    def code(self) -> int:
        return _CODES[self.variant]


NO_FEEDBACK = FeedbackScheme()


def mirror_delay(fp: FixedPoint, k: int = 1) -> float:
    """Delay 2 pi k / omega that makes the coherent feedback vanish on fp's orbit."""
    if fp.omega == 0:
        raise ValidationError("the target fixed point does not rotate", field="tau")
    return 2 * math.pi * k / abs(fp.omega)


def rhs_with_feedback(now, delayed, p: SystemParams, scheme: FeedbackScheme,
                      frame: RotatingFrame = LAB) -> np.ndarray:
    """Controlled vector field given the current and the delayed state."""
    x = as_state_array(now)
    xd = as_state_array(delayed)
    w1, w2, d = frame.shifted(p)
    lam = scheme.lam
    if scheme.variant == Variant.OMEGA1:
        w1 = w1 + lam * (np.real(xd[..., 3] * xd[..., 2]) - np.real(x[..., 3] * x[..., 2]))
    from .model import _field

    out = _field(x, w1, w2, d, p)
    if scheme.variant == Variant.JZ:
        out[..., 6] += lam * (xd[..., 6] - x[..., 6])
    elif scheme.variant == Variant.MIRROR:
        ph = np.exp(1j * frame.omega * scheme.tau)
        out[..., 0] += lam * (xd[..., 0] * ph - x[..., 0])
        out[..., 1] += lam * (xd[..., 1] * np.conj(ph) - x[..., 1])
    return out


def feedback_signal(traj: Trajectory) -> np.ndarray:
    """|q(t - tau) - q(t)| of the controlled quantity along a trajectory.

    Uses only stored samples, so tau must be a multiple of the sample spacing
    to within rounding; otherwise linear interpolation between samples is used.
    """
    s = traj.scheme
    if s is None or not s.active:
        return np.zeros(len(traj.t))
    n1, n2, jz, _ = observables(traj.states)
    if s.variant == Variant.JZ:
        q = jz.astype(complex)
    elif s.variant == Variant.OMEGA1:
        q = n2.astype(complex)
    else:
        q = traj.states[:, 0] * np.exp(-1j * traj.frame.omega * traj.t)
    td = traj.t - s.tau
    ok = td >= traj.t[0]
    qd = np.interp(td[ok], traj.t, q.real) + 1j * np.interp(td[ok], traj.t, q.imag)
    out = np.full(len(traj.t), np.nan)
    out[ok] = np.abs(qd - q[ok])
    return out


def integrate_dde(history, p: SystemParams, scheme: FeedbackScheme = NO_FEEDBACK,
                  dt: float = 1e-3, T: float = 100.0, frame: RotatingFrame = LAB,
                  save_every: int = 1, warmup: float = 0.0) -> Trajectory:
    """Fixed-step RK4 integration of the controlled equations.

    `history` is either an initial state (held constant on [-tau, 0] in the
    lab frame) or a Trajectory produced by this function, which is then
    continued seamlessly. During the first `warmup` time units the gain is 0.
    Delayed values come from cubic Hermite interpolation of stored steps.
    """
    if scheme is None:
        scheme = NO_FEEDBACK
    if not (dt > 0 and math.isfinite(dt)):
        raise ValidationError("dt must be positive", field="dt")
    if not (T > 0 and math.isfinite(T)):
        raise ValidationError("T must be positive", field="T")
    if save_every < 1:
        raise ValidationError("save_every must be >= 1", field="save_every")
    if scheme.active:
        if dt > scheme.tau / 10:
            raise StepTooLarge(f"dt={dt} exceeds tau/10={scheme.tau / 10}", field="dt")
    nsteps = int(round(T / dt))
    nsteps += -nsteps % save_every  # whole sampling strides keep resumed grids aligned
    m = int(math.ceil(scheme.tau / dt)) + 4 if scheme.active else 2
    Y = np.zeros((m, STATE_DIM), complex)
    F = np.zeros((m, STATE_DIM), complex)

    if isinstance(history, Trajectory):
        tail = history.tail
        if tail is None or not math.isclose(tail["dt"], dt, rel_tol=1e-12):
            raise ValidationError("continuation needs a DDE trajectory with the same dt", field="dt")
        if history.frame != frame:
            raise ValidationError("continuation must use the same frame", field="frame")
        k0 = tail["k"]
        x = tail["x"].copy()
        x0 = tail["x0"]
        oldY, oldF, mo, hist_step = tail["Y"], tail["F"], tail["Y"].shape[0], tail["hist_step"]
        # copy the still-needed steps into the (possibly resized) buffer
        have_lo = k0 - mo
        if scheme.active and have_lo > max(k0 - m + 2, hist_step):
            raise ValidationError("stored history shorter than the new delay", field="tau")
        for kk in range(max(have_lo, k0 - m, hist_step), k0):
            Y[kk % m] = oldY[kk % mo]
            F[kk % m] = oldF[kk % mo]
    else:
        x = as_state_array(history).astype(complex).copy()
        if x.shape != (STATE_DIM,):
            raise ValidationError("initial state must have 7 components")
        k0, x0, hist_step = 0, x.copy(), 0

    out = np.empty((nsteps // save_every + 1, STATE_DIM), complex)
    warm_steps = int(round(warmup / dt))
    done = _kernels.run(x, p.vector(), float(frame.omega), scheme.code, float(scheme.lam),
                        float(scheme.tau), float(dt), k0, nsteps, save_every, warm_steps,
                        Y, F, x0, hist_step, out)
    t = (k0 + np.arange(out.shape[0]) * save_every) * dt
    if done < nsteps:
        nkeep = done // save_every + 1
        partial = Trajectory(t[:nkeep], out[:nkeep], p, frame, scheme, dt)
        raise NonFiniteState(f"state became non-finite at t={(k0 + done) * dt:.6g}",
                             time=(k0 + done) * dt, trajectory=partial)
    tail = {"Y": Y, "F": F, "k": k0 + nsteps, "x": x.copy(), "x0": x0,
            "hist_step": hist_step, "dt": dt}
    return Trajectory(t, out, p, frame, scheme, dt, tail)


class SteadyKind(str, enum.Enum):
    FIXED_POINT = "FixedPointConverged"
    LIMIT_CYCLE = "LimitCycle"
    UNDECIDED = "Undecided"


@dataclass
class SteadyClassification:
    kind: SteadyKind
    fp_index: int | None = None
    period: float | None = None
    amplitude: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def __str__(self):
        if self.kind == SteadyKind.FIXED_POINT:
            return f"FixedPointConverged({self.fp_index})"
        if self.kind == SteadyKind.LIMIT_CYCLE:
            return f"LimitCycle(period={self.period:.6g}, amplitude={self.amplitude:.6g})"
        return "Undecided"


def periodicity(signal: np.ndarray, ds: float, harmonics_bins: int = 3):
    """Dominant period and the fraction of oscillating power on its harmonic comb."""
    x = np.asarray(signal, float) - np.mean(signal)
    n = len(x)
    spec = np.abs(np.fft.rfft(x * np.hanning(n))) ** 2
    spec[0] = 0.0
    total = spec.sum()
    if total <= 0:
        return math.inf, 0.0
    kp = int(np.argmax(spec))
    # parabolic interpolation of the peak in log power
    if 0 < kp < len(spec) - 1 and min(spec[kp - 1:kp + 2]) > 0:
        lm, l0, lp = np.log(spec[kp - 1:kp + 2])
        den = lm - 2 * l0 + lp
        delta = 0.5 * (lm - lp) / den if den != 0 else 0.0
    else:
        delta = 0.0
    fpk = kp + delta
    mask = np.zeros(len(spec), bool)
    h = 1
    while h * fpk < len(spec) - 1:
        c = int(round(h * fpk))
        mask[max(c - harmonics_bins, 1):c + harmonics_bins + 1] = True
        h += 1
    period = n * ds / fpk if fpk > 0 else math.inf
    return period, float(spec[mask].sum() / total)


def detect_steady(traj: Trajectory, window: float = 200.0, tol_fp: float = 1e-6,
                  tol_cycle: float = 0.1, fixed_points: list[FixedPoint] | None = None
                  ) -> SteadyClassification:
    """Classify the long-time behaviour from the trailing `window` of a trajectory."""
    duration = traj.t[-1] - traj.t[0]
    if duration < 2 * window:
        raise WindowTooShort(f"trajectory length {duration:.6g} < 2*window={2 * window:.6g}",
                             field="window")
    ds = traj.t[1] - traj.t[0]
    nwin = int(round(window / ds)) + 1
    n1, n2, jz, _ = observables(traj.states[-nwin:])
    p2p1, p2p2 = float(np.ptp(n1)), float(np.ptp(n2))
    diag = {"ptp_n1": p2p1, "ptp_n2": p2p2, "mean_n1": float(n1.mean()),
            "mean_n2": float(n2.mean()), "mean_jz": float(jz.mean())}
    if (p2p1 <= tol_fp * max(1.0, abs(n1.mean()))
            and p2p2 <= tol_fp * max(1.0, abs(n2.mean()))):
        fps = all_fixed_points(traj.params) if fixed_points is None else fixed_points
        target = np.array([n1[-1], n2[-1], jz[-1]])
        dist = [float(np.linalg.norm(fp.obs - target)) for fp in fps]
        idx = int(np.argmin(dist))
        diag["fp_distance"] = dist[idx]
        return SteadyClassification(SteadyKind.FIXED_POINT, fp_index=idx, diagnostics=diag)
    period, frac = periodicity(n1, ds)
    half = nwin // 2
    amp_a, amp_b = np.ptp(n1[:half]), np.ptp(n1[half:])
    drift = abs(amp_a - amp_b) / max(amp_a, amp_b)
    diag.update(comb_fraction=frac, amplitude_drift=float(drift))
    if frac >= 1 - tol_cycle and drift <= 0.1 and period < window / 2:
        return SteadyClassification(SteadyKind.LIMIT_CYCLE, period=period, amplitude=p2p1,
                                    diagnostics=diag)
    return SteadyClassification(SteadyKind.UNDECIDED, diagnostics=diag)


def run_until_steady(x0, p: SystemParams, scheme: FeedbackScheme = NO_FEEDBACK,
                     dt: float = 1e-3, T_max: float = 10000.0, window: float = 200.0,
                     tol_fp: float = 1e-6, tol_cycle: float = 0.1, chunk: float | None = None,
                     save_every: int = 10, min_time: float = 0.0, frame: RotatingFrame = LAB,
                     fixed_points: list[FixedPoint] | None = None, keep: float | None = None):
    """Integrate in chunks until the trailing window is a fixed point, or T_max.

    Returns (classification, trajectory); the trajectory holds the last `keep`
    time units (default 2*window) of samples. Limit cycles are only reported at
    T_max since slowly converging transients can look periodic.
    """
    chunk = max(2 * window, 500.0) if chunk is None else chunk
    keep = 2 * window if keep is None else keep
    fps = all_fixed_points(p) if fixed_points is None else fixed_points
    tr = integrate_dde(x0, p, scheme, dt, min(chunk, T_max), frame, save_every)
    tbuf, sbuf = tr.t, tr.states
    while True:
        nkeep = int(round(keep / (dt * save_every))) + 1
        tbuf, sbuf = tbuf[-nkeep:], sbuf[-nkeep:]
        view = Trajectory(tbuf, sbuf, p, frame, scheme, dt)
        t_now = tr.t[-1]
        if t_now - tbuf[0] >= 2 * window - 1e-9:
            cls = detect_steady(view, window, tol_fp, tol_cycle, fps)
            if cls.kind == SteadyKind.FIXED_POINT and t_now >= min_time:
                break
            if t_now >= T_max - 1e-9:
                break
        elif t_now >= T_max - 1e-9:
            raise WindowTooShort("T_max shorter than 2*window", field="T")
        tr = integrate_dde(tr, p, scheme, dt, min(chunk, T_max - t_now), frame, save_every)
        tbuf = np.concatenate([tbuf, tr.t[1:]])
        sbuf = np.concatenate([sbuf, tr.states[1:]])
    cls.diagnostics["t_end"] = float(t_now)
    return cls, Trajectory(tbuf, sbuf, p, frame, scheme, dt, tr.tail)
