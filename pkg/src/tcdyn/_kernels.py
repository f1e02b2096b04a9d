"""Compiled fixed-step RK4 integrator for the delayed-feedback equations.

Scheme codes: 0 none, 1 Jz feedback, 2 omega1 modulation by n2, 3 coherent a1
feedback. Parameter vector layout matches `SystemParams.vector()`.
"""
import numpy as np
from numba import njit

NONE, JZ, OMEGA1, MIRROR = 0, 1, 2, 3


@njit(cache=True)
def rhs_into(out, x, xd, pr, wf, scheme, lam, ph):
    w1 = pr[0] - wf
    w2 = pr[1] - wf
    d = pr[2] - wf
    g, k, gd, gt, z0 = pr[3], pr[4], pr[5], pr[6], pr[7]
    a1, a1s, a2, a2s, jp, jm, jz = x[0], x[1], x[2], x[3], x[4], x[5], x[6]
    if scheme == OMEGA1:
        w1 = w1 + lam * ((xd[3] * xd[2]).real - (a2s * a2).real)
    out[0] = (-k - 1j * w1) * a1 - 1j * g * jm
    out[1] = (-k + 1j * w1) * a1s + 1j * g * jp
    out[2] = (-k - 1j * w2) * a2 - 1j * g * jm
    out[3] = (-k + 1j * w2) * a2s + 1j * g * jp
    out[4] = (-gd + 1j * d) * jp - 2j * g * (a1s + a2s) * jz
    out[5] = (-gd - 1j * d) * jm + 2j * g * (a1 + a2) * jz
    out[6] = gt * (z0 - jz) + 1j * g * (a1s + a2s) * jm - 1j * g * (a1 + a2) * jp
    if scheme == JZ:
        out[6] += lam * (xd[6] - jz)
    elif scheme == MIRROR:
        out[0] += lam * (xd[0] * ph - a1)
        out[1] += lam * (xd[1] * np.conj(ph) - a1s)


@njit(cache=True)
def _history(out, x0, wf, td):
    # constant lab-frame history expressed in the rotating frame
    e = np.exp(1j * wf * td)
    ec = np.conj(e)
    out[0] = x0[0] * e
    out[1] = x0[1] * ec
    out[2] = x0[2] * e
    out[3] = x0[3] * ec
    out[4] = x0[4] * ec
    out[5] = x0[5] * e
    out[6] = x0[6]


@njit(cache=True)
def _delayed(out, td, dt, Y, F, m, x0, wf, hist_step):
    q = td / dt
    j = int(np.floor(q))
    if j < hist_step:
        _history(out, x0, wf, td)
        return
    s = q - j
    i0 = j % m
    i1 = (j + 1) % m
    s2 = s * s
    s3 = s2 * s
    h00 = 2 * s3 - 3 * s2 + 1
    h10 = (s3 - 2 * s2 + s) * dt
    h01 = -2 * s3 + 3 * s2
    h11 = (s3 - s2) * dt
    for c in range(7):
        out[c] = h00 * Y[i0, c] + h10 * F[i0, c] + h01 * Y[i1, c] + h11 * F[i1, c]


@njit(cache=True)
def run(x, pr, wf, scheme, lam, tau, dt, k0, nsteps, stride, warm_steps,
        Y, F, x0, hist_step, out):
    """Advance `x` (modified in place) from absolute step k0 by nsteps.

    Y, F are ring buffers (length m) of states and derivatives indexed by
    absolute step modulo m. Delayed times before step `hist_step` use the
    constant history x0. Returns the number of completed steps; fewer than
    nsteps means a non-finite state was produced.
    """
    m = Y.shape[0]
    ph = np.exp(1j * wf * tau)
    xd0 = np.empty(7, np.complex128)
    xd1 = np.empty(7, np.complex128)
    xd2 = np.empty(7, np.complex128)
    k1 = np.empty(7, np.complex128)
    k2 = np.empty(7, np.complex128)
    k3 = np.empty(7, np.complex128)
    k4 = np.empty(7, np.complex128)
    xt = np.empty(7, np.complex128)
    out[0] = x
    for n in range(nsteps):
        kk = k0 + n
        t = kk * dt
        lam_eff = lam if kk >= warm_steps else 0.0
        active = scheme != NONE
        if active:
            _delayed(xd0, t - tau, dt, Y, F, m, x0, wf, hist_step)
            _delayed(xd1, t + 0.5 * dt - tau, dt, Y, F, m, x0, wf, hist_step)
            _delayed(xd2, t + dt - tau, dt, Y, F, m, x0, wf, hist_step)
        rhs_into(k1, x, xd0, pr, wf, scheme, lam_eff, ph)
        slot = kk % m
        for c in range(7):
            Y[slot, c] = x[c]
            F[slot, c] = k1[c]
            xt[c] = x[c] + 0.5 * dt * k1[c]
        rhs_into(k2, xt, xd1, pr, wf, scheme, lam_eff, ph)
        for c in range(7):
            xt[c] = x[c] + 0.5 * dt * k2[c]
        rhs_into(k3, xt, xd1, pr, wf, scheme, lam_eff, ph)
        for c in range(7):
            xt[c] = x[c] + dt * k3[c]
        rhs_into(k4, xt, xd2, pr, wf, scheme, lam_eff, ph)
        ok = True
        for c in range(7):
            x[c] = x[c] + dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c])
            if not (np.isfinite(x[c].real) and np.isfinite(x[c].imag)):
                ok = False
        if not ok:
            return n
        if (n + 1) % stride == 0:
            out[(n + 1) // stride] = x
    return nsteps
