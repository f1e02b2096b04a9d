"""Linearization around fixed points and spectral stability classification."""
from __future__ import annotations

import numpy as np

from .errors import ConvergenceFailure
from .model import RotatingFrame, SystemParams, as_state_array
from .steady_state import FixedPoint, FPKind, Stability

EPS_STAB = 1e-8
EPS_GAUGE = 1e-7


def jacobian_at(state, p: SystemParams, frame: RotatingFrame) -> np.ndarray:
    """Analytic 7x7 Jacobian of the rotating-frame vector field at `state`."""
    a1, a1s, a2, a2s, jp, jm, jz = as_state_array(state)
    w1, w2, d = frame.shifted(p)
    g, k, gd, gt = p.g, p.kappa, p.gamma_D, p.gamma_T
    A = np.zeros((7, 7), dtype=complex)
    A[0, 0] = -1j * w1 - k
    A[0, 5] = -1j * g
    A[1, 1] = 1j * w1 - k
    A[1, 4] = 1j * g
    A[2, 2] = -1j * w2 - k
    A[2, 5] = -1j * g
    A[3, 3] = 1j * w2 - k
    A[3, 4] = 1j * g
    A[4, 1] = A[4, 3] = -2j * g * jz
    A[4, 4] = 1j * d - gd
    A[4, 6] = -2j * g * (a1s + a2s)
    A[5, 0] = A[5, 2] = 2j * g * jz
    A[5, 5] = -1j * d - gd
    A[5, 6] = 2j * g * (a1 + a2)
    A[6, 0] = A[6, 2] = -1j * g * jp
    A[6, 1] = A[6, 3] = 1j * g * jm
    A[6, 4] = -1j * g * (a1 + a2)
    A[6, 5] = 1j * g * (a1s + a2s)
    A[6, 6] = -gt
    return A


def jacobian(fp: FixedPoint, p: SystemParams) -> np.ndarray:
    return jacobian_at(fp.state, p, fp.frame)


def eigenvalues(A: np.ndarray) -> np.ndarray:
    """Full spectrum of a dense general complex matrix (LAPACK geev)."""
    A = np.asarray(A, dtype=complex)
    if not np.all(np.isfinite(A)):
        raise ConvergenceFailure("matrix has non-finite entries")
    try:
        return np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc


def _relevant(eigs: np.ndarray, kind: FPKind, eps_gauge: float) -> np.ndarray:
    """Drop the U(1) zero mode of a non-trivial fixed point."""
    if kind == FPKind.TRIVIAL or len(eigs) == 0:
        return eigs
    i = int(np.argmin(np.abs(eigs)))
    if abs(eigs[i]) <= eps_gauge:
        return np.delete(eigs, i)
    return eigs


def classify_spectrum(eigs: np.ndarray, kind: FPKind, eps_stab: float = EPS_STAB,
                      eps_gauge: float = EPS_GAUGE) -> Stability:
    re = _relevant(np.asarray(eigs), kind, eps_gauge).real
    if np.all(re < -eps_stab):
        return Stability.STABLE
    if np.any(re > eps_stab):
        return Stability.UNSTABLE
    return Stability.MARGINAL


def classify(fp: FixedPoint, p: SystemParams, eps_stab: float = EPS_STAB,
             eps_gauge: float = EPS_GAUGE) -> Stability:
    """Fill `fp.eigenvalues` if needed and set/return its stability class."""
    if fp.eigenvalues is None:
        fp.eigenvalues = eigenvalues(jacobian(fp, p))
    fp.stability = classify_spectrum(fp.eigenvalues, fp.kind, eps_stab, eps_gauge)
    return fp.stability


def rightmost_eigenvalue(fp: FixedPoint, p: SystemParams, eps_gauge: float = EPS_GAUGE) -> complex:
    if fp.eigenvalues is None:
        fp.eigenvalues = eigenvalues(jacobian(fp, p))
    rel = _relevant(fp.eigenvalues, fp.kind, eps_gauge)
    return complex(rel[np.argmax(rel.real)])


def analyzed_fixed_points(p: SystemParams, eps_stab: float = EPS_STAB, omegas=None):
    """All fixed points with eigenvalues and stability filled in."""
    from .steady_state import all_fixed_points

    fps = all_fixed_points(p, omegas)
    for fp in fps:
        classify(fp, p, eps_stab)
    return fps
