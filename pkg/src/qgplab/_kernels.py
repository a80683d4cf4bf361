"""Hot numerical kernels with a numba fast path and a pure-Python fallback.

Set QGPLAB_PURE_NUMPY=1 to skip numba entirely (the same source functions
run uninstrumented).  QGPLAB_THREADS caps the numba thread pool.  Both
paths execute identical arithmetic; results agree to the last bit unless
the compiler reassociates (fastmath is off, so it does not).
"""
from __future__ import annotations

import os

import numpy as np

PURE_NUMPY = os.environ.get("QGPLAB_PURE_NUMPY", "0") not in ("", "0", "false", "no")

numba = None
if not PURE_NUMPY:
    try:
        import numba  # type: ignore
    except ImportError:
        numba = None
        PURE_NUMPY = True

if numba is not None:
    cap = os.environ.get("QGPLAB_THREADS", "")
    if cap:
        try:
            numba.set_num_threads(max(1, min(int(cap), numba.config.NUMBA_NUM_THREADS)))
        except (ValueError, RuntimeError):
            pass


def _jit(fn):
    if numba is None:
        return fn
    return numba.njit(cache=True, fastmath=False)(fn)


# -- soliton profile march ----------------------------------------------------
#
# The half-profile solves s' = (eta0 - s^2)/sqrt(2(b0 - 2*kappa*s^2)) for
# s = sqrt(eta0 - eta) starting from s(0) = 0.  Marching u = sqrt(eta0) - s
# keeps the decaying tail relatively accurate (u ~ const * exp(-rate*x)).
# The right-hand side is smooth and nowhere degenerate on the branch, so a
# plain RK4 substep loop reaches near machine accuracy.

def _march_profile_py(eta0: float, b0: float, kappa: float, dx: float, m: int, sub: int):
    r0 = np.sqrt(eta0)
    u = np.empty(m + 1)
    u[0] = r0
    h = dx / sub
    uu = r0
    for j in range(1, m + 1):
        for _ in range(sub):
            s = r0 - uu
            k1 = -(eta0 - s * s) / np.sqrt(2.0 * (b0 - 2.0 * kappa * s * s))
            s = r0 - (uu + 0.5 * h * k1)
            k2 = -(eta0 - s * s) / np.sqrt(2.0 * (b0 - 2.0 * kappa * s * s))
            s = r0 - (uu + 0.5 * h * k2)
            k3 = -(eta0 - s * s) / np.sqrt(2.0 * (b0 - 2.0 * kappa * s * s))
            s = r0 - (uu + h * k3)
            k4 = -(eta0 - s * s) / np.sqrt(2.0 * (b0 - 2.0 * kappa * s * s))
            uu = uu + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        u[j] = uu
    return u


march_profile = _jit(_march_profile_py)


# -- symmetric tridiagonal spectral counting ----------------------------------
#
# LDL^T pivot signs at shift x: the number of negative pivots equals the
# number of eigenvalues below x (Sturm sequence).  Returns -1 when an exact
# zero pivot is hit so the caller can retry at a perturbed shift.

def _sturm_count_py(diag: np.ndarray, off: np.ndarray, x: float) -> int:
    n = diag.shape[0]
    count = 0
    d = diag[0] - x
    if d == 0.0:
        return -1
    if d < 0.0:
        count += 1
    for i in range(1, n):
        d = (diag[i] - x) - off[i - 1] * off[i - 1] / d
        if d == 0.0:
            return -1
        if d < 0.0:
            count += 1
    return count


sturm_count = _jit(_sturm_count_py)


# -- tridiagonal solve with partial pivoting ----------------------------------
#
# Solves (T - shift*I) y = b for the inverse-iteration eigenvector step.
# Row swaps introduce a second superdiagonal (array c2).

def _tridiag_solve_py(diag: np.ndarray, off: np.ndarray, shift: float, b: np.ndarray):
    n = diag.shape[0]
    dl = np.empty(n)
    du = np.empty(n)
    c2 = np.zeros(n)
    y = b.copy()
    dl[:] = diag - shift
    du[:n - 1] = off
    du[n - 1] = 0.0
    sub = off.copy()
    for i in range(n - 1):
        if abs(sub[i]) > abs(dl[i]):
            # swap rows i, i+1
            dl[i], sub[i] = sub[i], dl[i]
            tmp = du[i]
            du[i] = dl[i + 1]
            dl[i + 1] = tmp
            if i < n - 2:
                c2[i] = du[i + 1]
                du[i + 1] = 0.0
            y[i], y[i + 1] = y[i + 1], y[i]
        piv = dl[i]
        if piv == 0.0:
            piv = 1e-300
            dl[i] = piv
        w = sub[i] / piv
        dl[i + 1] -= w * du[i]
        if i < n - 2:
            du[i + 1] -= w * c2[i]
        y[i + 1] -= w * y[i]
    if dl[n - 1] == 0.0:
        dl[n - 1] = 1e-300
    y[n - 1] /= dl[n - 1]
    y[n - 2] = (y[n - 2] - du[n - 2] * y[n - 1]) / dl[n - 2]
    for i in range(n - 3, -1, -1):
        y[i] = (y[i] - du[i] * y[i + 1] - c2[i] * y[i + 2]) / dl[i]
    return y


tridiag_solve = _jit(_tridiag_solve_py)


# -- pointwise evolution nonlinearity -----------------------------------------
#
# Fills q = eta_xx/(2(1-eta)) + eta_x^2/(4(1-eta)^2) + v^2 and u = -2*v*eta
# given physical-space fields; returns max(eta) for frame monitoring.

def _hydro_nonlinear_jit(eta, v, ex, exx, q, u):
    n = eta.shape[0]
    mx = eta[0]
    for i in range(n):
        om = 1.0 - eta[i]
        q[i] = exx[i] / (2.0 * om) + ex[i] * ex[i] / (4.0 * om * om) + v[i] * v[i]
        u[i] = -2.0 * v[i] * eta[i]
        if eta[i] > mx:
            mx = eta[i]
    return mx


def _hydro_nonlinear_numpy(eta, v, ex, exx, q, u):
    om = 1.0 - eta
    np.divide(exx, 2.0 * om, out=q)
    q += ex * ex / (4.0 * om * om)
    q += v * v
    np.multiply(v, eta, out=u)
    u *= -2.0
    return float(eta.max())


hydro_nonlinear_numpy = _hydro_nonlinear_numpy
hydro_nonlinear_numba = None if numba is None else _jit(_hydro_nonlinear_jit)
hydro_nonlinear = hydro_nonlinear_numpy if numba is None else hydro_nonlinear_numba

# pure-source references for benchmarking both paths side by side
march_profile_py = _march_profile_py
sturm_count_py = _sturm_count_py
tridiag_solve_py = _tridiag_solve_py
