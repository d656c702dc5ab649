"""Compiled inner loops (numba).

Parallelism is over samples only; each sample's reduction is a sequential
Kahan accumulation in fixed tuple order, so outputs are bit-identical at
any thread count.
"""

import numpy as np
from numba import njit, prange

__all__ = ["corr_kernel", "dp5_batch"]

# Dormand-Prince 5(4) tableau (flattened lower triangle) for dp5_batch
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = np.zeros((7, 7))
_DP_A[1, 0] = 1 / 5
_DP_A[2, :2] = (3 / 40, 9 / 40)
_DP_A[3, :3] = (44 / 45, -56 / 15, 32 / 9)
_DP_A[4, :4] = (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729)
_DP_A[5, :5] = (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656)
_DP_A[6, :6] = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
_DP_B5 = _DP_A[6].copy()
_DP_E = _DP_B5 - np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)


@njit(cache=True, nogil=True)
def _rhs(t, v, to_grid, to_modes, n2, lam, phalf, out):
    """out <- -i (e^{i t n^2} G(e^{-i t n^2} v) - lam v)."""
    B, m = v.shape
    phase = np.exp(1j * t * n2)
    c = np.conj(phase) * v
    vals = np.dot(c, to_grid)
    for b in range(B):
        for j in range(vals.shape[1]):
            z = vals[b, j]
            a2 = z.real * z.real + z.imag * z.imag
            w = a2
            for _ in range(phalf - 1):
                w *= a2
            vals[b, j] = w * z
    G = np.dot(vals, to_modes)
    for b in range(B):
        for l in range(m):
            out[b, l] = -1j * (phase[l] * G[b, l] - lam[b] * v[b, l])


@njit(cache=True, nogil=True)
def dp5_batch(v0, t0, t1, tol, hmax, to_grid, to_modes, n2, lam, phalf):
    """Adaptive Dormand-Prince 5(4) for a batch of interaction-picture
    rows, shared step driven by the worst member.  Returns (v, status);
    status 0 = ok, 1 = step-size underflow."""
    B, m = v0.shape
    v = v0.copy()
    if t1 == t0:
        return v, 0
    direction = 1.0 if t1 > t0 else -1.0
    K = np.empty((7, B, m), dtype=np.complex128)
    vi = np.empty((B, m), dtype=np.complex128)
    vnew = np.empty((B, m), dtype=np.complex128)
    t = t0
    _rhs(t, v, to_grid, to_modes, n2, lam, phalf, K[0])

    # starting step from the solution's own time scale
    d0 = 0.0
    d1 = 0.0
    for b in range(B):
        for l in range(m):
            sc = tol + tol * abs(v[b, l])
            d0 += (abs(v[b, l]) / sc) ** 2
            d1 += (abs(K[0, b, l]) / sc) ** 2
    d0 = np.sqrt(d0 / (B * m))
    d1 = np.sqrt(d1 / (B * m))
    if not (np.isfinite(d0) and np.isfinite(d1)):
        d0 = 1.0
        d1 = 1e10
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    for b in range(B):
        for l in range(m):
            vi[b, l] = v[b, l] + h0 * K[0, b, l]
    _rhs(t0 + h0, vi, to_grid, to_modes, n2, lam, phalf, K[1])
    d2 = 0.0
    for b in range(B):
        for l in range(m):
            sc = tol + tol * abs(v[b, l])
            d2 += (abs(K[1, b, l] - K[0, b, l]) / sc) ** 2
    d2 = np.sqrt(d2 / (B * m)) / h0
    if not np.isfinite(d2):
        d2 = 1e10
    dm = max(d1, d2)
    h1 = max(1e-6, h0 * 1e-3) if dm <= 1e-15 else (0.01 / dm) ** 0.2
    h = direction * min(min(100 * h0, h1), min(hmax, abs(t1 - t0)))

    while (t1 - t) * direction > 0:
        if abs(h) > abs(t1 - t):
            h = t1 - t
        for i in range(1, 7):
            for b in range(B):
                for l in range(m):
                    acc = 0.0 + 0.0j
                    for j in range(i):
                        acc += _DP_A[i, j] * K[j, b, l]
                    vi[b, l] = v[b, l] + h * acc
            _rhs(t + _DP_C[i] * h, vi, to_grid, to_modes, n2, lam, phalf, K[i])
        # 5th-order solution and embedded error, worst-sample RMS norm
        err = 0.0
        for b in range(B):
            acc_b = 0.0
            for l in range(m):
                sol = 0.0 + 0.0j
                ev = 0.0 + 0.0j
                for i in range(7):
                    if _DP_B5[i] != 0.0:
                        sol += _DP_B5[i] * K[i, b, l]
                    if _DP_E[i] != 0.0:
                        ev += _DP_E[i] * K[i, b, l]
                vnew[b, l] = v[b, l] + h * sol
                sc = tol + tol * max(abs(v[b, l]), abs(vnew[b, l]))
                q = abs(h * ev) / sc
                acc_b += q * q
            acc_b = np.sqrt(acc_b / m)
            if np.isnan(acc_b):
                err = np.nan
                break
            if acc_b > err:
                err = acc_b
        if np.isfinite(err) and err <= 1.0:
            t = t + h
            tmp = v
            v = vnew
            vnew = tmp
            for b in range(B):
                for l in range(m):
                    K[0, b, l] = K[6, b, l]
            factor = 5.0 if err == 0.0 else min(5.0, 0.9 * err ** -0.2)
        elif not np.isfinite(err):
            factor = 0.1
        else:
            factor = max(0.2, 0.9 * err ** -0.2)
        h = h * factor
        if (not np.isfinite(h)) or abs(h) < 1e-14 * max(1.0, abs(t)):
            return v, 1
    return v, 0


@njit(parallel=True, cache=True)
def corr_kernel(C, idx, mult):
    """Re of the Psi^(1) diagonal form per sample row of C.

    C    : (B, 2N+1) complex128 centered coefficients
    idx  : (p+1, T) int32 centered tuple indices
    mult : (T,) float64 multiplier psi/Omega
    """
    B = C.shape[0]
    T = mult.shape[0]
    p1 = idx.shape[0]
    out = np.empty(B, dtype=np.float64)
    for b in prange(B):
        acc = 0.0
        comp = 0.0
        for t in range(T):
            z = C[b, idx[0, t]]
            for j in range(1, p1):
                w = C[b, idx[j, t]]
                if j % 2 == 1:
                    w = w.conjugate()
                z = z * w
            val = mult[t] * z.real
            y = val - comp
            s = acc + y
            comp = (s - acc) - y
            acc = s
        out[b] = acc
    return out
