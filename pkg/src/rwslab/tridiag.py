"""Sturm-count bisection for real symmetric tridiagonal matrices.

Used for smallest singular values of lower-bidiagonal ``lambda I - T_N``
(through the Golub-Kahan form, which keeps high relative accuracy for tiny
singular values) and for the top eigenvalue of ``Re(e^{i theta} T_N)``.
"""

import numpy as np
from numba import njit

_MAX_BISECT = 400


@njit(cache=True, nogil=True)
def _count_below(diag, offsq, x, pivmin):
    # number of eigenvalues strictly less than x (LDL^T inertia)
    n = diag.size
    count = 0
    q = diag[0] - x
    if abs(q) < pivmin:
        q = -pivmin
    if q < 0.0:
        count += 1
    for i in range(1, n):
        q = diag[i] - x - offsq[i - 1] / q
        if abs(q) < pivmin:
            q = -pivmin
        if q < 0.0:
            count += 1
    return count


@njit(cache=True, nogil=True)
def _kth_eigenvalue(diag, offsq, k, lo, hi, rtol, atol):
    # k is 0-based in ascending order; [lo, hi] must bracket it
    pivmin = 1e-300
    for i in range(offsq.size):
        if offsq[i] * 1e-300 > pivmin:
            pivmin = offsq[i] * 1e-300
    for _ in range(_MAX_BISECT):
        # geometric midpoint on a positive bracket reaches tiny values fast
        mid = np.sqrt(lo) * np.sqrt(hi) if lo > 0.0 else 0.5 * (lo + hi)
        if hi - lo <= max(atol, rtol * max(abs(lo), abs(hi))):
            return mid, True
        if mid == lo or mid == hi:
            return mid, True
        if _count_below(diag, offsq, mid, pivmin) > k:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi), False


def kth_eigenvalue(diag, off, k, rtol=1e-15, atol=0.0):
    """k-th smallest eigenvalue (0-based) of the symmetric tridiagonal (diag, off)."""
    diag = np.ascontiguousarray(diag, dtype=float)
    off = np.ascontiguousarray(off, dtype=float)
    if diag.size == 0 or off.size != diag.size - 1:
        raise ValueError("need len(off) == len(diag) - 1 >= 0")
    if not 0 <= k < diag.size:
        raise ValueError("k out of range")
    a = np.abs(off)
    rad = np.zeros(diag.size)
    rad[:-1] += a
    rad[1:] += a
    lo = float(np.min(diag - rad)) - 1e-300
    hi = float(np.max(diag + rad)) + 1e-300
    atol = max(atol, 4 * np.finfo(float).tiny)
    val, ok = _kth_eigenvalue(diag, off * off, k, lo, hi, rtol, atol)
    return val, ok


@njit(cache=True, nogil=True)
def _smin_bidiagonal(absdiag, sub, rtol, atol):
    # singular values of the bidiagonal with diagonal absdiag (length N) and
    # off-diagonal sub are the nonnegative eigenvalues of the zero-diagonal
    # 2N tridiagonal with off-diagonal (d1, e1, d2, e2, ..., dN)
    n = absdiag.size
    offsq = np.empty(2 * n - 1)
    hi = 0.0
    for i in range(n):
        offsq[2 * i] = absdiag[i] * absdiag[i]
        if i < n - 1:
            offsq[2 * i + 1] = sub[i] * sub[i]
            if absdiag[i] + sub[i] > hi:
                hi = absdiag[i] + sub[i]
        if absdiag[i] > hi:
            hi = absdiag[i]
    for i in range(n - 1):
        if sub[i] + absdiag[i + 1] > hi:
            hi = sub[i] + absdiag[i + 1]
    diag = np.zeros(2 * n)
    return _kth_eigenvalue(diag, offsq, n, 1e-307, hi * (1 + 1e-12) + 1e-300, rtol, atol)


@njit(cache=True, nogil=True)
def _smin_many(absl, sub, rtol, atol, out, ok):
    n = sub.size + 1
    d = np.empty(n)
    for j in range(absl.size):
        if absl[j] == 0.0:
            # zero diagonal: the nilpotent matrix itself, singular
            out[j] = 0.0
            ok[j] = True
            continue
        d[:] = absl[j]
        val, conv = _smin_bidiagonal(d, sub, rtol, atol)
        out[j] = val
        ok[j] = conv


def smin_shifted(sub, lams, rtol=1e-14, atol=1e-300):
    """Smallest singular value of ``lambda I - T`` for each ``lambda``.

    ``T`` is the strictly lower bidiagonal truncation with subdiagonal
    ``sub`` (nonnegative). Diagonal phase scaling makes the matrix real with
    diagonal ``|lambda|`` and off-diagonal ``sub``, so only ``|lambda|`` matters
    and repeated moduli are computed once.
    Returns (values, converged flags).
    """
    sub = np.ascontiguousarray(sub, dtype=float)
    absl, inv = np.unique(np.abs(np.atleast_1d(np.asarray(lams))), return_inverse=True)
    absl = np.ascontiguousarray(absl, dtype=float)
    out = np.empty(absl.size)
    ok = np.empty(absl.size, dtype=np.bool_)
    _smin_many(absl, sub, rtol, atol, out, ok)
    inv = inv.reshape(-1)
    return out[inv], ok[inv]


def top_eigenvalue_zero_diag(off, rtol=1e-15):
    """Largest eigenvalue of the zero-diagonal symmetric tridiagonal with ``off``."""
    off = np.asarray(off, dtype=float)
    n = off.size + 1
    return kth_eigenvalue(np.zeros(n), off, n - 1, rtol=rtol)
