"""Iterated Aluthge transforms of weighted shifts.

The transform of a weighted shift has weights ``sqrt(w_i w_{i+1})``, so the
n-th iterate has weights ``Y_k(n) = prod_i w_{k+i}^{C(n,i) / 2^n}``.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.signal import fftconvolve

from .errors import RwslabError
from .weightlaw import law_stats


def aluthge_step(weights):
    """Weights of one Aluthge transform: ``sqrt(w_i w_{i+1})`` (log space)."""
    w = np.asarray(weights, dtype=float)
    if w.size < 2:
        raise ValueError("need at least two weights")
    with np.errstate(divide="ignore"):
        lw = np.log(w)
    return np.exp(0.5 * (lw[:-1] + lw[1:]))


def aluthge_iterate(weights, n):
    w = np.asarray(weights, dtype=float)
    for _ in range(n):
        w = aluthge_step(w)
    return w


def binomial_weights(n):
    """``C(n, i) / 2^n`` for ``i = 0..n``.

    The ratio recurrence ``c_{i+1} = c_i (n - i) / (i + 1)`` runs on logs,
    since ``2^-n`` itself underflows past ``n = 1074``. The cumulative
    rounding is removed by renormalizing to unit sum.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    i = np.arange(n)
    steps = np.log(n - i) - np.log(i + 1.0)
    logc = np.concatenate(([0.0], np.cumsum(steps))) - n * math.log(2.0)
    c = np.exp(logc)
    return c / math.fsum(c)


def _log_y(log_w, n, ks):
    """``log Y_k(n)`` for 0-based start indices ``ks``; ``-inf`` on any zero."""
    c = binomial_weights(n)
    win = log_w[ks[:, None] + np.arange(n + 1)]
    with np.errstate(invalid="ignore"):
        out = win @ c
    return np.where(np.any(np.isneginf(win), axis=1), -np.inf, out)


def closed_form_weight(sample, n, k):
    """``Y_k(n)`` for 1-based ``k``, straight from the binomial formula."""
    if n < 0 or k < 1 or k + n > sample.length:
        raise ValueError(f"need n >= 0, k >= 1 and k + n <= {sample.length}")
    return float(np.exp(_log_y(sample.log_weights, n, np.array([k - 1]))[0]))


def closed_form_all(log_weights, n, count):
    """``log Y_k(n)`` for ``k = 1..count`` by FFT convolution."""
    lw = np.asarray(log_weights, dtype=float)
    if count + n > lw.size:
        raise ValueError("not enough weights")
    seg = lw[: count + n]
    zero = ~np.isfinite(seg)
    finite = np.where(zero, 0.0, seg)
    c = binomial_weights(n)
    vals = fftconvolve(finite, c[::-1], mode="valid")[:count]
    zc = np.concatenate(([0], np.cumsum(zero)))
    hit = (zc[n + 1: n + 1 + count] - zc[:count]) > 0
    return np.where(hit, -np.inf, vals)


@dataclass(frozen=True)
class AluthgeReport:
    n_values: tuple
    median_dev: tuple  # per depth: median over k <= K of |Y_k(n) - r0|
    sup_weight: tuple  # per depth: max of Y_k(n) over the sup window
    sup_window: tuple  # per depth: number of indices scanned for sup_weight
    r0: float

    def as_dict(self):
        return {
            "nValues": list(self.n_values),
            "medianDev": list(self.median_dev),
            "supWeight": list(self.sup_weight),
            "supWindow": list(self.sup_window),
            "r0": self.r0,
        }

    def csv_rows(self):
        return [(n, d, s) for n, d, s in zip(self.n_values, self.median_dev, self.sup_weight)]


def convergence_report(sample, n_values, K, sup_window=None):
    """Deviation of the n-th iterate's weights from ``r0`` and their sup.

    ``sup_weight`` scans ``min(K 2^n, sup_window, available)`` indices; the
    window actually used is reported.
    """
    if sample.law is None:
        raise ValueError("sample needs its law for r0")
    r0 = law_stats(sample.law).r0
    lw = sample.log_weights
    med, sup, used = [], [], []
    for n in n_values:
        if K + n > sample.length:
            raise RwslabError(f"depth {n} with K={K} needs {K + n} weights, sample has {sample.length}")
        avail = sample.length - n
        cap = K * 2 ** min(n, 62)
        m = min(avail, cap, sup_window if sup_window is not None else avail)
        m = max(m, K)
        logy = closed_form_all(lw, n, m)
        y = np.exp(logy)
        med.append(float(np.median(np.abs(y[:K] - r0))))
        sup.append(float(np.max(y)))
        used.append(int(m))
    return AluthgeReport(tuple(n_values), tuple(med), tuple(sup), tuple(used), r0)
