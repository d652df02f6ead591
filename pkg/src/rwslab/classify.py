"""Empirical statistics of weight samples used to probe the structural
results: pattern recurrence, window distances, similarity walks,
self-commutator diagonals, the m-convexity moment identity and the moment
law of the iterated logarithm."""

from dataclasses import dataclass
import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import HypothesisError, RwslabError
from .rng import generator
from .shift import window_log_sums
from .weightlaw import law_stats


@dataclass(frozen=True)
class RecurrenceReport:
    pattern: tuple
    tol: float
    hits: np.ndarray  # 0-based start indices into the weight sequence
    first_hit: int  # -1 when there is none

    @property
    def count(self):
        return int(self.hits.size)


def _windows(weights, k):
    return sliding_window_view(np.asarray(weights, dtype=float), k)


def pattern_recurrence(sample, pattern, tol=1e-12):
    """Every overlapping window within ``tol`` (max-norm) of ``pattern``."""
    pat = np.asarray(pattern, dtype=float)
    if pat.size == 0 or pat.size > sample.length:
        raise ValueError("pattern length out of range")
    dist = np.max(np.abs(_windows(sample.weights, pat.size) - pat), axis=1)
    hits = np.flatnonzero(dist <= tol)
    return RecurrenceReport(tuple(pat), tol, hits, int(hits[0]) if hits.size else -1)


@dataclass(frozen=True)
class WindowDistance:
    distance: float
    argmin: int  # 0-based window start


def window_distance_profile(sample, target, N):
    """``min over starts n < N`` of the max-norm distance to ``target``."""
    tgt = np.asarray(target, dtype=float)
    if tgt.size > N:
        raise ValueError("target longer than the scan range")
    stop = min(N + tgt.size - 1, sample.length)
    win = _windows(sample.weights[:stop], tgt.size)[:N]
    dist = np.max(np.abs(win - tgt), axis=1)
    i = int(np.argmin(dist))
    return WindowDistance(float(dist[i]), i)


def _no_zero(sample):
    if (sample.law is not None and sample.law.p_zero() > 0) or np.any(sample.weights == 0):
        raise RwslabError("log-ratio walk needs weights without mass at 0")


def similarity_walk(sample_a, sample_b, N):
    """``sup_{n<=N} |sum_{i<=n} (log a_i - log b_i)|``."""
    _no_zero(sample_a)
    _no_zero(sample_b)
    if N > min(sample_a.length, sample_b.length):
        raise ValueError("N exceeds a sample length")
    walk = np.cumsum(sample_a.log_weights[:N] - sample_b.log_weights[:N])
    return float(np.max(np.abs(walk)))


@dataclass(frozen=True)
class StructureReport:
    self_comm_diag_max: float  # interior entries k = 2..N-1
    boundary_entry: float  # k = 1: w_1^2, the index witness
    hypo_prefix_prob: dict  # n -> (estimate, lo, hi) at ~95% (Wilson)

    def as_dict(self):
        return {
            "selfCommDiagMax": self.self_comm_diag_max,
            "boundaryEntry": self.boundary_entry,
            "hypoPrefixProb": {str(n): list(v) for n, v in self.hypo_prefix_prob.items()},
        }


def self_commutator_diagonal(weights, N):
    """Diagonal of ``T_N* T_N - T_N T_N*``: ``w_k^2 - w_{k-1}^2``."""
    w2 = np.asarray(weights[: N - 1], dtype=float) ** 2
    return np.concatenate((w2, [0.0])) - np.concatenate(([0.0], w2))


def _wilson(k, n, z=1.959963984540054):
    p = k / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return p, mid - half, mid + half


def structure_diagnostics(sample, N, law=None, trials=10_000, seed=0, hypo_n=(1, 2, 3)):
    """Interior self-commutator extremes plus Monte Carlo monotone-prefix odds."""
    if N < 2 or N - 1 > sample.length:
        raise ValueError("need 2 <= N <= sample length + 1")
    d = self_commutator_diagonal(sample.weights, N)
    interior = np.abs(d[1:-1])
    law = law if law is not None else sample.law
    probs = {}
    if law is not None and trials > 0:
        for n in hypo_n:
            x = law.draw(generator(seed, 1000 + n), trials * (n + 1)).reshape(trials, n + 1)
            k = int(np.count_nonzero(np.all(np.diff(x, axis=1) >= 0, axis=1)))
            probs[n] = _wilson(k, trials)
    return StructureReport(
        self_comm_diag_max=float(interior.max()) if interior.size else 0.0,
        boundary_entry=float(d[0]),
        hypo_prefix_prob=probs,
    )


@dataclass(frozen=True)
class MConvexResult:
    m: int
    estimate: float
    stderr: float
    target: float

    @property
    def z_score(self):
        if self.stderr == 0:
            return 0.0 if self.estimate == self.target else math.inf
        return (self.estimate - self.target) / self.stderr


def m_convex_target(law, m):
    """``(E X^2 - 1)^m``."""
    return (law.mean_power(2) - 1.0) ** m


def m_convex_target_binomial(law, m):
    """Same target expanded as ``sum_l (-1)^l C(m,l) (E X^2)^(m-l)``."""
    e2 = law.mean_power(2)
    return math.fsum((-1) ** l * math.comb(m, l) * e2 ** (m - l) for l in range(m + 1))


def m_convex_check(law, m, trials, seed=0):
    """Monte Carlo of ``E sum_l (-1)^l C(m,l) prod_{i<=m-l} X_i^2``."""
    if not 1 <= m <= 20:
        raise ValueError("m must lie in 1..20")
    x2 = law.draw(generator(seed, 2000 + m), trials * m).reshape(trials, m) ** 2
    prods = np.concatenate((np.ones((trials, 1)), np.cumprod(x2, axis=1)), axis=1)
    signs = np.array([(-1) ** l * math.comb(m, l) for l in range(m + 1)], dtype=float)
    est = prods[:, ::-1] @ signs  # column j of the reversal holds prod_{i<=m-j}
    se = float(est.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return MConvexResult(m, float(est.mean()), se, m_convex_target(law, m))


@dataclass(frozen=True)
class MomentLILReport:
    run_max: float
    run_min: float
    argmax: int
    argmin: int
    n_range: tuple
    exploratory: bool


def _lse_rows(a):
    """Column-wise log-sum-exp; a single row passes through unchanged."""
    if a.shape[0] == 1:
        return a[0]
    m = np.max(a, axis=0)
    safe = np.where(np.isfinite(m), m, 0.0)
    return safe + np.log(np.sum(np.exp(a - safe), axis=0))


def moment_lil(sample, k=1, coeffs=None, n_max=10**6, n_min=16):
    """Running extremes of ``ln ||T^n x||^2 / sqrt(2 sigma^2 n lnln n)``.

    ``x = e_k`` by default, else ``sum_j coeffs[j] e_{k+j}``. Only the basis
    case has a proven limit; general vectors are exploratory.
    """
    stats = law_stats(sample.law)
    if not stats.normalized or not stats.sigma2:
        raise HypothesisError("moment LIL needs E ln X = 0 and sigma^2 > 0")
    a = np.array([1.0] if coeffs is None else coeffs, dtype=complex)
    if n_min < 16 or n_max < n_min:
        raise ValueError("need 16 <= n_min <= n_max")
    if k < 1 or k - 1 + a.size - 1 + n_max > sample.length:
        raise ValueError("sample too short for k, coefficients and n_max")
    lw = sample.log_weights
    csum = np.concatenate(([0.0], np.cumsum(lw[: k - 1 + a.size - 1 + n_max])))
    n = np.arange(n_min, n_max + 1)
    rows = []
    with np.errstate(divide="ignore"):
        loga = np.log(np.abs(a))
    for j in range(a.size):
        start = k - 1 + j
        rows.append(2 * loga[j] + 2 * (csum[start + n] - csum[start]))
    lnorm = _lse_rows(np.array(rows))
    g = lnorm / np.sqrt(2 * stats.sigma2 * n * np.log(np.log(n)))
    imax, imin = int(np.argmax(g)), int(np.argmin(g))
    return MomentLILReport(
        run_max=float(g[imax]), run_min=float(g[imin]),
        argmax=int(n[imax]), argmin=int(n[imin]),
        n_range=(n_min, n_max), exploratory=coeffs is not None,
    )


def basis_lil_from_windows(sample, k, n):
    """The basis-vector statistic at a single ``n`` recomputed from window sums."""
    stats = law_stats(sample.law)
    s = window_log_sums(sample.log_weights[k - 1: k - 1 + n], n)[0]
    return 2 * s / math.sqrt(2 * stats.sigma2 * n * math.log(math.log(n)))
