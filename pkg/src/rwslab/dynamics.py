"""Linear dynamics of the backward shift ``T*`` from the weight law, plus the
orbit statistics behind the criteria."""

from dataclasses import dataclass

import numpy as np

from .errors import RwslabError
from .weightlaw import NORMALIZATION_TOL

YES, NO, UNMET = "almostSurelyYes", "almostSurelyNo", "hypothesisNotMet"
PROPERTIES = ("supercyclic", "hypercyclic", "liYorke", "mixing", "chaotic", "freqHypercyclic")


@dataclass(frozen=True)
class DynamicsVerdict:
    """Verdicts about ``T*`` (the backward shift), one per property."""

    supercyclic: str
    hypercyclic: str
    liYorke: str
    mixing: str
    chaotic: str
    freqHypercyclic: str
    nonDegenerate: bool
    noZeroMass: bool

    def as_dict(self):
        return dict(self.__dict__)


def classify_dynamics(stats):
    """Case table driven by ``E ln X`` and ``R`` (non-degenerate, no mass at 0)."""
    nondeg, nozero = not stats.degenerate, stats.p_zero == 0.0
    if not (nondeg and nozero):
        return DynamicsVerdict(*(UNMET,) * 6, nondeg, nozero)
    m = stats.mean_log
    positive = m > NORMALIZATION_TOL
    nonneg = m >= -NORMALIZATION_TOL

    def yn(flag):
        return YES if flag else NO

    return DynamicsVerdict(
        supercyclic=YES,
        hypercyclic=yn(nonneg),
        liYorke=yn(stats.R > 1.0),
        mixing=yn(positive),
        chaotic=yn(positive),
        freqHypercyclic=yn(positive),
        nonDegenerate=nondeg,
        noZeroMass=nozero,
    )


@dataclass(frozen=True)
class OrbitStatistics:
    salas_sup: np.ndarray  # running max of log(w_1...w_n)
    chaos_series: np.ndarray  # log partial sums of sum (w_1...w_n)^-2
    c00_decay: float  # log(w_1...w_N)

    def as_dict(self):
        N = self.salas_sup.size
        return {
            "N": N,
            "salasSup": float(self.salas_sup[-1]),
            "chaosSeries": {"half": float(self.chaos_series[N // 2 - 1]), "full": float(self.chaos_series[-1])},
            "c00decay": self.c00_decay,
        }


def orbit_statistics(sample, N):
    """Log-space orbit diagnostics over the first ``N`` weights."""
    if sample.law is not None and sample.law.p_zero() > 0:
        raise RwslabError(
            "weight law charges 0: products vanish and T* has an infinite-dimensional kernel"
        )
    if N < 2 or N > sample.length:
        raise ValueError("need 2 <= N <= sample length")
    lw = sample.log_weights[:N]
    if not np.all(np.isfinite(lw)):
        raise RwslabError("sample contains a zero weight")
    walk = np.cumsum(lw)
    return OrbitStatistics(
        salas_sup=np.maximum.accumulate(walk),
        chaos_series=np.logaddexp.accumulate(-2.0 * walk),
        c00_decay=float(walk[-1]),
    )
