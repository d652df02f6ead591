"""Membership of analytic functions in the random Hardy space.

For ``f(z) = sum a_n z^n`` the random norm is
``||f||^2 = sum |a_n|^2 (w_1 ... w_n)^2``; everything here works with
``log |a_n|`` so that terms of size ``e^{+-sqrt(n)}`` never overflow.
"""

from dataclasses import dataclass, field
import math
import re

import numpy as np

from .errors import GrammarError, HypothesisError
from .rng import generator
from .weightlaw import law_stats

INV_E = math.exp(-1.0)
LIL_START = 16  # ln ln n needs n >= 16 to be comfortably positive
RADIUS_RTOL = 1e-9


def _lnln(n):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(np.log(n))


class CoefficientSequence:
    """Base class. ``log_a(n)`` returns ``log |a_n|`` (``-inf`` for zeros).

    ``squared_form`` marks sequences given, as in the two worked examples
    of the theory, through ``c_n = a_n^2`` paired with a law for
    ``Y = X^2``: norm terms are then ``c_n Y_1 ... Y_n``.
    """

    squared_form = False
    grammar = ""

    def log_a(self, n):
        raise NotImplementedError

    def coef(self, n):
        return np.exp(self.log_a(n))

    def radius(self):
        """Closed-form radius of convergence, or None."""
        return None

    def lil_limits(self, sigma):
        """Closed-form (limsup, liminf) of ``|a_n|^{sqrt2 / (sigma sqrt(n lnln n))}``."""
        return None

    def deterministic_member(self, r0):
        """Whether ``sum |a_n|^2 r0^{2n}`` converges when ``radius == r0``, if known."""
        return None

    def scaled(self, t):
        return Scaled(self, t)

    def __str__(self):
        return self.grammar


def _as_n(n):
    return np.asarray(n, dtype=float)


@dataclass(frozen=True)
class PowerLaw(CoefficientSequence):
    """``a_n = n^-alpha`` for ``n >= 1``, ``a_0 = 0``."""

    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    def log_a(self, n):
        n = _as_n(n)
        with np.errstate(divide="ignore"):
            return np.where(n >= 1, -self.alpha * np.log(np.maximum(n, 1)), -np.inf)

    def radius(self):
        return 1.0

    def lil_limits(self, sigma):
        return (1.0, 1.0)

    def deterministic_member(self, r0):
        return self.alpha > 0.5

    @property
    def grammar(self):
        return f"power:alpha={self.alpha!r}"


@dataclass(frozen=True)
class SuperPower(CoefficientSequence):
    """``a_n = n^{-n^alpha}`` for ``n >= 1``, ``a_0 = 0``."""

    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    def log_a(self, n):
        n = _as_n(n)
        m = np.maximum(n, 1)
        return np.where(n >= 1, -(m ** self.alpha) * np.log(m), -np.inf)

    def radius(self):
        return 1.0 if self.alpha < 1 else math.inf

    def lil_limits(self, sigma):
        # n^alpha ln n against sqrt(n lnln n): wins iff alpha >= 1/2
        return (0.0, 0.0) if self.alpha >= 0.5 else (1.0, 1.0)

    def deterministic_member(self, r0):
        return True

    @property
    def grammar(self):
        return f"superpower:alpha={self.alpha!r}"


@dataclass(frozen=True)
class Geometric(CoefficientSequence):
    """``a_n = rho^n`` for ``n >= 0``."""

    rho: float

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")

    def log_a(self, n):
        return _as_n(n) * math.log(self.rho)

    def radius(self):
        return 1.0 / self.rho

    def lil_limits(self, sigma):
        # only consulted at the critical radius, where a_n = r0^-n = 1
        return (1.0, 1.0)

    def deterministic_member(self, r0):
        return False

    @property
    def grammar(self):
        return f"geometric:rho={self.rho!r}"


@dataclass(frozen=True)
class LILCalibrated(CoefficientSequence):
    """``a_n = exp(-c sqrt(2 sigma2 n lnln n))`` for ``n >= 16``, 1 before."""

    c: float
    sigma2: float = 4.0

    def __post_init__(self):
        if not self.c > 0 or not self.sigma2 > 0:
            raise ValueError("c and sigma2 must be positive")

    def log_a(self, n):
        n = _as_n(n)
        big = n >= LIL_START
        m = np.where(big, n, LIL_START)
        return np.where(big, -self.c * np.sqrt(2 * self.sigma2 * m * _lnln(m)), 0.0)

    def radius(self):
        return 1.0

    def lil_limits(self, sigma):
        v = math.exp(-2 * self.c * math.sqrt(self.sigma2) / sigma)
        return (v, v)

    def deterministic_member(self, r0):
        return True

    @property
    def grammar(self):
        return f"lil:c={self.c!r},sigma2={self.sigma2!r}"


def _power_tower_hits(n, base, levels):
    """Boolean mask of n equal to base^(base^...(k)) for some k >= 0."""
    n = np.asarray(n)
    hits = set()
    k = 0
    while True:
        e = base ** k
        for _ in range(levels - 1):
            e = base ** e
            if e > 10**18:
                break
        if e > 10**18:
            break
        hits.add(int(e))
        k += 1
    return np.isin(n, sorted(hits))


@dataclass(frozen=True)
class PaperDivergence(CoefficientSequence):
    """``c_n = exp(-sqrt(2n lnln n))`` for ``n >= 3``, zero at ``n = 2^(2^k)``.

    Squared form: the sum ``sum c_n Y_1...Y_n`` diverges almost surely for
    ``P(Y = e) = P(Y = 1/e) = 1/2``.
    """

    squared_form = True
    grammar = "paper_divergence"

    def log_c(self, n):
        n = _as_n(n)
        ok = (n >= 3) & ~_power_tower_hits(n.astype(np.int64), 2, 2)
        m = np.maximum(n, 3)
        return np.where(ok, -np.sqrt(2 * m * _lnln(m)), -np.inf)

    def log_a(self, n):
        return 0.5 * self.log_c(n)

    def radius(self):
        return 1.0

    def lil_limits(self, sigma):
        # c_n^{1/sqrt(2 sigma^2 n lnln n)} with sigma = 1: 1/e off the gaps, 0 on them
        return (math.exp(-1.0 / sigma), 0.0)

    def deterministic_member(self, r0):
        return True


@dataclass(frozen=True)
class PaperConvergence(CoefficientSequence):
    """``c_n = exp(-b_n sqrt(2n lnln n))`` for ``n >= 16`` with
    ``b_n = sqrt(1 + a lnlnln n / (2 lnln n))``, replaced by
    ``(e+1)^{-sqrt(2n lnlnln n)}`` at ``n = 3^(3^(3^k))``.
    """

    a: float = 4.0
    squared_form = True

    def __post_init__(self):
        if not self.a > 3:
            raise ValueError("a must exceed 3")

    def log_c(self, n):
        n = _as_n(n)
        m = np.maximum(n, LIL_START)
        ll = _lnln(m)
        lll = np.log(ll)
        b = np.sqrt(1 + self.a * lll / (2 * ll))
        regular = -b * np.sqrt(2 * m * ll)
        gap = -math.log(math.e + 1) * np.sqrt(2 * m * lll)
        hit = _power_tower_hits(n.astype(np.int64), 3, 3)
        return np.where(n >= LIL_START, np.where(hit, gap, regular), -np.inf)

    def log_a(self, n):
        return 0.5 * self.log_c(n)

    def radius(self):
        return 1.0

    def lil_limits(self, sigma):
        # off the gaps b_n -> 1 gives 1/e; on the gaps the exponent -> 0 gives 1
        return (1.0, math.exp(-1.0 / sigma))

    def deterministic_member(self, r0):
        return True

    @property
    def grammar(self):
        return f"paper_convergence:a={self.a!r}"


@dataclass(frozen=True)
class Custom(CoefficientSequence):
    """Tabulated ``a_0..a_K`` with a tail rule ``zero`` or ``last``."""

    values: tuple
    tail: str = "zero"
    source: str = ""

    def __post_init__(self):
        vals = tuple(abs(float(v)) for v in self.values)
        if not vals:
            raise ValueError("custom table is empty")
        if self.tail not in ("zero", "last"):
            raise ValueError("tail must be 'zero' or 'last'")
        object.__setattr__(self, "values", vals)

    def log_a(self, n):
        n = np.asarray(n, dtype=np.int64)
        with np.errstate(divide="ignore"):
            table = np.log(np.array(self.values))
        tail = table[-1] if self.tail == "last" else -np.inf
        idx = np.minimum(n, len(table) - 1)
        return np.where(n < len(table), table[idx], tail)

    def radius(self):
        if self.tail == "zero" or self.values[-1] == 0.0:
            return math.inf
        return 1.0

    @property
    def grammar(self):
        return f"custom:file={self.source}"


@dataclass(frozen=True)
class Scaled(CoefficientSequence):
    """``t * a_n``."""

    base: CoefficientSequence
    t: float

    def __post_init__(self):
        object.__setattr__(self, "squared_form", self.base.squared_form)

    def log_a(self, n):
        return self.base.log_a(n) + math.log(abs(self.t))

    def radius(self):
        return self.base.radius()

    @property
    def grammar(self):
        return f"{self.base.grammar}*{self.t!r}"


def read_custom(path):
    """Parse a table file: ``n,value`` lines (n = 0, 1, ...) plus ``tail=zero|last``."""
    table, tail = {}, "zero"
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("tail="):
                tail = line.split("=", 1)[1].strip()
                continue
            try:
                n_txt, v_txt = line.split(",")
                table[int(n_txt)] = float(v_txt)
            except ValueError:
                raise GrammarError(f"{path}:{lineno}: expected 'n,value', got {line!r}") from None
    if not table or min(table) < 0:
        raise GrammarError(f"{path}: no valid rows")
    vals = [table.get(n, 0.0) for n in range(max(table) + 1)]
    if tail not in ("zero", "last"):
        raise GrammarError(f"{path}: tail must be zero or last")
    return Custom(tuple(vals), tail=tail, source=str(path))


def parse_sequence(text):
    """Parse ``power:alpha=2``, ``geometric:rho=0.5``, ``paper_divergence`` etc."""
    kind, _, body = text.strip().partition(":")
    params = {}
    for part in filter(None, re.split(r"[,;]", body)):
        key, eq, val = part.partition("=")
        if not eq:
            raise GrammarError(f"expected key=value in {part!r}")
        params[key.strip()] = val.strip()

    def num(key, default=None):
        if key not in params:
            if default is None:
                raise GrammarError(f"{kind}: missing parameter {key!r}")
            return default
        try:
            return float(params.pop(key))
        except ValueError:
            raise GrammarError(f"{kind}: bad number for {key!r}") from None

    try:
        if kind == "power":
            seq = PowerLaw(num("alpha"))
        elif kind == "superpower":
            seq = SuperPower(num("alpha"))
        elif kind == "geometric":
            seq = Geometric(num("rho"))
        elif kind == "lil":
            seq = LILCalibrated(num("c"), num("sigma2", 4.0))
        elif kind == "paper_divergence":
            seq = PaperDivergence()
        elif kind == "paper_convergence":
            seq = PaperConvergence(num("a", 4.0))
        elif kind == "custom":
            if "file" not in params:
                raise GrammarError("custom: missing parameter 'file'")
            seq = read_custom(params.pop("file"))
        else:
            raise GrammarError(f"unknown sequence kind {kind!r}")
    except ValueError as exc:
        if isinstance(exc, GrammarError):
            raise
        raise GrammarError(f"{kind}: {exc}") from None
    if params:
        raise GrammarError(f"{kind}: unknown parameters {sorted(params)}")
    return seq


# ------------------------------------------------------------------- radius


def convergence_radius_of_f(seq, N=4096):
    """``liminf |a_n|^{-1/n}``: closed form when known, else the minimum of
    ``exp(-log a_n / n)`` over ``n in [N/2, N]``."""
    if N < 64:
        raise ValueError("N must be >= 64")
    rad = seq.radius()
    if rad is not None:
        return rad
    n = np.arange(N // 2, N + 1)
    la = seq.log_a(n)
    with np.errstate(over="ignore"):
        return float(np.min(np.exp(-la / n)))


# ------------------------------------------------------------ classification


@dataclass(frozen=True)
class MembershipVerdict:
    verdict: str  # member, nonMember, indeterminate
    reason: str
    radius: float
    r0: float
    size_class: dict = field(default_factory=dict)  # p -> small / large / critical
    lil_limits: tuple = None

    def as_dict(self):
        return {
            "verdict": self.verdict,
            "reason": self.reason,
            "radiusOfF": self.radius,
            "r0": self.r0,
            "sizeClass": {repr(float(p)): c for p, c in self.size_class.items()},
            "lilLimits": None if self.lil_limits is None else list(self.lil_limits),
        }


def _close(a, b):
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= RADIUS_RTOL * max(abs(a), abs(b))


def _effective_sigma(seq, stats):
    """The ``sigma`` of the LIL threshold; for squared-form sequences the law
    describes ``Y = X^2`` so ``E((ln Y)^2) = sigma2 / 4``."""
    if not stats.normalized or not stats.sigma2 or stats.sigma2 <= 0:
        raise HypothesisError(
            "LIL criteria need E ln X = 0 and sigma^2 > 0 for the weight law"
        )
    s2 = stats.sigma2 / 4 if seq.squared_form else stats.sigma2
    return math.sqrt(s2)


def size_class(radius, stats, p):
    rp = stats.law.mean_power(p) ** (1.0 / p) if not stats.degenerate else stats.R
    if _close(radius, rp):
        return "critical"
    return "small" if radius > rp else "large"


def lil_verdict(limsup, liminf):
    """Apply the LIL thresholds 1/e and 1 to (limsup, liminf)."""
    if limsup < INV_E:
        return "member", "lil_limsup_below_inv_e"
    if liminf > INV_E:
        return "nonMember", "lil_liminf_above_inv_e"
    if limsup > 1.0:
        return "nonMember", "lil_limsup_above_one"
    return "indeterminate", "lil_band_undecidable"


def classify_membership(seq, law, ps=(1.0,)):
    """Decide ``f in H_*`` from the radius of convergence, then (at the
    critical radius) from closed-form LIL exponents."""
    stats = law_stats(law)
    rad = convergence_radius_of_f(seq)
    r0 = stats.r0
    sizes = {p: size_class(rad, stats, p) for p in ps}

    def out(verdict, reason, lil=None):
        return MembershipVerdict(verdict, reason, rad, r0, sizes, lil)

    if stats.p_zero > 0:
        # finitely many nonzero norm terms almost surely
        return out("member", "zero_weight_truncates") if rad > 0 else out("nonMember", "radius_below_r0")
    if rad < r0 and not _close(rad, r0):
        return out("nonMember", "radius_below_r0")
    if rad > r0 and not _close(rad, r0):
        return out("member", "radius_above_r0")
    if stats.degenerate:
        det = seq.deterministic_member(r0)
        if det is None:
            return out("indeterminate", "no_closed_form")
        return out("member" if det else "nonMember", "deterministic_series")
    if not stats.normalized or not _close(r0, 1.0):
        return out("indeterminate", "critical_radius_unnormalized")
    sigma = _effective_sigma(seq, stats)
    lim = seq.lil_limits(sigma)
    if lim is None:
        return out("indeterminate", "no_closed_form")
    verdict, reason = lil_verdict(*lim)
    return out(verdict, reason, lim)


def lil_statistic(seq, law, n_min=LIL_START, n_max=10**6):
    """Running (max, min) over ``[n_min, n_max]`` of ``|a_n|^{sqrt2/(sigma sqrt(n lnln n))}``."""
    if n_min < LIL_START or n_max < n_min:
        raise ValueError("need 16 <= n_min <= n_max")
    sigma = _effective_sigma(seq, law_stats(law))
    n = np.arange(n_min, n_max + 1, dtype=float)
    logstat = seq.log_a(n) * math.sqrt(2.0) / (sigma * np.sqrt(n * _lnln(n)))
    return float(np.exp(np.max(logstat))), float(np.exp(np.min(logstat)))


# -------------------------------------------------------------- Monte Carlo


def norm_term_logs(seq, log_weights):
    """``log(|a_n|^2 (w_1...w_n)^2)`` for ``n = 0..len(log_weights)``.

    Squared-form sequences use ``c_n Y_1...Y_n`` with the weights as ``Y``.
    """
    N = len(log_weights)
    n = np.arange(N + 1)
    walk = np.concatenate(([0.0], np.cumsum(log_weights)))
    k = 1.0 if seq.squared_form else 2.0
    la2 = 2.0 * seq.log_a(n)
    with np.errstate(invalid="ignore"):
        t = la2 + k * walk
    # 0 * (-inf) style NaNs come from a zero weight meeting a zero coefficient
    return np.where(np.isnan(t), -np.inf, t)


@dataclass(frozen=True)
class TrialRecord:
    checkpoints: tuple  # (N/4, N/2, N)
    log_partial_sums: tuple
    count_nonneg_terms: int
    max_term_log: float
    max_term_index: int
    tail_max_log: float  # max term log over n > N/10
    divergent: bool


@dataclass(frozen=True)
class MonteCarloResult:
    trials: list
    N: int
    seed: int

    @property
    def divergent_fraction(self):
        return sum(t.divergent for t in self.trials) / len(self.trials)


DIVERGENCE_GROWTH = 1.0
DIVERGENCE_TERM_LOG = 20.0


def _trial(seq, law, N, seed, stream):
    w = law.draw(generator(seed, stream), N)
    with np.errstate(divide="ignore"):
        lw = np.log(w)
    terms = norm_term_logs(seq, lw)
    lps = np.logaddexp.accumulate(terms)
    cps = (N // 4, N // 2, N)
    vals = tuple(float(lps[c]) for c in cps)
    imax = int(np.argmax(terms))
    tail = float(np.max(terms[N // 10 + 1:])) if N // 10 + 1 <= N else -math.inf
    growth = vals[2] - vals[1] if np.isfinite(vals[1]) else (math.inf if np.isfinite(vals[2]) else 0.0)
    return TrialRecord(
        checkpoints=cps,
        log_partial_sums=vals,
        count_nonneg_terms=int(np.count_nonzero(terms >= 0)),
        max_term_log=float(terms[imax]),
        max_term_index=imax,
        tail_max_log=tail,
        divergent=bool(growth > DIVERGENCE_GROWTH or terms[imax] >= DIVERGENCE_TERM_LOG),
    )


def norm_monte_carlo(seq, law, N, trials, seed=0, map_fn=map):
    """Per-trial log partial sums of ``||f||^2`` with heuristic divergence flags.

    Trial ``i`` uses stream ``i`` of ``seed``, so results do not depend on
    ``map_fn`` (e.g. a thread pool's ordered map).
    """
    if trials < 1 or N < 4:
        raise ValueError("need trials >= 1 and N >= 4")
    recs = list(map_fn(lambda i: _trial(seq, law, N, seed, i), range(trials)))
    return MonteCarloResult(trials=recs, N=N, seed=seed)


# ---------------------------------------------------------------- sandwich


@dataclass(frozen=True)
class SandwichResult:
    p: float
    mean: float
    stderr: float
    lower: float
    upper: float
    exact: float  # closed form for p = 2, else None
    within: bool


def _series_log(log_terms):
    return float(np.logaddexp.reduce(log_terms))


def expectation_sandwich(seq, law, p, N=400, trials=10_000, seed=0):
    """Monte Carlo ``E||f||^p`` against the moment-series bounds.

    Lower bound ``(sum a_n^2 ||X||_p^{2n})^{p/2}``, upper bound
    ``sum a_n^p ||X||_p^{pn}``; for ``p = 2`` the exact second moment
    ``sum a_n^2 (E X^2)^n`` is also checked.
    """
    if not 0 < p <= 2:
        raise ValueError("p must lie in (0, 2]")
    if seq.squared_form:
        raise HypothesisError("the sandwich is stated for plain coefficient sequences")
    stats = law_stats(law)
    rad = convergence_radius_of_f(seq)
    rp = stats.R if stats.degenerate else law.mean_power(p) ** (1.0 / p)
    if _close(rad, rp):
        raise HypothesisError(
            f"radius {rad} equals ||X||_p = {rp}: bounding series convergence not decidable"
        )
    if rad < rp:
        raise HypothesisError(f"bounding series diverge: radius {rad} < ||X||_p = {rp}")
    n = np.arange(N + 1)
    la = seq.log_a(n)
    with np.errstate(divide="ignore"):
        lrp = math.log(rp) if rp > 0 else -math.inf
        lower = math.exp(0.5 * p * _series_log(2 * la + 2 * n * lrp))
        upper = math.exp(_series_log(p * la + p * n * lrp))
    vals = np.empty(trials)
    for i in range(trials):
        w = law.draw(generator(seed, i), N)
        with np.errstate(divide="ignore"):
            terms = norm_term_logs(seq, np.log(w))
        vals[i] = math.exp(0.5 * p * _series_log(terms))
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    slack = 3 * se + 1e-12 * max(1.0, abs(mean))
    within = lower - slack <= mean <= upper + slack
    exact = None
    if p == 2:
        m2 = law.mean_power(2)
        with np.errstate(divide="ignore"):
            exact = math.exp(_series_log(2 * la + n * math.log(m2))) if m2 > 0 else math.exp(2 * la[0])
        within = within and abs(mean - exact) <= slack
    return SandwichResult(p=p, mean=mean, stderr=se, lower=lower, upper=upper, exact=exact, within=within)
