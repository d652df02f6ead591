"""Polynomial domination between the random shift and deterministic operators.

``A`` is dominated by ``B`` when ``||p(A, A*)|| <= ||p(B, B*)||`` for every
polynomial ``p`` in two free variables. For weighted shifts this reduces to
containments between n-spectra: the closures of the sets of length-``n``
windows of the weight sequence.
"""

from dataclasses import dataclass
import itertools
import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.optimize import minimize_scalar

from .errors import GrammarError, HypothesisError
from .rng import generator
from .shift import (
    S, SA, FreePolynomial, TruncatedShift, analytic, eval_free_poly, operator_norm,
    poly_norm_lower_bound, window_log_sums, zero_free_blocks,
)
from .weightlaw import law_stats

_KEY_DIGITS = 12


def _key(t):
    return tuple(round(float(x), _KEY_DIGITS) + 0.0 for x in t)


@dataclass(frozen=True)
class DeterministicShift:
    """Eventually periodic weights: ``prefix`` then ``period`` forever.

    Bilateral shifts ignore ``prefix`` and repeat ``period`` in both
    directions.
    """

    period: tuple
    prefix: tuple = ()
    bilateral: bool = False

    def __post_init__(self):
        per = tuple(float(x) for x in self.period)
        pre = tuple(float(x) for x in self.prefix)
        if not per:
            raise ValueError("period must be nonempty")
        if any(x < 0 or not math.isfinite(x) for x in per + pre):
            raise ValueError("weights must be finite and nonnegative")
        if self.bilateral and pre:
            raise ValueError("bilateral shifts take no prefix")
        object.__setattr__(self, "period", per)
        object.__setattr__(self, "prefix", pre)

    def weights(self, length):
        """First ``length`` weights (one period's phase for bilateral)."""
        reps = max(0, -(-(length - len(self.prefix)) // len(self.period)))
        seq = self.prefix + self.period * reps
        return np.array(seq[:length], dtype=float)

    @property
    def first_weight(self):
        return (self.prefix + self.period)[0]

    def describe(self):
        if self.bilateral:
            return "bilateral;period=" + ",".join(map(repr, self.period))
        head = "prefix=" + ",".join(map(repr, self.prefix)) + ";" if self.prefix else ""
        return head + "period=" + ",".join(map(repr, self.period))

    __str__ = describe


def parse_shift(text):
    """``prefix=0,1;period=1,2`` or ``bilateral;period=1,2``."""
    bilateral, fields = False, {}
    for part in filter(None, (p.strip() for p in text.split(";"))):
        if part == "bilateral":
            bilateral = True
            continue
        key, eq, val = part.partition("=")
        if not eq or key.strip() not in ("prefix", "period"):
            raise GrammarError(f"bad shift field {part!r}")
        try:
            fields[key.strip()] = tuple(float(v) for v in val.split(",") if v.strip())
        except ValueError:
            raise GrammarError(f"bad number in {part!r}") from None
    if "period" not in fields:
        raise GrammarError("shift needs a period")
    try:
        return DeterministicShift(fields["period"], fields.get("prefix", ()), bilateral)
    except ValueError as exc:
        raise GrammarError(str(exc)) from None


# ----------------------------------------------------------------- n-spectra


@dataclass(frozen=True)
class NSpectrum:
    n: int
    tuples: frozenset

    def __contains__(self, t):
        return _key(t) in self.tuples

    def __len__(self):
        return len(self.tuples)

    def array(self):
        return np.array(sorted(self.tuples), dtype=float).reshape(-1, self.n)


def n_spectrum_exact(A, n):
    """All length-``n`` windows of an eventually periodic weight sequence.

    Windows starting past ``len(prefix) + len(period)`` repeat earlier ones,
    so the set is finite and computed exactly.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    P = len(A.period)
    starts = P if A.bilateral else len(A.prefix) + P
    seq = A.weights(starts + n) if not A.bilateral else np.array(A.period * (n // P + 2))
    win = sliding_window_view(seq, n)[:starts]
    return NSpectrum(n=n, tuples=frozenset(_key(w) for w in win))


@dataclass(frozen=True)
class CoverageReport:
    n: int
    eps: float
    coverage: float
    witnesses: dict  # target tuple -> first window start index, -1 if missed


def n_spectrum_empirical(sample, n, eps, targets):
    """Fraction of ``targets`` with a sample window within ``eps`` (max-norm)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if n < 1 or n > sample.length:
        raise ValueError("window length out of range")
    win = sliding_window_view(sample.weights, n)
    targets = [tuple(map(float, t)) for t in targets]
    if not targets:
        raise ValueError("targets must be nonempty")
    wit = {}
    atoms = sample.law.ess_range().atoms if sample.law is not None else None
    gap = np.min(np.diff(atoms)) if atoms is not None and len(atoms) > 1 else math.inf
    if atoms is not None and eps < gap / 2:
        # exact tuple counting: one pass to map each distinct window to its first start
        uniq, first = np.unique(win, axis=0, return_index=True)
        index = {_key(u): int(i) for u, i in zip(uniq, first)}
        for t in targets:
            hit = [i for k, i in index.items() if max(abs(a - b) for a, b in zip(k, t)) <= eps]
            wit[t] = min(hit) if hit else -1
    else:
        for t in targets:
            close = np.all(np.abs(win - np.asarray(t)) <= eps, axis=1)
            idx = np.flatnonzero(close)
            wit[t] = int(idx[0]) if idx.size else -1
    cov = sum(v >= 0 for v in wit.values()) / len(wit)
    return CoverageReport(n=n, eps=eps, coverage=cov, witnesses=wit)


# ---------------------------------------------------------- constructions


def tuples_up_to(values, max_len):
    """All tuples over ``values`` of length 1..max_len, length-then-lex order."""
    values = sorted(values)
    for L in range(1, max_len + 1):
        yield from itertools.product(values, repeat=L)


def universal_shift(law, max_tuple_len, grid_step=0.01):
    """Concatenate ``0, eta`` over every tuple ``eta`` of nonzero net points.

    Requires 0 in the essential range; the result repeats the block forever.
    """
    ess = law.ess_range()
    if not ess.has_zero:
        raise HypothesisError("0 is not in the essential range: no universal model shift exists")
    pts = ess.net(grid_step, nonzero=True)
    block = []
    for eta in tuples_up_to(pts, max_tuple_len):
        block.append(0.0)
        block.extend(eta)
    block = tuple(block) or (0.0,)
    return DeterministicShift(period=block, prefix=block)


def blocks_shift(tuples, lead_zero=False):
    """Weights ``eta_1, 0, eta_2, 0, ...`` (optionally led by a 0): the direct
    sum of truncated shifts ``W(eta_i)``, optionally preceded by the zero
    operator on a line."""
    seq = [0.0] if lead_zero else []
    for eta in tuples:
        seq.extend(eta)
        seq.append(0.0)
    return seq


def example_fixtures(max_len=4, atoms=(1.0, 2.0)):
    """Periodic versions of the four direct sums over tuples in ``atoms``.

    ``A1 = W1+W2+...``, ``A2 = W0+W1+...``, ``A3 = W0+W1+W0+W2+...``,
    ``A4 = W1+W0+W2+...`` where ``W0`` is zero on a line; the tuple list is
    cut at ``max_len`` and repeated.
    """
    etas = list(tuples_up_to(atoms, max_len))
    rest = blocks_shift(etas[1:])
    return {
        "A1": DeterministicShift(period=blocks_shift(etas)),
        "A2": DeterministicShift(period=[x for eta in etas for x in (0.0,) + eta]),
        "A3": DeterministicShift(prefix=[0.0, *etas[0], 0.0, 0.0], period=rest),
        "A4": DeterministicShift(prefix=[*etas[0], 0.0, 0.0], period=rest),
    }


def split_by_first_atom(atoms=(1.0, 2.0), first=2.0, max_len=4):
    """Direct sum of ``W(eta)`` over tuples ``eta`` starting with ``first``."""
    etas = [e for e in tuples_up_to(atoms, max_len) if e[0] == first]
    return DeterministicShift(period=blocks_shift(etas))


# ------------------------------------------------------------ verdicts


@dataclass(frozen=True)
class DominationVerdict:
    verdict: str  # almostSurelyYes, almostSurelyNo, undecidedAtDepth
    clause: str
    satisfied: tuple = ()
    depth: int = None
    failure: tuple = None  # (n, missing tuple) when a containment failed
    note: str = ""

    def as_dict(self):
        return {
            "verdict": self.verdict, "clause": self.clause,
            "satisfied": list(self.satisfied), "depth": self.depth,
            "failure": None if self.failure is None else [self.failure[0], list(self.failure[1])],
            "note": self.note,
        }


class _Containment:
    """Checks ``prefix x Gamma^n x suffix`` against the n-spectra of ``A``."""

    def __init__(self, A, gamma_pts, discrete, eps):
        self.A, self.pts, self.discrete, self.eps = A, tuple(gamma_pts), discrete, eps
        self._cache = {}

    def spectrum(self, n):
        if n not in self._cache:
            self._cache[n] = n_spectrum_exact(self.A, n)
        return self._cache[n]

    def missing(self, head, n, tail, exclude=None):
        """First target ``head + g + tail`` (g in Gamma^n) absent from the spectrum."""
        L = len(head) + n + len(tail)
        spec = self.spectrum(L)
        if not self.discrete:
            arr = spec.array()
        for mid in itertools.product(self.pts, repeat=n):
            if exclude is not None and _key(mid) == _key(exclude):
                continue
            t = head + mid + tail
            if self.discrete:
                if _key(t) not in spec.tuples:
                    return t
            else:
                if arr.size == 0 or not np.any(np.all(np.abs(arr - np.array(t)) <= self.eps, axis=1)):
                    return t
        return None

    def all_n(self, head, tail, n_from, n_to, skip=None):
        for n in range(n_from, n_to + 1):
            if n == skip:
                continue
            miss = self.missing(head, n, tail)
            if miss is not None:
                return n, miss
        return None


def _cardinality_note(A, n_gamma, s_max):
    """Eventually periodic ``A`` has at most prefix+period windows of each
    length, so containing ``|Gamma_1|^n`` targets must fail for large n."""
    cap = len(A.prefix) + len(A.period)
    if n_gamma < 2:
        return ""
    n_fail = math.floor(math.log(cap) / math.log(n_gamma)) + 1
    return (
        f"containment verified up to n={s_max}; an eventually periodic shift has at most "
        f"{cap} windows per length, so it cannot hold for n >= {n_fail}"
    )


def shift_domination_verdict(A, law, direction, s_max=6, eps=1e-9, grid_step=0.01):
    """Decide ``A <| T`` (``direction='A<T'``) or ``T <| A`` (``'T<A'``).

    Set containments quantified over all ``n`` are checked for
    ``n <= s_max``; see ``DominationVerdict.note`` for what that means.
    """
    ess = law.ess_range()
    gamma = ess.atoms if ess.is_discrete else None
    discrete = gamma is not None
    net = ess.net(grid_step) if not discrete else gamma
    net1 = tuple(x for x in net if x != 0.0)
    sigma1 = sorted(n_spectrum_exact(A, 1).tuples)
    sigma1 = [t[0] for t in sigma1]

    if direction == "A<T":
        in_gamma = all(ess.contains(x, tol=max(eps, 1e-12)) for x in sigma1)
        if A.bilateral or ess.has_zero:
            clause = "bilateral: Sigma_1(A) in Gamma" if A.bilateral else "0 in Gamma: Sigma_1(A) in Gamma"
            return DominationVerdict("almostSurelyYes" if in_gamma else "almostSurelyNo", clause)
        if ess.is_point and set(_key(sigma1)) == {_key([ess.lo])[0]}:
            return DominationVerdict("almostSurelyYes", "card Gamma=1 and Sigma_1(A)=Gamma")
        if not ess.is_point:
            return DominationVerdict("almostSurelyNo", "card Gamma>1, 0 not in Gamma")
        return DominationVerdict("almostSurelyNo", "card Gamma=1 but Sigma_1(A)!=Gamma")

    if direction != "T<A":
        raise ValueError("direction must be 'A<T' or 'T<A'")

    chk = _Containment(A, net, discrete, eps if discrete else max(eps, grid_step / 2))
    chk1 = _Containment(A, net1, discrete, chk.eps)
    yes = "almostSurelyYes" if discrete else "undecidedAtDepth"
    note = _cardinality_note(A, len(net1 if ess.zero_isolated else net), s_max) if discrete else (
        f"interval law: containments checked on a {grid_step}-net up to n={s_max}"
    )

    def verdict(ok_clauses, clause_on_fail, failure):
        if ok_clauses:
            return DominationVerdict(yes, ok_clauses[0], tuple(ok_clauses), s_max, None, note)
        return DominationVerdict("almostSurelyNo", clause_on_fail, (), s_max, failure, "")

    if A.bilateral:
        if not ess.has_zero:
            fail = chk.all_n((0.0,), (), 1, s_max)
            return verdict([] if fail else ["{0} x Gamma^n in Sigma_n+1(A)"], "{0} x Gamma^n in Sigma_n+1(A)", fail)
        if ess.zero_accumulation:
            fail = chk.all_n((), (), 1, s_max)
            return verdict([] if fail else ["Gamma^n in Sigma_n(A)"], "Gamma^n in Sigma_n(A)", fail)
        fail = chk1.all_n((0.0,), (0.0,), 0, s_max)
        c = "{0} x Gamma_1^n x {0} in Sigma_n+2(A)"
        return verdict([] if fail else [c], c, fail)

    if not ess.has_zero or ess.zero_accumulation:
        c = "{0} x Gamma^n in Sigma_n+1(A)"
        fail = chk.all_n((0.0,), (), 1, s_max)
        return verdict([] if fail else [c], c, fail)

    # 0 isolated in Gamma: clauses (a), (b), (c)
    pre = A.prefix + A.period * (s_max + 2)
    ok, first_fail = [], None
    fail_a = chk1.all_n((0.0,), (0.0,), 1, s_max)
    if pre[0] == 0.0 and fail_a is None:
        ok.append("(a) a_1=0 and {0} x Gamma_1^n x {0} in Sigma_n+2(A), n>=1")
    first_fail = first_fail or fail_a
    fail_b = chk1.all_n((0.0,), (0.0,), 0, s_max)
    if pre[0] != 0.0 and fail_b is None:
        ok.append("(b) a_1!=0 and {0} x Gamma_1^n x {0} in Sigma_n+2(A), n>=0")
    first_fail = first_fail or fail_b
    if 0.0 in pre:
        m = pre.index(0.0)
        head = pre[:m]
        if m >= 1 and all(any(abs(x - g) <= chk.eps for g in net1) for x in head):
            miss_m = chk1.missing((0.0,), m, (0.0,), exclude=head)
            rest = chk1.all_n((0.0,), (0.0,), 0, max(s_max, m), skip=m)
            if miss_m is None and rest is None:
                ok.append(f"(c) m={m}: first block excluded, all other n>=0")
            first_fail = first_fail or ((m, miss_m) if miss_m is not None else rest)
    return verdict(ok, "none of (a), (b), (c)", first_fail)


# ------------------------------------------------------- normal operators


@dataclass(frozen=True)
class ModulusSet:
    """Spectrum of a normal operator described by moduli: circles, annuli, points."""

    parts: tuple  # ("circle", r) | ("annulus", a, b) | ("point", z)

    def moduli_intervals(self):
        out = []
        for part in self.parts:
            if part[0] == "circle":
                out.append((part[1], part[1]))
            elif part[0] == "annulus":
                out.append((part[1], part[2]))
            else:
                out.append((abs(part[1]), abs(part[1])))
        return out

    def contains_zero(self):
        return any(lo == 0.0 for lo, _ in self.moduli_intervals())


def parse_modulus_set(text):
    """``circle:1.5``, ``disk:1`` (closed), ``annulus:0.5,1``, ``point:0.3+0.4j``; join with ``;``."""
    parts = []
    for item in filter(None, (t.strip() for t in text.split(";"))):
        kind, _, val = item.partition(":")
        try:
            if kind == "circle":
                parts.append(("circle", float(val)))
            elif kind == "disk":
                parts.append(("annulus", 0.0, float(val)))
            elif kind == "annulus":
                a, b = (float(v) for v in val.split(","))
                if a > b:
                    raise GrammarError("annulus needs inner <= outer")
                parts.append(("annulus", a, b))
            elif kind == "point":
                parts.append(("point", complex(val.replace(" ", ""))))
            else:
                raise GrammarError(f"unknown spectrum part {kind!r}")
        except ValueError:
            raise GrammarError(f"bad spectrum part {item!r}") from None
    if not parts:
        raise GrammarError("empty spectrum")
    return ModulusSet(tuple(parts))


def normal_domination_verdict(law, spectrum):
    """(N <| T, T <| N) for a normal ``N`` with the given spectrum."""
    ess = law.ess_range()

    def interval_in_gamma(lo, hi):
        if ess.is_discrete:
            return lo == hi and ess.contains(lo)
        return ess.contains(lo) and ess.contains(hi)

    n_in_t = all(interval_in_gamma(lo, hi) for lo, hi in spectrum.moduli_intervals())
    t_in_n = ess.is_point and ess.lo == 0.0 and spectrum.contains_zero()
    yes, no = "almostSurelyYes", "almostSurelyNo"
    return (yes if n_in_t else no, yes if t_in_n else no)


# ------------------------------------------------------ numeric spot checks


@dataclass(frozen=True)
class NormComparison:
    poly: str
    lhs: float
    rhs: float
    violated: bool


@dataclass(frozen=True)
class NumericDominationReport:
    direction: str
    comparisons: list
    a_weights: int
    t_weights: int

    @property
    def counterexamples(self):
        return [c for c in self.comparisons if c.violated]

    @property
    def consistent(self):
        return not self.counterexamples


def _t_section_for(t_weights, max_block):
    """Longest prefix whose complete zero-free blocks have length <= max_block."""
    run = 0
    last_zero = -1
    for i, x in enumerate(t_weights):
        if x == 0.0:
            if run > max_block:
                return t_weights[: max(last_zero, 0)]
            run, last_zero = 0, i
        else:
            run += 1
    if run > max_block:
        return t_weights[: max(last_zero, 0)]
    return t_weights


def numeric_domination_check(A, sample, polys, M, N, tol=1e-3, direction="A<T", norm_tol=1e-10):
    """Compare certified lower bounds of ``||p(A)||`` and ``||p(T)||``.

    ``M`` weights of ``A`` and ``N - 1`` weights of ``T`` are used. For a
    shift made of zero-separated blocks the lower bound is the exact norm
    (max over complete blocks). In the ``T<A`` direction the ``T`` section
    is cut so that every block of ``T`` has a counterpart length in ``A``.
    """
    deg = max((p.degree for p in polys), default=1)
    if min(M, N) < 4 * max(deg, 1):
        raise ValueError("M and N must be at least 4 * max degree")
    a_w = A.weights(M)
    t_w = sample.weights[: N - 1]
    if direction == "T<A":
        a_blocks = [len(b) for b in zero_free_blocks(a_w)[:-1]]
        t_w = _t_section_for(np.asarray(t_w), max(a_blocks, default=0))
    elif direction != "A<T":
        raise ValueError("direction must be 'A<T' or 'T<A'")
    comps = []
    for p in polys:
        na, nt = poly_norm_lower_bound(a_w, p, norm_tol), poly_norm_lower_bound(t_w, p, norm_tol)
        lhs, rhs = (na, nt) if direction == "A<T" else (nt, na)
        comps.append(NormComparison(str(p), lhs, rhs, lhs > rhs + tol))
    return NumericDominationReport(direction, comps, len(a_w), len(t_w))


def random_free_polys(count, max_degree, seed=0, stream=11):
    """Random free polynomials with complex Gaussian coefficients."""
    rng = generator(seed, stream)
    out = []
    for _ in range(count):
        terms = []
        for _ in range(int(rng.integers(1, 5))):
            L = int(rng.integers(0, max_degree + 1))
            w = tuple(S if b else SA for b in rng.integers(0, 2, L))
            terms.append((w, complex(rng.standard_normal(), rng.standard_normal())))
        out.append(FreePolynomial(tuple(terms)))
    return out


# ------------------------------------------------------------ disk algebra


@dataclass(frozen=True)
class DiskAlgebraResult:
    trunc_norm: float
    sup_norm: float
    gap: float
    method: str


def sup_on_circle(coeffs, grid_points=2**14):
    """``max_{|z|=1} |q(z)|``: grid of roots of unity refined by a bounded search."""
    c = np.asarray(coeffs, dtype=complex)
    theta = 2 * np.pi * np.arange(grid_points) / grid_points
    vals = np.abs(np.polynomial.polynomial.polyval(np.exp(1j * theta), c))
    k = int(np.argmax(vals))
    h = 2 * np.pi / grid_points

    def neg(t):
        return -abs(np.polynomial.polynomial.polyval(np.exp(1j * t), c))

    res = minimize_scalar(neg, bounds=(theta[k] - h, theta[k] + h), method="bounded",
                          options={"xatol": 1e-13})
    return float(max(vals[k], -res.fun))


_EXACT_DIM = 20_000


def disk_algebra_check(sample, coeffs, N, tol=1e-10):
    """``||q(T_N)||`` against ``sup_{|z|=1} |q(z)|`` for ``q = sum coeffs[k] z^k``.

    Monomials ``z^k`` use the exact identity ``||T_N^k|| = `` max product of
    ``k`` consecutive weights inside the truncation; other polynomials are
    evaluated directly when ``N <= 20000`` and otherwise bounded from below
    over overlapping windows.
    """
    stats = law_stats(sample.law) if sample.law is not None else None
    R = stats.R if stats is not None else float(np.max(sample.weights))
    if not math.isclose(R, 1.0, rel_tol=0, abs_tol=1e-12):
        raise HypothesisError(f"disk algebra check needs R = 1, got {R}")
    coeffs = list(np.trim_zeros(np.asarray(coeffs, dtype=complex), "b")) or [0j]
    sup = sup_on_circle(coeffs)
    sub = sample.weights[: N - 1]
    nz = [k for k, c in enumerate(coeffs) if c != 0]
    if len(nz) == 1:
        k = nz[0]
        if k == 0:
            val, method = abs(coeffs[0]), "constant"
        elif k > sub.size:
            val, method = 0.0, "nilpotent"
        else:
            with np.errstate(divide="ignore"):
                lw = np.log(sub)
            val = abs(coeffs[k]) * float(np.exp(np.max(window_log_sums(lw, k))))
            method = "window_product"
    elif N <= _EXACT_DIM:
        M = eval_free_poly(TruncatedShift(sub), analytic(coeffs), sparse=True)
        val, method = operator_norm(M, tol), "direct"
    else:
        q = analytic(coeffs)
        win, step = 4096, 4096 - 2 * len(coeffs)
        val = 0.0
        for start in range(0, sub.size, step):
            M = eval_free_poly(TruncatedShift(sub[start:start + win]), q, sparse=True)
            val = max(val, operator_norm(M, tol))
        method = "windowed_lower_bound"
    return DiskAlgebraResult(trunc_norm=val, sup_norm=sup, gap=sup - val, method=method)


# -------------------------------------------------------- hereditary check


@dataclass(frozen=True)
class HereditaryResult:
    t_norm: float
    s_norm: float
    holds: bool


def hereditary_check(sample, hp, N, tol=1e-6):
    """``||hp(T_N)|| <= ||hp(S_N)||`` with ``S_N`` the nilpotent Jordan block.

    A nilpotent contraction of order ``N`` is a compression of copies of
    ``S_N`` to a co-invariant subspace, so the inequality is exact for
    hereditary polynomials.
    """
    if not hp.is_hereditary():
        raise HypothesisError("hereditary check needs words of the form S^i S*^j")
    R = float(np.max(sample.weights[: N - 1])) if N > 1 else 0.0
    if sample.law is not None:
        R = law_stats(sample.law).R
    if not math.isclose(R, 1.0, abs_tol=1e-12):
        raise HypothesisError(f"hereditary check needs R = 1, got {R}")
    sparse = N > 600
    t = operator_norm(eval_free_poly(TruncatedShift(sample.weights[: N - 1]), hp, sparse=sparse))
    s = operator_norm(eval_free_poly(TruncatedShift(np.ones(N - 1)), hp, sparse=sparse))
    return HereditaryResult(t_norm=t, s_norm=s, holds=t <= s + tol)



def sample_dominated_by(A, weights, depth):
    """Per-sample test ``(0, w_1, ..., w_s)`` in ``Sigma_{s+1}(A)`` for ``s <= depth``."""
    w = tuple(float(x) for x in weights[:depth])
    for s in range(1, len(w) + 1):
        if _key((0.0,) + w[:s]) not in n_spectrum_exact(A, s + 1).tuples:
            return False
    return True
