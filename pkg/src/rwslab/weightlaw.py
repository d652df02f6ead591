"""Weight distributions, their closed-form statistics, and seeded sampling.

Only four law kinds are supported, all with an exactly known essential range
and closed-form moments:

* ``Degenerate(c)``
* ``TwoPoint(a, b, p)`` with ``P(X = a) = p``
* ``UniformInterval(lo, hi)``
* ``FiniteDiscrete(atoms, probs)``

``ln 0`` is represented by ``-inf`` everywhere; it is never an error.
"""

from dataclasses import dataclass, field
import math
import re

import numpy as np

from .errors import GrammarError
from .rng import generator

#: |E ln X| below this counts as normalized (E ln X = 0). Loose enough for
#: laws written with 9-10 significant digits, e.g. ``a=2.718281828``.
NORMALIZATION_TOL = 1e-8

_PROB_TOL = 1e-12


@dataclass(frozen=True)
class EssRange:
    """Essential range: either a finite sorted atom tuple or a closed interval."""

    atoms: tuple = None
    interval: tuple = None

    @property
    def lo(self):
        return self.atoms[0] if self.atoms is not None else self.interval[0]

    @property
    def hi(self):
        return self.atoms[-1] if self.atoms is not None else self.interval[1]

    @property
    def is_discrete(self):
        return self.atoms is not None

    @property
    def is_point(self):
        return self.is_discrete and len(self.atoms) == 1

    @property
    def has_zero(self):
        return self.lo == 0.0

    @property
    def zero_isolated(self):
        """0 is an isolated point (only possible for atomic ranges)."""
        return self.has_zero and self.is_discrete

    @property
    def zero_accumulation(self):
        return self.has_zero and not self.is_discrete

    def contains(self, x, tol=1e-12):
        if self.is_discrete:
            return any(abs(x - a) <= tol for a in self.atoms)
        return self.interval[0] - tol <= x <= self.interval[1] + tol

    def net(self, step=0.01, nonzero=False):
        """Finite net: the atoms themselves, or a ``step``-grid of the interval."""
        if self.is_discrete:
            pts = self.atoms
        else:
            lo, hi = self.interval
            k = max(1, int(math.ceil((hi - lo) / step - 1e-9)))
            pts = tuple(float(v) for v in np.linspace(lo, hi, k + 1))
        if nonzero:
            pts = tuple(p for p in pts if p != 0.0)
        return pts

    def describe(self):
        if self.is_discrete:
            return {"atoms": list(self.atoms)}
        return {"interval": list(self.interval)}


class WeightLaw:
    """Base class; concrete laws are the four frozen dataclasses below."""

    def ess_range(self):
        raise NotImplementedError

    def p_zero(self):
        raise NotImplementedError

    def mean_power(self, p):
        """E X^p for p > 0."""
        raise NotImplementedError

    def mean_log(self):
        """E ln X (``-inf`` when P(X=0) > 0)."""
        raise NotImplementedError

    def mean_log_squared(self):
        """E (ln X)^2 (``inf`` when P(X=0) > 0)."""
        raise NotImplementedError

    def draw(self, rng, size):
        raise NotImplementedError

    def grammar(self):
        raise NotImplementedError

    def __str__(self):
        return self.grammar()


class _Atomic(WeightLaw):
    def support(self):
        """(atoms, probs) with zero-probability atoms removed, sorted."""
        raise NotImplementedError

    def ess_range(self):
        atoms, _ = self.support()
        return EssRange(atoms=tuple(atoms))

    def p_zero(self):
        atoms, probs = self.support()
        return float(sum(q for a, q in zip(atoms, probs) if a == 0.0))

    def mean_power(self, p):
        atoms, probs = self.support()
        return float(sum(q * a**p for a, q in zip(atoms, probs)))

    def mean_log(self):
        atoms, probs = self.support()
        if atoms[0] == 0.0:
            return -math.inf
        return math.fsum(q * math.log(a) for a, q in zip(atoms, probs))

    def mean_log_squared(self):
        atoms, probs = self.support()
        if atoms[0] == 0.0:
            return math.inf
        return math.fsum(q * math.log(a) ** 2 for a, q in zip(atoms, probs))

    def draw(self, rng, size):
        atoms, probs = self.support()
        if len(atoms) == 1:
            return np.full(size, atoms[0], dtype=float)
        idx = rng.choice(len(atoms), size=size, p=np.asarray(probs))
        return np.asarray(atoms, dtype=float)[idx]


def _check_nonneg(name, x):
    if not (math.isfinite(x) and x >= 0.0):
        raise GrammarError(f"{name} must be a finite nonnegative real, got {x!r}")


@dataclass(frozen=True)
class Degenerate(_Atomic):
    c: float

    def __post_init__(self):
        _check_nonneg("c", self.c)

    def support(self):
        return (float(self.c),), (1.0,)

    def grammar(self):
        return f"degenerate:c={self.c!r}"


@dataclass(frozen=True)
class TwoPoint(_Atomic):
    a: float
    b: float
    p: float = 0.5

    def __post_init__(self):
        _check_nonneg("a", self.a)
        _check_nonneg("b", self.b)
        if not (0.0 < self.p <= 1.0):
            raise GrammarError(f"p must lie in (0, 1], got {self.p!r}")

    def support(self):
        if self.a == self.b or self.p == 1.0:
            return (float(self.a),), (1.0,)
        pairs = sorted([(float(self.a), self.p), (float(self.b), 1.0 - self.p)])
        return tuple(a for a, _ in pairs), tuple(q for _, q in pairs)

    def draw(self, rng, size):
        # P(X = a) = p via one uniform per weight
        if self.a == self.b or self.p == 1.0:
            return np.full(size, float(self.a))
        u = rng.random(size)
        return np.where(u < self.p, float(self.a), float(self.b))

    def grammar(self):
        return f"two_point:a={self.a!r},b={self.b!r},p={self.p!r}"


@dataclass(frozen=True)
class FiniteDiscrete(_Atomic):
    atoms: tuple
    probs: tuple

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(float(a) for a in self.atoms))
        object.__setattr__(self, "probs", tuple(float(q) for q in self.probs))
        if not self.atoms or len(self.atoms) != len(self.probs):
            raise GrammarError("atoms and probs must be nonempty and of equal length")
        for a in self.atoms:
            _check_nonneg("atom", a)
        if len(set(self.atoms)) != len(self.atoms):
            raise GrammarError("atoms must be distinct")
        if any(not (0.0 < q <= 1.0) for q in self.probs):
            raise GrammarError("probabilities must lie in (0, 1]")
        if abs(math.fsum(self.probs) - 1.0) > _PROB_TOL:
            raise GrammarError(f"probabilities sum to {math.fsum(self.probs)!r}, not 1")

    @classmethod
    def uniform(cls, atoms):
        atoms = tuple(atoms)
        return cls(atoms, tuple(1.0 / len(atoms) for _ in atoms))

    def support(self):
        pairs = sorted(zip(self.atoms, self.probs))
        return tuple(a for a, _ in pairs), tuple(q for _, q in pairs)

    def draw(self, rng, size):
        if len(self.atoms) == 1:
            return np.full(size, self.atoms[0])
        # renormalize against the <=1e-12 slack numpy's choice() rejects
        probs = np.asarray(self.probs)
        idx = rng.choice(len(self.atoms), size=size, p=probs / probs.sum())
        return np.asarray(self.atoms)[idx]

    def grammar(self):
        atoms = "|".join(repr(a) for a in self.atoms)
        probs = "|".join(repr(q) for q in self.probs)
        return f"discrete:atoms={atoms};probs={probs}"


def _xlogx_minus_x(x):
    return 0.0 if x == 0.0 else x * math.log(x) - x


def _x_log2_antideriv(x):
    # d/dx [x (ln^2 x - 2 ln x + 2)] = ln^2 x
    if x == 0.0:
        return 0.0
    lx = math.log(x)
    return x * (lx * lx - 2.0 * lx + 2.0)


@dataclass(frozen=True)
class UniformInterval(WeightLaw):
    lo: float
    hi: float

    def __post_init__(self):
        _check_nonneg("lo", self.lo)
        if not (math.isfinite(self.hi) and self.hi > self.lo):
            raise GrammarError(f"need hi > lo, got lo={self.lo!r} hi={self.hi!r}")

    def ess_range(self):
        return EssRange(interval=(float(self.lo), float(self.hi)))

    def p_zero(self):
        return 0.0

    def mean_power(self, p):
        lo, hi = self.lo, self.hi
        return (hi ** (p + 1) - lo ** (p + 1)) / ((p + 1) * (hi - lo))

    def mean_log(self):
        return (_xlogx_minus_x(self.hi) - _xlogx_minus_x(self.lo)) / (self.hi - self.lo)

    def mean_log_squared(self):
        return (_x_log2_antideriv(self.hi) - _x_log2_antideriv(self.lo)) / (self.hi - self.lo)

    def draw(self, rng, size):
        return self.lo + (self.hi - self.lo) * rng.random(size)

    def grammar(self):
        return f"uniform:lo={self.lo!r},hi={self.hi!r}"


@dataclass(frozen=True)
class LawStats:
    """Closed-form statistics of a weight law.

    ``mean_log`` is E ln X_1 and ``sigma2`` is E((ln X_1^2)^2), populated
    only when the law is normalized (E ln X_1 = 0).
    """

    r: float
    R: float
    r0: float
    mean_log: float
    sigma2: float
    p_zero: float
    ess_range: EssRange
    degenerate: bool
    law: WeightLaw = field(repr=False, compare=False, default=None)

    def rp(self, p):
        """``||X_1||_p = (E X_1^p)^(1/p)`` for p >= 1."""
        if p < 1:
            raise ValueError("rp is defined for p >= 1")
        if self.degenerate:
            return self.R
        val = self.law.mean_power(p) ** (1.0 / p)
        # Jensen / monotonicity of L^p norms, guarded against rounding
        return min(max(val, self.r0), self.R)

    @property
    def normalized(self):
        return self.sigma2 is not None

    def as_dict(self, ps=(1.0, 2.0)):
        return {
            "r": self.r,
            "R": self.R,
            "r0": self.r0,
            "rp": {repr(float(p)): self.rp(p) for p in ps},
            "meanLog": self.mean_log,
            "sigma2": self.sigma2,
            "pZero": self.p_zero,
            "essRange": self.ess_range.describe(),
            "degenerate": self.degenerate,
        }


def law_stats(law):
    """Compute r, R, r0, rp, E ln X, sigma^2, P(X=0) and the essential range."""
    ess = law.ess_range()
    r, R = ess.lo, ess.hi
    degenerate = ess.is_point
    pz = law.p_zero()
    if pz > 0.0:
        mean_log, r0 = -math.inf, 0.0
    elif degenerate:
        mean_log, r0 = math.log(r), r
    else:
        mean_log = law.mean_log()
        r0 = min(max(math.exp(mean_log), r), R)
    sigma2 = None
    if math.isfinite(mean_log) and abs(mean_log) <= NORMALIZATION_TOL:
        sigma2 = 0.0 if degenerate else 4.0 * law.mean_log_squared()
    return LawStats(
        r=r, R=R, r0=r0, mean_log=mean_log, sigma2=sigma2, p_zero=pz,
        ess_range=ess, degenerate=degenerate, law=law,
    )


@dataclass(frozen=True, eq=False)
class WeightSample:
    """One seeded realization ``w_1, ..., w_length`` of the weight sequence."""

    weights: np.ndarray
    law: WeightLaw = None
    seed: int = None
    stream: int = 0

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a nonempty 1-d sequence")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_weights(cls, weights, law=None):
        return cls(weights=weights, law=law)

    @property
    def length(self):
        return self.weights.size

    def __len__(self):
        return self.weights.size

    @property
    def log_weights(self):
        lw = self.__dict__.get("_log_weights")
        if lw is None:
            with np.errstate(divide="ignore"):
                lw = np.log(self.weights)
            lw.setflags(write=False)
            object.__setattr__(self, "_log_weights", lw)
        return lw

    def stats(self):
        if self.law is None:
            raise ValueError("sample has no law attached")
        return law_stats(self.law)


def sample_weights(law, length, seed=0, stream=0):
    """Draw ``length`` i.i.d. weights from ``law`` on stream ``(seed, stream)``."""
    if int(length) < 1:
        raise ValueError("length must be >= 1")
    w = law.draw(generator(seed, stream), int(length))
    return WeightSample(weights=w, law=law, seed=int(seed), stream=int(stream))


_KINDS = {
    "degenerate": ("c",),
    "two_point": ("a", "b", "p"),
    "uniform": ("lo", "hi"),
    "discrete": ("atoms", "probs"),
}


def _parse_params(body):
    params = {}
    for part in re.split(r"[;,]", body):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise GrammarError(f"expected key=value, got {part!r}")
        k, v = part.split("=", 1)
        params[k.strip()] = v.strip()
    return params


def _num(key, text):
    try:
        return float(text)
    except ValueError:
        raise GrammarError(f"{key}: not a number: {text!r}") from None


def parse_law(text):
    """Parse the law mini-grammar, e.g. ``uniform:lo=0,hi=1``."""
    kind, _, body = text.strip().partition(":")
    kind = kind.strip()
    if kind not in _KINDS:
        raise GrammarError(f"unknown law kind {kind!r} (expected one of {sorted(_KINDS)})")
    params = _parse_params(body)
    unknown = set(params) - set(_KINDS[kind])
    if unknown:
        raise GrammarError(f"{kind}: unknown parameter(s) {sorted(unknown)}")
    try:
        if kind == "degenerate":
            return Degenerate(_num("c", params["c"]))
        if kind == "two_point":
            return TwoPoint(
                _num("a", params["a"]), _num("b", params["b"]),
                _num("p", params.get("p", "0.5")),
            )
        if kind == "uniform":
            return UniformInterval(_num("lo", params["lo"]), _num("hi", params["hi"]))
        atoms = [_num("atoms", x) for x in params["atoms"].split("|")]
        if "probs" in params:
            probs = [_num("probs", x) for x in params["probs"].split("|")]
            return FiniteDiscrete(atoms, probs)
        return FiniteDiscrete.uniform(atoms)
    except KeyError as exc:
        raise GrammarError(f"{kind}: missing parameter {exc.args[0]!r}") from None
