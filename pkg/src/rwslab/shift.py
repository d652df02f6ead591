"""Finite truncations of the shift, free polynomials in (S, S*), norms and
window-product statistics.

Convention: the truncation of dimension ``N`` carries ``N - 1`` subdiagonal
weights, ``T e_i = sub_i e_{i+1}`` (0-based below), and ``T e_N = 0``.
"""

from dataclasses import dataclass
import math
import re

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, svds

from .errors import GrammarError, NonConvergenceError


@dataclass(frozen=True, eq=False)
class TruncatedShift:
    """Top-left ``dim x dim`` compression of a weighted shift."""

    sub: np.ndarray

    def __post_init__(self):
        s = np.array(self.sub, dtype=float).reshape(-1)
        if np.any(s < 0) or not np.all(np.isfinite(s)):
            raise ValueError("subdiagonal weights must be finite and nonnegative")
        s.setflags(write=False)
        object.__setattr__(self, "sub", s)

    @property
    def dim(self):
        return self.sub.size + 1

    def dense(self):
        N = self.dim
        M = np.zeros((N, N))
        if N > 1:
            M[np.arange(1, N), np.arange(N - 1)] = self.sub
        return M

    def apply(self, x):
        x = np.asarray(x)
        y = np.zeros_like(x, dtype=np.result_type(x, float))
        y[1:] = self.sub * x[:-1]
        return y

    def apply_adjoint(self, x):
        x = np.asarray(x)
        y = np.zeros_like(x, dtype=np.result_type(x, float))
        y[:-1] = self.sub * x[1:]
        return y


def truncate(sample, N):
    """The ``N x N`` truncation built from the first ``N - 1`` weights."""
    N = int(N)
    if N < 1:
        raise ValueError("N must be >= 1")
    if N > sample.length + 1:
        raise ValueError(f"N={N} needs {N - 1} weights, sample has {sample.length}")
    return TruncatedShift(sample.weights[: N - 1])


# ---------------------------------------------------------------- polynomials

S, SA = "S", "S*"


@dataclass(frozen=True)
class FreePolynomial:
    """Sum of ``coeff * word`` with words over the free letters ``S``, ``S*``.

    A word is a tuple of letters read as an operator product, so
    ``("S", "S*")`` is ``S S*`` (``S*`` acts first). The empty word is the
    identity.
    """

    terms: tuple

    def __post_init__(self):
        clean = []
        for word, coeff in self.terms:
            word = tuple(word)
            if any(letter not in (S, SA) for letter in word):
                raise GrammarError(f"bad letter in word {word!r}")
            clean.append((word, complex(coeff)))
        object.__setattr__(self, "terms", tuple(clean))

    @property
    def degree(self):
        return max((len(w) for w, _ in self.terms), default=0)

    def adjoint(self):
        flip = {S: SA, SA: S}
        return FreePolynomial(
            tuple((tuple(flip[x] for x in reversed(w)), c.conjugate()) for w, c in self.terms)
        )

    def scaled(self, t):
        return FreePolynomial(tuple((w, c * t) for w, c in self.terms))

    def __add__(self, other):
        return FreePolynomial(self.terms + other.terms)

    def constant(self):
        return sum((c for w, c in self.terms if not w), 0j)

    def is_hereditary(self):
        """Every word has all ``S`` letters before all ``S*`` letters."""
        for w, _ in self.terms:
            seen_star = False
            for x in w:
                if x == SA:
                    seen_star = True
                elif seen_star:
                    return False
        return True

    def is_analytic(self):
        return all(x == S for w, _ in self.terms for x in w)

    def __str__(self):
        out = ""
        for w, c in self.terms:
            body = "".join(w) or "I"
            if c.imag == 0:
                sign = "-" if c.real < 0 else "+"
                out += f" {sign} {abs(c.real)!r}*{body}"
            else:
                out += f" + {c!r}*{body}"
        out = out.strip()
        return (out[2:] if out.startswith("+ ") else out) or "0*I"


def word(text):
    """``"SS*S"`` -> ``("S", "S*", "S")``."""
    return tuple(re.findall(r"S\*?", text))


def analytic(coeffs):
    """``sum_k coeffs[k] S^k`` as a free polynomial."""
    return FreePolynomial(tuple(((S,) * k, c) for k, c in enumerate(coeffs) if c != 0))


_NUM = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?j?"
_TERM = re.compile(
    rf"(?P<sign>[+-])?(?:(?P<coeff>\([^()]*\)|{_NUM})\*?)?(?P<word>(?:S\*?)+|I)?"
)


def parse_poly(text):
    """Parse e.g. ``1.5*SS*S - 2*S*`` or ``SS*-S*S`` into a FreePolynomial."""
    s = re.sub(r"\s+", "", text)
    if not s:
        raise GrammarError("empty polynomial")
    terms, pos = [], 0
    while pos < len(s):
        m = _TERM.match(s, pos)
        if m is None or m.end() == pos or (m.group("coeff") is None and m.group("word") is None):
            raise GrammarError(f"cannot parse polynomial near {s[pos:]!r}")
        if pos > 0 and m.group("sign") is None:
            raise GrammarError(f"missing + or - before {s[pos:]!r}")
        coeff = 1.0 + 0j
        if m.group("coeff") is not None:
            try:
                coeff = complex(m.group("coeff").strip("()"))
            except ValueError:
                raise GrammarError(f"bad coefficient {m.group('coeff')!r}") from None
        if m.group("sign") == "-":
            coeff = -coeff
        w = m.group("word") or "I"
        terms.append(((), coeff) if w == "I" else (word(w), coeff))
        pos = m.end()
    return FreePolynomial(tuple(terms))


def _word_paths(sub, w):
    """Track ``word @ e_j`` for every column j: returns (rows, coefficients).

    ``sub`` may carry leading batch axes; rows depend only on the word.
    """
    sub = np.asarray(sub, dtype=float)
    N = sub.shape[-1] + 1
    pos = np.arange(N)
    coef = np.ones(sub.shape[:-1] + (N,))
    if N == 1:
        return pos, coef if not w else coef * 0.0
    for letter in reversed(w):
        if letter == S:
            ok = (pos >= 0) & (pos <= N - 2)
            coef = np.where(ok, coef * sub[..., np.clip(pos, 0, N - 2)], 0.0)
            pos = pos + 1
        else:
            ok = (pos >= 1) & (pos <= N - 1)
            coef = np.where(ok, coef * sub[..., np.clip(pos - 1, 0, N - 2)], 0.0)
            pos = pos - 1
    return pos, coef


def eval_free_poly(shift, p, sparse=False):
    """Evaluate ``p(T_N, T_N*)`` word by word (``O(N)`` per word).

    Returns a dense complex matrix, or a CSR matrix when ``sparse`` is set.
    """
    N = shift.dim
    cols = np.arange(N)
    rows_all, cols_all, vals_all = [], [], []
    for w, c in p.terms:
        rows, coef = _word_paths(shift.sub, w)
        keep = coef != 0.0
        rows_all.append(rows[keep])
        cols_all.append(cols[keep])
        vals_all.append(c * coef[keep])
    if sparse:
        if not rows_all:
            return sp.csr_matrix((N, N), dtype=complex)
        return sp.csr_matrix(
            (np.concatenate(vals_all), (np.concatenate(rows_all), np.concatenate(cols_all))),
            shape=(N, N),
        )
    M = np.zeros((N, N), dtype=complex)
    for r, cc, v in zip(rows_all, cols_all, vals_all):
        np.add.at(M, (r, cc), v)
    return M


# ---------------------------------------------------------------------- norms

_DENSE_LIMIT = 600


def operator_norm(M, tol=1e-10, max_iter=10_000):
    """Largest singular value of a dense or sparse matrix.

    Dense (and small sparse) inputs go to LAPACK's SVD: plain power iteration
    on ``M* M`` stalls when the top singular values cluster. Large sparse
    inputs use ARPACK Lanczos, the Krylov form of that power iteration.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if sp.issparse(M):
        if min(M.shape) <= _DENSE_LIMIT:
            return float(np.linalg.norm(M.toarray(), 2))
        if M.nnz == 0:
            return 0.0
        v0 = np.ones(M.shape[1])
        try:
            s = svds(M, k=1, tol=tol * 1e-2, v0=v0, maxiter=max_iter, return_singular_vectors=False)
        except ArpackNoConvergence as exc:
            raise NonConvergenceError(str(exc)) from None
        return float(s[0])
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def zero_free_blocks(sub):
    """Split a truncation into its direct summands at zero weights.

    Returns a list of subdiagonal tuples; a block with weights ``eta`` acts
    on ``C^(len(eta)+1)``.
    """
    sub = np.asarray(sub, dtype=float)
    blocks, start = [], 0
    for i in np.flatnonzero(sub == 0.0):
        blocks.append(tuple(sub[start:i]))
        start = i + 1
    blocks.append(tuple(sub[start:]))
    return blocks


_BATCH_DIM = 64


def _batched_dense(subs, p):
    """``p`` evaluated on a stack of equal-length truncations: (B, N, N)."""
    B, N = subs.shape[0], subs.shape[1] + 1
    out = np.zeros((B, N, N), dtype=complex)
    cols = np.arange(N)
    for w, c in p.terms:
        rows, coef = _word_paths(subs, w)
        ok = (rows >= 0) & (rows < N)
        out[:, rows[ok], cols[ok]] += c * coef[:, ok]
    return out


def block_norms(blocks, p, tol=1e-10):
    """``{eta: ||p(W(eta))||}`` for distinct zero-free blocks ``eta``.

    Small blocks of equal length are stacked and handed to a batched dense
    SVD; larger ones go through ``operator_norm``.
    """
    by_len = {}
    for eta in set(map(tuple, blocks)):
        by_len.setdefault(len(eta), []).append(eta)
    out = {}
    for L, group in by_len.items():
        if L + 1 <= _BATCH_DIM:
            for i in range(0, len(group), 4096):
                chunk = group[i:i + 4096]
                subs = np.array(chunk, dtype=float).reshape(len(chunk), L)
                mats = _batched_dense(subs, p)
                sv = np.linalg.svd(mats, compute_uv=False)[:, 0]
                out.update(zip(chunk, map(float, sv)))
        else:
            for eta in group:
                M = eval_free_poly(TruncatedShift(np.array(eta)), p, sparse=L + 1 > _DENSE_LIMIT)
                out[eta] = operator_norm(M, tol)
    return out


def poly_norm(shift, p, tol=1e-10):
    """``||p(T_N, T_N*)||`` as the max over zero-free direct summands."""
    return max(block_norms(zero_free_blocks(shift.sub), p, tol).values())


def poly_norm_lower_bound(weights, p, tol=1e-10):
    """Certified lower bound of ``||p(A, A*)||`` for the infinite shift ``A``
    whose first weights are ``weights``.

    Complete zero-free blocks are genuine direct summands of ``A``. The last,
    unterminated block only contributes the columns whose image is decided by
    the known weights (column ``j`` needs weights up to ``j + deg p - 1``).
    """
    weights = np.asarray(weights, dtype=float)
    blocks = zero_free_blocks(weights)
    last = blocks.pop()
    best = max(block_norms(blocks, p, tol).values(), default=0.0)
    n_cols = len(last) + 1 - p.degree
    if n_cols >= 1:
        M = eval_free_poly(TruncatedShift(np.array(last)), p, sparse=True)[:, :n_cols]
        best = max(best, operator_norm(M, tol))
    return best


# ------------------------------------------------------------- window products


@dataclass(frozen=True)
class WindowStats:
    """Extremes of products of ``n`` consecutive weights, stored as logs."""

    n: int
    max_log: float
    min_log: float
    count: int
    argmax: int
    argmin: int

    @property
    def max_product(self):
        return math.exp(self.max_log)

    @property
    def min_product(self):
        return math.exp(self.min_log)


def window_log_sums(log_weights, n):
    """``sum(log_weights[k:k+n])`` for every k; ``-inf`` where a window has a zero."""
    lw = np.asarray(log_weights, dtype=float)
    zero = ~np.isfinite(lw)
    finite = np.where(zero, 0.0, lw)
    c = np.concatenate(([0.0], np.cumsum(finite)))
    z = np.concatenate(([0], np.cumsum(zero)))
    sums = c[n:] - c[:-n]
    return np.where(z[n:] - z[:-n] > 0, -np.inf, sums)


def window_stats(sample, n):
    """Max/min products over all interior windows of length ``n``.

    ``max_product`` estimates ``||T^n||`` and ``min_product`` estimates
    ``m(T^n)``; the truncation's spurious edge kernel never enters.
    """
    n = int(n)
    if n < 1 or n > sample.length:
        raise ValueError(f"window length {n} outside [1, {sample.length}]")
    sums = window_log_sums(sample.log_weights, n)
    imax, imin = int(np.argmax(sums)), int(np.argmin(sums))
    return WindowStats(
        n=n, max_log=float(sums[imax]), min_log=float(sums[imin]),
        count=int(sums.size), argmax=imax, argmin=imin,
    )
