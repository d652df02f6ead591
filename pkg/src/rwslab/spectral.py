"""Predicted spectral picture of a random weighted shift and numerical probes
of it on finite truncations: smallest singular values, adjoint eigenvector
series, numerical range."""

from dataclasses import dataclass
import math

import numpy as np

from .errors import RwslabError
from .tridiag import smin_shifted, top_eigenvalue_zero_diag


@dataclass(frozen=True)
class Region:
    """A rotation-invariant planar set: empty, {0}, disk or annulus."""

    kind: str  # "empty", "origin", "open_disk", "closed_disk", "annulus"
    inner: float = 0.0
    outer: float = 0.0

    def contains(self, z):
        a = abs(z)
        if self.kind == "empty":
            return False
        if self.kind == "origin":
            return a == 0.0
        if self.kind == "open_disk":
            return a < self.outer
        if self.kind == "closed_disk":
            return a <= self.outer
        return self.inner <= a <= self.outer

    def describe(self):
        if self.kind in ("empty", "origin"):
            return {"kind": self.kind}
        if self.kind == "annulus":
            return {"kind": self.kind, "inner": self.inner, "outer": self.outer}
        return {"kind": self.kind, "radius": self.outer}


def closed_disk(r):
    return Region("closed_disk", 0.0, r) if r > 0 else Region("origin")


def open_disk(r):
    return Region("open_disk", 0.0, r) if r > 0 else Region("empty")


@dataclass(frozen=True)
class SpectralPicture:
    norm: float
    ess_norm: float
    spectrum: Region
    approx_defect: Region
    ess_spectrum: Region
    approx_point: Region
    fredholm_index_inside: int  # on B(0, r); None when r = 0
    point_spec_T: Region
    point_spec_T_star: Region
    kernel_dim_T_star: str  # "1" on the open disk, or "infinite" at 0
    zero_in_point_spec_T_star: bool
    num_range: Region
    ess_num_range: Region

    def as_dict(self):
        out = {}
        for k, v in self.__dict__.items():
            out[k] = v.describe() if isinstance(v, Region) else v
        return out


def predict_spectral_picture(stats):
    """Almost-sure spectral data of ``T`` from the law statistics alone."""
    r, R = stats.r, stats.R
    if R == 0.0:
        # the zero operator
        z = Region("origin")
        return SpectralPicture(
            norm=0.0, ess_norm=0.0, spectrum=z, approx_defect=z, ess_spectrum=z,
            approx_point=z, fredholm_index_inside=None, point_spec_T=z,
            point_spec_T_star=z, kernel_dim_T_star="infinite",
            zero_in_point_spec_T_star=True, num_range=z, ess_num_range=z,
        )
    ann = Region("annulus", r, R) if r > 0 else closed_disk(R)
    if stats.p_zero > 0:
        pT, pTs, kdim = Region("origin"), Region("origin"), "infinite"
    else:
        pT, pTs, kdim = Region("empty"), open_disk(stats.r0), "1"
    return SpectralPicture(
        norm=R,
        ess_norm=R,
        spectrum=closed_disk(R),
        approx_defect=closed_disk(R),
        ess_spectrum=ann,
        approx_point=ann,
        fredholm_index_inside=-1 if r > 0 else None,
        point_spec_T=pT,
        point_spec_T_star=pTs,
        kernel_dim_T_star=kdim,
        # T* e_1 = 0 always
        zero_in_point_spec_T_star=True,
        num_range=open_disk(R),
        ess_num_range=closed_disk(R),
    )


# ----------------------------------------------------------- pseudospectrum


@dataclass(frozen=True)
class PseudospectrumGrid:
    points: np.ndarray  # complex
    smin: np.ndarray
    converged: np.ndarray
    N: int

    def rows(self):
        return [(float(z.real), float(z.imag), float(s)) for z, s in zip(self.points, self.smin)]


def smin_grid(shift, grid):
    """Smallest singular value of ``lambda I - T_N`` at every grid point."""
    pts = np.atleast_1d(np.asarray(grid, dtype=complex))
    if pts.size == 0:
        raise ValueError("grid must be nonempty")
    vals, ok = smin_shifted(shift.sub, pts)
    return PseudospectrumGrid(points=pts, smin=vals, converged=ok, N=shift.dim)


def default_grid(R, size=201, margin=0.5):
    """``size x size`` square grid over ``[-(R+margin), R+margin]^2``, row-major in im."""
    half = R + margin
    xs = np.linspace(-half, half, size)
    re, im = np.meshgrid(xs, xs)
    return (re + 1j * im).ravel()


# ------------------------------------------------------ adjoint point spectrum


@dataclass(frozen=True)
class AdjointPointResult:
    verdict: str  # "inside", "outside", "critical"
    log_partial_sums: np.ndarray  # log of sum_{n<=k} |lam|^{2n} / (w_1...w_n)^2
    r0: float


def _log_ratio_terms(log_w, lam, N):
    # log(|lam|^n / (w_1 ... w_n)) for n = 1..N
    if lam == 0:
        return np.full(N, -np.inf)
    return np.arange(1, N + 1) * math.log(abs(lam)) - np.cumsum(log_w[:N])


def _require_no_zero(sample):
    stats = sample.stats()
    if stats.p_zero > 0:
        raise RwslabError(
            "weight law charges 0: the adjoint has point spectrum {0} with an "
            "infinite-dimensional kernel, the series test does not apply"
        )
    return stats


def adjoint_point_test(sample, lam, N, eta=1e-6):
    """Classify ``conj(lam)`` against the adjoint point spectrum via ``r0``.

    The partial sums of ``sum |lam|^{2n} / (w_1...w_n)^2`` are returned in
    log space for inspection; the verdict itself uses the closed-form ``r0``.
    """
    stats = _require_no_zero(sample)
    N = int(N)
    if N > sample.length:
        raise ValueError("N exceeds sample length")
    terms = 2 * _log_ratio_terms(sample.log_weights, lam, N)
    partial = np.logaddexp.accumulate(terms)
    a, r0 = abs(lam), stats.r0
    if a < r0 * (1 - eta):
        verdict = "inside"
    elif a > r0 * (1 + eta):
        verdict = "outside"
    else:
        verdict = "critical"
    return AdjointPointResult(verdict=verdict, log_partial_sums=partial, r0=r0)


@dataclass(frozen=True)
class KernelVector:
    x: np.ndarray  # normalized, length N
    residual: float  # ||(T_N* - conj(lam)) x|| / ||x||
    log_norm: float  # log ||x|| before normalization


def adjoint_kernel_vector(sample, lam, N):
    """Truncated eigenvector ``x_{n+1} = conj(lam)^n / (w_1...w_n)`` of ``T*``.

    On the ``N``-dimensional truncation the eigen-equation fails only in the
    last row, so the residual is ``|lam| |x_N| / ||x||``.
    """
    stats = _require_no_zero(sample)
    if abs(lam) >= stats.r0:
        raise RwslabError(f"|lambda| = {abs(lam)} is not below r0 = {stats.r0}")
    N = int(N)
    if N < 1 or N - 1 > sample.length:
        raise ValueError("need 1 <= N <= sample length + 1")
    if lam == 0:
        x = np.zeros(N, dtype=complex)
        x[0] = 1.0
        return KernelVector(x=x, residual=0.0, log_norm=0.0)
    logs = np.concatenate(([0.0], _log_ratio_terms(sample.log_weights, lam, N - 1)))
    phase = np.exp(-1j * np.angle(lam) * np.arange(N))
    log_norm = 0.5 * float(np.logaddexp.reduce(2 * logs))
    x = np.exp(logs - log_norm) * phase
    residual = abs(lam) * abs(x[-1])
    return KernelVector(x=x, residual=float(residual), log_norm=log_norm)


# ------------------------------------------------------------ numerical range


@dataclass(frozen=True)
class NumericalRange:
    thetas: np.ndarray
    support: np.ndarray  # boundary support points, complex
    radius: float  # numerical radius estimate


def numerical_range(shift, thetas=None, K=64):
    """Support points of ``W(T_N)`` from the top eigenvalue of ``Re(e^{i theta} T_N)``.

    ``Re(e^{i theta} T_N)`` is Hermitian tridiagonal with off-diagonal
    ``e^{i theta} w / 2``; a diagonal unitary makes it real with off-diagonal
    ``w / 2``, so the top eigenvalue is the same for every angle and the
    range is a disk.
    """
    if thetas is None:
        thetas = np.linspace(0.0, 2 * np.pi, K, endpoint=False)
    thetas = np.asarray(thetas, dtype=float)
    if thetas.size < 8:
        raise ValueError("need at least 8 angles")
    if shift.dim == 1:
        lmax = 0.0
    else:
        lmax, _ = top_eigenvalue_zero_diag(shift.sub / 2)
        lmax = max(lmax, 0.0)
    support = lmax * np.exp(-1j * thetas)
    return NumericalRange(thetas=thetas, support=support, radius=float(lmax))
