import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from rwslab.errors import RwslabError
from rwslab.shift import TruncatedShift, operator_norm, truncate
from rwslab.spectral import (
    adjoint_kernel_vector, adjoint_point_test, default_grid, numerical_range,
    predict_spectral_picture, smin_grid,
)
from rwslab.weightlaw import Degenerate, TwoPoint, UniformInterval, law_stats, sample_weights

from conftest import E


def picture(law):
    return predict_spectral_picture(law_stats(law))


def test_uniform_picture():
    p = picture(UniformInterval(0.0, 1.0))
    assert p.ess_spectrum.describe() == {"kind": "closed_disk", "radius": 1.0}
    assert p.point_spec_T_star.kind == "open_disk"
    assert p.point_spec_T_star.outer == pytest.approx(math.exp(-1))
    assert p.point_spec_T.kind == "empty"
    assert p.fredholm_index_inside is None


def test_two_point_picture(sym_law):
    p = picture(sym_law)
    assert p.ess_spectrum.kind == "annulus"
    assert (p.ess_spectrum.inner, p.ess_spectrum.outer) == pytest.approx((1 / E, E))
    assert p.fredholm_index_inside == -1
    assert p.point_spec_T_star.kind == "open_disk"
    assert p.point_spec_T_star.outer == pytest.approx(1.0)
    assert p.num_range.kind == "open_disk" and p.ess_num_range.kind == "closed_disk"


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
def test_degenerate_picture_is_scaled_unilateral_shift(c):
    p = picture(Degenerate(c))
    assert p.norm == p.ess_norm == c
    assert p.spectrum == p.approx_defect
    assert p.spectrum.kind == "closed_disk" and p.spectrum.outer == c
    assert p.ess_spectrum.kind == "annulus" and p.ess_spectrum.inner == p.ess_spectrum.outer == c
    assert p.point_spec_T.kind == "empty"
    assert p.point_spec_T_star.kind == "open_disk" and p.point_spec_T_star.outer == c
    assert p.fredholm_index_inside == -1


def test_zero_mass_picture():
    p = picture(TwoPoint(2.0, 0.0, 0.5))
    assert p.point_spec_T.kind == "origin" and p.kernel_dim_T_star == "infinite"


def test_smin_examples(sym_law):
    g = smin_grid(TruncatedShift([3.0]), [0.0])
    assert g.smin[0] == 0.0 and g.converged[0]
    s = sample_weights(sym_law, 1999, seed=11)
    g = smin_grid(truncate(s, 2000), [3.0, 0.5])
    assert g.smin[0] >= 3 - E
    assert g.smin[1] <= 1e-6


def test_smin_dense_oracle():
    rng = np.random.default_rng(2)
    for _ in range(5):
        N = int(rng.integers(2, 51))
        T = TruncatedShift(rng.uniform(0, E, N - 1))
        pts = rng.uniform(-3, 3, 25) + 1j * rng.uniform(-3, 3, 25)
        g = smin_grid(T, pts)
        ref = [np.linalg.svd(z * np.eye(N) - T.dense(), compute_uv=False)[-1] for z in pts]
        assert np.max(np.abs(g.smin - ref)) < 1e-8


def test_default_grid_shape():
    pts = default_grid(E, size=201)
    assert pts.size == 201**2
    assert pts.real.min() == pytest.approx(-(E + 0.5)) and pts.imag.max() == pytest.approx(E + 0.5)


@given(arrays(np.float64, st.integers(1, 30), elements=st.floats(0.0, 3.0)),
       st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False))
def test_smin_lipschitz(sub, lam, mu):
    g = smin_grid(TruncatedShift(sub), [lam, mu])
    assert abs(g.smin[0] - g.smin[1]) <= abs(lam - mu) + 1e-12


@given(arrays(np.float64, st.integers(1, 30), elements=st.floats(0.0, 3.0)),
       st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False))
def test_smin_reflection_and_triangle_bound(sub, lam):
    a = smin_grid(TruncatedShift(sub), [lam]).smin[0]
    b = smin_grid(TruncatedShift(sub[::-1]), [np.conj(lam)]).smin[0]
    assert abs(a - b) <= 1e-12 * max(1.0, abs(lam) + sub.max())
    if abs(lam) > sub.max():
        assert a >= abs(lam) - sub.max() - 1e-12


def test_adjoint_point_verdicts(sym_law):
    s = sample_weights(sym_law, 5000, seed=3)
    assert adjoint_point_test(s, 0.5, 5000).verdict == "inside"
    assert adjoint_point_test(s, 1.2, 1000).verdict == "outside"
    assert adjoint_point_test(s, 1.0, 1000).verdict == "critical"
    lps = adjoint_point_test(s, 0.5, 5000).log_partial_sums
    assert lps[-1] - lps[2500] < 1e-10


def test_adjoint_point_outside_diverges(sym_law):
    hits = 0
    for t in range(100):
        s = sample_weights(sym_law, 1000, seed=4, stream=t)
        hits += adjoint_point_test(s, 1.2, 1000).log_partial_sums[-1] > 20
    assert hits >= 99


def test_adjoint_point_rejects_zero_mass():
    s = sample_weights(TwoPoint(2.0, 0.0, 0.5), 100)
    with pytest.raises(RwslabError):
        adjoint_point_test(s, 0.5, 100)


def test_kernel_vector_examples(sym_law):
    kv = adjoint_kernel_vector(sample_weights(sym_law, 10), 0.0, 5)
    assert kv.residual == 0.0 and kv.x[0] == 1.0
    kv = adjoint_kernel_vector(sample_weights(Degenerate(1.0), 60), 0.5, 50)
    x = kv.x * math.exp(kv.log_norm)
    assert np.allclose(x, 0.5 ** np.arange(50))
    assert kv.residual <= 0.5**49 / np.linalg.norm(x) * (1 + 1e-12)
    with pytest.raises(RwslabError):
        adjoint_kernel_vector(sample_weights(sym_law, 10), 1.0, 5)


def test_kernel_vector_residual_against_matrix(sym_law):
    s = sample_weights(sym_law, 200, seed=8)
    lam = 0.4 + 0.3j
    kv = adjoint_kernel_vector(s, lam, 60)
    T = truncate(s, 60).dense()
    direct = np.linalg.norm((T.T - np.conj(lam) * np.eye(60)) @ kv.x)
    assert direct == pytest.approx(kv.residual, abs=1e-15)


def test_kernel_vector_residual_rate(sym_law):
    small = sum(
        adjoint_kernel_vector(sample_weights(sym_law, 200, seed=5, stream=t), 0.5, 200).residual <= 1e-6
        for t in range(100)
    )
    assert small >= 95


def test_numerical_range_examples():
    assert numerical_range(TruncatedShift([3.0])).radius == pytest.approx(1.5, rel=1e-14)
    rng = np.random.default_rng(0)
    v = rng.standard_normal((10**5, 2)) + 1j * rng.standard_normal((10**5, 2))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    brute = np.max(np.abs(3 * v[:, 1] * np.conj(v[:, 0])))
    assert abs(brute - 1.5) < 1e-3
    for N in (5, 40):
        T = TruncatedShift(np.ones(N - 1))
        ref = np.linalg.eigvalsh((T.dense() + T.dense().T) / 2)[-1]
        assert numerical_range(T).radius == pytest.approx(ref, rel=1e-13)
        assert ref == pytest.approx(math.cos(math.pi / (N + 1)), rel=1e-13)
    with pytest.raises(ValueError):
        numerical_range(T, thetas=np.linspace(0, 1, 4))


@given(arrays(np.float64, st.integers(2, 40), elements=st.floats(0.0, 3.0)))
def test_numerical_radius_bounds_and_monotone(sub):
    T = TruncatedShift(sub)
    w = numerical_range(T).radius
    assert w <= operator_norm(T.dense()) + 1e-12
    assert numerical_range(TruncatedShift(sub[:-1])).radius <= w + 1e-12
    if sub.max() > 0:
        assert w < sub.max()
