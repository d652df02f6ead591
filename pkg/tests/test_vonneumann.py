import numpy as np
import pytest
from hypothesis import given, strategies as st

from rwslab.errors import GrammarError, HypothesisError
from rwslab.shift import analytic, parse_poly
from rwslab.vonneumann import (
    DeterministicShift, blocks_shift, disk_algebra_check, example_fixtures, hereditary_check,
    n_spectrum_empirical, n_spectrum_exact, normal_domination_verdict, numeric_domination_check,
    parse_modulus_set, parse_shift, random_free_polys, sample_dominated_by,
    shift_domination_verdict, split_by_first_atom, sup_on_circle, tuples_up_to, universal_shift,
)
from rwslab.weightlaw import Degenerate, FiniteDiscrete, TwoPoint, UniformInterval, sample_weights

from conftest import E

G012 = FiniteDiscrete.uniform([0.0, 1.0, 2.0])
G12 = FiniteDiscrete.uniform([1.0, 2.0])
YES, NO = "almostSurelyYes", "almostSurelyNo"


def brute_windows(seq, n):
    return {tuple(seq[i:i + n]) for i in range(len(seq) - n + 1)}


def test_n_spectrum_examples():
    assert n_spectrum_exact(DeterministicShift((1.0,)), 2).tuples == {(1.0, 1.0)}
    A = DeterministicShift((1.0, 2.0), prefix=(0.0,))
    assert n_spectrum_exact(A, 2).tuples == {(0.0, 1.0), (1.0, 2.0), (2.0, 1.0)}
    A2 = example_fixtures(max_len=3)["A2"]
    s3 = n_spectrum_exact(A2, 3)
    assert (0.0, 1.0, 0.0) in s3 and (0.0, 2.0, 1.0) in s3 and (0.0, 1.0, 2.0) in s3


def test_bilateral_windows_wrap():
    A = DeterministicShift((1.0, 2.0, 3.0), bilateral=True)
    assert n_spectrum_exact(A, 2).tuples == {(1.0, 2.0), (2.0, 3.0), (3.0, 1.0)}


@given(st.lists(st.sampled_from([0.0, 1.0, 2.0]), max_size=4),
       st.lists(st.sampled_from([0.0, 1.0, 2.0]), min_size=1, max_size=4),
       st.integers(1, 6))
def test_n_spectrum_exact_against_brute_force(prefix, period, n):
    A = DeterministicShift(tuple(period), tuple(prefix))
    spec = n_spectrum_exact(A, n)
    assert spec.tuples == brute_windows(list(A.weights(len(prefix) + 40 * len(period) + n)), n)
    assert len(spec) <= len(prefix) + len(period)
    doubled = DeterministicShift(tuple(period) * 2, tuple(prefix))
    assert n_spectrum_exact(doubled, n).tuples == spec.tuples


def test_empirical_coverage_examples():
    s = sample_weights(G12, 10**5, seed=1)
    rep = n_spectrum_empirical(s, 2, 0.1, list(tuples_up_to([1.0, 2.0], 2))[2:])
    assert rep.coverage == 1.0
    s = sample_weights(Degenerate(1.0), 10)
    assert n_spectrum_empirical(s, 3, 1e-9, [(1.0, 1.0, 1.0)]).coverage == 1.0
    s = sample_weights(UniformInterval(0.0, 1.0), 10**6, seed=2)
    grid = [(a, b) for a in np.linspace(0.05, 0.95, 10) for b in np.linspace(0.05, 0.95, 10)]
    assert n_spectrum_empirical(s, 2, 0.05, grid).coverage == 1.0


def test_empirical_witnesses_are_real():
    s = sample_weights(G012, 10**5, seed=3)
    rep = n_spectrum_empirical(s, 3, 0.1, list(tuples_up_to([0.0, 1.0, 2.0], 3))[12:])
    assert rep.coverage == 1.0
    for t, i in rep.witnesses.items():
        assert tuple(s.weights[i:i + 3]) == t


def test_universal_shift_examples():
    W = universal_shift(FiniteDiscrete.uniform([0.0, 1.0]), 2)
    assert list(W.weights(6)) == [0.0, 1.0, 0.0, 1.0, 1.0, 0.0]
    W = universal_shift(G012, 3)
    assert {t[0] for t in n_spectrum_exact(W, 1).tuples} == {0.0, 1.0, 2.0}
    W = universal_shift(Degenerate(0.0), 2)
    assert not np.any(W.weights(20))
    with pytest.raises(HypothesisError):
        universal_shift(G12, 2)


def test_example_fixture_verdicts():
    fx = example_fixtures()
    # fixtures list tuples up to length 4, so containments are checked to depth 4
    got = {k: shift_domination_verdict(A, G012, "T<A", s_max=4) for k, A in fx.items()}
    assert got["A1"].verdict == NO
    assert got["A2"].verdict == YES and got["A2"].clause.startswith("(a)")
    assert got["A3"].verdict == YES and got["A3"].clause.startswith("(a)")
    assert got["A4"].verdict == YES and got["A4"].clause.startswith("(c)")
    assert "cannot hold" in got["A2"].note


def test_contractions_dominated_by_unit_interval_law():
    law = UniformInterval(0.0, 1.0)
    rng = np.random.default_rng(0)
    for _ in range(10):
        A = DeterministicShift(tuple(rng.uniform(0, 1, rng.integers(1, 6))),
                               tuple(rng.uniform(0, 1, rng.integers(0, 4))))
        assert shift_domination_verdict(A, law, "A<T").verdict == YES
    A = DeterministicShift((1.2,))
    assert shift_domination_verdict(A, law, "A<T").verdict == NO


def test_left_invertible_nondegenerate_rejects():
    v = shift_domination_verdict(DeterministicShift((1.0, 2.0)), G12, "A<T")
    assert v.verdict == NO and v.clause == "card Gamma>1, 0 not in Gamma"


def test_interval_law_is_depth_bounded():
    law = UniformInterval(0.0, 1.0)
    blocks = blocks_shift(tuples_up_to([0.0, 0.5, 1.0], 2), lead_zero=True)
    A = DeterministicShift(tuple(blocks))
    v = shift_domination_verdict(A, law, "T<A", s_max=2, grid_step=0.5)
    assert v.verdict == "undecidedAtDepth" and v.depth == 2
    v = shift_domination_verdict(A, law, "T<A", s_max=3, grid_step=0.5)
    assert v.verdict == NO and v.failure[0] == 3


def test_split_by_first_atom_frequency():
    A = split_by_first_atom(max_len=4)
    hits = sum(
        sample_dominated_by(A, sample_weights(G12, 4, seed=9, stream=i).weights, 3)
        for i in range(10**4)
    )
    assert abs(hits / 10**4 - 0.5) <= 0.02
    # the predicate is exactly "first weight is 2" at any depth within the tuple cut
    assert sample_dominated_by(A, [2.0, 1.0, 1.0], 3) and not sample_dominated_by(A, [1.0, 2.0, 2.0], 3)


def test_normal_domination_examples(sym_law):
    assert normal_domination_verdict(sym_law, parse_modulus_set("circle:1.5")) == (NO, NO)
    assert normal_domination_verdict(sym_law, parse_modulus_set("circle:2.718281828459045"))[0] == YES
    unit = UniformInterval(0.0, 1.0)
    assert normal_domination_verdict(unit, parse_modulus_set("disk:1")) == (YES, NO)
    assert normal_domination_verdict(Degenerate(0.0), parse_modulus_set("point:0;circle:0.5"))[1] == YES
    with pytest.raises(GrammarError):
        parse_modulus_set("ellipse:1")


def test_numeric_check_trivial_cases():
    unit = UniformInterval(0.0, 1.0)
    A = DeterministicShift((0.3, 0.9, 0.5))
    s = sample_weights(unit, 10**4, seed=1)
    rep = numeric_domination_check(A, s, [parse_poly("S")], M=200, N=10**4)
    (c,) = rep.comparisons
    assert c.lhs == pytest.approx(0.9) and c.rhs == pytest.approx(s.weights.max())
    d = sample_weights(Degenerate(1.0), 400)
    rep = numeric_domination_check(DeterministicShift((1.0,)), d, [parse_poly("SS* - S*S")], M=400, N=400)
    assert rep.comparisons[0].lhs == pytest.approx(rep.comparisons[0].rhs, abs=1e-10)


def test_numeric_check_consistent_with_fixtures():
    s = sample_weights(G012, 10**4, seed=5)
    polys = random_free_polys(8, 3, seed=1)
    for name, A in example_fixtures().items():
        verdict = shift_domination_verdict(A, G012, "T<A", s_max=4).verdict
        for direction in ("A<T", "T<A"):
            rep = numeric_domination_check(A, s, polys, M=2000, N=10**4, direction=direction)
            if direction == "A<T" or verdict == YES:
                assert rep.consistent, (name, direction, rep.counterexamples)


def test_sup_on_circle():
    assert sup_on_circle([1, 1]) == pytest.approx(2.0, rel=1e-14)
    # maximum off the grid: |1 + i z^3| has sup 2 at a non-grid angle
    assert sup_on_circle([1, 0, 0, 1j], grid_points=7) == pytest.approx(2.0, rel=1e-10)


def test_disk_algebra_examples():
    unit = UniformInterval(0.0, 1.0)
    r = disk_algebra_check(sample_weights(unit, 10**4, seed=1), [0, 1], 10**4)
    assert abs(r.trunc_norm - 1.0) < 1e-3 and r.gap >= -1e-9
    r = disk_algebra_check(sample_weights(Degenerate(1.0), 100), [1, 1], 100)
    assert r.trunc_norm >= 1.999 and r.gap >= -1e-9
    good = sum(
        disk_algebra_check(sample_weights(unit, 10**6, seed=2, stream=t), [0, 0, 1], 10**6).trunc_norm >= 0.95
        for t in range(20)
    )
    assert good >= 18
    with pytest.raises(HypothesisError):
        disk_algebra_check(sample_weights(TwoPoint(2.0, 0.5), 10), [0, 1], 10)


def test_disk_algebra_general_poly_bounded_by_sup():
    unit = UniformInterval(0.0, 1.0)
    s = sample_weights(unit, 2000, seed=3)
    r = disk_algebra_check(s, [0.5, -1, 0.25j, 0.3], 2000)
    assert r.method == "direct" and r.gap >= -1e-9


def test_hereditary_examples():
    law = UniformInterval(0.5, 1.0)
    s = sample_weights(law, 300, seed=1)
    r = hereditary_check(s, parse_poly("SS*"), 200)
    assert r.t_norm <= 1 + 1e-12 and r.holds
    r = hereditary_check(s, parse_poly("SSS*S*S* - SSSS*S*S*S*"), 200)
    assert r.t_norm < 1 and r.s_norm == pytest.approx(1.0) and r.holds
    r = hereditary_check(s, parse_poly("I"), 50)
    assert r.t_norm == r.s_norm == pytest.approx(1.0)
    with pytest.raises(HypothesisError):
        hereditary_check(s, parse_poly("S*S"), 50)


def test_shift_grammar():
    A = parse_shift("prefix=0,1;period=1,2")
    assert A.prefix == (0.0, 1.0) and A.period == (1.0, 2.0)
    assert parse_shift("bilateral;period=1,2").bilateral
    assert parse_shift(A.describe()) == A
    for bad in ("prefix=1", "period=a", "foo=1;period=1", "bilateral;prefix=1;period=2"):
        with pytest.raises(GrammarError):
            parse_shift(bad)
