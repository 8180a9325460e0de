import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from shadowlab.errors import NotSplittable, WindowOverrun, WindowExhausted
from shadowlab.measure_core import ExpAbs, Geometric, MeasureSequence, classify_measures
from shadowlab.rates import Kind
from shadowlab.shift_ops import (ALL, NEG, NONE, NONNEG, LpVector, WeightSequence, apply_inverse,
                                 apply_shift, classify_shift, norm_growth, shift_splitting,
                                 weights_from_measures)

E = math.e


class TestApply:
    def test_unweighted(self):
        y = apply_shift(WeightSequence.constant(1.0), LpVector.basis(0))
        assert y.to_dict() == {-1: 1.0}

    def test_constant_two(self):
        assert apply_shift(WeightSequence.constant(2.0), LpVector.basis(1)).to_dict() == {0: 2.0}

    def test_two_sided_root_e(self):
        w = WeightSequence.two_sided(E ** -0.5, E ** 0.5)
        y = apply_shift(w, LpVector.basis(1))
        assert y.to_dict() == {0: pytest.approx(E ** 0.5, rel=1e-15)}

    def test_inverse_basis(self):
        assert apply_inverse(WeightSequence.constant(1.0), LpVector.basis(-1)).to_dict() == {0: 1.0}
        assert apply_inverse(WeightSequence.constant(2.0), LpVector.basis(0)).to_dict() == {1: 0.5}

    def test_window_moves(self):
        x = LpVector(2.0, -3, np.arange(1.0, 8.0))
        w = WeightSequence.constant(0.5)
        assert apply_shift(w, x).window == (-4, 2)
        assert apply_inverse(w, x).window == (-2, 4)

    def test_tabulated_overrun(self):
        w = WeightSequence.from_values(np.ones(5), -2)
        # (B x)_n = w_{n+1} x_{n+1}: x on [-2, 2] needs exactly w_{-2} .. w_2
        apply_shift(w, LpVector(2.0, -2, np.ones(5)))
        with pytest.raises(WindowOverrun):
            apply_shift(w, LpVector(2.0, -3, np.ones(5)))
        apply_inverse(w, LpVector(2.0, -3, np.ones(5)))
        with pytest.raises(WindowOverrun):
            apply_inverse(w, LpVector(2.0, 2, np.ones(1)))

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 10 ** 6), p=st.sampled_from([1.0, 2.0, 3.5]))
    def test_inverse_round_trip(self, seed, p):
        rng = np.random.default_rng(seed)
        w = WeightSequence.from_values(rng.uniform(0.2, 3.0, 40), -20)
        x = LpVector(p, -10, rng.standard_normal(21))
        back = apply_inverse(w, apply_shift(w, x))
        assert back.window == x.window
        assert np.allclose(back.entries, x.entries, rtol=1e-14, atol=0)


class TestVector:
    def test_norm(self):
        assert LpVector(1.0, 0, np.array([3.0, -4.0])).norm() == 7.0
        assert LpVector(2.0, 0, np.array([3.0, -4.0])).norm() == 5.0

    def test_sum_over_union(self):
        s = LpVector.basis(-2) + LpVector.basis(3) * 2.0
        assert s.window == (-2, 3) and s.to_dict() == {-2: 1.0, 3: 2.0}

    def test_on_rejects_lost_mass(self):
        with pytest.raises(WindowOverrun):
            LpVector.basis(5).on(-2, 2)

    def test_masked(self):
        x = LpVector(2.0, -2, np.ones(5))
        assert x.masked(NEG).to_dict() == {-2: 1.0, -1: 1.0}
        assert x.masked(NONNEG).to_dict() == {0: 1.0, 1: 1.0, 2: 1.0}


class TestNormGrowth:
    def test_constant(self):
        w = WeightSequence.constant(0.5)
        for n in (1, 7, 50):
            assert norm_growth(w, n, "sup_all") == pytest.approx(0.5, rel=1e-14)

    def test_two_sided_positive_side(self):
        w = WeightSequence.two_sided(0.5, 2.0)
        # oracle: brute-force products over k = 1..199
        brute = oracles.weight_products(oracles.two_sided_log_w(0.5, 2.0), 8, range(1, 200))
        assert norm_growth(w, 8, "inf_pos") == pytest.approx(math.exp(brute.min() / 9), rel=1e-14)
        assert norm_growth(w, 8, "inf_pos") == pytest.approx(2.0, rel=1e-14)

    def test_two_sided_negative_side(self):
        w = WeightSequence.two_sided(0.5, 2.0)
        # products w_{-k-n} ... w_{-k}, k >= 1
        logs = [sum(math.log(0.5) for _ in range(-k - 6, -k + 1)) for k in range(1, 100)]
        assert norm_growth(w, 6, "sup_neg") == pytest.approx(math.exp(max(logs) / 7), rel=1e-14)

    def test_two_sided_whole_line(self):
        w = WeightSequence.two_sided(0.5, 2.0)
        lw = oracles.two_sided_log_w(0.5, 2.0)
        for n in (1, 3, 10):
            brute = oracles.weight_products(lw, n, range(-60, 60))
            assert norm_growth(w, n, "sup_all") == pytest.approx(math.exp(brute.max() / (n + 1)), rel=1e-14)
            assert norm_growth(w, n, "inf_all") == pytest.approx(math.exp(brute.min() / (n + 1)), rel=1e-14)

    def test_measure_derived_exponential(self):
        w = weights_from_measures(MeasureSequence.from_generator(Geometric(E), 64), 1.0)
        for n in (1, 5, 40):
            assert norm_growth(w, n, "sup_all") == pytest.approx(1 / E, rel=1e-12)

    def test_tabulated_matches_generator(self):
        w = WeightSequence.two_sided(0.5, 2.0, 64)
        for side in ("sup_all", "inf_all", "sup_neg", "inf_pos"):
            for n in (1, 4, 16):
                assert norm_growth(w.tabulated(), n, side) == pytest.approx(norm_growth(w, n, side), rel=1e-12)

    def test_tabulated_exhausted(self):
        with pytest.raises(WindowExhausted):
            norm_growth(WeightSequence.two_sided(0.5, 2.0, 8).tabulated(), 12, "sup_neg")

    def test_n_positive(self):
        with pytest.raises(ValueError):
            norm_growth(WeightSequence.constant(1.0), 0, "sup_all")


class TestClassify:
    def test_contraction(self):
        c = classify_shift(WeightSequence.constant(0.5))
        assert c.kind is Kind.CONTRACTION and c.stable_rate == pytest.approx(0.5)
        assert c.hyperbolic

    def test_dilation(self):
        c = classify_shift(WeightSequence.constant(2.0))
        assert c.kind is Kind.DILATION and c.unstable_rate == pytest.approx(2.0)

    def test_wrong_way_pair(self):
        c = classify_shift(WeightSequence.two_sided(2.0, 0.5))
        assert c.kind is Kind.NON_SHADOWING

    def test_gh_pair(self):
        c = classify_shift(WeightSequence.two_sided(0.5, 2.0))
        assert c.kind is Kind.GENERALIZED_HYPERBOLIC
        assert (c.stable_rate, c.unstable_rate) == (pytest.approx(0.5), pytest.approx(2.0))
        assert c.hyperbolic is False

    def test_unit_weights(self):
        assert classify_shift(WeightSequence.constant(1.0)).kind is Kind.NON_SHADOWING
        assert classify_shift(WeightSequence.constant(1.0).tabulated()).kind is Kind.INCONCLUSIVE


class TestWeightsFromMeasures:
    def test_exponential(self):
        w = weights_from_measures(MeasureSequence.from_generator(Geometric(E), 16), 1.0)
        assert np.allclose(w.values, 1 / E, rtol=1e-14)
        assert w.at(np.array([1000]))[0] == pytest.approx(1 / E, rel=1e-14)

    def test_laplace_p2(self):
        nu = MeasureSequence.from_generator(ExpAbs(E), 16, (1 - 1 / E) / 2)
        w = weights_from_measures(nu, 2.0)
        for j in range(-15, 17):
            expected = E ** 0.5 if j >= 1 else E ** -0.5
            assert w.at(j) == pytest.approx(expected, rel=1e-14)

    def test_constant(self):
        w = weights_from_measures(MeasureSequence.from_values(np.ones(21)), 3.0)
        assert np.all(w.values == 1.0)
        assert w.lo == -9 and w.hi == 10

    def test_p_below_one(self):
        with pytest.raises(ValueError):
            weights_from_measures(MeasureSequence.from_values(np.ones(5)), 0.5)


class TestSplitting:
    def test_gh(self):
        assert shift_splitting(WeightSequence.two_sided(0.5, 2.0)) == (NEG, NONNEG)

    def test_pure(self):
        assert shift_splitting(WeightSequence.constant(0.5)) == (ALL, NONE)
        assert shift_splitting(WeightSequence.constant(2.0)) == (NONE, ALL)

    def test_not_splittable(self):
        with pytest.raises(NotSplittable):
            shift_splitting(WeightSequence.two_sided(2.0, 0.5))


# -- properties ---------------------------------------------------------------------

def _random_nu(seed, N=20):
    rng = np.random.default_rng(seed)
    return MeasureSequence.from_values(np.exp(np.cumsum(rng.normal(0, 0.7, 2 * N + 1))))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10 ** 6), p=st.sampled_from([1.0, 2.0, 4.0, 1.5]))
def test_telescoping(seed, p):
    nu = _random_nu(seed)
    w = weights_from_measures(nu, p)
    for k in range(-19, 20):
        for n in range(0, 20 - k):
            prod = float(np.sum(w.log_at(np.arange(k, k + n + 1))))
            ref = float(w.log_at(k)) + (nu.log_at(k) - nu.log_at(k + n)) / p
            assert math.exp(prod - ref) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10 ** 6), p=st.sampled_from([1.0, 2.0, 3.0]))
def test_norm_bounds(seed, p):
    rng = np.random.default_rng(seed)
    w = WeightSequence.from_values(rng.uniform(0.1, 4.0, 30), -15)
    x = LpVector(p, -13, rng.standard_normal(25))
    y = apply_shift(w, x).norm()
    used = w.at(x.indices)
    assert used.min() * x.norm() * (1 - 1e-12) <= y <= used.max() * x.norm() * (1 + 1e-12)
    assert y <= w.values.max() * x.norm() * (1 + 1e-12)


GENERATED = [Geometric(0.5), Geometric(1.0), Geometric(2.0), Geometric(E), ExpAbs(E), ExpAbs(0.5)]


@pytest.mark.parametrize("gen", GENERATED, ids=lambda g: str(g.describe()))
def test_p_invariance(gen):
    nu = MeasureSequence.from_generator(gen, 128)
    kinds = {classify_shift(weights_from_measures(nu, p), depth=32).kind for p in (1.0, 2.0, 4.0, 7.0)}
    assert len(kinds) == 1


@pytest.mark.parametrize("gen", GENERATED, ids=lambda g: str(g.describe()))
def test_measure_and_shift_routes_agree(gen):
    nu = MeasureSequence.from_generator(gen, 128)
    kind = classify_measures(nu).kind
    for p in (1.0, 2.0, 4.0):
        assert classify_shift(weights_from_measures(nu, p)).kind is kind


@settings(max_examples=30, deadline=None)
@given(c=st.floats(0.3, 3.0), p=st.sampled_from([1.0, 2.0, 4.0]))
def test_exp_abs_rates_follow_root(c, p):
    nu = MeasureSequence.from_generator(ExpAbs(c), 64)
    m = classify_measures(nu, depth=16)
    s = classify_shift(weights_from_measures(nu, p), depth=16)
    assert s.kind is m.kind
    if m.stable_rate is not None:
        assert s.stable_rate == pytest.approx(m.stable_rate ** (1 / p), rel=1e-9)
