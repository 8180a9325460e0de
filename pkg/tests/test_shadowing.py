import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shadowlab.errors import NotGeneralizedHyperbolic, NotSplittable, TailBudgetExceeded, WindowOverrun
from shadowlab.shadowing import (PseudoTrajectory, SplitOperator, make_pseudotrajectory, shadow,
                                 solve_perturbed_orbit, verify_shadowing)
from shadowlab.shift_ops import ALL, NEG, NONE, NONNEG, LpVector, WeightSequence

TOL = 1e-10


def gh_pair():
    return SplitOperator.from_weights(WeightSequence.two_sided(0.5, 2.0))


def seed_vector(rng, p=2.0, support=4):
    return LpVector(p, -support, rng.standard_normal(2 * support + 1))


def constant_z(value, lo, hi, p=2.0):
    return {n: LpVector(p, 0, np.array([value])) for n in range(lo, hi)}


class TestSplitOperator:
    def test_gh_constants(self):
        T = gh_pair()
        assert (T.M, T.N) == (NEG, NONNEG)
        assert T.a == pytest.approx(0.5) and T.b == pytest.approx(0.5)
        assert T.K == pytest.approx(3.0)

    def test_pure_cases(self):
        T = SplitOperator.from_weights(WeightSequence.constant(0.5))
        assert (T.M, T.N, T.K) == (ALL, NONE, pytest.approx(2.0))
        T = SplitOperator.from_weights(WeightSequence.constant(2.0))
        assert (T.M, T.N, T.K) == (NONE, ALL, pytest.approx(1.0))

    def test_invariance_of_subspaces(self):
        T = gh_pair()
        rng = np.random.default_rng(3)
        x = LpVector(2.0, -6, rng.standard_normal(13))
        stable = T.project_stable(x)
        assert all(n < 0 for n in T.apply(stable).to_dict())
        unstable = T.project_unstable(x)
        assert all(n >= 0 for n in T.apply_inverse(unstable).to_dict())

    def test_rejects_non_hyperbolic(self):
        with pytest.raises(NotGeneralizedHyperbolic):
            SplitOperator(WeightSequence.constant(1.0), ALL, NONE)
        with pytest.raises(NotSplittable):
            SplitOperator.from_weights(WeightSequence.two_sided(2.0, 0.5))
        with pytest.raises(NotGeneralizedHyperbolic):
            SplitOperator.scalar(1.0)


class TestPseudoTrajectory:
    def test_exact_orbit(self):
        T = gh_pair()
        x0 = seed_vector(np.random.default_rng(0))
        pseudo = make_pseudotrajectory(T, x0, 0.0, (-20, 20))
        assert set(verify_shadowing(T, pseudo, x0).values()) == {0.0}

    def test_scalar_defects_equal_delta(self):
        T = SplitOperator.scalar(2.0)
        pseudo = make_pseudotrajectory(T, LpVector(2.0, 0, np.array([0.3])), 0.01, (-20, 20), 5)
        # |x_20| is about 2^20; subtracting such points loses about 1e-10 absolute
        for d in pseudo.defects(T).values():
            assert d == pytest.approx(0.01, abs=1e-9)

    def test_gh_accepted(self):
        T = gh_pair()
        pseudo = make_pseudotrajectory(T, seed_vector(np.random.default_rng(1)), 0.05, (-30, 30), 9)
        assert max(pseudo.defects(T).values()) <= 0.05 * (1 + 1e-12)

    def test_audit_rejects_large_defects(self):
        T = SplitOperator.scalar(0.5)
        pts = {n: LpVector(2.0, 0, np.array([1.0])) for n in range(-2, 3)}
        with pytest.raises(ValueError):
            PseudoTrajectory(-2, 2, pts, 0.1, T)

    def test_window_must_contain_zero(self):
        with pytest.raises(WindowOverrun):
            make_pseudotrajectory(gh_pair(), LpVector.basis(0), 0.1, (2, 6))


class TestSolver:
    def test_dilation_scalar(self):
        y = solve_perturbed_orbit(SplitOperator.scalar(2.0), constant_z(1.0, -100, 100), 1e-13)
        lo, hi = y.interior
        for n in range(lo, hi + 1):
            assert y[n][0] == pytest.approx(-1.0, abs=1e-12)

    def test_contraction_scalar(self):
        y = solve_perturbed_orbit(SplitOperator.scalar(0.5), constant_z(1.0, -100, 100), 1e-13)
        lo, hi = y.interior
        for n in range(lo, hi + 1):
            assert y[n][0] == pytest.approx(2.0, abs=1e-12)

    def test_gh_pair_constant_kick(self):
        T = gh_pair()
        delta = 0.01
        z = {n: LpVector.basis(0) * delta for n in range(-60, 60)}
        y = solve_perturbed_orbit(T, z, TOL)
        for n in range(min(z), max(z)):
            r = (y[n + 1] - T.apply(y[n]) - z[n]).norm()
            assert r <= 2 * TOL
        assert max(v.norm() for v in y.values()) <= 3 * delta + TOL

    def test_short_window_exceeds_tail_budget(self):
        T = gh_pair()
        x0 = seed_vector(np.random.default_rng(6))
        with pytest.raises(TailBudgetExceeded):
            shadow(T, make_pseudotrajectory(T, x0, 0.01, (-20, 20), 6), TOL)

    def test_tail_budget(self):
        with pytest.raises(TailBudgetExceeded):
            solve_perturbed_orbit(SplitOperator.scalar(0.99), constant_z(1.0, 0, 20), 1e-12)

    def test_interior_matches_series(self):
        # the windowed recursion agrees with the bi-infinite series inside the interior
        T = SplitOperator.scalar(0.5)
        rng = np.random.default_rng(2)
        vals = rng.uniform(-1, 1, 120)
        z = {n: LpVector(2.0, 0, np.array([vals[n + 60]])) for n in range(-60, 60)}
        y = solve_perturbed_orbit(T, z, 1e-12)
        lo, hi = y.interior
        for n in range(lo, hi + 1):
            series = sum(0.5 ** (j - 1) * vals[n - j + 60] for j in range(1, n + 61))
            assert y[n][0] == pytest.approx(series, abs=1e-12)


class TestShadow:
    def test_delta_zero(self):
        T = gh_pair()
        x0 = seed_vector(np.random.default_rng(4))
        pseudo = make_pseudotrajectory(T, x0, 0.0, (-50, 50))
        rep = shadow(T, pseudo)
        assert rep.epsilon == 0.0
        assert rep.seed is x0

    @pytest.mark.parametrize("noise_seed", range(5))
    def test_gh_bound(self, noise_seed):
        T = gh_pair()
        x0 = seed_vector(np.random.default_rng(noise_seed))
        rep = shadow(T, make_pseudotrajectory(T, x0, 0.01, (-50, 50), noise_seed), TOL)
        assert rep.K_used == pytest.approx(3.0)
        assert rep.epsilon <= 0.03 + 2 * TOL

    def test_contraction_bound(self):
        T = SplitOperator.from_weights(WeightSequence.constant(0.5))
        x0 = seed_vector(np.random.default_rng(7))
        rep = shadow(T, make_pseudotrajectory(T, x0, 0.01, (-40, 40), 7), TOL)
        assert rep.epsilon <= 0.02 + 2 * TOL

    def test_pseudo_offset_residual(self):
        T = gh_pair()
        x0 = seed_vector(np.random.default_rng(5))
        pseudo = make_pseudotrajectory(T, x0, 0.0, (-10, 10))
        c = 0.37
        moved = {n: x + LpVector.basis(0) * c for n, x in pseudo.points.items()}
        res = verify_shadowing(T, PseudoTrajectory(-10, 10, moved, 10.0), x0)
        assert res[0] == pytest.approx(c, rel=1e-14)

    def test_report_dict(self):
        T = gh_pair()
        x0 = seed_vector(np.random.default_rng(6))
        d = shadow(T, make_pseudotrajectory(T, x0, 0.01, (-50, 50), 6)).to_dict()
        assert d["K_used"] == pytest.approx(3.0)
        assert d["epsilon"] == max(r for _, r in d["residuals"])


# -- properties ---------------------------------------------------------------------

def _random_z(seed, lo=-40, hi=40, support=3, p=2.0):
    rng = np.random.default_rng(seed)
    return {n: LpVector(p, -support, rng.standard_normal(2 * support + 1)) for n in range(lo, hi)}


OPERATORS = {
    "gh": gh_pair,
    "contraction": lambda: SplitOperator.from_weights(WeightSequence.constant(0.5)),
    "dilation": lambda: SplitOperator.from_weights(WeightSequence.constant(3.0)),
    "gh-asym": lambda: SplitOperator.from_weights(WeightSequence.two_sided(0.3, 1.7)),
}


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10 ** 6), op=st.sampled_from(sorted(OPERATORS)))
def test_recursion_identity_and_bound(seed, op):
    T = OPERATORS[op]()
    z = _random_z(seed)
    y = solve_perturbed_orbit(T, z, TOL)
    z_sup = max(v.norm() for v in z.values())
    for n in range(min(z), max(z)):
        assert (y[n + 1] - T.apply(y[n]) - z[n]).norm() <= 2 * TOL
    assert max(v.norm() for v in y.values()) <= T.K * z_sup + TOL


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10 ** 6), alpha=st.floats(-3, 3), beta=st.floats(-3, 3))
def test_linearity(seed, alpha, beta):
    T = gh_pair()
    z1, z2 = _random_z(seed), _random_z(seed + 1)
    combo = {n: z1[n] * alpha + z2[n] * beta for n in z1}
    y1, y2 = solve_perturbed_orbit(T, z1, TOL), solve_perturbed_orbit(T, z2, TOL)
    y = solve_perturbed_orbit(T, combo, TOL)
    for n in y:
        assert (y[n] - (y1[n] * alpha + y2[n] * beta)).norm() <= 4 * TOL * max(1.0, abs(alpha) + abs(beta))


# window and tail budget per operator: a pure dilation grows the points like 3^n,
# so its window stays short enough for rounding to sit far below K * delta
CERTIFICATE_RUNS = {
    "gh": ((-50, 50), TOL),
    "gh-asym": ((-80, 80), TOL),
    "contraction": ((-50, 50), TOL),
    "dilation": ((-15, 15), 1e-6),
}


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10 ** 6), op=st.sampled_from(sorted(OPERATORS)),
       delta=st.floats(1e-3, 0.5), p=st.sampled_from([1.0, 2.0, 3.0]))
def test_shadowing_certificate(seed, op, delta, p):
    T = OPERATORS[op]()
    window, tol = CERTIFICATE_RUNS[op]
    x0 = seed_vector(np.random.default_rng(seed), p)
    pseudo = make_pseudotrajectory(T, x0, delta, window, seed)
    rep = shadow(T, pseudo, tol)
    scale = max(x.norm() for x in pseudo.points.values())
    assert rep.epsilon <= rep.K_used * delta + 2 * tol + 1e-14 * scale


@pytest.mark.parametrize("c", [0.25, 0.5, 0.8, 1.25, 2.0, 4.0])
def test_scalar_closed_forms(c):
    # constant kick: the bounded solution is the fixed point y = 1/(1 - c)
    y = solve_perturbed_orbit(SplitOperator.scalar(c), constant_z(1.0, -200, 200), 1e-13)
    lo, hi = y.interior
    for n in range(lo, hi + 1):
        assert y[n][0] == pytest.approx(1 / (1 - c), abs=1e-12 * max(1.0, abs(1 / (1 - c))))
