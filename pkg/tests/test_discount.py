import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from impatience import (
    DatedReward,
    DiscountFactor,
    Preference,
    Stream,
    behavioral_di_check,
    compare_dated_rewards,
    compound_interest_convexity_holds,
    evaluate_stream,
    find_convexity_violation,
    from_generalized_beta_delta,
    impatience_ratios,
    is_decreasing_impatience,
    is_increasing_impatience,
    is_stationary,
    make_discount_factor,
)
from impatience.discount import convexity_grid
from impatience.errors import (
    BadPremiseOrder,
    DateBeyondHorizon,
    HorizonMismatch,
    NonPositiveValue,
    NotDecreasing,
    ParamOutOfRange,
    PeriodOutOfRange,
    TooShort,
)

from conftest import di_factors, exponential, non_di_factors, quasi_hyperbolic, squared_exponent


class TestConstruction:
    def test_exponential(self):
        f = make_discount_factor([1, 0.5, 0.25])
        assert f.horizon == 2
        assert len(f) == 3

    def test_quasi_hyperbolic_values_accepted(self):
        f = make_discount_factor([1, 0.54, 0.486, 0.4374])
        assert f.horizon == 3

    @pytest.mark.parametrize(
        "values, error",
        [
            ([1, 0.5, 0.6], NotDecreasing),
            ([1, 0.5], TooShort),
            ([1, 0.5, 0.0], NonPositiveValue),
            ([1, 0.5, -0.1], NonPositiveValue),
            ([1, np.nan, 0.1], NonPositiveValue),
            ([1, 0.5, 1e-301], NonPositiveValue),
        ],
    )
    def test_rejects(self, values, error):
        with pytest.raises(error):
            make_discount_factor(values)

    def test_values_are_read_only_copies(self):
        raw = np.array([1.0, 0.5, 0.25])
        f = DiscountFactor(raw)
        raw[1] = 0.9
        assert f[1] == 0.5
        with pytest.raises(ValueError):
            f.values[0] = 2.0

    def test_flat_runs_allowed(self):
        assert make_discount_factor([1, 1, 1]).horizon == 2


class TestGeneralizedBetaDelta:
    @pytest.mark.parametrize(
        "beta, delta, switch, horizon, expected",
        [
            (1.0, 0.5, 1, 3, [1, 0.5, 0.25, 0.125]),
            (0.6, 0.9, 1, 3, [1, 0.54, 0.486, 0.4374]),
            (0.8, 0.9, 2, 4, [1, 0.72, 0.5184, 0.46656, 0.419904]),
        ],
    )
    def test_values(self, beta, delta, switch, horizon, expected):
        f = from_generalized_beta_delta(beta, delta, switch, horizon)
        np.testing.assert_allclose(f.values, expected, rtol=1e-15)

    @pytest.mark.parametrize(
        "args", [(0.0, 0.9, 1, 3), (1.2, 0.9, 1, 3), (0.5, 0.0, 1, 3), (0.5, 0.9, 0, 3), (0.5, 0.9, 4, 3), (0.5, 0.9, 1, 1)]
    )
    def test_parameter_ranges(self, args):
        with pytest.raises(ParamOutOfRange):
            from_generalized_beta_delta(*args)

    @given(
        st.floats(0.05, 1.0),
        st.floats(0.05, 1.0),
        st.integers(2, 30),
        st.data(),
    )
    def test_always_decreasing_impatience(self, beta, delta, horizon, data):
        switch = data.draw(st.integers(1, horizon))
        assert is_decreasing_impatience(from_generalized_beta_delta(beta, delta, switch, horizon))


class TestRatiosAndPredicates:
    def test_ratios(self, qh):
        np.testing.assert_allclose(impatience_ratios(exponential(0.5, 3)), [0.5] * 3)
        np.testing.assert_allclose(impatience_ratios(qh), [0.54, 0.9, 0.9], rtol=1e-14)
        # oracle: f(t+1)/f(t) = 0.9**(2t+1)
        np.testing.assert_allclose(impatience_ratios(squared_exponent()), 0.9 ** (2 * np.arange(3) + 1), rtol=1e-14)

    def test_decreasing_impatience(self, qh):
        assert is_decreasing_impatience(exponential(0.5, 5))
        assert is_decreasing_impatience(qh)
        assert not is_decreasing_impatience(squared_exponent())

    def test_increasing_impatience(self, qh):
        assert is_increasing_impatience(exponential(0.5, 5))
        assert is_increasing_impatience(squared_exponent())
        assert not is_increasing_impatience(qh)

    def test_stationary(self, qh):
        assert is_stationary(DiscountFactor([2, 1, 0.5, 0.25]))
        assert not is_stationary(qh)
        assert is_stationary(DiscountFactor([1, 0.5, 0.2500001]), rel_tol=1e-3)
        assert not is_stationary(DiscountFactor([1, 0.5, 0.2500001]), rel_tol=1e-9)

    def test_no_underflow_for_tiny_values(self):
        f = DiscountFactor(np.geomspace(1e-10, 1e-290, 40))
        assert is_decreasing_impatience(f, rel_tol=1e-12)
        assert is_stationary(f, rel_tol=1e-9)
        assert not is_decreasing_impatience(DiscountFactor(1e-150 * 0.9 ** (np.arange(6.0) ** 2)))

    def test_negative_tolerance_rejected(self, qh):
        with pytest.raises(ParamOutOfRange):
            is_decreasing_impatience(qh, rel_tol=-1.0)

    @given(di_factors())
    def test_di_matches_ratio_enumeration(self, f):
        r = impatience_ratios(f)
        assert is_decreasing_impatience(f) == bool(np.all(np.diff(r) >= -1e-10 * r[1:]))

    @given(non_di_factors())
    def test_non_di_detected(self, f):
        assert not is_decreasing_impatience(f)

    @given(di_factors(), st.floats(0.01, 100.0))
    def test_scale_invariance(self, f, c):
        g = DiscountFactor(c * f.values)
        assert is_decreasing_impatience(g) == is_decreasing_impatience(f)

    @given(di_factors())
    def test_stationary_implies_both(self, f):
        if is_stationary(f):
            assert is_decreasing_impatience(f) and is_increasing_impatience(f)


class TestStreams:
    def test_evaluate(self):
        f = DiscountFactor([1, 0.5, 0.25])
        assert evaluate_stream(f, [1, 1, 1]) == 1.75
        assert evaluate_stream(f, [0, 0, 0]) == 0.0
        assert evaluate_stream(DiscountFactor([1, 0.54, 0.486]), [0, 100, 0]) == pytest.approx(54.0, rel=1e-15)

    def test_horizon_mismatch(self):
        with pytest.raises(HorizonMismatch):
            evaluate_stream(DiscountFactor([1, 0.5, 0.25]), [1, 1])

    def test_dated_stream(self):
        s = Stream.dated(DatedReward(3.0, 1), 2)
        np.testing.assert_array_equal(s.values, [0, 3, 0])
        with pytest.raises(DateBeyondHorizon):
            Stream.dated(DatedReward(3.0, 4), 2)

    @pytest.mark.parametrize("values", [[1, -1, 0], [np.inf, 0, 0]])
    def test_stream_rejects(self, values):
        with pytest.raises(ValueError):
            Stream(values)


class TestDatedRewards:
    f = from_generalized_beta_delta(0.9, 0.95, 1, 4)

    def test_smaller_sooner_wins_now(self):
        assert compare_dated_rewards(self.f, DatedReward(110, 1), DatedReward(100, 0)) is Preference.B_PREFERRED

    def test_larger_later_wins_when_delayed(self):
        assert compare_dated_rewards(self.f, DatedReward(110, 2), DatedReward(100, 1)) is Preference.A_PREFERRED

    @pytest.mark.parametrize("t", [0, 2, 4])
    def test_identity(self, t):
        assert compare_dated_rewards(self.f, DatedReward(5, t), DatedReward(5, t)) is Preference.INDIFFERENT

    def test_date_beyond_horizon(self):
        with pytest.raises(DateBeyondHorizon):
            compare_dated_rewards(self.f, DatedReward(5, 5), DatedReward(5, 0))

    def test_rejects_negative_amount(self):
        with pytest.raises(ValueError):
            DatedReward(-1, 0)


class TestBehavioralCheck:
    def test_squared_exponent_reverses(self):
        assert not behavioral_di_check(squared_exponent(horizon=4), 1.0, 0.85, 0, 1, 2)

    def test_vacuous_when_premise_fails(self):
        assert behavioral_di_check(quasi_hyperbolic(horizon=4), 1.0, 0.55, 0, 1, 2)

    @given(
        st.floats(0.05, 0.99),
        st.floats(1.01, 3.0),
        st.integers(0, 3),
        st.integers(1, 3),
        st.integers(1, 4),
    )
    def test_exponential_always_passes(self, delta, gain, s, lag, shift):
        f = exponential(delta, s + lag + shift)
        assert behavioral_di_check(f, gain, 1.0, s, s + lag, shift)

    @pytest.mark.parametrize(
        "x, y, s, t, shift, error",
        [
            (0.5, 1.0, 0, 1, 1, BadPremiseOrder),
            (1.0, 0.5, 1, 1, 1, BadPremiseOrder),
            (1.0, 0.5, 0, 1, 5, DateBeyondHorizon),
            (1.0, 0.5, 0, 1, 0, DateBeyondHorizon),
        ],
    )
    def test_rejects(self, x, y, s, t, shift, error):
        with pytest.raises(error):
            behavioral_di_check(exponential(0.9, 4), x, y, s, t, shift)

    @given(di_factors(min_horizon=4), st.data())
    def test_di_factors_pass(self, f, data):
        s = data.draw(st.integers(0, f.horizon - 3))
        t = data.draw(st.integers(s + 1, f.horizon - 1))
        shift = data.draw(st.integers(1, f.horizon - t))
        # choose y to make the premise bind exactly
        x = 1.0
        y = f[t] / f[s]
        assert behavioral_di_check(f, x, y * (1 - 1e-9), s, t, shift)


    @staticmethod
    def grid_verdict(f):
        """All admissible inputs on a 0.05 amount grid with T <= 8."""
        amounts = np.round(np.arange(0.05, 1.0001, 0.05), 2)
        return all(
            behavioral_di_check(f, x, y, s, t, f.horizon - t)
            for x in amounts
            for y in amounts
            if x > y
            for t in range(1, f.horizon)
            for s in range(t)
        )

    @given(di_factors(max_horizon=6))
    def test_grid_equivalence_di(self, f):
        assert self.grid_verdict(f)

    def test_grid_equivalence_non_di(self):
        assert not self.grid_verdict(squared_exponent(horizon=6))

    @given(non_di_factors(max_horizon=8))
    def test_non_di_has_falsifying_pair(self, f):
        r = impatience_ratios(f)
        j = int(np.flatnonzero(np.diff(r) < 0)[0])
        y = 0.5 * (r[j] + r[j + 1])
        assert not behavioral_di_check(f, 1.0, y, j, j + 1, 1)


class TestCompoundInterestConvexity:
    def test_exponential(self):
        assert compound_interest_convexity_holds(exponential(0.5, 3), 1.0, 0.1, 1)

    def test_squared_exponent_rate(self):
        f = squared_exponent()
        assert not compound_interest_convexity_holds(f, 1.0, 0.9**-5 - 1, 1)

    def test_k_invariance(self, qh):
        assert compound_interest_convexity_holds(qh, 7.0, 0.25, 1)
        assert compound_interest_convexity_holds(qh, 1.0, 0.25, 1)

    @pytest.mark.parametrize(
        "k, r, t, error",
        [(0.0, 0.1, 1, ParamOutOfRange), (1.0, -1.0, 1, ParamOutOfRange), (1.0, 0.1, 0, PeriodOutOfRange), (1.0, 0.1, 3, PeriodOutOfRange)],
    )
    def test_rejects(self, qh, k, r, t, error):
        with pytest.raises(error):
            compound_interest_convexity_holds(qh, k, r, t)

    @given(di_factors(), st.floats(-0.9, 20.0), st.floats(0.01, 100.0), st.data())
    def test_di_implies_axiom(self, f, r, k, data):
        t = data.draw(st.integers(1, f.horizon - 1))
        assert compound_interest_convexity_holds(f, k, r, t)

    @given(non_di_factors())
    def test_axiom_failure_is_found(self, f):
        w = find_convexity_violation(f)
        assert w is not None and w.violated
        assert not compound_interest_convexity_holds(f, 1.0, w.rate, w.period)

    @given(di_factors(), st.lists(st.floats(-0.5, 10.0), min_size=1, max_size=8))
    def test_grid_matches_scalar(self, f, rates):
        grid = convexity_grid(f, rates)
        assert grid.shape == (len(rates), f.horizon - 1)
        for i, r in enumerate(rates):
            for j in range(f.horizon - 1):
                assert grid[i, j] == compound_interest_convexity_holds(f, 1.0, r, j + 1)

    def test_grid_rejects_bad_rate(self, qh):
        with pytest.raises(ParamOutOfRange):
            convexity_grid(qh, [0.1, -2.0])


class TestWitness:
    def test_none_for_di(self, qh):
        assert find_convexity_violation(exponential(0.5, 5)) is None
        assert find_convexity_violation(qh) is None

    def test_squared_exponent(self):
        w = find_convexity_violation(squared_exponent())
        assert w.period == 1
        # minimizer 1 + r = f(1)/f(2) = 0.9**-3
        assert w.rate == pytest.approx(0.9**-3 - 1, rel=1e-14)
        assert w.violated
        assert w.lhs == pytest.approx(0.5 + 0.5 * 0.9**-6 * 0.9**4, rel=1e-14)
        assert w.rhs == pytest.approx(0.9**-3 * 0.9, rel=1e-14)

    def test_boundary_triple_is_covered(self):
        # 0.8**2 > 1 * 0.63: the first triple fails and is reported at period 1
        w = find_convexity_violation(DiscountFactor([1, 0.8, 0.63, 0.5]))
        assert w.period == 1
        assert w.rate == pytest.approx(0.8 / 0.63 - 1)

    def test_bundles_values(self):
        w = find_convexity_violation(squared_exponent())
        (early, late), lump = w.bundles(2.0)
        f = squared_exponent()
        assert (early.date, late.date, lump.date) == (0, 2, 1)
        assert early.amount * f[0] + late.amount * f[2] == pytest.approx(2 * w.lhs)
        assert lump.amount * f[1] == pytest.approx(2 * w.rhs)

    @given(non_di_factors())
    def test_witness_rate_is_worst_case(self, f):
        w = find_convexity_violation(f)
        for factor in (0.9, 1.1):
            g = (1 + w.rate) * factor
            t = w.period
            gap = 0.5 * g ** (t - 1) * f[t - 1] + 0.5 * g ** (t + 1) * f[t + 1] - g**t * f[t]
            scaled = gap / g ** (t - 1)
            best = (w.lhs - w.rhs) / (1 + w.rate) ** (t - 1)
            assert scaled >= best - 1e-12
