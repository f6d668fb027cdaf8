"""Acceptance criteria, each checked directly against the public API.

Instances come from the seeded generators in ``impatience.suites`` so the
run is replayable; the checks themselves are written out here. A summary
line per criterion is printed at the end of the pytest run.
"""

import time

import numpy as np
import pytest

from impatience import (
    DiscountFactor,
    compound_interest_convexity_holds,
    decompose,
    envelope_leaders,
    envelope_prices,
    find_convexity_violation,
    geometric_aggregator,
    is_decreasing_impatience,
    join_decomposition,
    max_relative_error,
    min_basis_weights,
    run_axiom_suites,
    solve_equilibrium,
    synthesize_economy,
    uniqueness_probe,
    verify_equilibrium,
)
from impatience.market import exponential_measure
from impatience.suites import (
    AXIOM_PRINCIPALS,
    AXIOM_RATES,
    DESIGNATED,
    FIGURE_PAIRS,
    ORACLE_ECONOMY,
    case_rng,
    independence_witnesses,
    nash_welfare_oracle,
    random_concave_h,
    random_di_factor,
    random_economy,
    random_non_di_factor,
    random_profile,
    random_weights,
)

SEED = 0
EPS = np.finfo(float).eps


def draws(name, count, make, seed=SEED):
    return [make(case_rng(seed, name, i)) for i in range(count)]


@pytest.mark.criterion(1, "DI factors satisfy compound-interest convexity; non-DI factors yield violating witnesses")
def test_convexity_equivalence():
    start = time.perf_counter()
    failures = []
    for i, f in enumerate(draws("acceptance-1-di", 500, random_di_factor)):
        assert f.horizon <= 32
        if not all(
            compound_interest_convexity_holds(f, k, r, t)
            for k in AXIOM_PRINCIPALS
            for r in AXIOM_RATES
            for t in range(1, f.horizon)
        ):
            failures.append(("di", i))
    for i, f in enumerate(draws("acceptance-1-non-di", 500, random_non_di_factor)):
        assert not is_decreasing_impatience(f, 1e-10)
        w = find_convexity_violation(f)
        if w is None or not w.violated or compound_interest_convexity_holds(f, 1.0, w.rate, w.period):
            failures.append(("non-di", i))
    elapsed = time.perf_counter() - start
    assert not failures
    assert elapsed <= 10.0, f"took {elapsed:.2f}s"


@pytest.mark.criterion(2, "decompose/reconstruct round trip within 1e-9 with admissible components")
def test_decomposition_round_trip():
    factors = draws("acceptance-2", 500, random_di_factor)
    start = time.perf_counter()
    worst = 0.0
    for f in factors:
        assert f.values[-1] / f.values[-2] <= 0.95
        d = decompose(f)
        worst = max(worst, max_relative_error(f, d))
        for c in d.components:
            assert 0 < c.beta <= 1 and 0 < c.delta <= 1
            assert c.delta == d.gamma < 1
            assert is_decreasing_impatience(c.factor(f.horizon))
    elapsed = time.perf_counter() - start
    assert worst <= 1e-9
    assert elapsed <= 5.0, f"took {elapsed:.2f}s"


@pytest.mark.criterion(3, "min-basis weights reconstruct concave h within 1e-12 with alpha >= -1e-12")
def test_min_basis():
    for h in draws("acceptance-3", 500, random_concave_h):
        assert h[0] == 0.0 and h[-1] == h[-2] and np.all(np.diff(h) >= 0)
        basis = min_basis_weights(h)
        assert np.max(np.abs(basis.evaluate() - h)) <= 1e-12
        assert basis.alpha.min() >= -1e-12


@pytest.mark.criterion(4, "synthesized economies verify at 1e-10 with prices proportional to the factor")
def test_synthesized_economies():
    for f in draws("acceptance-4", 200, random_di_factor):
        e, result = synthesize_economy(f)
        assert verify_equilibrium(e, result.prices, result.allocation, 1e-10).ok
        ratio = result.prices / f.values
        assert np.max(np.abs(ratio / ratio[0] - 1.0)) <= 4 * EPS


def _solved(count):
    for e in draws("acceptance-5", count, random_economy):
        assert e.size <= 8 and e.horizon <= 24
        yield e, solve_equilibrium(e, tol=1e-8)


@pytest.mark.criterion(5, "solved equilibria have residual <= 1e-8 and decreasing-impatience prices")
def test_solved_prices_are_log_convex():
    for e, result in _solved(200):
        assert result.residual <= 1e-8
        assert verify_equilibrium(e, result.prices, result.allocation, 1e-8).ok
        assert is_decreasing_impatience(DiscountFactor(result.prices), 1e-8)


@pytest.mark.criterion(6, "join weights reproduce equilibrium prices as a max of scaled exponentials within 1e-8")
def test_join_decomposition():
    for e, result in _solved(200):
        p = result.prices
        alphas = join_decomposition(p, e, result.allocation)
        measures = np.vstack([exponential_measure(a.delta, e.horizon) for a in e.agents])
        envelope = np.max(alphas[:, None] * measures, axis=0)
        assert np.max(np.abs(envelope / p - 1.0)) <= 1e-8
        raw = np.max(result.join_weights[:, None] * e.utility_weights(), axis=0)
        assert np.max(np.abs(raw / p - 1.0)) <= 1e-8


@pytest.mark.criterion(7, "uniqueness probe over 5 starts on 50 economies stays within 1e-6")
def test_uniqueness():
    economies = draws("acceptance-7", 50, lambda rng: random_economy(rng, plant_duplicates=False))
    distances = [uniqueness_probe(e, n_starts=5) for e in economies]
    assert max(distances) <= 1e-6


@pytest.mark.criterion(8, "two-agent solver prices match the Nash-welfare oracle within 1e-4 in under 1 s")
def test_solver_against_oracle():
    start = time.perf_counter()
    solved = solve_equilibrium(ORACLE_ECONOMY)
    oracle_prices, _, _ = nash_welfare_oracle(ORACLE_ECONOMY, resolution=1e-4)
    elapsed = time.perf_counter() - start
    assert ORACLE_ECONOMY.size == 2 and ORACLE_ECONOMY.horizon == 3
    assert np.max(np.abs(solved.prices / oracle_prices - 1.0)) <= 1e-4
    assert elapsed <= 1.0, f"took {elapsed:.2f}s"


@pytest.mark.criterion(9, "geometric mean passes all axiom suites; each counterexample fails only its axiom")
def test_aggregation_axioms():
    for i in range(500):
        rng = case_rng(SEED, "acceptance-9", i)
        p = random_profile(rng)
        report = run_axiom_suites(geometric_aggregator(random_weights(rng, p.size)), p, rel_tol=1e-10)
        assert report.time_consistency and report.pareto and report.iia, i
    verdicts = independence_witnesses()
    assert set(verdicts) == set(DESIGNATED)
    for name, axiom in DESIGNATED.items():
        assert verdicts[name][axiom] is False, name
        assert all(holds for other, holds in verdicts[name].items() if other != axiom), name


@pytest.mark.criterion(10, "three-agent envelope: p(0)=1, decreasing and log-convex, leadership 0.3 -> 0.6 -> 0.8")
def test_figure_envelope():
    horizon = 40
    p = envelope_prices(FIGURE_PAIRS, horizon)
    assert p[0] == 1.0
    assert np.all(np.diff(p) <= 0)
    assert is_decreasing_impatience(DiscountFactor(p), 1e-12)
    # leadership by direct comparison of the three branches
    branches = [a * d ** np.arange(horizon + 1) for a, d in FIGURE_PAIRS]
    leaders = [max(range(3), key=lambda i: branches[i][t]) for t in range(horizon + 1)]
    np.testing.assert_array_equal(envelope_leaders(FIGURE_PAIRS, horizon), leaders)
    order = [leaders[0]] + [b for a, b in zip(leaders, leaders[1:]) if a != b]
    deltas = [FIGURE_PAIRS[i][1] for i in order]
    assert deltas == [0.3, 0.6, 0.8]
