"""Random instance generators and the property suites run by ``selftest``.

All randomness comes from numpy's PCG64 generator. Case ``i`` of suite
``name`` under seed ``s`` draws from ``default_rng([s, code(name), i])``,
so every case is reproducible on its own and results do not depend on
how cases are spread across worker processes.
"""

from __future__ import annotations

import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .aggregate import (
    NormalizedFactor,
    Profile,
    Weights,
    arithmetic_mean,
    check_iia,
    check_pareto_dated,
    check_time_consistency,
    constant_aggregator,
    geometric_aggregator,
    rescaled_variant,
    run_axiom_suites,
    tail_dependent_aggregator,
)
from .decompose import decompose, max_relative_error, min_basis_weights
from .discount import (
    DiscountFactor,
    compound_interest_convexity_holds,
    find_convexity_violation,
    is_decreasing_impatience,
)
from .errors import ImpatienceError
from .market import (
    Economy,
    envelope_leaders,
    envelope_prices,
    exponential_measure,
    join_decomposition,
    solve_equilibrium,
    synthesize_economy,
    uniqueness_probe,
    verify_equilibrium,
)

#: Grid of principals and rates for the convexity axiom.
AXIOM_PRINCIPALS = (0.5, 1.0, 10.0)
AXIOM_RATES = tuple(np.geomspace(1e-3, 10.0, 20))

#: The (alpha, delta) pairs of the three-agent envelope illustration.
FIGURE_PAIRS = ((1.0, 0.3), (0.65, 0.6), (0.3, 0.8))


def case_rng(seed: int, suite: str, index: int) -> np.random.Generator:
    """The generator for one case of one suite."""
    return np.random.default_rng([seed, zlib.crc32(suite.encode()), index])


# ---------------------------------------------------------------------------
# generators


def random_di_factor(rng: np.random.Generator, max_horizon: int = 32, max_tail: float = 0.95) -> DiscountFactor:
    """A log-convex factor with tail ratio at most ``max_tail``.

    Ratios are sorted uniforms on ``(0.05, max_tail)``; about a third of
    the draws contain a flat run to exercise ties. Draws that rounding
    pushes off exact log-convexity are rejected.
    """
    while True:
        horizon = int(rng.integers(2, max_horizon + 1))
        ratios = np.sort(rng.uniform(0.05, max_tail, horizon))
        if rng.random() < 0.3:
            a, b = np.sort(rng.integers(0, horizon, 2))
            ratios[a : b + 1] = ratios[a]
        values = rng.uniform(0.5, 2.0) * np.concatenate(([1.0], np.cumprod(ratios)))
        f = DiscountFactor(values)
        if is_decreasing_impatience(f, 0.0):
            return f


def random_non_di_factor(rng: np.random.Generator, max_horizon: int = 32) -> DiscountFactor:
    """A decreasing factor whose impatience ratio drops by at least 1% somewhere."""
    horizon = int(rng.integers(2, max_horizon + 1))
    ratios = rng.uniform(0.05, 0.95, horizon)
    j = int(rng.integers(0, horizon - 1))
    if ratios[j + 1] > 0.99 * ratios[j]:
        ratios[j + 1] = ratios[j] * rng.uniform(0.3, 0.99)
    return DiscountFactor(np.concatenate(([1.0], np.cumprod(ratios))))


def random_concave_h(rng: np.random.Generator, max_horizon: int = 32) -> np.ndarray:
    """Increasing concave ``h`` with ``h(0) = 0`` and a flat final step."""
    horizon = int(rng.integers(2, max_horizon + 1))
    steps = np.sort(rng.uniform(0.0, 3.0, horizon - 1))[::-1]
    if rng.random() < 0.3:
        steps[int(rng.integers(0, horizon - 1)) :] = 0.0
    return np.concatenate(([0.0], np.cumsum(np.append(steps, 0.0))))


def random_profile(rng: np.random.Generator, max_members: int = 5, max_horizon: int = 16) -> Profile:
    """Members with independent ratios uniform on ``(0.3, 1)``."""
    m = int(rng.integers(1, max_members + 1))
    horizon = int(rng.integers(2, max_horizon + 1))
    ratios = rng.uniform(0.3, 1.0, (m, horizon))
    rows = np.hstack([np.ones((m, 1)), np.cumprod(ratios, axis=1)])
    return Profile(tuple(NormalizedFactor(r) for r in rows))


def random_weights(rng: np.random.Generator, m: int) -> Weights:
    eta = rng.dirichlet(np.ones(m))
    eta = np.maximum(eta, 1e-3)
    eta /= eta.sum()
    eta[-1] = 1.0 - eta[:-1].sum()
    return Weights(eta)


def random_economy(
    rng: np.random.Generator,
    max_agents: int = 8,
    max_horizon: int = 24,
    plant_duplicates: bool = True,
) -> Economy:
    """Exponential agents with ``delta`` on ``(0.05, 0.98)`` and wealth on ``(0.1, 2)``.

    With ``plant_duplicates``, one draw in five plants a near-duplicate
    rate (gap ``<= 1e-6``) and one in ten an exact duplicate. Proportional
    response needs on the order of ``1 / gap`` rounds on such pairs.
    """
    m = int(rng.integers(1, max_agents + 1))
    horizon = int(rng.integers(2, max_horizon + 1))
    deltas = rng.uniform(0.05, 0.98, m)
    if plant_duplicates and m > 1:
        u = rng.random()
        if u < 0.2:
            deltas[1] = min(deltas[0] + rng.uniform(0.0, 1e-6), 0.999)
        elif u < 0.3:
            deltas[1] = deltas[0]
    return Economy.from_arrays(deltas, rng.uniform(0.1, 2.0, m), horizon)


# ---------------------------------------------------------------------------
# independent oracle


def nash_welfare_oracle(e: Economy, resolution: float = 1e-4, sweeps: int = 200):
    """Maximize ``sum_i w_i log u_i`` for two agents by coordinate ascent.

    Each coordinate ``x_1(t)`` is optimized on a grid of step
    ``resolution`` and then refined by golden-section search inside the
    winning grid cell. The objective is strictly concave in every
    coordinate, so cyclic exact coordinate ascent reaches the global
    optimum. Prices follow from first-order conditions,
    ``p(t) = max_i (w_i / u_i) delta_i**t``.

    Returns ``(prices, shares, welfare)``.
    """
    if e.size != 2:
        raise ValueError("the oracle handles exactly two agents")
    weights = e.utility_weights()
    w = e.wealths
    x = np.full(e.horizon + 1, 0.5)
    grid = np.linspace(0.0, 1.0, int(round(1.0 / resolution)) + 1)

    def welfare(x1):
        u1 = x1 @ weights[0]
        u2 = (1.0 - x1) @ weights[1]
        with np.errstate(divide="ignore"):
            return w[0] * np.log(u1) + w[1] * np.log(u2)

    previous = -math.inf
    for _ in range(sweeps):
        for t in range(e.horizon + 1):
            rest1 = x @ weights[0] - x[t] * weights[0, t]
            rest2 = (1.0 - x) @ weights[1] - (1.0 - x[t]) * weights[1, t]

            def along(s):
                s = np.asarray(s, dtype=float)
                with np.errstate(divide="ignore"):
                    return w[0] * np.log(rest1 + s * weights[0, t]) + w[1] * np.log(rest2 + (1 - s) * weights[1, t])

            best = float(grid[np.argmax(along(grid))])
            lo, hi = max(0.0, best - resolution), min(1.0, best + resolution)
            ratio = (math.sqrt(5.0) - 1.0) / 2.0
            for _ in range(80):
                a, b = hi - ratio * (hi - lo), lo + ratio * (hi - lo)
                if along(a) >= along(b):
                    hi = b
                else:
                    lo = a
            x[t] = 0.5 * (lo + hi)
        value = float(welfare(x))
        if value - previous <= 1e-15:
            break
        previous = value
    shares = np.vstack([x, 1.0 - x])
    utility = (shares * weights).sum(axis=1)
    prices = np.max((w / utility)[:, None] * weights, axis=0)
    return prices, shares, float(welfare(x))


# ---------------------------------------------------------------------------
# suites


@dataclass
class CaseResult:
    ok: bool
    residual: float = 0.0
    note: str = ""


@dataclass
class SuiteResult:
    name: str
    cases: int
    failures: list[tuple[int, str]] = field(default_factory=list)
    max_residual: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.failures

    def line(self) -> str:
        verdict = "pass" if self.passed else "FAIL"
        return (
            f"{self.name:<12} {verdict}  cases={self.cases:<5d} failures={len(self.failures):<4d} "
            f"max_residual={self.max_residual:.3e}"
        )


def _guard(check: Callable[[], CaseResult]) -> CaseResult:
    try:
        return check()
    except ImpatienceError as exc:
        return CaseResult(False, math.inf, f"{type(exc).__name__}: {exc}")


def case_convexity(rng: np.random.Generator, index: int, inject: bool = False) -> CaseResult:
    """Even cases: DI factors satisfy the axiom on the grid. Odd: non-DI ones yield a witness."""
    if index % 2 == 0:
        f = random_di_factor(rng)
        if inject and index == 0:
            f = DiscountFactor(0.9 ** (np.arange(6.0) ** 2))
        ok = all(
            compound_interest_convexity_holds(f, k, r, t)
            for k in AXIOM_PRINCIPALS
            for r in AXIOM_RATES
            for t in range(1, f.horizon)
        )
        return CaseResult(ok, 0.0, "" if ok else "axiom fails on a DI factor")
    f = random_non_di_factor(rng)
    w = find_convexity_violation(f)
    if w is None:
        return CaseResult(False, math.inf, "no witness for a non-DI factor")
    ok = w.violated and not compound_interest_convexity_holds(f, 1.0, w.rate, w.period)
    return CaseResult(ok, 0.0, "" if ok else f"witness {w} does not violate the axiom")


def case_decompose(rng: np.random.Generator, index: int) -> CaseResult:
    f = random_di_factor(rng)
    d = decompose(f)
    err = max_relative_error(f, d)
    fine = all(
        0 < c.beta <= 1 and 0 < c.delta < 1 and c.delta == d.gamma and is_decreasing_impatience(c.factor(f.horizon))
        for c in d.components
    )
    fine &= sum(c.eta for c in d.components) == 1
    return CaseResult(fine and err <= 1e-9, err, "" if fine else "a component is out of range")


def case_basis(rng: np.random.Generator, index: int) -> CaseResult:
    h = random_concave_h(rng)
    basis = min_basis_weights(h)
    err = float(np.max(np.abs(basis.evaluate() - h)))
    ok = err <= 1e-12 and basis.alpha.min() >= -1e-12
    return CaseResult(ok, err)


def case_synthesize(rng: np.random.Generator, index: int) -> CaseResult:
    f = random_di_factor(rng)
    e, result = synthesize_economy(f)
    report = verify_equilibrium(e, result.prices, result.allocation, 1e-10)
    proportional = float(np.max(np.abs(result.prices * f.values[0] / f.values - 1.0)))
    ok = report.ok and proportional <= 4 * np.finfo(float).eps
    return CaseResult(ok, max(report.residual, proportional), "; ".join(report.violations))


def case_solve(rng: np.random.Generator, index: int) -> CaseResult:
    """Solve, then check residual, log-convex prices, Walras and both envelope forms."""
    e = random_economy(rng)
    result = solve_equilibrium(e, tol=1e-8)
    p = result.prices
    notes = []
    if not is_decreasing_impatience(DiscountFactor(p), 1e-8):
        notes.append("prices not log-convex")
    walras = abs(p.sum() - e.wealths.sum()) / e.wealths.sum()
    raw = np.max(result.join_weights[:, None] * e.utility_weights(), axis=0)
    raw_gap = float(np.max(np.abs(raw / p - 1.0)))
    alphas = join_decomposition(p, e, result.allocation)
    measures = np.vstack([exponential_measure(a.delta, e.horizon) for a in e.agents])
    hat_gap = float(np.max(np.abs(np.max(alphas[:, None] * measures, axis=0) / p - 1.0)))
    residual = max(result.residual, walras, raw_gap, hat_gap)
    if residual > 1e-8:
        notes.append(f"residual {residual:.3g}")
    return CaseResult(not notes, residual, "; ".join(notes))


def case_uniqueness(rng: np.random.Generator, index: int) -> CaseResult:
    e = random_economy(rng, plant_duplicates=False)
    distance = uniqueness_probe(e, n_starts=5, tol=1e-7)
    return CaseResult(distance <= 1e-6, distance)


ORACLE_ECONOMY = Economy.from_arrays([0.5, 0.9], [1.0, 1.0], 3)


def case_oracle(rng: np.random.Generator, index: int) -> CaseResult:
    """Case 0 is the fixed two-agent instance; later cases draw random two-agent economies."""
    if index == 0:
        e = ORACLE_ECONOMY
    else:
        e = Economy.from_arrays(rng.uniform(0.05, 0.98, 2), rng.uniform(0.1, 2.0, 2), 3)
    oracle_prices, _, _ = nash_welfare_oracle(e)
    solved = solve_equilibrium(e)
    gap = float(np.max(np.abs(solved.prices / oracle_prices - 1.0)))
    return CaseResult(gap <= 1e-4, gap)


def case_aggregate(rng: np.random.Generator, index: int) -> CaseResult:
    p = random_profile(rng)
    report = run_axiom_suites(geometric_aggregator(random_weights(rng, p.size)), p)
    failed = [k for k, v in report.as_dict().items() if not v]
    return CaseResult(not failed, 0.0, ", ".join(failed))


def _exponentials(deltas, horizon: int) -> Profile:
    t = np.arange(horizon + 1)
    return Profile(tuple(NormalizedFactor(np.power(d, t)) for d in deltas))


def independence_witnesses() -> dict[str, dict[str, bool]]:
    """Run each counterexample aggregator on its witness.

    Returns, per aggregator, the verdict of each axiom on that witness.
    """
    out = {}

    constant = constant_aggregator(0.5)
    p = _exponentials([0.9, 0.8], 4)
    out["constant"] = {
        "time_consistency": all(check_time_consistency(constant, p, t) for t in range(3)),
        "pareto": check_pareto_dated(constant, p, 1, 0, 1.0, 0.7),
        "iia": check_iia(constant, p, rescaled_variant(p, [0.8, 0.6]), 2, 1),
    }

    first, second = Weights([0.25, 0.75]), Weights([0.75, 0.25])
    tail = tail_dependent_aggregator(first, second)
    p = _exponentials([0.5, 0.8], 4)
    q = Profile((NormalizedFactor([1.0, 0.5, 0.25, 0.2, 0.19]), p.members[1]))
    out["tail_dependent"] = {
        "time_consistency": all(check_time_consistency(tail, p, t) for t in range(3)),
        "pareto": run_axiom_suites(tail, p).pareto,
        "iia": check_iia(tail, p, q, 2, 1),
    }

    p = _exponentials([0.3, 0.9], 4)
    # The partner differs from p only at the last date, which no checked pair involves.
    q = Profile(tuple(NormalizedFactor(np.append(m.values[:-1], 0.5 * m.values[-1])) for m in p.members))
    out["arithmetic_mean"] = {
        "time_consistency": check_time_consistency(arithmetic_mean, p, 1),
        "pareto": run_axiom_suites(arithmetic_mean, p).pareto,
        "iia": all(check_iia(arithmetic_mean, p, q, t, s) for t in range(1, 4) for s in range(1, 4) if t != s),
    }
    return out


DESIGNATED = {"constant": "pareto", "tail_dependent": "iia", "arithmetic_mean": "time_consistency"}


def case_independence(rng: np.random.Generator, index: int) -> CaseResult:
    verdicts = independence_witnesses()
    wrong = [
        f"{name}.{axiom}"
        for name, axioms in verdicts.items()
        for axiom, holds in axioms.items()
        if holds == (axiom == DESIGNATED[name])
    ]
    return CaseResult(not wrong, 0.0, ", ".join(wrong))


def case_figure(rng: np.random.Generator, index: int) -> CaseResult:
    """Envelope of the three illustrated pairs: normalization, shape and leadership order."""
    horizon = 30
    p = envelope_prices(FIGURE_PAIRS, horizon)
    leaders = envelope_leaders(FIGURE_PAIRS, horizon)
    f = DiscountFactor(p)
    ok = p[0] == 1.0 and is_decreasing_impatience(f, 1e-12)
    ok &= bool(np.all(np.diff(leaders) >= 0)) and set(leaders.tolist()) == {0, 1, 2}
    return CaseResult(bool(ok), 0.0)


def case_envelope(rng: np.random.Generator, index: int) -> CaseResult:
    """Envelopes of random scaled exponential families are log-convex."""
    n = int(rng.integers(1, 8))
    pairs = list(zip(rng.uniform(0.01, 2.0, n), rng.uniform(0.05, 0.98, n)))
    f = DiscountFactor(envelope_prices(pairs, int(rng.integers(2, 33))))
    return CaseResult(is_decreasing_impatience(f, 1e-12))


@dataclass(frozen=True)
class Suite:
    name: str
    case: Callable[..., CaseResult]
    full: int
    small: int


SUITES = (
    Suite("convexity", case_convexity, 1000, 100),
    Suite("decompose", case_decompose, 500, 50),
    Suite("basis", case_basis, 500, 50),
    Suite("synthesize", case_synthesize, 200, 20),
    Suite("solve", case_solve, 200, 20),
    Suite("uniqueness", case_uniqueness, 50, 5),
    Suite("oracle", case_oracle, 3, 1),
    Suite("aggregate", case_aggregate, 500, 50),
    Suite("independence", case_independence, 1, 1),
    Suite("figure", case_figure, 1, 1),
    Suite("envelope", case_envelope, 200, 20),
)

SUITE_NAMES = tuple(s.name for s in SUITES)


def _run_case(args) -> CaseResult:
    name, seed, index, inject = args
    suite = next(s for s in SUITES if s.name == name)
    rng = case_rng(seed, name, index)
    if suite.case is case_convexity:
        return _guard(lambda: case_convexity(rng, index, inject))
    return _guard(lambda: suite.case(rng, index))


def run_suite(
    name: str,
    seed: int = 0,
    cases: Optional[int] = None,
    jobs: int = 1,
    inject_failure: bool = False,
    pool: Optional[ProcessPoolExecutor] = None,
) -> SuiteResult:
    """Run one suite; results are collected in case order whatever ``jobs`` is."""
    suite = next((s for s in SUITES if s.name == name), None)
    if suite is None:
        raise KeyError(f"unknown suite {name!r}")
    count = suite.full if cases is None else cases
    tasks = [(name, seed, i, inject_failure) for i in range(count)]
    if pool is not None:
        outcomes = list(pool.map(_run_case, tasks, chunksize=max(1, count // (4 * jobs))))
    else:
        outcomes = [_run_case(t) for t in tasks]
    result = SuiteResult(name, count)
    for i, outcome in enumerate(outcomes):
        if math.isfinite(outcome.residual):
            result.max_residual = max(result.max_residual, outcome.residual)
        if not outcome.ok:
            result.failures.append((i, outcome.note))
    return result


def run_suites(
    seed: int = 0,
    sizes: str = "full",
    jobs: int = 1,
    inject_failure: bool = False,
    names: Optional[tuple[str, ...]] = None,
) -> list[SuiteResult]:
    """Run the selected suites at ``"full"`` (acceptance) or ``"small"`` sizes."""
    if sizes not in ("full", "small"):
        raise ValueError("sizes must be 'full' or 'small'")
    chosen = [s for s in SUITES if names is None or s.name in names]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return [run_suite(s.name, seed, getattr(s, sizes), jobs, inject_failure, pool) for s in chosen]
    return [run_suite(s.name, seed, getattr(s, sizes), 1, inject_failure) for s in chosen]
