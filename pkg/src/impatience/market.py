"""Parimutuel markets of exponential discounters.

Each period ``t = 0..T`` carries one unit of a good. Agent ``i`` has
wealth ``w_i`` and utility ``u_i(x) = sum_t x(t) delta_i**t``. An
equilibrium is a price sequence ``p`` and an allocation ``x`` such that
every agent spends exactly its wealth on periods of maximal
bang-per-buck ``delta_i**t / p(t)`` and every period clears. It is the
maximizer of the Nash welfare ``sum_i w_i log u_i``.

At an equilibrium the prices are the upper envelope
``p(t) = max_i alpha_i delta_i**t`` of scaled exponentials, and agents
sorted by ``delta`` own consecutive blocks of periods, sharing at most
one period with each neighbour. The default solver exploits this
structure and is exact up to rounding; proportional-response dynamics
are available as an iterative alternative.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .discount import DiscountFactor, is_decreasing_impatience
from .errors import (
    AllWeightsZero,
    DimensionMismatch,
    EmptySupport,
    InvalidAllocation,
    InvalidInput,
    NoConvergence,
    NotDecreasingImpatience,
    NotStrictlyDecreasing,
    ParamOutOfRange,
)

#: Agents whose discount rates differ by less than this are merged before solving.
MERGE_GAP = 1e-12

#: Cut points closer than this to an integer are snapped onto it.
SNAP = 1e-11

METHODS = ("envelope", "proportional_response")


@dataclass(frozen=True)
class ExponentialAgent:
    delta: float
    wealth: float

    def __post_init__(self) -> None:
        if not 0.0 < self.delta < 1.0:
            raise ParamOutOfRange(f"delta must lie in (0, 1), got {self.delta!r}")
        if not (math.isfinite(self.wealth) and self.wealth > 0.0):
            raise ParamOutOfRange(f"wealth must be positive and finite, got {self.wealth!r}")
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "wealth", float(self.wealth))


@dataclass(frozen=True, eq=False)
class Economy:
    agents: tuple[ExponentialAgent, ...]
    horizon: int

    def __post_init__(self) -> None:
        agents = tuple(self.agents)
        if not agents:
            raise InvalidInput("an economy needs at least one agent")
        if int(self.horizon) != self.horizon or self.horizon < 2:
            raise ParamOutOfRange(f"horizon must be an integer >= 2, got {self.horizon!r}")
        object.__setattr__(self, "agents", agents)
        object.__setattr__(self, "horizon", int(self.horizon))

    @classmethod
    def from_arrays(cls, deltas: Sequence[float], wealths: Sequence[float], horizon: int) -> "Economy":
        if len(deltas) != len(wealths):
            raise DimensionMismatch("deltas and wealths differ in length")
        return cls(tuple(ExponentialAgent(d, w) for d, w in zip(deltas, wealths)), horizon)

    @property
    def size(self) -> int:
        return len(self.agents)

    @property
    def deltas(self) -> np.ndarray:
        return np.array([a.delta for a in self.agents])

    @property
    def wealths(self) -> np.ndarray:
        return np.array([a.wealth for a in self.agents])

    def utility_weights(self) -> np.ndarray:
        """``delta_i**t`` as an ``(agents, periods)`` matrix."""
        return np.power.outer(self.deltas, np.arange(self.horizon + 1))


@dataclass(frozen=True, eq=False)
class Allocation:
    """Shares ``x_i(t) >= 0`` with every column summing to one (within ``1e-12``)."""

    shares: np.ndarray

    def __post_init__(self) -> None:
        x = np.array(self.shares, dtype=float)
        if x.ndim != 2:
            raise InvalidAllocation("shares must be a matrix")
        if not np.all(np.isfinite(x)) or np.any(x < 0):
            raise InvalidAllocation("shares must be finite and nonnegative")
        worst = float(np.max(np.abs(x.sum(axis=0) - 1.0)))
        if worst > 1e-12:
            raise InvalidAllocation(f"a period does not clear: column sum off by {worst:.3g}")
        x.setflags(write=False)
        object.__setattr__(self, "shares", x)


@dataclass(frozen=True, eq=False)
class EquilibriumResult:
    """Prices, allocation and envelope data of a parimutuel equilibrium.

    ``join_weights`` are raw: ``alpha_i = w_i / u_i(x_i)``, so that
    ``p(t) = max_i alpha_i delta_i**t``. ``residual`` is the verification
    residual of the pair (see :class:`EquilibriumReport`).
    """

    prices: np.ndarray
    allocation: Allocation
    join_weights: np.ndarray
    supports: tuple[tuple[int, ...], ...]
    iterations: int
    residual: float
    method: str

    @property
    def normalized_prices(self) -> np.ndarray:
        return self.prices / self.prices.sum()


@dataclass(frozen=True)
class SupportingLine:
    """``t -> intercept - slope * t``, lying below ``log f`` and touching it once."""

    intercept: float
    slope: float

    def __call__(self, t):
        return self.intercept - self.slope * np.asarray(t, dtype=float)


@dataclass(frozen=True, eq=False)
class EquilibriumReport:
    """Verdict and diagnostics of :func:`verify_equilibrium`.

    Attributes
    ----------
    ok:
        All three conditions hold at the requested tolerance.
    budget_errors:
        ``|spend_i - w_i| / max(1, w_i)`` per agent.
    optimality_gaps:
        Per agent, the largest log bang-per-buck shortfall over the
        periods it consumes.
    feasibility_error:
        Largest deviation of a column sum from one, or of a share below 0.
    optimality_violations:
        ``(agent, period)`` pairs consumed despite a shortfall above tolerance.
    violations:
        Human-readable descriptions of every failure.
    """

    ok: bool
    budget_errors: np.ndarray
    optimality_gaps: np.ndarray
    feasibility_error: float
    optimality_violations: tuple[tuple[int, int], ...]
    violations: tuple[str, ...] = field(default=())

    @property
    def residual(self) -> float:
        return float(max(self.budget_errors.max(), self.optimality_gaps.max(), self.feasibility_error))

    def __bool__(self) -> bool:
        return self.ok


# ---------------------------------------------------------------------------
# envelopes and supporting lines


def _check_pairs(weighted: Iterable[tuple[float, float]]) -> tuple[np.ndarray, np.ndarray]:
    pairs = [(float(a), float(d)) for a, d in weighted]
    if not pairs:
        raise AllWeightsZero("no (alpha, delta) pairs given")
    alphas = np.array([a for a, _ in pairs])
    deltas = np.array([d for _, d in pairs])
    if np.any(alphas < 0) or not np.all(np.isfinite(alphas)):
        raise ParamOutOfRange("alphas must be finite and nonnegative")
    if np.any((deltas <= 0) | (deltas >= 1)):
        raise ParamOutOfRange("deltas must lie in (0, 1)")
    if not np.any(alphas > 0):
        raise AllWeightsZero("every alpha is zero")
    return alphas, deltas


def envelope_branches(weighted: Iterable[tuple[float, float]], horizon: int) -> np.ndarray:
    """``alpha_i delta_i**t`` for each pair, shape ``(pairs, horizon + 1)``."""
    alphas, deltas = _check_pairs(weighted)
    return alphas[:, None] * np.power.outer(deltas, np.arange(horizon + 1))


def envelope_prices(weighted: Iterable[tuple[float, float]], horizon: int) -> np.ndarray:
    """Upper envelope ``p(t) = max_i alpha_i delta_i**t``."""
    return envelope_branches(weighted, horizon).max(axis=0)


def envelope_leaders(weighted: Iterable[tuple[float, float]], horizon: int) -> np.ndarray:
    """Index of the pair attaining the envelope at each ``t`` (first on ties)."""
    return envelope_branches(weighted, horizon).argmax(axis=0)


def supporting_lines(f: DiscountFactor, rel_tol: float = 1e-10) -> list[SupportingLine]:
    """One supporting line of ``log(f / f(0))`` per period.

    The line anchored at ``t* >= 1`` has slope ``log f(t*-1) - log f(t*)``;
    the line at ``t* = 0`` reuses the slope of ``t* = 1``. Each line is
    checked to lie below ``log f`` up to ``1e-12`` (relative to the
    magnitudes involved).
    """
    v = f.values
    if np.any(v[1:] >= v[:-1]):
        raise NotStrictlyDecreasing("supporting lines need f(t+1) < f(t) everywhere")
    if not is_decreasing_impatience(f, rel_tol):
        raise NotDecreasingImpatience("log f must be convex")
    logf = np.log(v) - np.log(v[0])
    slopes = np.empty_like(logf)
    slopes[1:] = logf[:-1] - logf[1:]
    slopes[0] = slopes[1]
    t = np.arange(v.size)
    intercepts = logf + t * slopes
    below = intercepts[:, None] - np.outer(slopes, t)
    slack = 1e-12 * (1.0 + np.abs(intercepts)[:, None] + np.abs(logf)[None, :])
    if np.any(below > logf[None, :] + slack):
        raise NotDecreasingImpatience("a supporting line crosses log f")
    return [SupportingLine(float(a), float(d)) for a, d in zip(intercepts, slopes)]


# ---------------------------------------------------------------------------
# verification and join weights


def _as_shares(x) -> np.ndarray:
    return np.asarray(x.shares if isinstance(x, Allocation) else x, dtype=float)


def _residual_terms(log_deltas: np.ndarray, wealth: np.ndarray, p: np.ndarray, shares: np.ndarray):
    """Budget errors, log bang-per-buck shortfalls and feasibility error."""
    budget = np.abs(shares @ p - wealth) / np.maximum(1.0, wealth)
    log_bpb = np.outer(log_deltas, np.arange(p.size)) - np.log(p)[None, :]
    shortfall = log_bpb.max(axis=1, keepdims=True) - log_bpb
    feasibility = float(max(np.max(np.abs(shares.sum(axis=0) - 1.0)), np.max(-shares, initial=0.0)))
    return budget, shortfall, feasibility


def _residual(log_deltas: np.ndarray, wealth: np.ndarray, p: np.ndarray, shares: np.ndarray) -> float:
    budget, shortfall, feasibility = _residual_terms(log_deltas, wealth, p, shares)
    gap = np.max(np.where(shares > 0, shortfall, 0.0))
    return float(max(budget.max(), gap, feasibility))


def verify_equilibrium(e: Economy, p, x, tol: float = 1e-10) -> EquilibriumReport:
    """Check budgets, bang-per-buck optimality and market clearing.

    Budgets must be exhausted to ``tol`` (relative once ``w_i > 1``).
    Every consumed period must reach the agent's best bang-per-buck to
    within a factor ``1 - tol``. Every column of ``x`` must sum to one
    within ``tol``, with no negative share. ``x`` may be an
    :class:`Allocation` or a raw matrix, so that infeasible candidates
    can be diagnosed rather than rejected at construction.
    """
    p = np.asarray(p, dtype=float)
    shares = _as_shares(x)
    periods = e.horizon + 1
    if p.shape != (periods,) or shares.shape != (e.size, periods):
        raise DimensionMismatch(
            f"expected prices of length {periods} and shares of shape {(e.size, periods)}, "
            f"got {p.shape} and {shares.shape}"
        )
    violations: list[str] = []
    if not np.all(np.isfinite(p)) or np.any(p <= 0):
        inf = np.full(e.size, np.inf)
        return EquilibriumReport(False, inf, inf, math.inf, (), ("prices must be positive and finite",))

    budget, shortfall, feasibility = _residual_terms(np.log(e.deltas), e.wealths, p, shares)
    spend = shares @ p
    for i in np.flatnonzero(budget > tol):
        violations.append(f"agent {i}: spends {spend[i]:.17g} with wealth {e.wealths[i]:.17g}")
    consumed = shares > 0
    gaps = np.where(consumed, shortfall, 0.0).max(axis=1)
    limit = -math.log1p(-tol) if tol < 1 else math.inf
    offenders = tuple((int(i), int(t)) for i, t in np.argwhere(consumed & (shortfall > limit)))
    for i, t in offenders:
        violations.append(f"agent {i}: consumes period {t} with bang-per-buck shortfall {shortfall[i, t]:.3g}")
    if feasibility > tol:
        violations.append(f"allocation infeasible by {feasibility:.3g}")
    return EquilibriumReport(
        ok=not violations,
        budget_errors=budget,
        optimality_gaps=gaps,
        feasibility_error=feasibility,
        optimality_violations=offenders,
        violations=tuple(violations),
    )


def exponential_measure(delta: float, horizon: int) -> np.ndarray:
    """``delta**t`` rescaled to total mass one over ``t = 0..horizon``."""
    t = np.arange(horizon + 1)
    return np.power(delta, t) * (1.0 - delta) / (1.0 - delta ** (horizon + 1))


def join_decomposition(p, e: Economy, x) -> np.ndarray:
    """Weights ``alpha_i = p(E_i) / m_i(E_i)`` on each agent's support ``E_i``.

    ``m_i`` is :func:`exponential_measure`, the finite-horizon
    normalization of ``delta_i**t``, so a lone agent gets ``alpha = w``.
    At an equilibrium ``p = max_i alpha_i m_i`` with equality on supports.

    Raises
    ------
    EmptySupport
        Some agent consumes nothing, which no equilibrium allows.
    """
    p = np.asarray(p, dtype=float)
    shares = _as_shares(x)
    if shares.shape != (e.size, e.horizon + 1) or p.shape != (e.horizon + 1,):
        raise DimensionMismatch("prices and allocation do not match the economy")
    alphas = np.empty(e.size)
    for i, agent in enumerate(e.agents):
        support = shares[i] > 0
        if not support.any():
            raise EmptySupport(f"agent {i} consumes nothing")
        measure = exponential_measure(agent.delta, e.horizon)
        alphas[i] = p[support].sum() / measure[support].sum()
    return alphas


def _raw_join_weights(e: Economy, shares: np.ndarray) -> np.ndarray:
    utility = (shares * e.utility_weights()).sum(axis=1)
    return e.wealths / utility


def _supports(shares: np.ndarray) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(int(t) for t in np.flatnonzero(row > 0)) for row in shares)


# ---------------------------------------------------------------------------
# solvers


class _Chain:
    """Exact equilibrium of agents with distinct, ascending discount rates.

    Agent ``j`` owns the interval ``[c_{j-1}, c_j]`` of the supply line
    ``[0, T+1]`` (period ``t`` is ``[t, t+1)``). Neighbours ``j`` and
    ``j+1`` have envelope branches crossing at ``kappa_j``; if ``c_j`` is
    fractional they share period ``floor(c_j)`` and ``kappa_j`` equals it,
    otherwise ``kappa_j`` may be anywhere in ``[c_j - 1, c_j]``.

    Given the first cut and crossing, budgets fix every later pair, so a
    scalar shooting parameter ``z`` sweeps both cases in turn and the
    terminal mismatch ``c_last - (T+1)`` is nondecreasing in ``z``. It can
    jump where a later cut meets an integer; the jump is resolved by a
    nested search over that boundary's free crossing.
    """

    def __init__(self, deltas: np.ndarray, wealths: np.ndarray, horizon: int):
        self.horizon = horizon
        self.count = len(deltas)
        self.log_deltas = [math.log(d) for d in deltas]
        self.wealths = [float(w) for w in wealths]
        self.powers = [[float(d) ** t for t in range(horizon + 1)] for d in deltas]
        self.cumulative = [[0.0, *np.cumsum(pw).tolist()] for pw in self.powers]
        self.evaluations = 0

    def mass(self, j: int, s: float) -> float:
        """Utility of agent ``j`` from the supply segment ``[0, s]``."""
        k = min(int(math.floor(s)), self.horizon + 1)
        if k >= self.horizon + 1:
            return self.cumulative[j][-1]
        return self.cumulative[j][k] + (s - k) * self.powers[j][k]

    def position(self, j: int, u: float) -> float:
        """Inverse of :meth:`mass`, extended linearly past the end of supply."""
        cum = self.cumulative[j]
        if u >= cum[-1]:
            return self.horizon + 1 + (u - cum[-1])
        k = bisect.bisect_right(cum, u) - 1
        return k + (u - cum[k]) / self.powers[j][k]

    def sweep(self, j: int, cut: float, kappa: float, log_alpha: float):
        """Propagate budgets from agent ``j`` onward.

        Returns the mismatch and the lists of cuts, crossings and
        ``log alpha`` for agents ``j, j+1, ...``.
        """
        self.evaluations += 1
        cuts, kappas, logs = [cut], [kappa], [log_alpha]
        end = self.horizon + 1
        for i in range(j + 1, self.count):
            y = logs[-1] - (self.log_deltas[i] - self.log_deltas[i - 1]) * kappas[-1]
            logs.append(y)
            c = self.position(i, self.mass(i, cuts[-1]) + self.wealths[i] * math.exp(-y))
            cuts.append(c)
            if i == self.count - 1:
                return c - end, cuts, kappas, logs
            if c >= end:
                # Later agents would get nothing: too far, whatever follows.
                return c - end + 1.0, cuts, kappas, logs
            kappas.append(math.floor(c))
        return 0.0, cuts, kappas, logs

    def first(self, z: float) -> tuple[float, float, float]:
        k = math.floor((z + 1.0) / 2.0)
        if z >= 2 * k:
            cut, kappa = k + (z - 2 * k), float(k)
        else:
            cut, kappa = float(k), k - 1 + (z - 2 * k + 1)
        u = self.mass(0, cut)
        return cut, kappa, (math.log(self.wealths[0] / u) if u > 0 else math.inf)

    def solve(self) -> tuple[list[float], list[float]]:
        """Return the ``count - 1`` interior cuts and every ``log alpha``."""
        if self.count == 1:
            return [], [math.log(self.wealths[0] / self.cumulative[0][-1])]

        def top(z):
            return self.sweep(0, *self.first(z))

        cuts, _, logs = self._search(top, 1e-300, 2.0 * self.horizon + 1.0, 0)
        return cuts[: self.count - 1], logs

    def _search(self, shoot, lo: float, hi: float, start: int):
        f_lo, f_hi = shoot(lo), shoot(hi)
        for _ in range(400):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            f_mid = shoot(mid)
            if f_mid[0] < 0:
                lo, f_lo = mid, f_mid
            else:
                hi, f_hi = mid, f_mid
        best = f_lo if abs(f_lo[0]) <= abs(f_hi[0]) else f_hi
        if abs(best[0]) <= 1e-12:
            return best[1], best[2], best[3]

        # The mismatch jumps between lo and hi: find the boundary whose cut crosses an integer.
        cuts_lo, cuts_hi = f_lo[1], f_hi[1]
        idx = next(
            (i for i in range(1, min(len(cuts_lo), len(cuts_hi))) if math.floor(cuts_lo[i]) != math.floor(cuts_hi[i])),
            None,
        )
        if idx is None or start + idx >= self.count - 1:
            return best[1], best[2], best[3]
        k = float(math.floor(cuts_hi[idx]))
        log_alpha = f_hi[3][idx]
        agent = start + idx

        def inner(kappa):
            return self.sweep(agent, k, kappa, log_alpha)

        sub_cuts, sub_kappas, sub_logs = self._search(inner, k - 1.0, k, agent)
        return f_hi[1][:idx] + sub_cuts, f_hi[2][:idx] + sub_kappas, f_hi[3][:idx] + sub_logs


def _interval_shares(cuts: Sequence[float], periods: int) -> np.ndarray:
    """Shares of agents owning consecutive intervals ``[c_{j-1}, c_j]``."""
    edges = np.concatenate(([0.0], np.asarray(cuts, dtype=float), [float(periods)]))
    edges = np.clip(edges, 0.0, periods)
    nearest = np.round(edges)
    snap = np.abs(edges - nearest) <= SNAP
    edges[snap] = nearest[snap]
    edges = np.maximum.accumulate(edges)
    t = np.arange(periods)
    left = np.maximum(edges[:-1, None], t[None, :])
    right = np.minimum(edges[1:, None], t[None, :] + 1.0)
    shares = np.clip(right - left, 0.0, 1.0)
    # Rounding in the differences is absorbed by the owner of each period's largest share.
    columns = shares.sum(axis=0)
    owner = shares.argmax(axis=0)
    shares[owner, t] += 1.0 - columns
    return shares


def _cuts_from_prices(prices: np.ndarray, wealths: np.ndarray) -> list[float]:
    """Interior cuts that give agents (in order) their share of total spend."""
    total = prices.sum()
    targets = np.cumsum(wealths)[:-1] / wealths.sum() * total
    running = np.concatenate(([0.0], np.cumsum(prices)))
    k = np.clip(np.searchsorted(running, targets, side="right") - 1, 0, prices.size - 1)
    return list(k + (targets - running[k]) / prices[k])


@dataclass(frozen=True)
class _Groups:
    """Agents sorted by delta, with near-identical rates merged."""

    order: np.ndarray
    labels: np.ndarray
    deltas: np.ndarray
    wealths: np.ndarray

    @classmethod
    def build(cls, e: Economy) -> "_Groups":
        deltas, wealths = e.deltas, e.wealths
        order = np.argsort(deltas, kind="stable")
        labels = np.empty(e.size, dtype=int)
        group_d: list[list[float]] = []
        group_w: list[list[float]] = []
        for i in order:
            if group_d and deltas[i] - group_d[-1][-1] < MERGE_GAP:
                group_d[-1].append(deltas[i])
                group_w[-1].append(wealths[i])
            else:
                group_d.append([deltas[i]])
                group_w.append([wealths[i]])
            labels[i] = len(group_d) - 1
        merged_w = np.array([sum(w) for w in group_w])
        merged_d = np.array([float(np.dot(d, w) / sum(w)) for d, w in zip(group_d, group_w)])
        return cls(order=order, labels=labels, deltas=merged_d, wealths=merged_w)

    def expand(self, e: Economy, shares: np.ndarray) -> np.ndarray:
        """Split each group's shares among its members in proportion to wealth."""
        weight = e.wealths / self.wealths[self.labels]
        return shares[self.labels] * weight[:, None]


def _envelope_solve(groups: _Groups, horizon: int) -> tuple[np.ndarray, np.ndarray, int]:
    chain = _Chain(groups.deltas, groups.wealths, horizon)
    cuts, logs = chain.solve()
    t = np.arange(horizon + 1)
    log_prices = np.max(np.asarray(logs)[:, None] + np.outer(np.log(groups.deltas), t), axis=0)
    return np.exp(log_prices), _interval_shares(cuts, horizon + 1), chain.evaluations


def _initial_bids(wealths: np.ndarray, periods: int, bids: Optional[np.ndarray]) -> np.ndarray:
    if bids is None:
        return np.repeat(wealths[:, None] / periods, periods, axis=1)
    bids = np.array(bids, dtype=float)
    if bids.shape != (wealths.size, periods) or not np.all(np.isfinite(bids)) or np.any(bids <= 0):
        raise InvalidInput(f"initial bids must be a positive matrix of shape {(wealths.size, periods)}")
    return bids * (wealths / bids.sum(axis=1))[:, None]


def _proportional_response(
    e: Economy,
    groups: _Groups,
    tol: float,
    max_iters: int,
    bids: Optional[np.ndarray],
) -> tuple[np.ndarray, np.ndarray, int]:
    periods = e.horizon + 1
    weights = np.power.outer(groups.deltas, np.arange(periods))
    wealth = groups.wealths
    if bids is not None:
        bids = np.array(bids, dtype=float)
        if bids.shape != (e.size, periods):
            raise InvalidInput(f"initial bids must have shape {(e.size, periods)}")
        merged = np.zeros((groups.deltas.size, periods))
        np.add.at(merged, groups.labels, bids)
        bids = merged
    b = _initial_bids(wealth, periods, bids)
    log_deltas = np.log(groups.deltas)
    residual = math.inf
    # Checks are spaced geometrically: at most ~10% extra iterations, few verifications.
    next_check = 1
    for it in range(1, max_iters + 1):
        p = b.sum(axis=0)
        gain = b / p * weights
        b = gain * (wealth / gain.sum(axis=1))[:, None]
        if it >= next_check or it == max_iters:
            next_check = max(it + 20, int(it * 1.1))
            prices = b.sum(axis=0)
            shares = _interval_shares(_cuts_from_prices(prices, wealth), periods)
            residual = _residual(log_deltas, wealth, prices, shares)
            if residual <= tol:
                return prices, shares, it
    raise NoConvergence(
        f"proportional response stopped after {max_iters} iterations at residual {residual:.3g}",
        residual=residual,
        iterations=max_iters,
    )


def solve_equilibrium(
    e: Economy,
    tol: float = 1e-10,
    max_iters: int = 1_000_000,
    method: str = "envelope",
    initial_bids=None,
) -> EquilibriumResult:
    """Compute the parimutuel equilibrium of ``e``.

    Parameters
    ----------
    e:
        The economy. Agents with discount rates closer than ``1e-12`` are
        merged for the solve and split back in proportion to wealth.
    tol:
        Largest acceptable verification residual.
    max_iters:
        Iteration cap for proportional response.
    method:
        ``"envelope"`` (default) solves the interval structure exactly by
        shooting on the first cut. ``"proportional_response"`` runs the
        bid dynamics ``b_i(t) <- w_i x_i(t) delta_i**t / u_i(x_i)`` from
        ``initial_bids`` (uniform by default) until the allocation read
        off the current prices verifies at ``tol``.

    Raises
    ------
    NoConvergence
        The residual stayed above ``tol``; no equilibrium is returned.
    """
    if method not in METHODS:
        raise InvalidInput(f"unknown method {method!r}; choose from {METHODS}")
    if not tol > 0:
        raise ParamOutOfRange("tol must be positive")
    groups = _Groups.build(e)
    if method == "envelope":
        prices, merged, iterations = _envelope_solve(groups, e.horizon)
    else:
        prices, merged, iterations = _proportional_response(e, groups, tol, max_iters, initial_bids)
    shares = groups.expand(e, merged)
    report = verify_equilibrium(e, prices, shares, tol)
    if not report.ok:
        raise NoConvergence(
            f"{method} solver ended at residual {report.residual:.3g} above tol {tol:g}",
            residual=report.residual,
            iterations=iterations,
        )
    return EquilibriumResult(
        prices=prices,
        allocation=Allocation(shares),
        join_weights=_raw_join_weights(e, shares),
        supports=_supports(shares),
        iterations=iterations,
        residual=report.residual,
        method=method,
    )


def probe_bids(e: Economy, start: int) -> Optional[np.ndarray]:
    """Deterministic initial bids for uniqueness probing.

    Start 0 is the uniform default; start ``k > 0`` draws each agent's
    split of wealth across periods from a flat Dirichlet law seeded by
    ``k``.
    """
    if start == 0:
        return None
    rng = np.random.default_rng(start)
    split = rng.dirichlet(np.ones(e.horizon + 1), size=e.size)
    return np.maximum(split, 1e-12) * e.wealths[:, None]


def uniqueness_probe(e: Economy, n_starts: int = 5, tol: float = 1e-7, max_iters: int = 1_000_000) -> float:
    """Largest sup-distance between normalized prices reached from different starts.

    Each start runs proportional response from :func:`probe_bids` until
    its verification residual is below ``tol``. Equilibrium prices are
    unique, so the result should not exceed ``10 * tol``. Two agents
    whose rates differ by ``g`` slow the dynamics to roughly ``1 / g``
    rounds; such economies may raise :class:`NoConvergence`.
    """
    if n_starts < 1:
        raise ParamOutOfRange("n_starts must be at least 1")
    runs = [
        solve_equilibrium(e, tol, max_iters, "proportional_response", probe_bids(e, k)).normalized_prices
        for k in range(n_starts)
    ]
    return max(
        (float(np.max(np.abs(a - b))) for i, a in enumerate(runs) for b in runs[i + 1 :]),
        default=0.0,
    )


def synthesize_economy(f: DiscountFactor, merge: bool = False) -> tuple[Economy, EquilibriumResult]:
    """An economy whose equilibrium prices are proportional to ``f``.

    Agent ``i`` has the slope of the supporting line at period ``i`` as its
    discount rate (``delta_i = f(i) / f(i-1)``, and ``delta_0 = delta_1``),
    wealth ``f(i) / f(0)``, and buys period ``i`` alone. With
    ``merge=True`` agents sharing a rate are combined afterwards.
    """
    supporting_lines(f)
    v = f.values
    prices = v / v[0]
    deltas = np.empty(v.size)
    deltas[1:] = v[1:] / v[:-1]
    deltas[0] = deltas[1]
    wealth = prices.copy()
    shares = np.eye(v.size)
    if merge:
        keep = np.concatenate(([True], np.abs(np.diff(deltas)) >= MERGE_GAP))
        label = np.cumsum(keep) - 1
        merged = np.zeros((keep.sum(), v.size))
        np.add.at(merged, label, shares)
        wealth = np.bincount(label, weights=wealth)
        deltas, shares = deltas[keep], merged
    e = Economy.from_arrays(deltas, wealth, f.horizon)
    report = verify_equilibrium(e, prices, shares, 1e-10)
    result = EquilibriumResult(
        prices=prices,
        allocation=Allocation(shares),
        join_weights=_raw_join_weights(e, shares),
        supports=_supports(shares),
        iterations=0,
        residual=report.residual,
        method="construction",
    )
    return e, result
