"""Finite-horizon discount factors, streams and dated rewards.

A discount factor is a positive, weakly decreasing sequence
``f(0), ..., f(T)``. Preferences over streams are represented by
``x -> sum_t f(t) x(t)``. This module decides decreasing impatience
(log-convexity), its increasing dual, stationarity, and the
compound-interest convexity axiom, and produces falsifying witnesses.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .errors import (
    BadPremiseOrder,
    DateBeyondHorizon,
    HorizonMismatch,
    InvalidInput,
    NonPositiveValue,
    NotDecreasing,
    ParamOutOfRange,
    PeriodOutOfRange,
    TooShort,
)

#: Smallest admissible value; anything below risks underflow in ratio chains.
MIN_VALUE = 1e-300

#: Relative slack on the convexity axiom, scaled by the largest term.
AXIOM_SLACK = 1e-12

ArrayLike = Union[Sequence[float], np.ndarray]


def _as_vector(values: ArrayLike) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    if arr.ndim != 1:
        raise InvalidInput(f"expected a one-dimensional sequence, got shape {arr.shape}")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DiscountFactor:
    """Positive, weakly decreasing weights ``f(0..T)`` with ``T >= 2``.

    No normalization is applied: ``f(0)`` is free and two factors that
    differ by a positive constant represent the same preference.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = _as_vector(self.values)
        if arr.size < 3:
            raise TooShort(f"a discount factor needs at least 3 values, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise NonPositiveValue("values must be finite")
        bad = np.flatnonzero(arr < MIN_VALUE)
        if bad.size:
            t = int(bad[0])
            raise NonPositiveValue(f"value at t={t} is {arr[t]!r}; values must be >= {MIN_VALUE:g}")
        rising = np.flatnonzero(arr[1:] > arr[:-1])
        if rising.size:
            t = int(rising[0])
            raise NotDecreasing(f"f({t + 1}) = {arr[t + 1]!r} exceeds f({t}) = {arr[t]!r}")
        object.__setattr__(self, "values", _frozen(arr))

    @property
    def horizon(self) -> int:
        return self.values.size - 1

    def __len__(self) -> int:
        return self.values.size

    def __getitem__(self, t):
        return self.values[t]

    def __iter__(self):
        return iter(self.values.tolist())

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.values.tolist()!r})"


@dataclass(frozen=True, eq=False)
class Stream:
    """Nonnegative payoffs ``x(0..T)``."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = _as_vector(self.values)
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise InvalidInput("stream values must be finite and nonnegative")
        object.__setattr__(self, "values", _frozen(arr))

    @property
    def horizon(self) -> int:
        return self.values.size - 1

    @classmethod
    def dated(cls, reward: "DatedReward", horizon: int) -> "Stream":
        """The stream paying ``reward.amount`` at ``reward.date`` and nothing else."""
        if reward.date > horizon:
            raise DateBeyondHorizon(f"date {reward.date} exceeds horizon {horizon}")
        values = np.zeros(horizon + 1)
        values[reward.date] = reward.amount
        return cls(values)


@dataclass(frozen=True)
class DatedReward:
    """An amount paid at a single date."""

    amount: float
    date: int

    def __post_init__(self) -> None:
        if not np.isfinite(self.amount) or self.amount < 0:
            raise InvalidInput(f"amount must be finite and nonnegative, got {self.amount!r}")
        if int(self.date) != self.date or self.date < 0:
            raise InvalidInput(f"date must be a nonnegative integer, got {self.date!r}")
        object.__setattr__(self, "amount", float(self.amount))
        object.__setattr__(self, "date", int(self.date))


class Preference(enum.Enum):
    A_PREFERRED = "APreferred"
    B_PREFERRED = "BPreferred"
    INDIFFERENT = "Indifferent"


@dataclass(frozen=True)
class ConvexityWitness:
    """A single observation falsifying compound-interest convexity.

    ``lhs`` is the value of splitting a unit principal between maturities
    ``period - 1`` and ``period + 1`` at gross rate ``1 + rate``; ``rhs`` is
    the value of investing everything at maturity ``period``. Both are
    evaluated at principal ``k = 1``.
    """

    period: int
    rate: float
    lhs: float
    rhs: float

    @property
    def violated(self) -> bool:
        return self.lhs < self.rhs

    def bundles(self, k: float = 1.0) -> tuple[tuple[DatedReward, DatedReward], DatedReward]:
        """Return the split bundle and the lump reward for principal ``k``."""
        g = 1.0 + self.rate
        t = self.period
        split = (
            DatedReward(0.5 * k * g ** (t - 1), t - 1),
            DatedReward(0.5 * k * g ** (t + 1), t + 1),
        )
        return split, DatedReward(k * g**t, t)


def make_discount_factor(values: ArrayLike) -> DiscountFactor:
    """Validate ``values`` and wrap them without rescaling.

    Raises
    ------
    TooShort, NonPositiveValue, NotDecreasing
    """
    return DiscountFactor(values)


def from_generalized_beta_delta(beta: float, delta: float, switch: int, horizon: int) -> DiscountFactor:
    """Build ``f(t) = beta**min(switch, t) * delta**t`` for ``t = 0..horizon``.

    ``beta = 1`` gives exponential discounting and ``switch = 1`` the
    quasi-hyperbolic case.
    """
    if not 0.0 < beta <= 1.0:
        raise ParamOutOfRange(f"beta must lie in (0, 1], got {beta!r}")
    if not 0.0 < delta <= 1.0:
        raise ParamOutOfRange(f"delta must lie in (0, 1], got {delta!r}")
    if int(horizon) != horizon or horizon < 2:
        raise ParamOutOfRange(f"horizon must be an integer >= 2, got {horizon!r}")
    if int(switch) != switch or not 1 <= switch <= horizon:
        raise ParamOutOfRange(f"switch must be an integer in 1..{horizon}, got {switch!r}")
    t = np.arange(int(horizon) + 1)
    return DiscountFactor(np.power(beta, np.minimum(t, int(switch))) * np.power(delta, t))


def impatience_ratios(f: DiscountFactor) -> np.ndarray:
    """Consecutive ratios ``f(t+1) / f(t)`` for ``t = 0..T-1``."""
    v = f.values
    return v[1:] / v[:-1]


def _log_convexity_terms(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``f(t+1)**2`` and ``f(t) * f(t+2)`` for every interior triple.

    Each triple is first multiplied by a power of two taken from its middle
    entry. The scaling is exact, so the comparison is the plain cross
    product, but it cannot underflow for tiny values.
    """
    mid, exp = np.frexp(values[1:-1])
    lo = np.ldexp(values[:-2], -exp)
    hi = np.ldexp(values[2:], -exp)
    return mid * mid, lo * hi


def is_decreasing_impatience(f: DiscountFactor, rel_tol: float = 1e-10) -> bool:
    """True iff ``f(t+1)**2 <= f(t) f(t+2) (1 + rel_tol)`` for all ``t``."""
    if rel_tol < 0:
        raise ParamOutOfRange("rel_tol must be nonnegative")
    square, cross = _log_convexity_terms(f.values)
    return bool(np.all(square <= cross * (1.0 + rel_tol)))


def is_increasing_impatience(f: DiscountFactor, rel_tol: float = 1e-10) -> bool:
    """True iff ``f(t+1)**2 >= f(t) f(t+2) / (1 + rel_tol)`` for all ``t``."""
    if rel_tol < 0:
        raise ParamOutOfRange("rel_tol must be nonnegative")
    square, cross = _log_convexity_terms(f.values)
    return bool(np.all(square >= cross / (1.0 + rel_tol)))


def is_stationary(f: DiscountFactor, rel_tol: float = 1e-10) -> bool:
    """True iff all impatience ratios agree within ``rel_tol`` (relative)."""
    r = impatience_ratios(f)
    return bool(r.max() - r.min() <= rel_tol * r.max())


def _coerce_stream(x: Union[Stream, ArrayLike]) -> Stream:
    return x if isinstance(x, Stream) else Stream(x)


def evaluate_stream(f: DiscountFactor, x: Union[Stream, ArrayLike]) -> float:
    """Discounted value ``sum_t f(t) x(t)``."""
    x = _coerce_stream(x)
    if x.horizon != f.horizon:
        raise HorizonMismatch(f"stream horizon {x.horizon} differs from factor horizon {f.horizon}")
    return float(np.dot(f.values, x.values))


def _check_date(f: DiscountFactor, reward: DatedReward) -> None:
    if reward.date > f.horizon:
        raise DateBeyondHorizon(f"date {reward.date} exceeds horizon {f.horizon}")


def compare_dated_rewards(f: DiscountFactor, a: DatedReward, b: DatedReward) -> Preference:
    """Compare ``a.amount * f(a.date)`` with ``b.amount * f(b.date)``."""
    _check_date(f, a)
    _check_date(f, b)
    diff = a.amount * f.values[a.date] - b.amount * f.values[b.date]
    if diff > 0:
        return Preference.A_PREFERRED
    if diff < 0:
        return Preference.B_PREFERRED
    return Preference.INDIFFERENT


def _weakly_prefers(f: DiscountFactor, x: float, t: int, y: float, s: int, rel_tol: float) -> bool:
    lhs = x * f.values[t]
    rhs = y * f.values[s]
    return lhs >= rhs * (1.0 - rel_tol)


def behavioral_di_check(
    f: DiscountFactor,
    x: float,
    y: float,
    s: int,
    t: int,
    max_shift: int,
    rel_tol: float = 1e-12,
) -> bool:
    """Check the preference-level definition of decreasing impatience.

    If the larger-later reward ``(x, t)`` is weakly preferred to the
    smaller-sooner ``(y, s)``, it must stay weakly preferred when both
    dates are pushed back by every shift ``1..max_shift``. Vacuously true
    when the premise fails. ``rel_tol`` absorbs rounding in the shifted
    comparisons only.
    """
    if not (x > y > 0):
        raise BadPremiseOrder(f"need x > y > 0, got x={x!r}, y={y!r}")
    if not (0 <= s < t):
        raise BadPremiseOrder(f"need 0 <= s < t, got s={s!r}, t={t!r}")
    if max_shift < 1 or t + max_shift > f.horizon:
        raise DateBeyondHorizon(f"t + max_shift = {t + max_shift} exceeds horizon {f.horizon}")
    if x * f.values[t] < y * f.values[s]:
        return True
    return all(_weakly_prefers(f, x, t + r, y, s + r, rel_tol) for r in range(1, max_shift + 1))


def _axiom_holds(prev: np.ndarray, mid: np.ndarray, nxt: np.ndarray, gross: np.ndarray) -> np.ndarray:
    """Axiom inequality divided through by ``k * gross**(t-1)``.

    The common factor is positive, so the verdict is unchanged, and the
    slack stays relative to the largest term.
    """
    split_early = 0.5 * prev
    split_late = 0.5 * gross * gross * nxt
    lump = gross * mid
    slack = AXIOM_SLACK * np.maximum(np.maximum(split_early, split_late), lump)
    return split_early + split_late >= lump - slack


def compound_interest_convexity_holds(f: DiscountFactor, k: float, r: float, t: int) -> bool:
    """Does splitting principal ``k`` between ``t-1`` and ``t+1`` beat investing at ``t``?

    Evaluates ``(k/2)(1+r)**(t-1) f(t-1) + (k/2)(1+r)**(t+1) f(t+1) >= k (1+r)**t f(t)``
    up to a slack of ``1e-12`` times the largest term. Any gross rate
    ``1 + r > 0`` is accepted. The verdict does not depend on ``k``.
    """
    if not k > 0:
        raise ParamOutOfRange(f"k must be positive, got {k!r}")
    if not r > -1:
        raise ParamOutOfRange(f"r must exceed -1, got {r!r}")
    if int(t) != t or not 1 <= t <= f.horizon - 1:
        raise PeriodOutOfRange(f"t must be an integer in 1..{f.horizon - 1}, got {t!r}")
    v = f.values
    t = int(t)
    return bool(_axiom_holds(v[t - 1], v[t], v[t + 1], np.asarray(1.0 + r)))


def convexity_grid(f: DiscountFactor, rates: Iterable[float]) -> np.ndarray:
    """Evaluate the axiom for every rate and every period at once.

    Returns a boolean array of shape ``(len(rates), T - 1)`` whose column
    ``j`` corresponds to period ``t = j + 1``. Same inequality and slack as
    :func:`compound_interest_convexity_holds`.
    """
    gross = 1.0 + np.asarray(list(rates), dtype=float)[:, None]
    if np.any(gross <= 0):
        raise ParamOutOfRange("all rates must exceed -1")
    v = f.values
    return _axiom_holds(v[None, :-2], v[None, 1:-1], v[None, 2:], gross)


def find_convexity_violation(f: DiscountFactor) -> Optional[ConvexityWitness]:
    """Return the first axiom period at which ``f`` fails log-convexity.

    The axiom at period ``t`` involves ``f(t-1), f(t), f(t+1)``, so every
    interior triple is covered. The witness uses the rate minimizing the
    split-minus-lump gap, ``1 + r = f(t) / f(t+1)``; at that rate the gap
    is negative exactly when ``f(t)**2 > f(t-1) f(t+1)``. Returns ``None``
    when ``f`` is log-convex in exact floating comparison.

    A failure within a few ulps may round to ``lhs >= rhs``; check
    :attr:`ConvexityWitness.violated` before presenting it as a refutation.
    """
    square, cross = _log_convexity_terms(f.values)
    failing = np.flatnonzero(square > cross)
    if failing.size == 0:
        return None
    t = int(failing[0]) + 1
    v = f.values
    gross = v[t] / v[t + 1]
    lhs = 0.5 * gross ** (t - 1) * v[t - 1] + 0.5 * gross ** (t + 1) * v[t + 1]
    rhs = gross**t * v[t]
    return ConvexityWitness(period=t, rate=float(gross - 1.0), lhs=float(lhs), rhs=float(rhs))
