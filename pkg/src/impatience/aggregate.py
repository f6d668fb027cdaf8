"""Aggregation of normalized discount factors.

The geometric mean ``prod_i f_i(t) ** eta_i`` is the aggregator singled
out by Pareto, independence of irrelevant alternatives (IIA) and time
consistency. This module implements it, executable checks for the
three axioms, and three aggregators that each break exactly one axiom.

Aggregators are plain callables ``Profile -> NormalizedFactor``; any
weights are bound when the callable is built.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .discount import DiscountFactor, impatience_ratios
from .errors import (
    HorizonExhausted,
    HorizonMismatch,
    InvalidInput,
    InvalidWeights,
    NotNormalized,
    SizeMismatch,
)

#: Dead-band below which a member inequality counts as a tie in Pareto checks.
PARETO_DEADBAND = 1e-12


class NormalizedFactor(DiscountFactor):
    """A discount factor with ``f(0) = 1`` exactly."""

    def __post_init__(self) -> None:
        super().__post_init__()
        if self.values[0] != 1.0:
            raise NotNormalized(f"f(0) must equal 1, got {self.values[0]!r}")


@dataclass(frozen=True, eq=False)
class Profile:
    """Nonempty list of normalized factors sharing one horizon."""

    members: tuple[NormalizedFactor, ...]

    def __post_init__(self) -> None:
        members = tuple(m if isinstance(m, NormalizedFactor) else NormalizedFactor(m) for m in self.members)
        if not members:
            raise SizeMismatch("a profile needs at least one member")
        horizons = {m.horizon for m in members}
        if len(horizons) != 1:
            raise HorizonMismatch(f"members have different horizons: {sorted(horizons)}")
        object.__setattr__(self, "members", members)

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def horizon(self) -> int:
        return self.members[0].horizon

    def matrix(self) -> np.ndarray:
        """Members stacked as rows, shape ``(m, T + 1)``."""
        return np.vstack([m.values for m in self.members])


@dataclass(frozen=True, eq=False)
class Weights:
    """Positive weights summing to one (within ``1e-12``)."""

    eta: np.ndarray

    def __post_init__(self) -> None:
        eta = np.array(self.eta, dtype=float)
        if eta.ndim != 1 or eta.size == 0:
            raise InvalidWeights("weights must be a nonempty sequence")
        if not np.all(np.isfinite(eta)) or np.any(eta <= 0):
            raise InvalidWeights("weights must be positive and finite")
        if abs(eta.sum() - 1.0) > 1e-12:
            raise InvalidWeights(f"weights must sum to 1, got {eta.sum()!r}")
        eta.setflags(write=False)
        object.__setattr__(self, "eta", eta)

    @classmethod
    def uniform(cls, m: int) -> "Weights":
        return cls(np.full(m, 1.0 / m))


Aggregator = Callable[[Profile], NormalizedFactor]


def normalize(f: DiscountFactor) -> NormalizedFactor:
    """Rescale so that ``f(0) = 1``; the preference is unchanged."""
    if isinstance(f, NormalizedFactor):
        return f
    v = f.values / f.values[0]
    v[0] = 1.0
    return NormalizedFactor(v)


def geometric_mean(p: Profile, w: Weights) -> NormalizedFactor:
    """``prod_i p_i(t) ** eta_i``, computed as an exponentiated weighted log sum."""
    if w.eta.size != p.size:
        raise SizeMismatch(f"{w.eta.size} weights for {p.size} members")
    logs = np.log(p.matrix())
    values = np.exp(w.eta @ logs)
    values[0] = 1.0
    # exp can round a flat stretch upward by an ulp; the exact mean is nonincreasing.
    return NormalizedFactor(np.minimum.accumulate(values))


def geometric_aggregator(w: Weights) -> Aggregator:
    """Bind ``w`` into an aggregator callable."""

    def aggregate(p: Profile) -> NormalizedFactor:
        return geometric_mean(p, w)

    return aggregate


def arithmetic_mean(p: Profile) -> NormalizedFactor:
    """Uniform average of the members. Breaks time consistency."""
    return NormalizedFactor(p.matrix().mean(axis=0))


def constant_aggregator(delta: float = 0.5) -> Aggregator:
    """Ignore the profile and return ``delta**t``. Breaks Pareto."""

    def aggregate(p: Profile) -> NormalizedFactor:
        return NormalizedFactor(np.power(delta, np.arange(p.horizon + 1)))

    return aggregate


def tail_dependent_aggregator(first: Weights, second: Weights) -> Aggregator:
    """A geometric mean whose weights depend on the members' tails.

    If the first member's terminal ratio ``f(T)/f(T-1)`` is below the
    second member's, ``first`` is used, otherwise ``second``. The choice
    depends on dates other than the pair being compared, so IIA fails
    while Pareto and time consistency survive whenever the shifted
    profile keeps the same tail ordering.
    """

    def aggregate(p: Profile) -> NormalizedFactor:
        if p.size < 2:
            raise SizeMismatch("the tail-dependent aggregator needs at least two members")
        tails = [float(impatience_ratios(m)[-1]) for m in p.members[:2]]
        return geometric_mean(p, first if tails[0] < tails[1] else second)

    return aggregate


def t_shift(f: NormalizedFactor, t: int) -> NormalizedFactor:
    """Continuation ``f(t + s) / f(t)`` as seen from date ``t``."""
    if int(t) != t or t < 0 or t > f.horizon:
        raise InvalidInput(f"shift must be an integer in 0..{f.horizon}, got {t!r}")
    if f.horizon - t < 2:
        raise HorizonExhausted(f"shifting by {t} leaves horizon {f.horizon - t} < 2")
    v = f.values[t:] / f.values[t]
    v[0] = 1.0
    return NormalizedFactor(v)


def shift_profile(p: Profile, t: int) -> Profile:
    return Profile(tuple(t_shift(m, t) for m in p.members))


def _close(a: np.ndarray, b: np.ndarray, rel_tol: float) -> bool:
    return bool(np.all(np.abs(a - b) <= rel_tol * np.maximum(np.abs(a), np.abs(b))))


def check_time_consistency(agg: Aggregator, p: Profile, t: int, rel_tol: float = 1e-10) -> bool:
    """Does aggregating the shifted members equal shifting the aggregate?"""
    lhs = agg(shift_profile(p, t)).values
    rhs = t_shift(normalize(agg(p)), t).values
    if lhs.size != rhs.size:
        return False
    return _close(lhs, rhs, rel_tol)


def _signed_gaps(values: np.ndarray, t: int, s: int, x: float, y: float) -> np.ndarray:
    """``f(t) x - f(s) y`` in units of the larger side, with a dead-band."""
    lhs = values[..., t] * x
    rhs = values[..., s] * y
    gap = (lhs - rhs) / np.maximum(lhs, rhs)
    gap[np.abs(gap) <= PARETO_DEADBAND] = 0.0
    return gap


def check_pareto_dated(agg: Aggregator, p: Profile, t: int, s: int, x: float, y: float) -> bool:
    """Unanimous preference for ``(x, t)`` over ``(y, s)`` must carry over.

    If every member weakly prefers ``(x, t)`` the aggregate must too, and
    strictly so when some member is strict. Vacuously true otherwise.
    """
    if not (x > 0 and y > 0):
        raise InvalidInput("amounts must be positive")
    members = _signed_gaps(p.matrix(), t, s, x, y)
    if np.any(members < 0):
        return True
    social = _signed_gaps(agg(p).values[None, :], t, s, x, y)[0]
    if np.any(members > 0):
        return bool(social > 0)
    return bool(social >= 0)


def check_iia(agg: Aggregator, p: Profile, q: Profile, t: int, s: int, rel_tol: float = 1e-10) -> bool:
    """Independence of irrelevant alternatives via the ratio condition.

    If every member has the same ``f(t)/f(s)`` in ``p`` and ``q``, the
    aggregate ratios must agree too. Vacuously true otherwise.
    """
    if p.size != q.size:
        raise SizeMismatch(f"profiles have {p.size} and {q.size} members")
    mp, mq = p.matrix(), q.matrix()
    if not _close(mp[:, t] / mp[:, s], mq[:, t] / mq[:, s], rel_tol):
        return True
    ap, aq = agg(p).values, agg(q).values
    return _close(np.array([ap[t] / ap[s]]), np.array([aq[t] / aq[s]]), rel_tol)


def rescaled_variant(p: Profile, scales: Sequence[float]) -> Profile:
    """Multiply member ``i`` by ``scales[i]`` at every date after 0.

    With ``0 < scales[i] <= 1`` the result is again a profile, and every
    ratio ``f(t)/f(s)`` with ``t, s >= 1`` is unchanged, which makes it the
    natural partner profile for IIA checks.
    """
    scales = np.asarray(scales, dtype=float)
    if scales.shape != (p.size,) or np.any(scales <= 0) or np.any(scales > 1):
        raise InvalidInput("need one scale in (0, 1] per member")
    m = p.matrix()
    m[:, 1:] *= scales[:, None]
    return Profile(tuple(NormalizedFactor(row) for row in m))


def summability_check(f: DiscountFactor, min_gap: float = 1e-6) -> bool:
    """Finite-horizon certificate of summability: tail ratio ``<= 1 - min_gap``."""
    return bool(impatience_ratios(f)[-1] <= 1.0 - min_gap)


@dataclass(frozen=True)
class AxiomReport:
    """Outcome of the three axiom suites on one profile."""

    time_consistency: bool
    pareto: bool
    iia: bool

    def as_dict(self) -> dict[str, bool]:
        return {"time_consistency": self.time_consistency, "pareto": self.pareto, "iia": self.iia}


def _memoized(agg: Aggregator) -> Aggregator:
    """Cache results per profile object; the suites query the same profile many times."""
    cache: dict[int, tuple[Profile, NormalizedFactor]] = {}

    def cached(p: Profile) -> NormalizedFactor:
        if id(p) not in cache:
            # Holding p keeps its id from being reused while cached.
            cache[id(p)] = (p, agg(p))
        return cache[id(p)][1]

    return cached


def run_axiom_suites(
    agg: Aggregator,
    p: Profile,
    partner: Profile | None = None,
    rel_tol: float = 1e-10,
) -> AxiomReport:
    """Exercise each axiom on every admissible date or date pair of ``p``.

    * Time consistency: every shift leaving a horizon of at least 2.
    * Pareto: for each ordered pair ``(t, s)`` the amounts ``x = 1`` and
      ``y = min_i f_i(t) / f_i(s)`` (a unanimous premise with a tie) and
      ``y`` shrunk by ``1e-6`` (a strict premise).
    * IIA: every pair ``t, s >= 1`` against ``partner``, which defaults
      to a rescaled variant of ``p``.
    """
    agg = _memoized(agg)
    horizon = p.horizon
    tc = all(check_time_consistency(agg, p, t, rel_tol) for t in range(horizon - 1))
    m = p.matrix()
    pareto = True
    for t in range(horizon + 1):
        for s in range(horizon + 1):
            if t == s:
                continue
            y = float(np.min(m[:, t] / m[:, s]))
            pareto &= check_pareto_dated(agg, p, t, s, 1.0, y)
            pareto &= check_pareto_dated(agg, p, t, s, 1.0, y * (1.0 - 1e-6))
    if partner is None:
        partner = rescaled_variant(p, np.linspace(0.9, 0.5, p.size))
    iia = all(
        check_iia(agg, p, partner, t, s, rel_tol)
        for t in range(1, horizon + 1)
        for s in range(1, horizon + 1)
        if t != s
    )
    return AxiomReport(time_consistency=tc, pareto=bool(pareto), iia=iia)


def fit_weights(p: Profile, target: DiscountFactor) -> np.ndarray:
    """Least-squares weights with ``log target ~ sum_i eta_i log f_i``.

    A diagnostic only: weights are constrained to sum to one but not to
    be positive, and a good fit says nothing about the axioms.
    """
    if target.horizon != p.horizon:
        raise HorizonMismatch("target and profile horizons differ")
    logs = np.log(p.matrix())[:, 1:].T
    rhs = np.log(normalize(target).values)[1:]
    if p.size == 1:
        return np.ones(1)
    # Eliminate the sum-to-one constraint by expressing eta_m = 1 - sum of the rest.
    design = logs[:, :-1] - logs[:, [-1]]
    partial, *_ = np.linalg.lstsq(design, rhs - logs[:, -1], rcond=None)
    return np.append(partial, 1.0 - partial.sum())
