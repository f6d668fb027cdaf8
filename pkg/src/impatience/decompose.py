"""Geometric-mean decomposition of decreasing-impatience factors.

Any log-convex discount factor with tail ratio ``gamma < 1`` factors as

    f(t) = f(0) * prod_c (beta_c ** min(s_c, t) * gamma ** t) ** eta_c

with finitely many generalized beta-delta components. The route goes
through ``g(t) = gamma**-t f(t)`` and the concave sequence
``h(t) = log g(0) - log g(t)``, which is expanded in the basis
``t -> min(s, t)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .discount import DiscountFactor, from_generalized_beta_delta, is_decreasing_impatience
from .errors import BadBoundary, InvalidInput, NotConcave, NotDecreasingImpatience, TailRatioTooCloseToOne

#: Default bound on how close the tail ratio may come to 1.
MIN_GAP = 1e-6


@dataclass(frozen=True, eq=False)
class MinBasis:
    """Weights ``alpha[s]`` of ``h(t) = sum_s alpha[s] * min(s, t)``.

    ``alpha`` has length ``T`` and is indexed by ``s = 0..T-1``; the entry
    ``alpha[0]`` multiplies ``min(0, t) = 0`` and is fixed to zero.
    """

    alpha: np.ndarray

    def __post_init__(self) -> None:
        a = np.array(self.alpha, dtype=float)
        if a.ndim != 1 or a.size < 2:
            raise InvalidInput("alpha must be a sequence of length >= 2")
        if a[0] != 0.0:
            raise InvalidInput("alpha[0] is fixed to 0")
        a.setflags(write=False)
        object.__setattr__(self, "alpha", a)

    @property
    def horizon(self) -> int:
        return self.alpha.size

    def evaluate(self) -> np.ndarray:
        """``h(t)`` for ``t = 0..T``."""
        s = np.arange(self.alpha.size)
        t = np.arange(self.horizon + 1)
        return np.minimum.outer(t, s) @ self.alpha


@dataclass(frozen=True)
class BetaDeltaComponent:
    """One generalized beta-delta factor with its geometric weight.

    ``eta`` is kept as an exact fraction so that the weights of a
    decomposition sum to one without rounding.
    """

    beta: float
    delta: float
    switch: int
    eta: Fraction

    def factor(self, horizon: int) -> DiscountFactor:
        return from_generalized_beta_delta(self.beta, self.delta, self.switch, horizon)

    def log_values(self, horizon: int) -> np.ndarray:
        t = np.arange(horizon + 1)
        return np.minimum(t, self.switch) * np.log(self.beta) + t * np.log(self.delta)


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Scale, tail ratio and components reproducing a DI factor.

    Attributes
    ----------
    scale:
        ``f(0)``.
    gamma:
        Tail ratio ``f(T) / f(T-1)``.
    components:
        Generalized beta-delta factors; their ``eta`` sum to one.
    h:
        Concave sequence ``log g(0) - log g(t)``.
    g:
        ``gamma**-t f(t)``.
    basis:
        The ``min(s, t)`` expansion of ``h``.
    """

    scale: float
    gamma: float
    components: tuple[BetaDeltaComponent, ...]
    h: np.ndarray
    g: np.ndarray
    basis: MinBasis

    @property
    def horizon(self) -> int:
        return self.h.size - 1


def tail_ratio(f: DiscountFactor, rel_tol: float = 1e-10) -> float:
    """``f(T) / f(T-1)``, the largest impatience ratio of a DI factor."""
    if not is_decreasing_impatience(f, rel_tol):
        raise NotDecreasingImpatience(
            "impatience ratios f(t+1)/f(t) are not weakly increasing; only log-convex factors decompose"
        )
    v = f.values
    return float(v[-1] / v[-2])


def min_basis_weights(h, tol: float = 1e-12) -> MinBasis:
    """Expand a concave ``h`` with ``h(0) = 0`` and a flat last step.

    ``alpha[t] = -h(t+1) + 2 h(t) - h(t-1)`` for ``t = 1..T-1``. The
    tolerance is absolute and scaled by ``max(1, max|h|)``.

    Raises
    ------
    BadBoundary
        ``h(0) != 0`` or ``h(T) != h(T-1)`` beyond tolerance.
    NotConcave
        Some second difference is positive beyond tolerance.
    """
    h = np.asarray(h, dtype=float)
    if h.ndim != 1 or h.size < 3:
        raise InvalidInput("h needs at least 3 values")
    if not np.all(np.isfinite(h)):
        raise InvalidInput("h must be finite")
    eps = tol * max(1.0, float(np.max(np.abs(h))))
    if abs(h[0]) > eps:
        raise BadBoundary(f"h(0) = {h[0]!r}, expected 0")
    if abs(h[-1] - h[-2]) > eps:
        raise BadBoundary(f"h(T) - h(T-1) = {h[-1] - h[-2]!r}, expected 0")
    alpha = np.zeros(h.size - 1)
    alpha[1:] = -h[2:] + 2.0 * h[1:-1] - h[:-2]
    bad = np.flatnonzero(alpha < -eps)
    if bad.size:
        s = int(bad[0])
        raise NotConcave(f"second difference at s={s} is {alpha[s]!r}")
    return MinBasis(alpha)


def decompose(f: DiscountFactor, min_gap: float = MIN_GAP, rel_tol: float = 1e-10) -> Decomposition:
    """Factor ``f`` into generalized beta-delta components.

    With ``K`` positive basis weights and ``K' = K + 1``, every component
    gets weight ``1/K'`` and discount ``delta = gamma``. Active weight
    ``alpha[s]`` yields a component with switch ``s`` and
    ``beta = exp(-K' alpha[s])``; one extra pure exponential closes the
    product.

    Raises
    ------
    NotDecreasingImpatience
        ``f`` is not log-convex at ``rel_tol``.
    TailRatioTooCloseToOne
        ``gamma > 1 - min_gap``.
    """
    gamma = tail_ratio(f, rel_tol)
    if gamma > 1.0 - min_gap:
        raise TailRatioTooCloseToOne(f"tail ratio {gamma!r} exceeds 1 - {min_gap:g}")
    v = f.values
    horizon = f.horizon
    t = np.arange(horizon + 1)
    log_ratios = np.log(v[1:]) - np.log(v[:-1])
    steps = np.log(gamma) - log_ratios
    steps[-1] = 0.0
    h = np.concatenate(([0.0], np.cumsum(steps)))
    g = v * np.power(gamma, -t.astype(float))

    # Log-convexity is only checked to rel_tol, so tiny negative weights are legal here.
    basis = min_basis_weights(h, tol=max(1e-12, 2.0 * rel_tol))
    alpha = np.array(basis.alpha)
    alpha[np.abs(alpha) <= 1e-13 * max(1.0, float(np.max(np.abs(h))))] = 0.0
    alpha = np.maximum(alpha, 0.0)
    basis = MinBasis(alpha)

    active = np.flatnonzero(alpha > 0)
    k_prime = active.size + 1
    eta = Fraction(1, k_prime)
    components = [
        BetaDeltaComponent(beta=float(np.exp(-k_prime * alpha[s])), delta=gamma, switch=int(s), eta=eta)
        for s in active
    ]
    components.append(BetaDeltaComponent(beta=1.0, delta=gamma, switch=1, eta=eta))
    h.setflags(write=False)
    g.setflags(write=False)
    return Decomposition(
        scale=float(v[0]),
        gamma=gamma,
        components=tuple(components),
        h=h,
        g=g,
        basis=basis,
    )


def _reconstruct_values(d: Decomposition, horizon: int) -> np.ndarray:
    t = np.arange(horizon + 1)
    values = np.full(horizon + 1, d.scale)
    for c in d.components:
        eta = float(c.eta)
        values *= np.power(c.beta, np.minimum(t, c.switch) * eta) * np.power(c.delta, t * eta)
    return values


def reconstruct(d: Decomposition, horizon: int) -> DiscountFactor:
    """``d.scale * prod_c (beta_c**min(s_c, t) * delta_c**t) ** eta_c``.

    Each power is taken as ``beta**(min(s, t) * eta)`` so that factors
    with a single component are reproduced bit for bit.
    """
    return DiscountFactor(_reconstruct_values(d, horizon))


def max_relative_error(f: DiscountFactor, d: Decomposition) -> float:
    """``max_t |reconstruct(d)(t) / f(t) - 1|``."""
    approx = _reconstruct_values(d, f.horizon)
    return float(np.max(np.abs(approx / f.values - 1.0)))
