"""Discount factors with decreasing impatience: detection, decomposition, aggregation and market equilibria."""

from .aggregate import (
    AxiomReport,
    NormalizedFactor,
    Profile,
    Weights,
    arithmetic_mean,
    check_iia,
    check_pareto_dated,
    check_time_consistency,
    constant_aggregator,
    fit_weights,
    geometric_aggregator,
    geometric_mean,
    normalize,
    run_axiom_suites,
    t_shift,
    tail_dependent_aggregator,
)
from .decompose import (
    BetaDeltaComponent,
    Decomposition,
    MinBasis,
    decompose,
    max_relative_error,
    min_basis_weights,
    reconstruct,
)
from .discount import (
    ConvexityWitness,
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
from .errors import ImpatienceError, InvalidInput, NoConvergence, PropertyFailure
from .market import (
    Allocation,
    Economy,
    EquilibriumReport,
    EquilibriumResult,
    ExponentialAgent,
    envelope_leaders,
    envelope_prices,
    join_decomposition,
    solve_equilibrium,
    supporting_lines,
    synthesize_economy,
    uniqueness_probe,
    verify_equilibrium,
)

__version__ = "0.1.0"
