"""Extensive-form LCL games: explicit trees, lumped round states and solvers."""

from .lcl import LclDynamics, LclGame, RoundState, build_lcl_game
from .profiles import (
    Component,
    PerturbationSpec,
    ProfileError,
    RandomComponent,
    RoundFunction,
    Spliced,
    Table,
    Truncated,
    Uniform,
    induce_to_full,
    is_markov,
    profile_from_json,
    profile_to_json,
)
from .solve import (
    BestResponse,
    GapReport,
    MetricReport,
    ModeError,
    PayoffReport,
    SearchResult,
    Stationary,
    best_response,
    equilibrium_gap,
    expected_payoff,
    outcome_metric,
    perturbed_equilibrium_search,
    profile_metric,
    pure_component,
    reach_probabilities,
    realization_probability,
)
from .tree import (
    CHANCE,
    GameTree,
    InfoView,
    StructureWitness,
    TreeError,
    check_perfect_recall,
    check_round_coherence,
    check_well_rounded,
    enumerate_pure_strategies,
    round_of,
)
