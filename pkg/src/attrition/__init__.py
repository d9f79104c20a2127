"""Reputational wars of attrition with a common center and several peripherals."""

from .bilateral import BilateralEq, ag_atom, ag_payoff, solve_bilateral
from .core import (
    ConcessionProfile,
    DegenerateBelief,
    GameParams,
    OutOfRange,
    PosteriorPath,
    Priors,
    validate,
)
from .partial import PartialObsEq, StepFailure, solve_partial_obs
from .sequential import SeqEquilibrium, seq_benchmark, seq_threshold, solve_sequential
from .simulate import SimOutcome, simulate
from .star4 import ShootingDivergence, Star4Equilibrium, solve_star4, star4_benchmark
from .trilateral import (
    CaseTag,
    QuadratureFailure,
    TriEquilibrium,
    benchmark_payoffs,
    compare_to_benchmark,
    solve_trilateral,
    vanishing_limit,
)
from .verify import DeviationReport, best_response_check, perturb_hazard

__all__ = [
    "BilateralEq", "CaseTag", "ConcessionProfile", "DegenerateBelief", "DeviationReport", "GameParams",
    "OutOfRange", "PartialObsEq", "PosteriorPath", "Priors", "QuadratureFailure", "SeqEquilibrium",
    "ShootingDivergence", "SimOutcome", "Star4Equilibrium", "StepFailure", "TriEquilibrium", "ag_atom",
    "ag_payoff", "benchmark_payoffs", "best_response_check", "compare_to_benchmark", "perturb_hazard",
    "seq_benchmark", "seq_threshold", "simulate", "solve_bilateral", "solve_partial_obs", "solve_sequential",
    "solve_star4", "solve_trilateral", "star4_benchmark", "validate", "vanishing_limit",
]
