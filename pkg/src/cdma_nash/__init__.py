"""Equilibrium power control for randomly spread CDMA in multipath fading.

The package has two halves that are meant to agree with each other:

* ``asymptotics`` and ``game`` evaluate the large-system limit, where a
  user's SINR depends on the population only through a deterministic
  profile: target SINRs beta* and beta+, equilibrium powers, and
  spectral efficiency for matched-filter, MMSE, optimum, and
  successive-cancellation receivers.
* ``channel``, ``receivers``, and ``allocation`` build finite systems,
  apply the limiting power rules to realized fading, and measure the
  SINRs those rules actually deliver.

``harness`` and ``cli`` wrap both halves in reproducible Monte-Carlo
experiments.  Hot numerical kernels run through a compiled extension
when it is available; ``BACKEND`` reports which implementation was
picked at import time.
"""
from __future__ import annotations

from cdma_nash.allocation import (DecodingOrder, FilterKind, PowerAllocation,
                                  decode_permutation, distribution_rank,
                                  encode_permutation, pa_equilibrium,
                                  pa_sic_closed, pa_sic_recursive,
                                  rank_by_energy, total_power)
from cdma_nash.asymptotics import (BetaFunction, ChannelProfile, atom_profile,
                                   beta_mf, capacity_mmse,
                                   capacity_opt_from_mmse,
                                   capacity_opt_integral, flat_profile,
                                   grid_profile, profile_from_channels,
                                   solve_beta_mmse, solve_beta_sic,
                                   stieltjes_u)
from cdma_nash.channel import (MultipathChannel, SystemRealization,
                               build_realization, dft_gains, sample_multipath,
                               sample_spreading, total_energy)
from cdma_nash.errors import (ConvergenceFailure, DegenerateChannel,
                              FeasibilityViolation, InfeasibleLoad,
                              IntegrationFailure, InvalidParameter,
                              InvalidSignal, NoEquilibrium,
                              NoSolutionInBracket, SimulationError, UsageError)
from cdma_nash.game import (EquilibriumTarget, UtilityFunction, goodput,
                            solve_beta_plus, solve_beta_star, utility)
from cdma_nash.harness import (EXPERIMENTS, RECORD_FIELDS, ExperimentConfig,
                               ExperimentRecord, emit_records, run_experiment,
                               solve_alpha_crossover)
from cdma_nash.kernels import BACKEND
from cdma_nash.receivers import (InterferenceSet, sinr_mf, sinr_mmse_approx,
                                 sinr_mmse_exact)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BetaFunction",
    "ChannelProfile",
    "ConvergenceFailure",
    "DecodingOrder",
    "DegenerateChannel",
    "EquilibriumTarget",
    "EXPERIMENTS",
    "ExperimentConfig",
    "ExperimentRecord",
    "FeasibilityViolation",
    "FilterKind",
    "InfeasibleLoad",
    "IntegrationFailure",
    "InterferenceSet",
    "InvalidParameter",
    "InvalidSignal",
    "MultipathChannel",
    "NoEquilibrium",
    "NoSolutionInBracket",
    "PowerAllocation",
    "RECORD_FIELDS",
    "SimulationError",
    "SystemRealization",
    "UsageError",
    "UtilityFunction",
    "atom_profile",
    "beta_mf",
    "build_realization",
    "capacity_mmse",
    "capacity_opt_from_mmse",
    "capacity_opt_integral",
    "decode_permutation",
    "dft_gains",
    "distribution_rank",
    "emit_records",
    "encode_permutation",
    "flat_profile",
    "goodput",
    "grid_profile",
    "pa_equilibrium",
    "pa_sic_closed",
    "pa_sic_recursive",
    "profile_from_channels",
    "rank_by_energy",
    "run_experiment",
    "sample_multipath",
    "sample_spreading",
    "sinr_mf",
    "sinr_mmse_approx",
    "sinr_mmse_exact",
    "solve_alpha_crossover",
    "solve_beta_mmse",
    "solve_beta_plus",
    "solve_beta_sic",
    "solve_beta_star",
    "stieltjes_u",
    "total_energy",
    "total_power",
    "utility",
]
