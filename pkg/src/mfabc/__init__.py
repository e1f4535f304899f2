"""Multifidelity approximate Bayesian computation with early accept/reject.

A cheap low-fidelity simulation decides most parameters; the expensive
high-fidelity model is run only with probability ``eta1`` (after a
low-fidelity accept) or ``eta2`` (after a reject), and the weights are
corrected so the ABC estimates stay unbiased.

Modules:
    reaction_network: reaction networks, priors and the bundled models.
    stochastic_sim: exact, tau-leap, coupled and hybrid simulators.
    abc_core: distances, weights, ESS and weighted samples.
    mf_tuning: efficiency objective, optimal probabilities, burn-in tallies.
    problems: prior, observed data and simulator pairs per model.
    samplers: rejection, fixed-probability and adaptive campaigns.
    experiments: benchmark tables and replayed studies.
    cli: the ``mfabc`` command.
"""

__version__ = "0.1.0"

from .abc_core import (Case, DistanceSpec, EstimationError, WeightedSample, WeightRecord,
                       distance, ess, estimate, weight_early_decision, weight_early_rejection,
                       weight_multifidelity, weight_plain)
from .mf_tuning import (BurnInTally, ContinuationProbs, NotReady, PerfEstimates, optimal_eta,
                        optimal_eta_constrained, phi)
from .problems import BernoulliToy, RepressilatorProblem, ViralProblem
from .reaction_network import ReactionNetwork, repressilator_model, viral_model
from .samplers import (AdaptiveEta, CampaignResult, CampaignSpec, FixedEta, OptimalEta, StopRule,
                       run_adaptive, run_multifidelity, run_rejection)
from .stochastic_sim import (coupled_high_fi, hybrid_viral_simulate, map_to_exact, ssa_simulate,
                             tau_leap_simulate)

__all__ = [
    "AdaptiveEta", "BernoulliToy", "BurnInTally", "CampaignResult", "CampaignSpec", "Case",
    "ContinuationProbs", "DistanceSpec", "EstimationError", "FixedEta", "NotReady", "OptimalEta",
    "PerfEstimates", "ReactionNetwork", "RepressilatorProblem", "StopRule", "ViralProblem",
    "WeightRecord", "WeightedSample", "coupled_high_fi", "distance", "ess", "estimate",
    "hybrid_viral_simulate", "map_to_exact", "optimal_eta", "optimal_eta_constrained", "phi",
    "repressilator_model", "run_adaptive", "run_multifidelity", "run_rejection",
    "ssa_simulate", "tau_leap_simulate", "viral_model", "weight_early_decision",
    "weight_early_rejection", "weight_multifidelity", "weight_plain",
]
