"""Robust estimation of a discrete distribution from batches of samples,
a fraction of which may be adversarial."""

from .adversary import (
    Dataset,
    GoodBatchSpec,
    LowerBoundInstance,
    assemble_dataset,
    generate_adversarial_batches,
    lower_bound_instance,
    make_rng,
    sample_good_batches,
)
from .core import tensor_power, tv_distance
from .distset import dist_set, learn_tensor, select_rank1
from .harness import ExperimentConfig, TrialRecord, empirical_baseline, run_experiment
from .lp import LPProblem, lp_feasible, lp_minimize
from .subsetlp import binomial_est, learn_subset_lp
from .verify import run_lemma_checks

__all__ = [
    "Dataset", "GoodBatchSpec", "LowerBoundInstance", "assemble_dataset",
    "generate_adversarial_batches", "lower_bound_instance", "make_rng", "sample_good_batches",
    "tensor_power", "tv_distance", "dist_set", "learn_tensor", "select_rank1",
    "ExperimentConfig", "TrialRecord", "empirical_baseline", "run_experiment",
    "LPProblem", "lp_feasible", "lp_minimize", "binomial_est", "learn_subset_lp",
    "run_lemma_checks",
]
