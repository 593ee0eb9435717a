"""Evolvability-driven evolution strategies.

Trains a population distribution (isotropic Gaussian or mixture) so that
its offspring are behaviorally diverse, via score-function gradients of
variance (MaxVar) or kernel-density entropy (MaxEnt) objectives, with a
standard fitness-driven ES as the baseline.
"""

from .distributions import GaussianMixture, IsoGaussian, sample_offspring, split_population
from .envs import PointWalkerSpec, get_env, interference_behavior
from .estimators import (
    GradEstimate,
    es_gradient,
    finite_difference_check,
    maxent_gradient,
    maxent_loss,
    maxvar_gradient,
    score_function_gradient,
)
from .experiments import (
    AdaptReport,
    BimodalityMetrics,
    adapt_best_of_k,
    bimodality_metrics,
    export_heatmap,
    seed_standard_es,
    split_checkpoint,
)
from .policy import MlpSpec, ObsNormalizer, init_mlp, mlp_forward
from .rng import child_rng, mix64, splitmix64
from .runtime import EvalBatch, evaluate_population
from .theoremnet import FlipNet, build_flip_network, verify_flip
from .trainer import (
    Checkpoint,
    TrainConfig,
    init_checkpoint,
    load_checkpoint,
    save_checkpoint,
    train_generation,
    train_run,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptReport",
    "BimodalityMetrics",
    "Checkpoint",
    "EvalBatch",
    "FlipNet",
    "GaussianMixture",
    "GradEstimate",
    "IsoGaussian",
    "MlpSpec",
    "ObsNormalizer",
    "PointWalkerSpec",
    "TrainConfig",
    "adapt_best_of_k",
    "bimodality_metrics",
    "build_flip_network",
    "child_rng",
    "es_gradient",
    "evaluate_population",
    "export_heatmap",
    "finite_difference_check",
    "get_env",
    "init_checkpoint",
    "init_mlp",
    "interference_behavior",
    "load_checkpoint",
    "maxent_gradient",
    "maxent_loss",
    "maxvar_gradient",
    "mix64",
    "mlp_forward",
    "sample_offspring",
    "save_checkpoint",
    "score_function_gradient",
    "seed_standard_es",
    "split_checkpoint",
    "split_population",
    "splitmix64",
    "train_generation",
    "train_run",
    "verify_flip",
]
