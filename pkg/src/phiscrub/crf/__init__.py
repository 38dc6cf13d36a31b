"""Linear-chain conditional random field tagger."""

from .estimator import CRFTagger
from .features import FeatureTemplateSet, extract_features
from .inference import log_partition, marginals, sequence_score, viterbi
from .model import CrfModel
from .training import (TrainConfig, TrainingData, objective_and_gradient, owlqn,
                       train)

__all__ = [
    "CRFTagger", "CrfModel", "FeatureTemplateSet", "TrainConfig", "TrainingData",
    "extract_features", "log_partition", "marginals", "objective_and_gradient",
    "owlqn", "sequence_score", "train", "viterbi",
]
