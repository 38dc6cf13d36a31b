"""scikit-learn style wrapper around the CRF trainer and decoder."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .._validation import check_is_fitted, check_sequences
from . import inference
from .features import FeatureTemplateSet
from .model import CrfModel
from .training import TrainConfig, train


class CRFTagger(BaseEstimator):
    """Linear-chain CRF sequence tagger.

    ``X`` is a list of sentences (token lists or :class:`Sentence` objects),
    ``y`` the matching lists of BIO tags. Defaults are c1=0.1, c2=1e-3 and at
    most 100 L-BFGS iterations.

    Attributes
    ----------
    model_ : CrfModel
    classes_ : tuple of tag strings, in model label order
    objective_history_ : regularized objective after each accepted iteration
    n_iter_ : int
    """

    def __init__(self, c1=0.1, c2=1e-3, max_iterations=100, lbfgs_memory=6,
                 convergence_tol=1e-5, min_feature_count=1, templates="extended", window=2):
        self.c1 = c1
        self.c2 = c2
        self.max_iterations = max_iterations
        self.lbfgs_memory = lbfgs_memory
        self.convergence_tol = convergence_tol
        self.min_feature_count = min_feature_count
        self.templates = templates
        self.window = window

    def _template_set(self):
        if isinstance(self.templates, FeatureTemplateSet):
            return self.templates
        return FeatureTemplateSet.named(self.templates, self.window)

    def train_config(self) -> TrainConfig:
        return TrainConfig(c1=self.c1, c2=self.c2, max_iterations=self.max_iterations,
                           lbfgs_memory=self.lbfgs_memory, convergence_tol=self.convergence_tol,
                           min_feature_count=self.min_feature_count)

    def fit(self, X, y, callback=None):
        X, y = check_sequences(X, y)
        result = train(X, y, self.train_config(), self._template_set(), callback=callback)
        self.model_ = result.model
        self.classes_ = result.model.labels
        self.objective_history_ = result.history
        self.n_iter_ = result.n_iter
        self.stop_reason_ = result.stop_reason
        return self

    @classmethod
    def from_model(cls, model: CrfModel) -> "CRFTagger":
        tagger = cls(templates=model.templates, window=model.templates.radius)
        tagger.model_ = model
        tagger.classes_ = model.labels
        return tagger

    def predict(self, X) -> list:
        check_is_fitted(self)
        return self.model_.decode_tags(check_sequences(X))

    def predict_marginals(self, X) -> list:
        """Per sentence, a (T, L) array of label probabilities in ``classes_`` order."""
        check_is_fitted(self)
        out = []
        for sent in check_sequences(X):
            if not sent:
                out.append(np.zeros((0, self.model_.n_labels)))
                continue
            unary, trans = self.model_.log_potentials(sent)
            out.append(inference.marginals(unary, trans))
        return out

    def score(self, X, y) -> float:
        """Token-level accuracy."""
        X, y = check_sequences(X, y)
        pred = self.predict(X)
        total = sum(len(t) for t in y)
        if total == 0:
            return 0.0
        hits = sum(p == g for ps, gs in zip(pred, y) for p, g in zip(ps, gs))
        return hits / total
