"""Negative log-likelihood with elastic-net regularization, trained with
orthant-wise limited-memory quasi-Newton (OWL-QN).

The smooth part of the objective is

    sum_i [log Z(x_i) - score(x_i, y_i)] + c2 * ||w||^2

and the optimizer adds ``c1 * ||w||_1`` on top. ``w`` is the unary weight
matrix (F x L) flattened row-major followed by the transition matrix (L x L).
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from ..exceptions import DivergedOptimization, EmptyDataset, InvalidConfig, NonFiniteValue
from . import inference
from .features import FeatureTemplateSet, extract_features
from .model import CrfModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    c1: float = 0.1
    c2: float = 1e-3
    max_iterations: int = 100
    lbfgs_memory: int = 6
    convergence_tol: float = 1e-5
    min_feature_count: int = 1

    def __post_init__(self):
        if self.c1 < 0 or self.c2 < 0:
            raise InvalidConfig("c1 and c2 must be non-negative")
        if self.max_iterations < 1:
            raise InvalidConfig("max_iterations must be at least 1")
        if self.lbfgs_memory < 1:
            raise InvalidConfig("lbfgs_memory must be at least 1")
        if self.min_feature_count < 1:
            raise InvalidConfig("min_feature_count must be at least 1")

    @classmethod
    def from_file(cls, path) -> "TrainConfig":
        """``key = value`` lines naming any of the fields; '#' starts a comment."""
        types = {"c1": float, "c2": float, "max_iterations": int, "lbfgs_memory": int,
                 "convergence_tol": float, "min_feature_count": int}
        kw = {}
        for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = (x.strip() for x in line.partition("="))
            if not sep or key not in types:
                raise InvalidConfig(f"{path}:{lineno}: expected one of {sorted(types)} = value")
            try:
                kw[key] = types[key](value)
            except ValueError:
                raise InvalidConfig(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
        return cls(**kw)


class TrainingData:
    """Sequences compiled against a fixed feature index and label set.

    Holds a sparse (tokens x features) indicator matrix, gold label ids and
    the token rows of every sequence grouped by length, so that
    forward-backward runs over whole length buckets at once.
    """

    def __init__(self, sequences, tags, labels: Sequence[str], feature_index: dict,
                 templates: FeatureTemplateSet, features=None):
        self.labels = tuple(labels)
        self.feature_index = feature_index
        self.templates = templates
        lab_idx = {lab: i for i, lab in enumerate(self.labels)}
        rows, cols = [], []
        gold = []
        lengths = []
        n = 0
        if features is None:
            features = position_features(sequences, templates)
        for sent, ys, sent_feats in zip(sequences, tags, features):
            T = len(sent)
            if T == 0:
                continue
            if len(ys) != T:
                raise ValueError("a tag sequence differs in length from its sentence")
            for t in range(T):
                for f in sent_feats[t]:
                    j = feature_index.get(f)
                    if j is not None:
                        rows.append(n + t)
                        cols.append(j)
            gold.extend(lab_idx[y] for y in ys)
            lengths.append(T)
            n += T
        F, L = len(feature_index), len(self.labels)
        self.n_tokens = n
        self.n_features = F
        self.n_labels = L
        self.X = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, F))
        self.X.sum_duplicates()
        self.XT = self.X.T.tocsr()
        self.gold = np.asarray(gold, dtype=np.intp)
        self.lengths = lengths
        starts = np.cumsum([0] + lengths[:-1]) if lengths else np.zeros(0, dtype=int)
        self.buckets = {}
        for s, T in zip(starts, lengths):
            self.buckets.setdefault(T, []).append(s)
        self.buckets = {T: np.asarray(s)[:, None] + np.arange(T) for T, s in sorted(self.buckets.items())}
        # empirical feature and transition counts
        Y = np.zeros((n, L))
        if n:
            Y[np.arange(n), self.gold] = 1.0
        self.emp_unary = np.asarray(self.XT @ Y)
        self.emp_trans = np.zeros((L, L))
        pos = 0
        for T in lengths:
            g = self.gold[pos:pos + T]
            np.add.at(self.emp_trans, (g[:-1], g[1:]), 1.0)
            pos += T

    @property
    def n_weights(self) -> int:
        return self.n_features * self.n_labels + self.n_labels ** 2

    def split(self, w):
        F, L = self.n_features, self.n_labels
        return w[:F * L].reshape(F, L), w[F * L:].reshape(L, L)


def position_features(sequences, templates: FeatureTemplateSet) -> list:
    """Per sentence, per position feature-string lists."""
    return [[extract_features(sent, t, templates) for t in range(len(sent))]
            for sent in sequences]


def harvest_features(features, min_count: int = 1) -> dict:
    """Feature strings seen at least ``min_count`` times, indexed by first occurrence.

    ``features`` is the output of :func:`position_features`.
    """
    counts = Counter()
    for sent in features:
        for fs in sent:
            counts.update(fs)
    kept = [f for f, c in counts.items() if c >= min_count]
    return {f: i for i, f in enumerate(kept)}


def label_set(tags) -> tuple:
    """'O' first, then every other tag sorted by entity label and B before I."""
    seen = {t for ys in tags for t in ys}
    seen.discard("O")
    rest = sorted(seen, key=lambda t: (t[2:], t[:1]))
    return ("O",) + tuple(rest)


def objective_and_gradient(weights, data: TrainingData, c2: float):
    """Smooth objective value and gradient (the L1 term is left to the optimizer)."""
    w = np.asarray(weights, dtype=float)
    value = c2 * float(w @ w)
    grad = 2.0 * c2 * w
    if data.n_tokens == 0:
        return value, grad
    W, A = data.split(w)
    U_all = np.asarray(data.X @ W)
    P_all = np.empty_like(U_all)
    exp_trans = np.zeros_like(A)
    log_z_sum = 0.0
    for T, rows in data.buckets.items():
        U = U_all[rows]
        alpha, beta, log_z, marg = inference.forward_backward_batch(U, A)
        log_z_sum += float(log_z.sum())
        P_all[rows] = marg
        exp_trans += inference.pairwise_expectations(U, A, alpha, beta, log_z)
    gold_score = float(U_all[np.arange(data.n_tokens), data.gold].sum()) + float((A * data.emp_trans).sum())
    value += log_z_sum - gold_score
    gW = np.asarray(data.XT @ P_all) - data.emp_unary
    gA = exp_trans - data.emp_trans
    grad[:W.size] += gW.ravel()
    grad[W.size:] += gA.ravel()
    if not (np.isfinite(value) and np.all(np.isfinite(grad))):
        raise NonFiniteValue("objective or gradient is not finite")
    return value, grad


# ---------------------------------------------------------------------------
# OWL-QN
# ---------------------------------------------------------------------------

@dataclass
class OptimizeResult:
    x: np.ndarray
    fun: float
    n_iter: int
    n_evals: int
    history: list = field(default_factory=list)
    stop_reason: str = ""


def _pseudo_gradient(x, g, c1):
    if c1 == 0:
        return g.copy()
    pg = np.where(x > 0, g + c1, np.where(x < 0, g - c1, 0.0))
    zero = x == 0
    right = g + c1
    left = g - c1
    pg = np.where(zero & (right < 0), right, pg)
    pg = np.where(zero & (left > 0), left, pg)
    return pg


def owlqn(fun: Callable, x0, c1: float = 0.0, memory: int = 6, max_iter: int = 100,
          tol: float = 1e-5, callback: Optional[Callable] = None,
          max_linesearch: int = 40) -> OptimizeResult:
    """Minimize ``fun(x) + c1 * ||x||_1`` where ``fun`` returns (value, gradient).

    Follows Andrew and Gao (2007): the search direction is the L-BFGS
    two-loop product applied to the pseudo-gradient, constrained to the
    orthant of steepest descent; trial points are projected back onto that
    orthant and accepted by a backtracking Armijo test on the full objective.
    ``history`` holds the full objective after every accepted iteration.
    """
    x = np.array(x0, dtype=float)
    f, g = fun(x)
    n_evals = 1
    F = f + c1 * np.abs(x).sum()
    if not (np.isfinite(F) and np.all(np.isfinite(g))):
        raise DivergedOptimization("objective is non-finite at the starting point")
    history = [F]
    s_list, y_list = [], []
    reason = "max_iterations"
    it = 0
    while it < max_iter:
        pg = _pseudo_gradient(x, g, c1)
        pg_norm = np.linalg.norm(pg)
        if pg_norm <= 1e-10:
            reason = "gradient"
            break
        # two-loop recursion
        q = -pg
        alphas = []
        for s, y in zip(reversed(s_list), reversed(y_list)):
            rho = 1.0 / (y @ s)
            a = rho * (s @ q)
            alphas.append((rho, a))
            q = q - a * y
        if s_list:
            q *= (s_list[-1] @ y_list[-1]) / (y_list[-1] @ y_list[-1])
        for (s, y), (rho, a) in zip(zip(s_list, y_list), reversed(alphas)):
            b = rho * (y @ q)
            q = q + (a - b) * s
        d = q
        if c1 > 0:
            d = np.where(d * pg < 0, d, 0.0)
        if d @ pg >= 0:
            # not a descent direction: restart from steepest descent
            s_list.clear()
            y_list.clear()
            d = -pg
        orthant = np.where(x != 0, np.sign(x), -np.sign(pg))
        step = 1.0 / pg_norm if it == 0 and not s_list else 1.0
        accepted = False
        for _ in range(max_linesearch):
            x_new = x + step * d
            if c1 > 0:
                x_new = np.where(np.sign(x_new) == orthant, x_new, 0.0)
            f_new, g_new = fun(x_new)
            n_evals += 1
            F_new = f_new + c1 * np.abs(x_new).sum()
            if not np.isfinite(F_new):
                step *= 0.5
                continue
            if F_new <= F + 1e-4 * (pg @ (x_new - x)):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            if s_list:
                # retry once from a steepest-descent direction
                s_list.clear()
                y_list.clear()
                continue
            if not np.isfinite(F):
                raise DivergedOptimization("objective became non-finite")
            reason = "line_search"
            logger.info("line search failed at iteration %d; stopping", it + 1)
            break
        s = x_new - x
        y = g_new - g
        if s @ y > 1e-12:
            s_list.append(s)
            y_list.append(y)
            if len(s_list) > memory:
                s_list.pop(0)
                y_list.pop(0)
        if F_new > F:
            raise DivergedOptimization(f"objective increased from {F} to {F_new}")
        rel = (F - F_new) / max(abs(F_new), 1.0)
        x, f, g, F = x_new, f_new, g_new, F_new
        it += 1
        history.append(F)
        if callback is not None:
            callback(it, F, x)
        if rel < tol:
            reason = "converged"
            break
    return OptimizeResult(x, F, it, n_evals, history, reason)


@dataclass
class TrainResult:
    model: CrfModel
    history: list
    n_iter: int
    stop_reason: str


def train(sequences, tags, config: TrainConfig = TrainConfig(),
          templates: FeatureTemplateSet = FeatureTemplateSet(),
          callback: Optional[Callable] = None) -> TrainResult:
    """Fit a CRF on tokenized sentences and their BIO tag sequences."""
    pairs = [(s, t) for s, t in zip(sequences, tags) if len(s)]
    if not pairs:
        raise EmptyDataset("no non-empty training sequences")
    sequences = [p[0] for p in pairs]
    tags = [p[1] for p in pairs]
    labels = label_set(tags)
    feats = position_features(sequences, templates)
    feature_index = harvest_features(feats, config.min_feature_count)
    data = TrainingData(sequences, tags, labels, feature_index, templates, features=feats)
    logger.info("training on %d sequences, %d tokens, %d features, %d labels",
                len(sequences), data.n_tokens, data.n_features, data.n_labels)

    def fun(w):
        return objective_and_gradient(w, data, config.c2)

    def log_iter(it, value, x):
        logger.info("iter %3d  objective %.6f  nonzero %d", it, value, int(np.count_nonzero(x)))
        if callback is not None:
            callback(it, value, x)

    res = owlqn(fun, np.zeros(data.n_weights), c1=config.c1, memory=config.lbfgs_memory,
                max_iter=config.max_iterations, tol=config.convergence_tol, callback=log_iter)
    W, A = data.split(res.x)
    model = CrfModel(labels, feature_index, W, A, templates)
    return TrainResult(model, res.history, res.n_iter, res.stop_reason)
