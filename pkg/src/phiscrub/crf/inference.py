"""Exact inference for linear-chain CRFs over log-potentials.

``unary`` has shape (T, L) and ``trans`` (L, L) with ``trans[i, j]`` scoring
label i followed by label j. Batched variants take (N, T, L) for N
sequences of equal length.

Forward and backward recursions stay in the log domain. Each step is a
log-sum-exp over the previous label, evaluated as a max-shifted matrix
product with per-column shifts. That is exact to rounding as long as every
column of ``trans`` spans less than ``_MAX_SPREAD`` nats; wider potentials
take an explicit log-sum-exp instead.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp


_MAX_SPREAD = 600.0


def _shifted_exp(trans):
    """(exp(trans - colmax), colmax), or (None, None) when a column is too
    wide for the matrix-product path."""
    cmax = np.max(trans, axis=0)
    if np.any(cmax - np.min(trans, axis=0) >= _MAX_SPREAD):
        return None, None
    return np.exp(trans - cmax), cmax


def _log_matmul(v, exp_t, tmax, trans):
    """log(exp(v) @ exp(trans)) row-wise for v of shape (N, L)."""
    if exp_t is None:
        return logsumexp(v[:, :, None] + trans[None, :, :], axis=1)
    m = np.max(v, axis=1, keepdims=True)
    return np.log(np.exp(v - m) @ exp_t) + m + tmax


def forward_batch(unary, trans):
    """Forward log-messages ``alpha`` (N, T, L) and log-partitions (N,)."""
    N, T, L = unary.shape
    exp_t, tmax = _shifted_exp(trans)
    alpha = np.empty_like(unary)
    alpha[:, 0] = unary[:, 0]
    for t in range(1, T):
        alpha[:, t] = _log_matmul(alpha[:, t - 1], exp_t, tmax, trans) + unary[:, t]
    return alpha, logsumexp(alpha[:, -1], axis=1)


def backward_batch(unary, trans):
    """Backward log-messages ``beta`` (N, T, L); ``beta[:, -1] == 0``."""
    N, T, L = unary.shape
    trans_t = np.ascontiguousarray(trans.T)
    exp_t, tmax = _shifted_exp(trans_t)
    beta = np.zeros_like(unary)
    for t in range(T - 1, 0, -1):
        beta[:, t - 1] = _log_matmul(unary[:, t] + beta[:, t], exp_t, tmax, trans_t)
    return beta


def forward_backward_batch(unary, trans):
    """Returns (alpha, beta, log_z, unary marginals)."""
    alpha, log_z = forward_batch(unary, trans)
    beta = backward_batch(unary, trans)
    marg = np.exp(alpha + beta - log_z[:, None, None])
    return alpha, beta, log_z, marg


def pairwise_expectations(unary, trans, alpha, beta, log_z):
    """Sum over sequences and positions of P(y_{t-1}=i, y_t=j), shape (L, L)."""
    N, T, L = unary.shape
    out = np.zeros((L, L))
    if T < 2:
        return out
    tmax = float(np.max(trans))
    if tmax - float(np.min(trans)) >= _MAX_SPREAD:
        for t in range(1, T):
            s = (alpha[:, t - 1, :, None] + trans[None] + (unary[:, t] + beta[:, t])[:, None, :]
                 - log_z[:, None, None])
            out += np.exp(s).sum(axis=0)
        return out
    acc = np.zeros((L, L))
    for t in range(1, T):
        a = alpha[:, t - 1]
        b = unary[:, t] + beta[:, t]
        am = a.max(axis=1, keepdims=True)
        bm = b.max(axis=1, keepdims=True)
        w = np.exp(am[:, 0] + bm[:, 0] + tmax - log_z)
        acc += (np.exp(a - am) * w[:, None]).T @ np.exp(b - bm)
    out = acc * np.exp(trans - tmax)
    return out


def viterbi_batch(unary, trans):
    """Best label paths (N, T) and their scores (N,).

    Ties resolve to the lowest label index, both for the final label and at
    every back-pointer.
    """
    N, T, L = unary.shape
    back = np.empty((N, T, L), dtype=np.intp)
    delta = unary[:, 0].copy()
    for t in range(1, T):
        cand = delta[:, :, None] + trans[None]
        back[:, t] = np.argmax(cand, axis=1)
        delta = np.take_along_axis(cand, back[:, t][:, None, :], axis=1)[:, 0] + unary[:, t]
    paths = np.empty((N, T), dtype=np.intp)
    paths[:, -1] = np.argmax(delta, axis=1)
    scores = delta[np.arange(N), paths[:, -1]]
    for t in range(T - 1, 0, -1):
        paths[:, t - 1] = back[np.arange(N), t, paths[:, t]]
    return paths, scores


# single-sequence wrappers -------------------------------------------------
# Each accepts either (unary, trans) arrays or (model, sentence).

def _potentials(a, b):
    if hasattr(a, "log_potentials"):
        return a.log_potentials(b)
    return np.asarray(a, dtype=float), np.asarray(b, dtype=float)


def log_partition(unary, trans) -> float:
    unary, trans = _potentials(unary, trans)
    _, log_z = forward_batch(unary[None], trans)
    return float(log_z[0])


def marginals(unary, trans):
    unary, trans = _potentials(unary, trans)
    _, _, _, marg = forward_backward_batch(unary[None], trans)
    return marg[0]


def viterbi(unary, trans):
    unary, trans = _potentials(unary, trans)
    paths, scores = viterbi_batch(unary[None], trans)
    return [int(i) for i in paths[0]], float(scores[0])


def sequence_score(unary, trans, labels) -> float:
    """Score of one labeling, accumulated in the same order as :func:`viterbi`.

    With a model, ``labels`` may be tag strings.
    """
    if hasattr(unary, "log_potentials"):
        if labels and isinstance(labels[0], str):
            labels = unary.label_ids(labels)
    unary, trans = _potentials(unary, trans)
    score = unary[0, labels[0]]
    for t in range(1, len(labels)):
        score = score + trans[labels[t - 1], labels[t]] + unary[t, labels[t]]
    return float(score)
