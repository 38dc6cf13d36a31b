"""Independent reference implementations used only by the tests."""

import itertools
import math

import numpy as np


def brute_scores(unary, trans):
    """Score of every label sequence, by explicit enumeration in pure Python."""
    T, L = len(unary), len(unary[0])
    out = {}
    for path in itertools.product(range(L), repeat=T):
        s = float(unary[0][path[0]])
        for t in range(1, T):
            s = s + float(trans[path[t - 1]][path[t]]) + float(unary[t][path[t]])
        out[path] = s
    return out


def brute_log_partition(unary, trans):
    scores = list(brute_scores(unary, trans).values())
    m = max(scores)
    return m + math.log(math.fsum(math.exp(s - m) for s in scores))


def brute_marginals(unary, trans):
    scores = brute_scores(unary, trans)
    logz = brute_log_partition(unary, trans)
    T, L = len(unary), len(unary[0])
    marg = [[0.0] * L for _ in range(T)]
    for path, s in scores.items():
        p = math.exp(s - logz)
        for t, y in enumerate(path):
            marg[t][y] += p
    return marg


def naive_replace(text, spans, placeholder_of):
    """Right-to-left splice; the obvious way to apply replacements."""
    out = text
    for sp in sorted(spans, key=lambda s: s.start, reverse=True):
        out = out[:sp.start] + placeholder_of(sp.label) + out[sp.end:]
    return out


def naive_entity_counts(gold, pred):
    """EXACT-mode (tp, fp, fn) via set algebra."""
    g = {(s.start, s.end, s.label) for s in gold}
    p = {(s.start, s.end, s.label) for s in pred}
    return len(g & p), len(p - g), len(g - p)



def extended_objective(sequences, tags, labels, feature_index, templates, c2):
    """Returns f(W, A): negative log-likelihood plus c2*||w||^2 computed from
    dense indicator features in extended precision (numpy longdouble)."""
    from phiscrub.crf import extract_features

    ld = np.longdouble
    lab = {y: i for i, y in enumerate(labels)}
    dense = []
    for sent, ys in zip(sequences, tags):
        X = np.zeros((len(sent), len(feature_index)), dtype=ld)
        for t in range(len(sent)):
            for f in extract_features(sent, t, templates):
                if f in feature_index:
                    X[t, feature_index[f]] = 1
        dense.append((X, [lab[v] for v in ys]))

    def f(W, A):
        W, A = np.asarray(W, dtype=ld), np.asarray(A, dtype=ld)
        expA = np.exp(A)
        total = ld(0)
        for X, y in dense:
            U = X @ W
            alpha = U[0]
            for t in range(1, len(y)):
                m = alpha.max()
                alpha = m + np.log(np.exp(alpha - m) @ expA) + U[t]
            m = alpha.max()
            logz = m + np.log(np.exp(alpha - m).sum())
            gold = U[0, y[0]] + sum(A[y[t - 1], y[t]] + U[t, y[t]] for t in range(1, len(y)))
            total += logz - gold
        return total + ld(c2) * ((W * W).sum() + (A * A).sum())

    return f
