"""Input validation shared by the estimators."""

from __future__ import annotations

from collections.abc import Sequence as _Seq

from sklearn.exceptions import NotFittedError

from .corpus import AnnotatedRecord
from .labels import NormalizedLabel, as_label
from .tokenization import Sentence, Token, pos_tag, word_shape


def check_sentence(sentence) -> tuple:
    """Coerce one sentence into a tuple of POS-tagged :class:`Token` objects.

    Accepts a :class:`Sentence`, a sequence of tokens, or a sequence of plain
    strings (offsets are then synthesized as if the words were joined by
    single spaces).
    """
    if isinstance(sentence, Sentence):
        toks = sentence.tokens
    elif isinstance(sentence, str):
        raise TypeError("a sentence must be a sequence of tokens, not a string")
    else:
        toks = tuple(sentence)
    if not toks:
        return ()
    if all(isinstance(t, Token) for t in toks):
        if all(t.pos is not None for t in toks):
            return tuple(toks)
        tags = pos_tag(toks)
        return tuple(Token(t.text, t.start, t.end, t.shape or word_shape(t.text), p)
                     for t, p in zip(toks, tags))
    if all(isinstance(t, str) for t in toks):
        out = []
        pos = 0
        for w, p in zip(toks, pos_tag(toks)):
            if not w:
                raise ValueError("empty token string")
            out.append(Token(w, pos, pos + len(w), word_shape(w), p))
            pos += len(w) + 1
        return tuple(out)
    raise TypeError("tokens must be all Token objects or all strings")


def check_sequences(X, y=None):
    """Validate a batch of sentences and, optionally, their tag sequences."""
    if isinstance(X, (str, bytes)) or not isinstance(X, (_Seq, list, tuple)):
        X = list(X)
    sents = [check_sentence(s) for s in X]
    if y is None:
        return sents
    y = [list(t) for t in y]
    if len(y) != len(sents):
        raise ValueError(f"X has {len(sents)} sentences but y has {len(y)} tag sequences")
    for i, (s, t) in enumerate(zip(sents, y)):
        if len(s) != len(t):
            raise ValueError(f"sentence {i}: {len(s)} tokens but {len(t)} tags")
        for tag in t:
            if tag != "O" and not (tag[:2] in ("B-", "I-") and len(tag) > 2):
                raise ValueError(f"sentence {i}: {tag!r} is not a BIO tag")
    return sents, y


def check_records(records) -> list:
    records = list(records)
    for r in records:
        if not isinstance(r, AnnotatedRecord):
            raise TypeError(f"expected AnnotatedRecord, got {type(r).__name__}")
    return records


def check_texts(texts) -> list:
    if isinstance(texts, str):
        raise TypeError("expected an iterable of documents, got a single string")
    out = list(texts)
    for t in out:
        if not isinstance(t, str):
            raise TypeError(f"expected str documents, got {type(t).__name__}")
    return out


def check_labels(labels) -> frozenset:
    out = frozenset(as_label(x) for x in labels)
    if NormalizedLabel.O in out:
        raise ValueError("O cannot be an enabled label")
    return out


def check_is_fitted(estimator, attribute: str = "model_"):
    if getattr(estimator, attribute, None) is None:
        raise NotFittedError(f"{type(estimator).__name__} is not fitted yet; call fit first")
