"""Trained CRF parameters plus decoding and a line-based file format.

File layout (UTF-8, one record per line)::

    phiscrub-crf <format version>
    templates <comma-separated template ids> <radius>
    labels <L>
    <label>                      x L, in index order
    features <F>
    <JSON string>                x F, feature string for index 0..F-1
    unary <nnz>
    <feature index> <label index> <weight>   x nnz, zero weights omitted
    transition
    <L weights separated by spaces>          x L, row i = previous label i
    end

Weights are written with ``repr`` so loading reproduces them bit for bit.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Sequence

import numpy as np

from ..exceptions import InvalidLabel, ModelFormatError
from . import inference
from .features import FeatureTemplateSet, _pos_of, extract_features

FORMAT_VERSION = 1
MAGIC = "phiscrub-crf"
# per-token decode cache entries before the cache is reset
_CACHE_LIMIT = 200_000


class CrfModel:
    """Immutable label set, feature index and weights of a trained tagger."""

    def __init__(self, labels: Sequence[str], feature_index: dict, unary_weights,
                 transition_weights, templates: FeatureTemplateSet = FeatureTemplateSet()):
        self.labels = tuple(labels)
        self.feature_index = dict(feature_index)
        L, F = len(self.labels), len(self.feature_index)
        unary = np.array(unary_weights, dtype=float).reshape(F, L)
        trans = np.array(transition_weights, dtype=float).reshape(L, L)
        if sorted(self.feature_index.values()) != list(range(F)):
            raise ValueError("feature_index must map onto 0..F-1")
        if not (np.all(np.isfinite(unary)) and np.all(np.isfinite(trans))):
            raise ValueError("weights must be finite")
        unary.setflags(write=False)
        trans.setflags(write=False)
        self.unary_weights = unary
        self.transition_weights = trans
        self.templates = templates
        self._label_index = {lab: i for i, lab in enumerate(self.labels)}
        self._cache = {}
        self._cache_lock = threading.Lock()
        self._position_rows()

    def __repr__(self):
        return (f"CrfModel(labels={len(self.labels)}, features={len(self.feature_index)}, "
                f"templates={self.templates.name!r})")

    @property
    def n_labels(self) -> int:
        return len(self.labels)

    @property
    def n_features(self) -> int:
        return len(self.feature_index)

    def label_ids(self, tags: Sequence[str]) -> list:
        try:
            return [self._label_index[t] for t in tags]
        except KeyError as exc:
            raise InvalidLabel(f"label {exc.args[0]!r} is not known to the model") from None

    def feature_ids(self, sentence, t: int) -> list:
        idx = self.feature_index
        return [idx[f] for f in extract_features(sentence, t, self.templates) if f in idx]

    # -- potentials -------------------------------------------------------

    def log_potentials(self, sentence):
        """Unary (T, L) and transition (L, L) log-potentials for one sentence."""
        T = len(sentence)
        unary = np.zeros((T, self.n_labels))
        W = self.unary_weights
        for t in range(T):
            ids = self.feature_ids(sentence, t)
            if ids:
                unary[t] = W[ids].sum(axis=0)
        return unary, np.array(self.transition_weights)

    def _position_rows(self):
        L = self.n_labels
        W = self.unary_weights
        idx = self.feature_index

        def row(name):
            i = idx.get(name)
            return W[i].copy() if i is not None else np.zeros(L)

        self._bias = row("bias") if "bias" in self.templates.templates else np.zeros(L)
        use = "bos_eos" in self.templates.templates
        self._bos = row("BOS") if use else np.zeros(L)
        self._eos = row("EOS") if use else np.zeros(L)

    def _token_block(self, text: str, pos: str):
        key = (text, pos)
        block = self._cache.get(key)
        if block is not None:
            return block
        r = self.templates.radius
        W = self.unary_weights
        idx = self.feature_index
        block = np.zeros((2 * r + 1, self.n_labels))
        for d in range(-r, r + 1):
            ids = [idx[f] for f in self.templates.token_features(text, pos, d) if f in idx]
            if ids:
                block[d + r] = W[ids].sum(axis=0)
        with self._cache_lock:
            if len(self._cache) >= _CACHE_LIMIT:
                self._cache = {}
            self._cache[key] = block
        return block

    def batch_unary(self, sentences):
        """Unary potentials for many sentences at once, stacked as (n_tokens, L).

        Same values as :meth:`log_potentials` (up to summation order); per-token
        contributions are memoized by (text, POS).
        """
        lengths = [len(s) for s in sentences]
        n = sum(lengths)
        L = self.n_labels
        if n == 0:
            return np.zeros((0, L)), lengths
        blocks = np.stack([self._token_block(tok.text, _pos_of(tok))
                           for s in sentences for tok in s])
        sid = np.repeat(np.arange(len(sentences)), lengths)
        unary = np.broadcast_to(self._bias, (n, L)).copy()
        r = self.templates.radius
        unary += blocks[:, r]
        for d in range(1, r + 1):
            if d >= n:
                break
            same = sid[d:] == sid[:-d]
            # token i+d seen from centre i (offset +d)
            unary[:-d][same] += blocks[d:, r + d][same]
            # token i seen from centre i+d (offset -d)
            unary[d:][same] += blocks[:-d, r - d][same]
        starts = np.cumsum([0] + lengths[:-1])
        nonempty = np.array(lengths) > 0
        unary[starts[nonempty]] += self._bos
        ends = starts + np.array(lengths) - 1
        unary[ends[nonempty]] += self._eos
        return unary, lengths

    # -- decoding -----------------------------------------------------------

    def decode(self, sentences) -> list:
        """Viterbi label indices for each sentence, batched by length."""
        unary, lengths = self.batch_unary(sentences)
        out = [None] * len(sentences)
        starts = np.cumsum([0] + lengths[:-1]) if lengths else []
        by_len = {}
        for i, T in enumerate(lengths):
            if T == 0:
                out[i] = []
            else:
                by_len.setdefault(T, []).append(i)
        trans = self.transition_weights
        for T, members in by_len.items():
            rows = np.asarray([starts[i] for i in members])[:, None] + np.arange(T)
            paths, _ = inference.viterbi_batch(unary[rows], trans)
            for i, p in zip(members, paths):
                out[i] = p
        return out

    def decode_tags(self, sentences) -> list:
        labels = self.labels
        return [[labels[j] for j in path] for path in self.decode(sentences)]

    # -- persistence --------------------------------------------------------

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            self.write(fh)

    def write(self, fh) -> None:
        fh.write(f"{MAGIC} {FORMAT_VERSION}\n")
        fh.write(f"templates {','.join(self.templates.templates)} {self.templates.radius}\n")
        fh.write(f"labels {self.n_labels}\n")
        for lab in self.labels:
            fh.write(lab + "\n")
        fh.write(f"features {self.n_features}\n")
        inv = sorted(self.feature_index.items(), key=lambda kv: kv[1])
        for feat, _ in inv:
            fh.write(json.dumps(feat, ensure_ascii=False) + "\n")
        fi, li = np.nonzero(self.unary_weights)
        fh.write(f"unary {len(fi)}\n")
        W = self.unary_weights
        for f, lab in zip(fi.tolist(), li.tolist()):
            fh.write(f"{f} {lab} {float(W[f, lab])!r}\n")
        fh.write("transition\n")
        for row in self.transition_weights:
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")
        fh.write("end\n")

    @classmethod
    def load(cls, path) -> "CrfModel":
        try:
            lines = Path(path).read_text(encoding="utf-8").split("\n")
        except UnicodeDecodeError as exc:
            raise ModelFormatError(f"{path}: not UTF-8 ({exc})") from None
        return cls.from_lines(lines, str(path))

    @classmethod
    def from_lines(cls, lines, where="<model>") -> "CrfModel":
        it = iter(lines)

        def take(prefix=None):
            try:
                line = next(it)
            except StopIteration:
                raise ModelFormatError(f"{where}: truncated model file") from None
            if prefix is not None:
                head, _, rest = line.partition(" ")
                if head != prefix:
                    raise ModelFormatError(f"{where}: expected {prefix!r}, got {line[:40]!r}")
                return rest
            return line

        try:
            version = take(MAGIC)
            if int(version) != FORMAT_VERSION:
                raise ModelFormatError(f"{where}: unsupported format version {version}")
            tpl, radius = take("templates").rsplit(" ", 1)
            templates = FeatureTemplateSet(tuple(x for x in tpl.split(",") if x), int(radius))
            L = int(take("labels"))
            labels = [take() for _ in range(L)]
            F = int(take("features"))
            feats = {json.loads(take()): i for i in range(F)}
            if len(feats) != F:
                raise ModelFormatError(f"{where}: duplicate feature strings")
            nnz = int(take("unary"))
            W = np.zeros((F, L))
            for _ in range(nnz):
                f, lab, w = take().split(" ")
                W[int(f), int(lab)] = float(w)
            if take() != "transition":
                raise ModelFormatError(f"{where}: missing transition block")
            A = np.array([[float(x) for x in take().split(" ")] for _ in range(L)]).reshape(L, L)
            if take() != "end":
                raise ModelFormatError(f"{where}: missing end marker")
        except ModelFormatError:
            raise
        except (ValueError, IndexError, json.JSONDecodeError) as exc:
            raise ModelFormatError(f"{where}: {exc}") from None
        return cls(labels, feats, W, A, templates)

    def equals(self, other: "CrfModel") -> bool:
        return (self.labels == other.labels and self.feature_index == other.feature_index
                and self.templates == other.templates
                and np.array_equal(self.unary_weights, other.unary_weights)
                and np.array_equal(self.transition_weights, other.transition_weights))
