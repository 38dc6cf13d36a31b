"""The scrubbing pipeline: regex and CRF recognizers, span merging and
placeholder replacement over sentence-aligned chunks.

Documents are processed by one incremental engine whether they arrive as a
string or as a byte stream, so both entry points produce identical output.
Consecutive chunks share one sentence; a span found in the shared sentence
belongs to the later chunk, which sees it with full right context.
"""

from __future__ import annotations

import codecs
from bisect import bisect_right
import json
import time
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional

from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_is_fitted, check_labels, check_records, check_texts
from .corpus import BioSequence, bio_to_spans, to_bio
from .crf import CRFTagger, CrfModel
from .exceptions import InvalidConfig, InvalidUtf8, ModelNotLoaded, OverlapError
from .labels import DEFAULT_ENABLED_LABELS, NormalizedLabel as NL, PhiSpan, Source, as_label
from .regex_phi import DisjointIntervals, PatternTable, default_pattern_table, recognize
from .tokenization import (DEFAULT_ABBREVIATIONS, Sentence, SentenceSegmenter,
                           analyze, analyze_sentence)

DEFAULT_PLACEHOLDERS = {
    NL.NAME: "PERSON",
    NL.DATE: "DATE",
    NL.PHONE: "NUMBERS",
    NL.FAX: "NUMBERS",
    NL.IDNUM: "NUMBERS",
    NL.ZIP: "NUMBERS",
    NL.EMAIL: "EMAIL",
    NL.URL: "URL",
    NL.IPADDRESS: "IPADDRESS",
    NL.ORG: "ORG",
    NL.STREET: "LOCATION",
    NL.CITY: "LOCATION",
    NL.STATE: "LOCATION",
    NL.COUNTRY: "LOCATION",
    NL.LOC_OTHER: "LOCATION",
    NL.AGE: "AGE",
    NL.PROFESSION: "PROFESSION",
}

# words the scrubber may have written itself; never tagged again
RESERVED_WORDS = frozenset(DEFAULT_PLACEHOLDERS.values()) | {"CONTACT", "ID"}

_READ_BLOCK = 1 << 16


class ReplacementMode(str, Enum):
    PLACEHOLDER = "PLACEHOLDER"
    REDACT_BLACKOUT = "REDACT_BLACKOUT"
    LABEL_TAG = "LABEL_TAG"


@dataclass(frozen=True)
class ScrubConfig:
    placeholder_map: dict = field(default_factory=lambda: dict(DEFAULT_PLACEHOLDERS))
    replacement_mode: ReplacementMode = ReplacementMode.PLACEHOLDER
    chunk_char_limit: int = 100_000
    enabled_labels: frozenset = DEFAULT_ENABLED_LABELS
    # sentences longer than this are cut at whitespace; bounds stream memory
    max_sentence_chars: int = 5_000
    abbreviations: frozenset = DEFAULT_ABBREVIATIONS
    refine_labels: bool = True

    def __post_init__(self):
        pmap = {as_label(k): v for k, v in self.placeholder_map.items()}
        for lab, ph in pmap.items():
            if not (isinstance(ph, str) and ph.isascii() and ph.isalpha() and ph.isupper()):
                raise InvalidConfig(f"placeholder for {lab} must match [A-Z]+, got {ph!r}")
        labels = check_labels(self.enabled_labels)
        missing = [lab.value for lab in labels if lab not in pmap]
        if missing:
            raise InvalidConfig(f"no placeholder for enabled labels: {', '.join(sorted(missing))}")
        if not isinstance(self.chunk_char_limit, int) or self.chunk_char_limit < 1000:
            raise InvalidConfig("chunk_char_limit must be an integer >= 1000")
        if not isinstance(self.max_sentence_chars, int) or self.max_sentence_chars < 1:
            raise InvalidConfig("max_sentence_chars must be a positive integer")
        if self.max_sentence_chars > self.chunk_char_limit:
            raise InvalidConfig("max_sentence_chars cannot exceed chunk_char_limit")
        object.__setattr__(self, "placeholder_map", pmap)
        object.__setattr__(self, "enabled_labels", labels)
        object.__setattr__(self, "replacement_mode", ReplacementMode(self.replacement_mode))
        object.__setattr__(self, "abbreviations", frozenset(self.abbreviations))

    def replacement_for(self, label: NL, surface: str) -> str:
        mode = self.replacement_mode
        if mode is ReplacementMode.PLACEHOLDER:
            return self.placeholder_map[label]
        if mode is ReplacementMode.LABEL_TAG:
            return f"[{label.value}]"
        return "█" * len(surface)


def load_placeholder_map(path) -> dict:
    """``LABEL<TAB>PLACEHOLDER`` per line, layered over the defaults."""
    out = dict(DEFAULT_PLACEHOLDERS)
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise InvalidConfig(f"{path}:{lineno}: expected LABEL<TAB>PLACEHOLDER")
        try:
            out[as_label(parts[0].strip())] = parts[1].strip()
        except ValueError:
            raise InvalidConfig(f"{path}:{lineno}: unknown label {parts[0]!r}") from None
    return out


def write_placeholder_map(pmap: dict, path) -> None:
    lines = [f"{as_label(k).value}\t{v}" for k, v in pmap.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class Replacement:
    input_start: int
    input_end: int
    output_start: int
    output_end: int
    label: NL
    placeholder: str

    def as_dict(self) -> dict:
        return {"input_start": self.input_start, "input_end": self.input_end,
                "output_start": self.output_start, "output_end": self.output_end,
                "label": self.label.value, "placeholder": self.placeholder}


@dataclass
class ScrubResult:
    scrubbed_text: str
    replacements: list
    stats: dict
    timing_ms: float

    def to_dict(self) -> dict:
        return {"scrubbed": self.scrubbed_text,
                "replacements": [r.as_dict() for r in self.replacements],
                "stats": dict(self.stats), "timing_ms": self.timing_ms}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


@dataclass
class ScrubStats:
    bytes_in: int = 0
    bytes_out: int = 0
    chars_in: int = 0
    n_sentences: int = 0
    n_chunks: int = 0
    # most spans held by a single chunk
    peak_spans: int = 0
    counts: dict = field(default_factory=dict)
    wall_ms: float = 0.0

    @property
    def n_replacements(self) -> int:
        return sum(self.counts.values())

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["n_replacements"] = self.n_replacements
        return d


# ---------------------------------------------------------------------------
# span algebra
# ---------------------------------------------------------------------------

def _greedy(spans, key) -> list:
    taken = []
    slots = DisjointIntervals()
    for sp in sorted(spans, key=key):
        if slots.try_add(sp.start, sp.end):
            taken.append(sp)
    taken.sort(key=lambda s: (s.start, s.end))
    return taken


def merge_spans(regex_spans: Iterable[PhiSpan], model_spans: Iterable[PhiSpan]) -> list:
    """Disjoint, sorted union. Regex spans win over model spans; within a
    source the longer span wins, then the leftmost."""
    pool = list(regex_spans) + list(model_spans)
    rank = {Source.REGEX: 0, Source.GOLD: 1, Source.MODEL: 2}
    return _greedy(pool, key=lambda s: (rank[s.source], -(s.end - s.start), s.start))


# recognizers whose label the tagger may refine: the regex fixes the extent,
# the tagger picks between labels that share a placeholder
_REFINABLE = {"PHONE": {NL.PHONE, NL.FAX}, "ZIP": {NL.ZIP, NL.IDNUM},
              "IDNUM": {NL.IDNUM, NL.ZIP}}


def refine_labels(regex_spans, model_spans) -> list:
    """Take the model's label for a regex span it covers with a compatible label."""
    model_spans = sorted(model_spans, key=lambda m: m.start)
    starts = [m.start for m in model_spans]
    out = []
    for r in regex_spans:
        allowed = _REFINABLE.get(r.kind)
        # model spans are disjoint, so only the last one starting at or
        # before r can contain it
        i = bisect_right(starts, r.start) - 1
        if allowed and i >= 0:
            m = model_spans[i]
            if r.end <= m.end and m.label in allowed and m.label is not r.label:
                r = PhiSpan(r.start, r.end, m.label, r.source, r.confidence, r.kind)
        out.append(r)
    return out


def apply_replacements(text: str, spans: Iterable[PhiSpan], config: ScrubConfig = None) -> ScrubResult:
    """Replace each span's surface; everything else is copied verbatim."""
    config = config or ScrubConfig()
    t0 = time.perf_counter()
    parts, reps = [], []
    counts = Counter()
    pos = out = 0
    for sp in spans:
        if sp.start < pos:
            raise OverlapError(f"span ({sp.start}, {sp.end}) overlaps the previous span")
        if sp.end > len(text):
            raise OverlapError(f"span ({sp.start}, {sp.end}) exceeds text length {len(text)}")
        parts.append(text[pos:sp.start])
        out += sp.start - pos
        ph = config.replacement_for(sp.label, text[sp.start:sp.end])
        parts.append(ph)
        reps.append(Replacement(sp.start, sp.end, out, out + len(ph), sp.label, ph))
        counts[sp.label.value] += 1
        out += len(ph)
        pos = sp.end
    parts.append(text[pos:])
    return ScrubResult("".join(parts), reps, dict(sorted(counts.items())),
                       (time.perf_counter() - t0) * 1000)


# ---------------------------------------------------------------------------
# chunked engine
# ---------------------------------------------------------------------------

_LOOKBEHIND = 64


class _Engine:
    """Consumes text incrementally and writes scrubbed text to ``sink``.

    Sentences are grouped greedily into chunks spanning at most
    ``chunk_char_limit`` characters. The last sentence of a chunk opens the
    next one whenever it fits; spans starting in that sentence are left to
    the next chunk.
    """

    def __init__(self, model: CrfModel, table: PatternTable, config: ScrubConfig, sink,
                 audit: Optional[list] = None):
        if model is None:
            raise ModelNotLoaded("no CRF model loaded")
        self.model = model
        self.table = table if table is not None else default_pattern_table()
        self.config = config
        self.sink = sink
        self.audit = audit
        self.segmenter = SentenceSegmenter(config.abbreviations, config.max_sentence_chars)
        self.buf = ""
        self.base = 0           # document offset of buf[0]
        self.pending = []       # sentences not yet assigned to a finished chunk
        self.committed = 0      # input offset up to which output is final
        self.out_pos = 0
        self.stats = ScrubStats()
        self.counts = Counter()

    def feed(self, text: str):
        self.buf += text
        self.stats.chars_in += len(text)
        for s in self.segmenter.feed(text):
            self._add(s)

    def close(self):
        for s in self.segmenter.close():
            self._add(s)
        if self.pending:
            self._process(self.pending, cutoff=None)
            self.pending = []
        self._emit([], self.base + len(self.buf))
        self.stats.counts = dict(sorted(self.counts.items()))

    def _add(self, s: Sentence):
        self.stats.n_sentences += 1
        pending = self.pending
        pending.append(s)
        limit = self.config.chunk_char_limit
        if len(pending) < 2 or s.end - pending[0].start <= limit:
            return
        chunk = pending[:-1]
        last = chunk[-1]
        if len(chunk) >= 2 and s.end - last.start <= limit:
            self._process(chunk, cutoff=last.start)
            self.pending = [last, s]
        else:
            self._process(chunk, cutoff=None)
            self.pending = [s]
        keep = min(self.pending[0].start, self.committed) - _LOOKBEHIND - self.base
        if keep > 0:
            self.buf = self.buf[keep:]
            self.base += keep

    def _detect(self, chunk) -> list:
        cfg = self.config
        base, buf = self.base, self.buf
        start, end = chunk[0].start - base, chunk[-1].end - base
        enabled = cfg.enabled_labels
        regex = [sp for sp in recognize(buf, self.table, start, end) if sp.label in enabled]
        sents = [analyze_sentence(buf, Sentence(s.start - base, s.end - base), cfg.abbreviations)
                 for s in chunk]
        sents = [s for s in sents if s.tokens]
        model = []
        labels = self.model.labels
        for sent, path in zip(sents, self.model.decode([s.tokens for s in sents])):
            tags = [labels[j] for j in path]
            for k, tok in enumerate(sent.tokens):
                if tok.text in RESERVED_WORDS:
                    tags[k] = "O"
            for sp in bio_to_spans(BioSequence(sent.tokens, tags)):
                if sp.label in enabled:
                    model.append(sp)
        if cfg.refine_labels:
            regex = refine_labels(regex, model)
        return [sp.shifted(base) for sp in merge_spans(regex, model)]

    def _process(self, chunk, cutoff):
        self.stats.n_chunks += 1
        spans = self._detect(chunk)
        self.stats.peak_spans = max(self.stats.peak_spans, len(spans))
        owned = [sp for sp in spans if sp.start >= self.committed
                 and (cutoff is None or sp.start < cutoff)]
        limit = chunk[-1].end if cutoff is None else cutoff
        if owned:
            limit = max(limit, owned[-1].end)
        self._emit(owned, limit)

    def _emit(self, spans, upto: int):
        cfg, buf, base = self.config, self.buf, self.base
        pos = self.committed
        parts = []
        for sp in spans:
            parts.append(buf[pos - base:sp.start - base])
            self.out_pos += sp.start - pos
            surface = buf[sp.start - base:sp.end - base]
            ph = cfg.replacement_for(sp.label, surface)
            parts.append(ph)
            if self.audit is not None:
                self.audit.append(Replacement(sp.start, sp.end, self.out_pos,
                                              self.out_pos + len(ph), sp.label, ph))
            self.counts[sp.label.value] += 1
            self.out_pos += len(ph)
            pos = sp.end
        if upto > pos:
            parts.append(buf[pos - base:upto - base])
            self.out_pos += upto - pos
            pos = upto
        self.committed = pos
        if parts:
            self.sink("".join(parts))


def scrub_document(text: str, crf_model: CrfModel, pattern_table: PatternTable = None,
                   config: ScrubConfig = None) -> ScrubResult:
    """Scrub a whole in-memory document. There is no size limit."""
    if crf_model is None:
        raise ModelNotLoaded("no CRF model loaded")
    t0 = time.perf_counter()
    parts, audit = [], []
    eng = _Engine(crf_model, pattern_table, config or ScrubConfig(), parts.append, audit)
    eng.feed(text)
    eng.close()
    return ScrubResult("".join(parts), audit, eng.stats.counts,
                       (time.perf_counter() - t0) * 1000)


def scrub_stream(src, dst, crf_model: CrfModel, pattern_table: PatternTable = None,
                 config: ScrubConfig = None, audit: Optional[list] = None,
                 block_size: int = _READ_BLOCK) -> ScrubStats:
    """Scrub UTF-8 bytes from ``src`` into ``dst`` with bounded memory.

    Output bytes equal ``scrub_document`` on the decoded whole. Invalid UTF-8
    raises :class:`InvalidUtf8` carrying the byte offset of the bad sequence.
    """
    if crf_model is None:
        raise ModelNotLoaded("no CRF model loaded")
    t0 = time.perf_counter()
    stats_out = [0]

    def sink(s):
        b = s.encode("utf-8")
        stats_out[0] += len(b)
        dst.write(b)

    eng = _Engine(crf_model, pattern_table, config or ScrubConfig(), sink, audit)
    decoder = codecs.getincrementaldecoder("utf-8")("strict")
    consumed = 0
    while True:
        block = src.read(block_size)
        final = not block
        held = len(decoder.getstate()[0])
        try:
            text = decoder.decode(block or b"", final=final)
        except UnicodeDecodeError as exc:
            raise InvalidUtf8(consumed - held + exc.start) from None
        consumed += len(block or b"")
        if text:
            eng.feed(text)
        if final:
            break
    eng.close()
    stats = eng.stats
    stats.bytes_in = consumed
    stats.bytes_out = stats_out[0]
    stats.wall_ms = (time.perf_counter() - t0) * 1000
    return stats


# ---------------------------------------------------------------------------
# estimator
# ---------------------------------------------------------------------------

class PhiScrubber(TransformerMixin, BaseEstimator):
    """End-to-end de-identifier: regex layer plus a CRF tagger.

    ``fit`` takes annotated records, ``transform`` maps raw documents to
    scrubbed documents, ``predict`` returns the merged PHI spans.
    """

    def __init__(self, c1=0.1, c2=1e-3, max_iterations=100, templates="extended",
                 min_feature_count=1, enabled_labels=None, pattern_table=None,
                 replacement_mode="PLACEHOLDER", chunk_char_limit=100_000,
                 placeholder_map=None):
        self.c1 = c1
        self.c2 = c2
        self.max_iterations = max_iterations
        self.templates = templates
        self.min_feature_count = min_feature_count
        self.enabled_labels = enabled_labels
        self.pattern_table = pattern_table
        self.replacement_mode = replacement_mode
        self.chunk_char_limit = chunk_char_limit
        self.placeholder_map = placeholder_map

    def scrub_config(self) -> ScrubConfig:
        kw = {}
        if self.placeholder_map is not None:
            kw["placeholder_map"] = {**DEFAULT_PLACEHOLDERS,
                                     **{as_label(k): v for k, v in self.placeholder_map.items()}}
        return ScrubConfig(replacement_mode=self.replacement_mode,
                           chunk_char_limit=self.chunk_char_limit,
                           enabled_labels=self._labels(), **kw)

    def _labels(self):
        if self.enabled_labels is None:
            return DEFAULT_ENABLED_LABELS
        return check_labels(self.enabled_labels)

    def _table(self):
        return self.pattern_table if self.pattern_table is not None else default_pattern_table()

    def fit(self, records, y=None, callback=None):
        records = check_records(records)
        labels = self._labels()
        X, tags = [], []
        for rec in records:
            for seq in to_bio(rec, analyze(rec.text), labels):
                if seq.tokens:
                    X.append(seq.tokens)
                    tags.append(seq.tags)
        self.tagger_ = CRFTagger(c1=self.c1, c2=self.c2, max_iterations=self.max_iterations,
                                 templates=self.templates,
                                 min_feature_count=self.min_feature_count)
        self.tagger_.fit(X, tags, callback=callback)
        self.model_ = self.tagger_.model_
        return self

    @classmethod
    def from_model(cls, model: CrfModel, **params) -> "PhiScrubber":
        est = cls(templates=model.templates.name, **params)
        est.model_ = model
        est.tagger_ = CRFTagger.from_model(model)
        return est

    def scrub(self, text: str) -> ScrubResult:
        check_is_fitted(self)
        return scrub_document(text, self.model_, self._table(), self.scrub_config())

    def transform(self, texts) -> list:
        return [self.scrub(t).scrubbed_text for t in check_texts(texts)]

    def predict(self, texts) -> list:
        """Merged PHI spans per document, in input coordinates."""
        return [_spans_of(self.scrub(t)) for t in check_texts(texts)]

    def score(self, records, y=None) -> float:
        """Entity-level exact micro F1 on annotated records."""
        from .evaluation import evaluate_records
        return evaluate_records(self, check_records(records)).micro_f1


@dataclass(frozen=True)
class ScrubPipeline:
    """An immutable (model, pattern table, config) triple; safe to share."""

    model: CrfModel
    table: PatternTable = field(default_factory=default_pattern_table)
    config: ScrubConfig = field(default_factory=ScrubConfig)

    def scrub(self, text: str) -> ScrubResult:
        return scrub_document(text, self.model, self.table, self.config)

    def scrub_stream(self, src, dst, audit: Optional[list] = None) -> ScrubStats:
        return scrub_stream(src, dst, self.model, self.table, self.config, audit)

    def scrub_config(self) -> ScrubConfig:
        return self.config

    def predict(self, texts) -> list:
        return [_spans_of(self.scrub(t)) for t in check_texts(texts)]


def _spans_of(result: ScrubResult) -> list:
    return [PhiSpan(r.input_start, r.input_end, r.label, Source.MODEL)
            for r in result.replacements]
