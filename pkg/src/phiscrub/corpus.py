"""Annotated records: XML reading/writing, corpus splits, BIO encoding."""

from __future__ import annotations

import math
import random
import warnings
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Optional, Sequence

from .exceptions import (EmptyCorpus, MalformedXml, OffsetMismatch,
                         OverlappingAnnotation, SmallSplitWarning,
                         SpanCrossesSentence)
from .labels import (NormalizedLabel, PhiCategory, PhiSpan, Source, as_label,
                     normalize_label)
from .tokenization import Sentence


@dataclass(frozen=True)
class GoldSpan:
    start: int
    end: int
    surface: str
    label: PhiCategory

    @property
    def normalized(self) -> NormalizedLabel:
        return normalize_label(self.label)


@dataclass(frozen=True)
class AnnotatedRecord:
    id: str
    text: str
    spans: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "spans", tuple(self.spans))
        prev_end = 0
        for sp in self.spans:
            if not 0 <= sp.start < sp.end <= len(self.text):
                raise OffsetMismatch(f"{self.id}: span ({sp.start}, {sp.end}) out of bounds")
            if self.text[sp.start:sp.end] != sp.surface:
                raise OffsetMismatch(
                    f"{self.id}: text[{sp.start}:{sp.end}]={self.text[sp.start:sp.end]!r} "
                    f"but annotation says {sp.surface!r}")
            if sp.start < prev_end:
                raise OverlappingAnnotation(f"{self.id}: span at {sp.start} overlaps its predecessor")
            prev_end = sp.end

    def phi_spans(self, enabled: Optional[Iterable] = None) -> list[PhiSpan]:
        """Gold spans as normalized :class:`PhiSpan` objects."""
        allowed = None if enabled is None else {as_label(x) for x in enabled}
        out = []
        for sp in self.spans:
            lab = sp.normalized
            if allowed is None or lab in allowed:
                out.append(PhiSpan(sp.start, sp.end, lab, Source.GOLD))
        return out


# ---------------------------------------------------------------------------
# XML layout
# ---------------------------------------------------------------------------

def parse_record(xml_text: str, record_id: Optional[str] = None) -> AnnotatedRecord:
    """Parse one i2b2-style record.

    The root element holds a ``TEXT`` child with the record body and a
    ``TAGS`` child whose empty elements are named by category and carry
    ``id``, ``start``, ``end``, ``text`` and ``TYPE`` attributes.
    """
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise MalformedXml(str(exc)) from None
    body = root.find("TEXT")
    if body is None:
        raise MalformedXml("missing TEXT element")
    text = body.text or ""
    rid = record_id if record_id is not None else root.get("id", "")
    spans = []
    tags = root.find("TAGS")
    for el in (tags if tags is not None else ()):
        try:
            start, end = int(el.get("start")), int(el.get("end"))
        except (TypeError, ValueError):
            raise MalformedXml(f"tag {el.tag} id={el.get('id')} lacks integer start/end") from None
        cat = PhiCategory.parse(el.tag, el.get("TYPE"))
        surface = el.get("text")
        if surface is None:
            surface = text[start:end]
        if not 0 <= start < end <= len(text):
            raise OffsetMismatch(f"tag {el.get('id')} ({start}, {end}) outside body of length {len(text)}")
        if text[start:end] != surface:
            raise OffsetMismatch(f"tag {el.get('id')}: body has {text[start:end]!r}, tag says {surface!r}")
        spans.append(GoldSpan(start, end, surface, cat))
    spans.sort(key=lambda s: (s.start, s.end))
    return AnnotatedRecord(rid, text, spans)


def _xml_escape(s: str, attr: bool = False) -> str:
    s = s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace("\r", "&#13;")
    if attr:
        s = s.replace('"', "&quot;").replace("\n", "&#10;").replace("\t", "&#9;")
    return s


def serialize_record(record: AnnotatedRecord) -> str:
    lines = ['<?xml version="1.0" encoding="UTF-8"?>',
             f'<deIdi2b2 id="{_xml_escape(record.id, True)}">',
             f"<TEXT>{_xml_escape(record.text)}</TEXT>",
             "<TAGS>"]
    for i, sp in enumerate(record.spans):
        sub = sp.label.subtype or sp.label.category.value
        lines.append(f'<{sp.label.category.value} id="P{i}" start="{sp.start}" end="{sp.end}" '
                     f'text="{_xml_escape(sp.surface, True)}" TYPE="{sub}" />')
    lines.append("</TAGS>")
    lines.append("</deIdi2b2>")
    return "\n".join(lines) + "\n"


def read_record(path) -> AnnotatedRecord:
    path = Path(path)
    return parse_record(path.read_text(encoding="utf-8"), record_id=path.stem)


def write_record(record: AnnotatedRecord, path) -> None:
    Path(path).write_text(serialize_record(record), encoding="utf-8")


def read_manifest(path) -> list[Path]:
    """Newline-delimited record paths, relative entries resolved against the manifest."""
    path = Path(path)
    out = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            p = Path(line)
            out.append(p if p.is_absolute() else path.parent / p)
    return out


def write_manifest(paths: Iterable, path) -> None:
    path = Path(path)
    lines = []
    for p in paths:
        p = Path(p)
        try:
            p = p.relative_to(path.parent)
        except ValueError:
            pass
        lines.append(str(p))
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_corpus(manifest) -> list[AnnotatedRecord]:
    return [read_record(p) for p in read_manifest(manifest)]


# ---------------------------------------------------------------------------
# splits
# ---------------------------------------------------------------------------

class CorpusSplit(NamedTuple):
    train: list
    test: list
    warnings: tuple


def split_corpus(records: Sequence, train_fraction: float = 0.9, seed: int = 0) -> CorpusSplit:
    """Seeded random train/test partition.

    The train side gets ``floor(n * train_fraction)`` records (at least one),
    which reproduces 1173/131 for 1304 records at 0.9. Relative order is
    preserved inside each side.
    """
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    n = len(records)
    if n == 0:
        raise EmptyCorpus("cannot split an empty corpus")
    n_train = max(1, math.floor(n * train_fraction + 1e-9))
    order = list(range(n))
    random.Random(seed).shuffle(order)
    chosen = set(order[:n_train])
    train = [r for i, r in enumerate(records) if i in chosen]
    test = [r for i, r in enumerate(records) if i not in chosen]
    notes = ()
    if not test:
        notes = (f"test split is empty ({n} record(s), fraction {train_fraction})",)
        warnings.warn(notes[0], SmallSplitWarning, stacklevel=2)
    return CorpusSplit(train, test, notes)


# ---------------------------------------------------------------------------
# BIO
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BioSequence:
    tokens: tuple
    tags: tuple

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "tags", tuple(self.tags))
        if len(self.tokens) != len(self.tags):
            raise ValueError("tokens and tags differ in length")


def to_bio(record: AnnotatedRecord, sentences: Sequence[Sentence],
           enabled_labels: Optional[Iterable] = None) -> list[BioSequence]:
    """Encode gold spans as per-sentence BIO tags.

    Any token that overlaps a span takes the span's label, so partially
    covered tokens are tagged whole. A span that crosses a sentence boundary
    is split there (each part starts with B-) and a
    :class:`SpanCrossesSentence` warning is issued.
    """
    allowed = None if enabled_labels is None else {as_label(x) for x in enabled_labels}
    gold = [(sp.start, sp.end, sp.normalized) for sp in record.spans
            if allowed is None or sp.normalized in allowed]
    out = []
    gi = 0
    for sent in sentences:
        tags = ["O"] * len(sent.tokens)
        while gi < len(gold) and gold[gi][1] <= sent.start:
            gi += 1
        j = gi
        while j < len(gold) and gold[j][0] < sent.end:
            start, end, lab = gold[j]
            if start < sent.start or end > sent.end:
                warnings.warn(f"{record.id}: span ({start}, {end}) crosses sentence "
                              f"({sent.start}, {sent.end}); split at the boundary",
                              SpanCrossesSentence, stacklevel=2)
            first = True
            for k, tok in enumerate(sent.tokens):
                if tok.start < end and tok.end > start and tags[k] == "O":
                    tags[k] = ("B-" if first else "I-") + lab.value
                    first = False
            j += 1
        out.append(BioSequence(sent.tokens, tags))
    return out


def bio_to_spans(seq: BioSequence, source: Source = Source.MODEL) -> list[PhiSpan]:
    """Decode maximal B/I runs into character spans.

    An ``I-L`` that does not continue a run of ``L`` opens a new span.
    """
    spans = []
    cur_label = None
    cur_start = cur_end = 0
    for tok, tag in zip(seq.tokens, seq.tags):
        if tag == "O" or not tag:
            if cur_label is not None:
                spans.append(PhiSpan(cur_start, cur_end, cur_label, source))
                cur_label = None
            continue
        prefix, _, lab = tag.partition("-")
        if prefix == "I" and lab == cur_label:
            cur_end = tok.end
            continue
        if cur_label is not None:
            spans.append(PhiSpan(cur_start, cur_end, cur_label, source))
        cur_label, cur_start, cur_end = lab, tok.start, tok.end
    if cur_label is not None:
        spans.append(PhiSpan(cur_start, cur_end, cur_label, source))
    return spans
