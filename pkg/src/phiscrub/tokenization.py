"""Offset-preserving sentence splitting, tokenization, word shapes and a
coarse rule-based POS tagger.

Every token and sentence keeps character offsets into the source text so
that predictions can be mapped back onto the original document.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Optional

DEFAULT_ABBREVIATIONS = frozenset({
    "Mr.", "Mrs.", "Ms.", "Dr.", "Prof.", "St.", "Jr.", "Sr.", "vs.", "e.g.",
    "i.e.", "approx.",
})

POS_TAGS = ("NOUN", "PROPN", "VERB", "ADJ", "ADV", "PRON", "DET", "ADP", "NUM",
            "PUNCT", "SYM", "OTHER")


@dataclass(frozen=True, slots=True)
class Token:
    text: str
    start: int
    end: int
    shape: str = ""
    pos: Optional[str] = None


@dataclass(frozen=True, slots=True)
class Sentence:
    start: int
    end: int
    tokens: tuple = field(default=(), compare=False)

    def text(self, source: str) -> str:
        return source[self.start:self.end]


def load_abbreviations(path) -> frozenset:
    """Read one abbreviation per line; blank lines and '#' comments skipped."""
    out = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.add(line)
    return frozenset(out)


# ---------------------------------------------------------------------------
# sentence splitting
# ---------------------------------------------------------------------------

_TERMINATOR = re.compile(r"[.!?]+[\"')\]]*(?=\s)")
_BLANK_LINE = re.compile(r"\n[^\S\n]*\n")
_NONSPACE = re.compile(r"\S")
_INITIAL = re.compile(r"[A-Z]\.")
_OPENERS = "\"'(["
# how far back an abbreviation check may look before the terminator
_LOOKBACK = 64


def _is_abbreviation(text: str, term_start: int, term_run: str, abbrevs, lower_abbrevs) -> bool:
    if term_run != ".":
        return False
    lo = max(0, term_start - _LOOKBACK)
    ws = max(text.rfind(" ", lo, term_start), text.rfind("\n", lo, term_start),
             text.rfind("\t", lo, term_start), text.rfind("\r", lo, term_start))
    word = text[max(ws + 1, lo):term_start + 1].lstrip(_OPENERS)
    if not word or word == ".":
        return False
    if word in abbrevs or word.lower() in lower_abbrevs:
        return True
    # single capital initial, as in "H. Pylori"
    return _INITIAL.fullmatch(word) is not None


def _natural_cuts(text: str, begin: int, final: bool, abbrevs, lower_abbrevs) -> list:
    """Cut positions after ``begin``; a cut is the exclusive end of a sentence."""
    cuts = []
    for m in _TERMINATOR.finditer(text, begin):
        ws_end = m.end()
        nxt = _NONSPACE.search(text, ws_end)
        if nxt is None:
            # the following whitespace runs off the end; undecidable mid-stream
            continue
        gap = text[ws_end:nxt.start()]
        run = m.group().rstrip("\"')]")
        if _is_abbreviation(text, m.start() + len(run) - 1, run, abbrevs, lower_abbrevs):
            if _BLANK_LINE.search(gap) is None:
                continue
        c = text[nxt.start()]
        if "\n" in gap or c.isupper() or c.isdigit() or c in _OPENERS:
            cuts.append(m.end())
    for m in _BLANK_LINE.finditer(text, begin):
        cuts.append(m.start())
    cuts.sort()
    return cuts


def _pieces(text: str, start: int, end: int, max_chars: Optional[int], closed: bool):
    """Break ``[start, end)`` into pieces of at most ``max_chars``.

    Yields (start, end) pairs. When ``closed`` is false the tail piece is not
    yielded; instead the generator returns its start so the caller can hold it.
    """
    if max_chars is not None:
        while end - start > max_chars:
            window_end = start + max_chars + 1
            w = max(text.rfind(" ", start + 1, window_end), text.rfind("\n", start + 1, window_end),
                    text.rfind("\t", start + 1, window_end), text.rfind("\r", start + 1, window_end))
            if w > start:
                piece_end = w
                while piece_end > start and text[piece_end - 1].isspace():
                    piece_end -= 1
                nxt = _NONSPACE.search(text, w).start()
            else:
                piece_end = nxt = start + max_chars
            yield start, piece_end
            start = nxt
    if closed:
        yield start, end
        return None
    return start


def _segment(text, begin, final, abbrevs, max_chars):
    """Split ``text[begin:]``; returns (spans, held_start).

    With ``final`` false the last (possibly unfinished) sentence is withheld
    and its start returned, so that feeding more text can extend it.
    """
    lower = frozenset(a.lower() for a in abbrevs)
    cuts = _natural_cuts(text, begin, final, abbrevs, lower)
    spans = []
    pos = begin
    bounds = []
    for c in cuts + [len(text)]:
        m = _NONSPACE.search(text, pos, c)
        if m is not None:
            e = c
            while text[e - 1].isspace():
                e -= 1
            bounds.append((m.start(), e))
        pos = c
    held = None
    for i, (s, e) in enumerate(bounds):
        last = i == len(bounds) - 1
        closed = final or not last
        gen = _pieces(text, s, e, max_chars, closed)
        while True:
            try:
                spans.append(next(gen))
            except StopIteration as stop:
                if not closed:
                    held = stop.value
                break
    return spans, held


def split_sentences(text: str, abbreviations: Iterable[str] = DEFAULT_ABBREVIATIONS,
                    max_chars: Optional[int] = None) -> list[Sentence]:
    """Split ``text`` into sentence spans (tokens left empty).

    A boundary follows ``.``, ``!`` or ``?`` (plus closing quotes/brackets)
    when whitespace and then an uppercase letter, digit or opening bracket
    follow, or when the whitespace contains a newline. A terminating period
    that closes a known abbreviation or a single-capital initial does not
    break. Blank lines always break. Sentences longer than ``max_chars`` are
    cut at the last whitespace inside the limit.
    """
    spans, _ = _segment(text, 0, True, frozenset(abbreviations), max_chars)
    return [Sentence(s, e) for s, e in spans]


class SentenceSegmenter:
    """Incremental version of :func:`split_sentences`.

    Text may be fed in arbitrary pieces; the emitted sentences are identical
    to splitting the concatenation in one go. Only the unfinished tail (plus a
    little look-behind) is buffered.
    """

    def __init__(self, abbreviations: Iterable[str] = DEFAULT_ABBREVIATIONS,
                 max_chars: Optional[int] = None):
        self.abbreviations = frozenset(abbreviations)
        self.max_chars = max_chars
        self._buf = ""
        self._base = 0      # document offset of self._buf[0]
        self._begin = 0     # buffer index where unsplit text starts

    @property
    def buffered(self) -> int:
        return len(self._buf)

    def feed(self, text: str) -> list[Sentence]:
        self._buf += text
        spans, held = _segment(self._buf, self._begin, False, self.abbreviations, self.max_chars)
        out = [Sentence(s + self._base, e + self._base) for s, e in spans]
        if held is None:
            keep = len(self._buf)
        else:
            keep = held
        self._compact(keep)
        return out

    def close(self) -> list[Sentence]:
        spans, _ = _segment(self._buf, self._begin, True, self.abbreviations, self.max_chars)
        out = [Sentence(s + self._base, e + self._base) for s, e in spans]
        self._base += len(self._buf)
        self._buf = ""
        self._begin = 0
        return out

    def _compact(self, keep: int):
        drop = max(0, keep - _LOOKBACK)
        self._buf = self._buf[drop:]
        self._base += drop
        self._begin = keep - drop


# ---------------------------------------------------------------------------
# tokens
# ---------------------------------------------------------------------------

_WORD = re.compile(r"\S+")
_LEAD = set("([{\"'`<")
_TRAIL = set(".,;:!?)]}\"'`>")
_INNER_SPLIT = re.compile(r"[-/]")


def _id_like(core: str) -> bool:
    """Digit/symbol-dense surfaces (phone numbers, IPs, emails) stay whole."""
    if "@" in core or "://" in core or core.lower().startswith("www."):
        return True
    letters = sum(ch.isalpha() for ch in core)
    return len(core) - letters >= letters


def tokenize(text: str, sentence: Sentence,
             abbreviations: Iterable[str] = DEFAULT_ABBREVIATIONS) -> list[Token]:
    """Tokenize one sentence of ``text``; tokens carry shapes but no POS."""
    abbrevs = abbreviations if isinstance(abbreviations, frozenset) else frozenset(abbreviations)
    out = []
    for m in _WORD.finditer(text, sentence.start, sentence.end):
        s, e = m.start(), m.end()
        while s < e and text[s] in _LEAD:
            out.append(s)
            s += 1
        trail = []
        while e > s and text[e - 1] in _TRAIL:
            if text[e - 1] == "." and e - s > 1:
                word = text[s:e]
                if word in abbrevs or _INITIAL.fullmatch(word):
                    break
            e -= 1
            trail.append(e)
        if s < e:
            core = text[s:e]
            if not _id_like(core) and _INNER_SPLIT.search(core, 1):
                prev = s
                for sep in _INNER_SPLIT.finditer(text, s, e):
                    if sep.start() > prev:
                        out.append((prev, sep.start()))
                    out.append(sep.start())
                    prev = sep.end()
                if prev < e:
                    out.append((prev, e))
            else:
                out.append((s, e))
        out.extend(reversed(trail))
    tokens = []
    for item in out:
        if isinstance(item, int):
            a, b = item, item + 1
        else:
            a, b = item
        surface = text[a:b]
        tokens.append(Token(surface, a, b, word_shape(surface)))
    return tokens


_SHAPE_TABLE = {}


def word_shape(token_text: str) -> str:
    """Casing signature: X upper, x lower, d digit, s other; runs capped at 4."""
    cached = _SHAPE_TABLE.get(token_text)
    if cached is not None:
        return cached
    out = []
    prev = ""
    run = 0
    for ch in token_text:
        if ch.isupper():
            c = "X"
        elif ch.islower():
            c = "x"
        elif ch.isdigit():
            c = "d"
        else:
            c = "s"
        if c == prev:
            run += 1
            if run > 4:
                continue
        else:
            prev, run = c, 1
        out.append(c)
    shape = "".join(out)
    if len(_SHAPE_TABLE) < 500_000:
        _SHAPE_TABLE[token_text] = shape
    return shape


# ---------------------------------------------------------------------------
# POS
# ---------------------------------------------------------------------------

_LEXICON = {}
for _tag, _words in {
    "DET": "a an the this that these those each every some any no all both either "
           "neither another such what which whose",
    "ADP": "of in on at by for with from to into onto upon about above below over under "
           "between among through during before after since until within without "
           "against along across around behind beside besides beyond near per via "
           "than like despite toward towards off out up down",
    "PRON": "i me my mine myself you your yours yourself he him his himself she her hers "
            "herself it its itself we us our ours ourselves they them their theirs "
            "themselves who whom whoever someone anyone everyone nobody none something "
            "anything nothing everything",
    "VERB": "is am are was were be been being has have had having do does did done "
            "will would shall should may might must can could get gets got "
            "denies denied reports reported presents presented complains noted "
            "seen see saw admitted discharged underwent received started stopped "
            "continue continued take takes took given give gives made make makes "
            "came come comes went go goes left returned showed shows revealed",
    "ADV": "not no never also very too again still already now then there here today "
           "yesterday tomorrow currently previously subsequently recently later soon "
           "otherwise however therefore thus approximately daily twice once only "
           "just well",
    "OTHER": "and or but nor yet so if because although though while whereas whether "
             "unless as",
}.items():
    for _w in _words.split():
        _LEXICON[_w] = _tag

_ADJ_SUFFIXES = ("ous", "ful", "ive", "al", "able", "ible", "ic")


def _suffix_tag(lower: str) -> Optional[str]:
    if len(lower) > 3 and lower.endswith("ly"):
        return "ADV"
    if len(lower) > 4 and (lower.endswith("ing") or lower.endswith("ed")):
        return "VERB"
    if len(lower) > 4 and lower.endswith(_ADJ_SUFFIXES):
        return "ADJ"
    return None


def _pos_one(text: str, initial: bool) -> str:
    lower = text.lower()
    tag = _LEXICON.get(lower)
    if tag is not None:
        return tag
    alnum = sum(ch.isalnum() for ch in text)
    if alnum == 0:
        return "PUNCT" if all(ch in ".,;:!?()[]{}\"'`-" for ch in text) else "SYM"
    digits = sum(ch.isdigit() for ch in text)
    if digits * 2 >= alnum:
        return "NUM"
    if "@" in text or "://" in text:
        return "SYM"
    if text[0].isupper():
        if not initial:
            return "PROPN"
        return _suffix_tag(lower) or "PROPN"
    return _suffix_tag(lower) or "NOUN"


def pos_tag(tokens) -> list[str]:
    """Coarse POS tags by ordered rules: lexicon, punctuation, number,
    capitalization, suffix, then NOUN."""
    out = []
    initial = True
    for tok in tokens:
        text = tok.text if isinstance(tok, Token) else tok
        tag = _pos_one(text, initial)
        out.append(tag)
        if tag != "PUNCT" or text not in "([\"'`":
            initial = False
    return out


def analyze_sentence(text: str, sentence: Sentence,
                     abbreviations: Iterable[str] = DEFAULT_ABBREVIATIONS) -> Sentence:
    """Tokenize and POS-tag one sentence span."""
    toks = tokenize(text, sentence, abbreviations)
    tags = pos_tag(toks)
    return replace(sentence, tokens=tuple(
        Token(t.text, t.start, t.end, t.shape, p) for t, p in zip(toks, tags)))


def analyze(text: str, abbreviations: Iterable[str] = DEFAULT_ABBREVIATIONS,
            max_chars: Optional[int] = None) -> list[Sentence]:
    """Split, tokenize and tag a whole document."""
    abbrevs = frozenset(abbreviations)
    return [analyze_sentence(text, s, abbrevs)
            for s in split_sentences(text, abbrevs, max_chars)]


def iter_analyzed(text: str, sentences: Iterable[Sentence],
                  abbreviations=DEFAULT_ABBREVIATIONS) -> Iterator[Sentence]:
    abbrevs = frozenset(abbreviations)
    for s in sentences:
        yield analyze_sentence(text, s, abbrevs)
