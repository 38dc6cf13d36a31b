"""Fixed-pattern PHI recognizers.

Each table entry has a recognizer name (EMAIL, SSN, ...), a priority and a
pattern. Overlapping matches are resolved by priority, then length, then
position. Names that are not themselves normalized labels map onto one
(SSN becomes IDNUM); the name survives on the span as ``kind``.
"""

from __future__ import annotations

import re
from bisect import bisect_right
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .exceptions import InvalidConfig
from .labels import NormalizedLabel, PhiSpan, Source

# recognizer name -> label carried by its spans
NAME_TO_LABEL = {
    "SSN": NormalizedLabel.IDNUM,
    "MRN": NormalizedLabel.IDNUM,
}

# PHONE: the leading guard is a negative look-behind rather than \b so that
# "(617) 555-0123" and "+1 617 ..." match after a space.
DEFAULT_PATTERNS = (
    ("EMAIL", 70, r"\b[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}\b"),
    ("URL", 60, r"\bhttps?://[^\s<>\"]+|\bwww\.[A-Za-z0-9.-]+\.[A-Za-z]{2,}[^\s<>\"]*"),
    ("IPADDRESS", 50, r"\b(25[0-5]|2[0-4]\d|1?\d?\d)(\.(25[0-5]|2[0-4]\d|1?\d?\d)){3}\b"),
    ("SSN", 40, r"\b\d{3}-\d{2}-\d{4}\b"),
    ("PHONE", 30, r"(?<!\w)(\+1[-. ])?(\(\d{3}\)[ .-]?|\d{3}[ .-])\d{3}[ .-]\d{4}\b"),
    ("ZIP", 20, r"\b\d{5}(-\d{4})?\b"),
    ("IDNUM", 10, r"\b\d{5,}\b|\b[A-Za-z]{2,}\d{4,}\b"),
)


@dataclass(frozen=True)
class PatternEntry:
    name: str
    priority: int
    pattern: str

    @property
    def label(self) -> NormalizedLabel:
        if self.name in NAME_TO_LABEL:
            return NAME_TO_LABEL[self.name]
        return NormalizedLabel(self.name)

    def compile(self):
        return re.compile(self.pattern)


class PatternTable:
    """Ordered, immutable set of compiled recognizers."""

    def __init__(self, entries: Iterable):
        entries = [e if isinstance(e, PatternEntry) else PatternEntry(*e) for e in entries]
        prios = [e.priority for e in entries]
        if len(set(prios)) != len(prios):
            raise InvalidConfig("pattern priorities must be unique")
        compiled = []
        for e in entries:
            try:
                label = e.label
            except ValueError:
                raise InvalidConfig(f"unknown pattern label {e.name!r}") from None
            if label is NormalizedLabel.O:
                raise InvalidConfig("a pattern cannot produce the O label")
            try:
                rx = e.compile()
            except re.error as exc:
                raise InvalidConfig(f"pattern for {e.name} does not compile: {exc}") from None
            compiled.append((e, rx, label))
        self.entries = tuple(entries)
        self._compiled = tuple(compiled)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @classmethod
    def from_file(cls, path) -> "PatternTable":
        """Lines of ``LABEL<TAB>PRIORITY<TAB>PATTERN``; '#' starts a comment line."""
        entries = []
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t", 2)
            if len(parts) != 3:
                raise InvalidConfig(f"{path}:{lineno}: expected LABEL<TAB>PRIORITY<TAB>PATTERN")
            name, prio, pattern = parts
            try:
                prio = int(prio)
            except ValueError:
                raise InvalidConfig(f"{path}:{lineno}: priority must be an integer") from None
            entries.append(PatternEntry(name.strip().upper(), prio, pattern))
        return cls(entries)

    def to_file(self, path) -> None:
        lines = ["# LABEL\tPRIORITY\tPATTERN"]
        lines += [f"{e.name}\t{e.priority}\t{e.pattern}" for e in self.entries]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    def candidates(self, text: str, start: int = 0, end: int = None):
        """Every raw match as (start, end, priority, entry, label)."""
        end = len(text) if end is None else end
        out = []
        for e, rx, label in self._compiled:
            for m in rx.finditer(text, start, end):
                if m.end() > m.start():
                    out.append((m.start(), m.end(), e.priority, e, label))
        return out


def default_pattern_table() -> PatternTable:
    return PatternTable(PatternEntry(*e) for e in DEFAULT_PATTERNS)


class DisjointIntervals:
    """Sorted set of pairwise disjoint half-open intervals."""

    def __init__(self):
        self.starts = []
        self.ends = []

    def try_add(self, start: int, end: int) -> bool:
        """Insert unless it overlaps a member; returns whether it was added."""
        i = bisect_right(self.starts, start)
        if i > 0 and self.ends[i - 1] > start:
            return False
        if i < len(self.starts) and self.starts[i] < end:
            return False
        self.starts.insert(i, start)
        self.ends.insert(i, end)
        return True


def resolve(candidates) -> list:
    """Greedy overlap resolution: priority, then length, then leftmost."""
    order = sorted(candidates, key=lambda c: (-c[2], -(c[1] - c[0]), c[0]))
    taken = DisjointIntervals()
    out = []
    for s, e, _, entry, label in order:
        if taken.try_add(s, e):
            out.append(PhiSpan(s, e, label, Source.REGEX, 1.0, entry.name))
    out.sort(key=lambda sp: (sp.start, sp.end))
    return out


def recognize(text: str, table: PatternTable = None, start: int = 0, end: int = None) -> list:
    """Non-overlapping, sorted regex PHI spans in ``text[start:end]``.

    Offsets refer to ``text``. Patterns see the surrounding characters, so
    word-boundary guards behave as in a full-text scan.
    """
    if table is None:
        table = _DEFAULT
    return resolve(table.candidates(text, start, end))


_DEFAULT = default_pattern_table()
