"""Feature templates for the linear-chain tagger.

A feature is a string such as ``w0=boston`` or ``shape-1=Xxxxx``. Features
contributed by a neighbouring token depend only on that token's text and POS
plus its offset from the centre, which lets decoding memoize per-token work.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..exceptions import InvalidConfig
from ..tokenization import Token, word_shape

# window templates, applied at every offset in [-radius, radius]
WINDOW_TEMPLATES = ("word", "shape", "pos", "title", "upper", "digit")
# centre-only / positional templates
CENTER_TEMPLATES = ("affix", "bos_eos", "bias")
ALL_TEMPLATES = WINDOW_TEMPLATES + CENTER_TEMPLATES

EXTENDED = ("word", "shape", "pos", "title", "upper", "digit", "affix", "bos_eos", "bias")
# casing and part-of-speech only
PAPER_STRICT = ("shape", "pos", "title", "upper", "bos_eos", "bias")


@dataclass(frozen=True)
class FeatureTemplateSet:
    templates: tuple = EXTENDED
    radius: int = 2

    def __post_init__(self):
        object.__setattr__(self, "templates", tuple(self.templates))
        unknown = set(self.templates) - set(ALL_TEMPLATES)
        if unknown:
            raise InvalidConfig(f"unknown feature templates: {sorted(unknown)}")
        if self.radius < 0:
            raise InvalidConfig("radius must be non-negative")

    @classmethod
    def named(cls, name: str, radius: int = 2) -> "FeatureTemplateSet":
        if name == "extended":
            return cls(EXTENDED, radius)
        if name in ("paper", "paper-strict", "paper_strict"):
            return cls(PAPER_STRICT, radius)
        raise InvalidConfig(f"unknown template set {name!r}")

    @property
    def name(self) -> str:
        if self.templates == EXTENDED:
            return "extended"
        if self.templates == PAPER_STRICT:
            return "paper-strict"
        return ",".join(self.templates)

    def token_features(self, text: str, pos: str, offset: int) -> list:
        """Features a token contributes to the position ``offset`` away."""
        out = []
        t = self.templates
        d = offset
        if "word" in t:
            out.append(f"w{d}={text.lower()}")
        if "shape" in t:
            out.append(f"shape{d}={word_shape(text)}")
        if "pos" in t:
            out.append(f"pos{d}={pos}")
        if "title" in t and text.istitle():
            out.append(f"title{d}")
        if "upper" in t and text.isupper():
            out.append(f"upper{d}")
        if "digit" in t and text.isdigit():
            out.append(f"digit{d}")
        if d == 0 and "affix" in t:
            low = text.lower()
            for n in (2, 3):
                if len(low) >= n:
                    out.append(f"pre{n}={low[:n]}")
                    out.append(f"suf{n}={low[-n:]}")
        return out

    def position_features(self, t: int, length: int) -> list:
        out = []
        if "bias" in self.templates:
            out.append("bias")
        if "bos_eos" in self.templates:
            if t == 0:
                out.append("BOS")
            if t == length - 1:
                out.append("EOS")
        return out


def _pos_of(tok):
    return tok.pos if tok.pos is not None else "OTHER"


def extract_features(sentence: Sequence[Token], t: int,
                     templates: FeatureTemplateSet = FeatureTemplateSet()) -> list:
    """All feature strings active at position ``t`` of ``sentence``."""
    n = len(sentence)
    if not 0 <= t < n:
        raise IndexError(f"position {t} outside sentence of length {n}")
    feats = templates.position_features(t, n)
    r = templates.radius
    for d in range(-r, r + 1):
        s = t + d
        if 0 <= s < n:
            tok = sentence[s]
            feats.extend(templates.token_features(tok.text, _pos_of(tok), d))
    return feats
