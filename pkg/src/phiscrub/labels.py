"""PHI label taxonomy: i2b2 categories, the normalized tag set, and spans."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .exceptions import UnknownCategory


class Category(str, Enum):
    NAME = "NAME"
    PROFESSION = "PROFESSION"
    LOCATION = "LOCATION"
    AGE = "AGE"
    DATE = "DATE"
    CONTACT = "CONTACT"
    ID = "ID"


SUBTYPES: dict[Category, tuple[str, ...]] = {
    Category.NAME: ("PATIENT", "DOCTOR", "USERNAME"),
    Category.PROFESSION: (),
    Category.LOCATION: ("HOSPITAL", "ORGANIZATION", "STREET", "CITY", "STATE",
                        "COUNTRY", "ZIP", "OTHER"),
    Category.AGE: (),
    Category.DATE: (),
    Category.CONTACT: ("PHONE", "FAX", "EMAIL", "URL", "IPADDRESS"),
    Category.ID: ("SSN", "MRN", "HEALTHPLAN", "ACCOUNT", "LICENSE", "VEHICLE",
                  "DEVICE", "BIOMETRIC", "IDNUM"),
}

# TYPE spellings seen in the public 2014 release, mapped onto ours.
SUBTYPE_ALIASES = {
    "LOCATION-OTHER": "OTHER",
    "IPADDR": "IPADDRESS",
    "MEDICALRECORD": "MRN",
    "BIOID": "BIOMETRIC",
    "SOCIAL SECURITY NUMBER": "SSN",
    "ID NUMBER": "IDNUM",
}


@dataclass(frozen=True)
class PhiCategory:
    category: Category
    subtype: Optional[str] = None

    def __post_init__(self):
        try:
            cat = Category(self.category)
        except ValueError:
            raise UnknownCategory(f"unknown PHI category {self.category!r}") from None
        object.__setattr__(self, "category", cat)
        if self.subtype is not None and self.subtype not in SUBTYPES[cat]:
            raise UnknownCategory(f"{self.subtype!r} is not a subtype of {cat.value}")

    @classmethod
    def parse(cls, category: str, subtype: Optional[str] = None) -> "PhiCategory":
        """Build from raw tag/TYPE strings, tolerating i2b2 spellings."""
        category = category.strip().upper()
        if category == "IDS":
            category = "ID"
        sub = (subtype or "").strip().upper() or None
        if sub is not None:
            sub = SUBTYPE_ALIASES.get(sub, sub)
            # AGE/DATE/PROFESSION carry TYPE equal to the category itself
            if sub == category:
                sub = None
        return cls(category, sub)


class NormalizedLabel(str, Enum):
    NAME = "NAME"
    PROFESSION = "PROFESSION"
    ORG = "ORG"
    STREET = "STREET"
    CITY = "CITY"
    STATE = "STATE"
    COUNTRY = "COUNTRY"
    ZIP = "ZIP"
    LOC_OTHER = "LOC_OTHER"
    AGE = "AGE"
    DATE = "DATE"
    PHONE = "PHONE"
    FAX = "FAX"
    EMAIL = "EMAIL"
    URL = "URL"
    IPADDRESS = "IPADDRESS"
    IDNUM = "IDNUM"
    O = "O"

    def __str__(self):
        return self.value


PHI_LABELS = tuple(lab for lab in NormalizedLabel if lab is not NormalizedLabel.O)

# Labels the tagger targets out of the box; PROFESSION is opt-in.
DEFAULT_ENABLED_LABELS = frozenset(lab for lab in PHI_LABELS
                                   if lab is not NormalizedLabel.PROFESSION)

_LOCATION_MAP = {
    "HOSPITAL": NormalizedLabel.ORG,
    "ORGANIZATION": NormalizedLabel.ORG,
    "STREET": NormalizedLabel.STREET,
    "CITY": NormalizedLabel.CITY,
    "STATE": NormalizedLabel.STATE,
    "COUNTRY": NormalizedLabel.COUNTRY,
    "ZIP": NormalizedLabel.ZIP,
    "OTHER": NormalizedLabel.LOC_OTHER,
    None: NormalizedLabel.LOC_OTHER,
}


def normalize_label(c: PhiCategory) -> NormalizedLabel:
    """Collapse an i2b2 (category, subtype) pair onto the tagger's label set.

    All NAME subtypes merge into NAME, HOSPITAL and ORGANIZATION merge into
    ORG, every ID subtype becomes IDNUM. Contact subtypes keep their own
    labels; a bare CONTACT falls back to PHONE.
    """
    cat = c.category
    if cat is Category.NAME:
        return NormalizedLabel.NAME
    if cat is Category.PROFESSION:
        return NormalizedLabel.PROFESSION
    if cat is Category.AGE:
        return NormalizedLabel.AGE
    if cat is Category.DATE:
        return NormalizedLabel.DATE
    if cat is Category.LOCATION:
        return _LOCATION_MAP[c.subtype]
    if cat is Category.CONTACT:
        return NormalizedLabel(c.subtype) if c.subtype else NormalizedLabel.PHONE
    return NormalizedLabel.IDNUM


def as_label(value) -> NormalizedLabel:
    if isinstance(value, NormalizedLabel):
        return value
    return NormalizedLabel(str(value).upper())


class Source(str, Enum):
    REGEX = "REGEX"
    MODEL = "MODEL"
    GOLD = "GOLD"


@dataclass(frozen=True, order=True)
class PhiSpan:
    """Half-open character interval carrying a normalized label."""

    start: int
    end: int
    label: NormalizedLabel
    source: Source = Source.MODEL
    confidence: float = 1.0
    # finer-grained recognizer name, e.g. SSN for an IDNUM found by regex
    kind: Optional[str] = None

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError(f"empty or inverted span ({self.start}, {self.end})")
        label = as_label(self.label)
        if label is NormalizedLabel.O:
            raise ValueError("a span cannot carry the O label")
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "source", Source(self.source))

    def __len__(self):
        return self.end - self.start

    def overlaps(self, other: "PhiSpan") -> bool:
        return self.start < other.end and other.start < self.end

    def shifted(self, offset: int) -> "PhiSpan":
        return PhiSpan(self.start + offset, self.end + offset, self.label,
                       self.source, self.confidence, self.kind)
