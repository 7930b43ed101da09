"""Codepoint-exact model of the encoded mushaf text.

A word is a sequence of graphemes; a grapheme is one base letter plus its
combining marks, stored in a fixed canonical order so that equality is
well defined.  Every combining mark must belong to the inventory declared
in data/marks.tsv; the table, not this module, decides what each codepoint
means.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from enum import Enum
from importlib import resources

TATWIL = "ـ"


class MarkClass(Enum):
    HARAKAH_FATHA = "HARAKAH_FATHA"
    HARAKAH_DAMMA = "HARAKAH_DAMMA"
    HARAKAH_KASRA = "HARAKAH_KASRA"
    SUKUN = "SUKUN"
    SHADDA = "SHADDA"
    TANWIN_STD_F = "TANWIN_STD_F"
    TANWIN_STD_D = "TANWIN_STD_D"
    TANWIN_STD_K = "TANWIN_STD_K"
    TANWIN_OPEN_F = "TANWIN_OPEN_F"
    TANWIN_OPEN_D = "TANWIN_OPEN_D"
    TANWIN_OPEN_K = "TANWIN_OPEN_K"
    MINI_MIM = "MINI_MIM"
    MINI_WAW = "MINI_WAW"
    MINI_YA = "MINI_YA"
    MINI_SIN = "MINI_SIN"
    MINI_ALIF = "MINI_ALIF"
    MADD_SIGN = "MADD_SIGN"
    SILENT_ZERO = "SILENT_ZERO"
    PAUSAL_ZERO = "PAUSAL_ZERO"
    HAMZA_MARK = "HAMZA_MARK"
    OTHER_MARK = "OTHER_MARK"


#: Marks that must be gone from a detajwidised text.  The superscript alif
#: (MINI_ALIF) is a lexical vowel letter, not tajwid, and survives; so do
#: the stop signs (OTHER_MARK).
TAJWID_MARKS = frozenset(
    {
        MarkClass.TANWIN_OPEN_F,
        MarkClass.TANWIN_OPEN_D,
        MarkClass.TANWIN_OPEN_K,
        MarkClass.MINI_MIM,
        MarkClass.MINI_WAW,
        MarkClass.MINI_YA,
        MarkClass.MINI_SIN,
        MarkClass.MADD_SIGN,
        MarkClass.SILENT_ZERO,
        MarkClass.PAUSAL_ZERO,
    }
)

# Canonical in-grapheme mark order: shadda, then hamza marks, then vowels
# (harakat / tanwin / sukun), then miniature letters, then the madd sign,
# then the sifr (zero) signs, then anything else.  Ties break on codepoint.
_ORDER_RANK = {
    MarkClass.SHADDA: 0,
    MarkClass.HAMZA_MARK: 1,
    MarkClass.HARAKAH_FATHA: 2,
    MarkClass.HARAKAH_DAMMA: 2,
    MarkClass.HARAKAH_KASRA: 2,
    MarkClass.SUKUN: 2,
    MarkClass.TANWIN_STD_F: 2,
    MarkClass.TANWIN_STD_D: 2,
    MarkClass.TANWIN_STD_K: 2,
    MarkClass.TANWIN_OPEN_F: 2,
    MarkClass.TANWIN_OPEN_D: 2,
    MarkClass.TANWIN_OPEN_K: 2,
    MarkClass.MINI_ALIF: 3,
    MarkClass.MINI_MIM: 3,
    MarkClass.MINI_WAW: 3,
    MarkClass.MINI_YA: 3,
    MarkClass.MINI_SIN: 3,
    MarkClass.MADD_SIGN: 4,
    MarkClass.SILENT_ZERO: 5,
    MarkClass.PAUSAL_ZERO: 5,
    MarkClass.OTHER_MARK: 6,
}


class EncodingError(ValueError):
    """Raised for codepoints outside the supported inventory."""


def _load_marks():
    table = {}
    names = {}
    text = resources.files("quran_tajwid.data").joinpath("marks.tsv").read_text("utf-8")
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        cp_hex, cls, name = line.split("\t")
        cp = chr(int(cp_hex, 16))
        table[cp] = MarkClass(cls)
        names[name] = cp
    return table, names


def _load_letter_classes():
    classes = {}
    text = (
        resources.files("quran_tajwid.data")
        .joinpath("letter_classes.tsv")
        .read_text("utf-8")
    )
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, letters = line.split("\t")
        classes[name] = frozenset(letters)
    return classes


#: codepoint -> MarkClass for every supported combining mark
MARK_INVENTORY, MARK_NAMES = _load_marks()
#: class name -> frozenset of base letters
LETTER_CLASSES = _load_letter_classes()

HAMZA_LETTERS = frozenset("ءأإؤئ")


def classify_mark(cp: str) -> MarkClass:
    """Class of a combining codepoint, or EncodingError if unsupported."""
    try:
        return MARK_INVENTORY[cp]
    except KeyError:
        raise EncodingError(
            f"combining codepoint U+{ord(cp):04X} is outside the mark inventory"
        ) from None


def mark_named(name: str) -> str:
    """Codepoint of an inventory mark by its short name (see marks.tsv)."""
    try:
        return MARK_NAMES[name]
    except KeyError:
        raise EncodingError(f"unknown mark name {name!r}") from None


def is_combining(cp: str) -> bool:
    return cp in MARK_INVENTORY or unicodedata.combining(cp) > 0


def sort_marks(marks) -> tuple:
    """Marks in canonical order (callers pass any iterable of codepoints)."""
    return tuple(sorted(marks, key=lambda m: (_ORDER_RANK[classify_mark(m)], m)))


@dataclass(frozen=True)
class Grapheme:
    """One base letter plus its combining marks in canonical order."""

    base: str
    marks: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "marks", tuple(self.marks))

    @property
    def mark_classes(self) -> tuple:
        return tuple(classify_mark(m) for m in self.marks)

    def has_mark(self, cp: str) -> bool:
        return cp in self.marks

    def text(self) -> str:
        return self.base + "".join(self.marks)

    def with_marks(self, marks) -> "Grapheme":
        return Grapheme(self.base, sort_marks(marks))


def normalize(raw: str) -> str:
    """Normalize raw text: drop tatwil, put marks in canonical order.

    No codepoint other than tatwil (U+0640) is added or removed.  Unknown
    combining codepoints are rejected with their offset in the input.
    """
    out = []
    pending = []  # marks of the current base letter
    for offset, cp in enumerate(raw):
        if cp == TATWIL:
            continue
        if is_combining(cp):
            if cp not in MARK_INVENTORY:
                raise EncodingError(
                    f"combining codepoint U+{ord(cp):04X} at offset {offset}"
                    " is outside the mark inventory"
                )
            pending.append(cp)
        else:
            if pending:
                out.extend(sort_marks(pending))
                pending.clear()
            out.append(cp)
    if pending:
        out.extend(sort_marks(pending))
    return "".join(out)


def segment(word: str) -> list:
    """Split a normalized word into graphemes.

    Concatenating base + marks over the result reproduces the input exactly.
    """
    graphemes = []
    for offset, cp in enumerate(word):
        if is_combining(cp):
            if cp not in MARK_INVENTORY:
                raise EncodingError(
                    f"combining codepoint U+{ord(cp):04X} at offset {offset}"
                    " is outside the mark inventory"
                )
            if not graphemes:
                raise EncodingError(
                    f"combining mark U+{ord(cp):04X} at offset {offset}"
                    " has no base letter"
                )
            last = graphemes[-1]
            graphemes[-1] = Grapheme(last.base, last.marks + (cp,))
        else:
            graphemes.append(Grapheme(cp))
    return graphemes


def serialize(graphemes) -> str:
    """Inverse of segment: exact concatenation of base + marks."""
    return "".join(g.text() for g in graphemes)


def letters_of(class_name: str) -> frozenset:
    try:
        return LETTER_CLASSES[class_name]
    except KeyError:
        raise EncodingError(f"unknown letter class {class_name!r}") from None
