"""Verse-addressed corpus with the Qs:a:w locator scheme.

Two input shapes are supported:

* PIPE: one aya per line, ``sura|aya|text``
* PLAIN: one aya per line of bare text, plus a sidecar index stream with
  matching ``sura|aya`` lines

Words are whitespace-separated tokens of the normalized line.  Morphology
comes from a tab-separated table with segment-level rows that are collapsed
to one part-of-speech tag per word.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

from .encoding import Grapheme, normalize, segment, serialize


class CorpusError(ValueError):
    """Raised for malformed corpus or morphology input."""


class POSTag(Enum):
    NOUN = "NOUN"
    VERB = "VERB"
    PARTICLE = "PARTICLE"


@dataclass(frozen=True, order=True)
class Locator:
    sura: int
    aya: int
    word: int

    def __post_init__(self):
        if not (1 <= self.sura <= 114) or self.aya < 1 or self.word < 1:
            raise CorpusError(f"locator out of range: {self.sura}:{self.aya}:{self.word}")

    def __str__(self):
        return f"Q{self.sura}:{self.aya}:{self.word}"

    @classmethod
    def parse(cls, text: str) -> "Locator":
        """Accepts 's:a:w' with an optional leading Q."""
        body = text[1:] if text[:1] in ("Q", "q") else text
        try:
            s, a, w = (int(p) for p in body.split(":"))
        except ValueError:
            raise CorpusError(f"bad locator {text!r}") from None
        return cls(s, a, w)


@dataclass(frozen=True)
class Word:
    loc: Locator
    graphemes: tuple
    pos: POSTag | None = None

    def text(self) -> str:
        return serialize(self.graphemes)


@dataclass(frozen=True)
class Verse:
    sura: int
    aya: int
    words: tuple


@dataclass(frozen=True)
class Corpus:
    verses: tuple
    aligned: bool = False
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        index = {}
        for v in self.verses:
            for w in v.words:
                index[w.loc] = w
        object.__setattr__(self, "_index", index)

    def words(self):
        for v in self.verses:
            yield from v.words

    def word_count(self) -> int:
        return sum(len(v.words) for v in self.verses)

    def locators(self):
        return list(self._index)

    def get(self, loc: Locator) -> Word | None:
        return self._index.get(loc)


def _make_verse(sura: int, aya: int, text: str, lineno: int) -> Verse:
    words = []
    for i, token in enumerate(text.split(), start=1):
        try:
            graphemes = tuple(segment(normalize(token)))
        except Exception as exc:
            raise CorpusError(f"line {lineno}: bad word {i}: {exc}") from exc
        if not graphemes:
            raise CorpusError(f"line {lineno}: empty word {i}")
        words.append(Word(Locator(sura, aya, i), graphemes))
    return Verse(sura, aya, tuple(words))


def load_verses(stream, format: str = "PIPE", index_stream=None) -> Corpus:
    """Parse verse lines into a Corpus.

    ``stream`` is an iterable of lines (an open file does).  For PLAIN
    format, ``index_stream`` supplies one ``sura|aya`` line per text line.
    Locators must be strictly increasing in file order.
    """
    if format not in ("PIPE", "PLAIN"):
        raise CorpusError(f"unknown corpus format {format!r}")
    if format == "PLAIN" and index_stream is None:
        raise CorpusError("PLAIN format needs a sidecar index stream")

    verses = []
    last = (0, 0)
    index_lines = None
    if format == "PLAIN":
        index_lines = [ln.strip() for ln in index_stream if ln.strip()]

    lines = [ln.rstrip("\n") for ln in stream]
    body = [(n, ln) for n, ln in enumerate(lines, start=1) if ln.strip()]
    if format == "PLAIN" and len(body) != len(index_lines):
        raise CorpusError(
            f"index has {len(index_lines)} entries for {len(body)} text lines"
        )

    for pos, (lineno, line) in enumerate(body):
        if format == "PIPE":
            parts = line.split("|", 2)
            if len(parts) != 3:
                raise CorpusError(f"line {lineno}: expected sura|aya|text")
            s_raw, a_raw, text = parts
        else:
            text = line
            parts = index_lines[pos].split("|")
            if len(parts) != 2:
                raise CorpusError(f"index line {pos + 1}: expected sura|aya")
            s_raw, a_raw = parts
        try:
            sura, aya = int(s_raw), int(a_raw)
        except ValueError:
            raise CorpusError(f"line {lineno}: non-numeric sura/aya") from None
        if (sura, aya) <= last:
            raise CorpusError(f"line {lineno}: non-monotonic verse {sura}:{aya}")
        last = (sura, aya)
        verses.append(_make_verse(sura, aya, text, lineno))
    return Corpus(tuple(verses))


def dump_verses(corpus: Corpus, format: str = "PIPE"):
    """Corpus back to lines.  PLAIN returns (text_lines, index_lines)."""
    text_lines = []
    index_lines = []
    for v in corpus.verses:
        text = " ".join(w.text() for w in v.words)
        if format == "PIPE":
            text_lines.append(f"{v.sura}|{v.aya}|{text}")
        else:
            text_lines.append(text)
            index_lines.append(f"{v.sura}|{v.aya}")
    if format == "PIPE":
        return text_lines
    return text_lines, index_lines


# ---------------------------------------------------------------------------
# morphology


def load_morphology(stream) -> dict:
    """Tab-separated segment table -> {Locator: POSTag}.

    Rows are ``s:a:w:seg<TAB>TAG[<TAB>ROLE]`` with TAG in {N, V, P} and an
    optional ROLE of STEM (default for single-segment words).  Collapsing:
    a word with any nominal segment is NOUN unless its stem segment is
    verbal, in which case it is VERB; otherwise the stem's tag decides.
    """
    tag_by_letter = {"N": POSTag.NOUN, "V": POSTag.VERB, "P": POSTag.PARTICLE}
    segments = {}  # (loc, seg) -> (tag, role)
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) not in (2, 3):
            raise CorpusError(f"morphology row {lineno}: expected 2 or 3 fields")
        ref, tag_raw = parts[0], parts[1]
        role = parts[2] if len(parts) == 3 else ""
        try:
            s, a, w, seg = (int(p) for p in ref.split(":"))
        except ValueError:
            raise CorpusError(f"morphology row {lineno}: bad locator {ref!r}") from None
        if tag_raw not in tag_by_letter:
            raise CorpusError(f"morphology row {lineno}: unknown tag {tag_raw!r}")
        key = (Locator(s, a, w), seg)
        entry = (tag_by_letter[tag_raw], role.upper())
        if key in segments and segments[key] != entry:
            raise CorpusError(f"morphology row {lineno}: conflicting duplicate for {ref}")
        segments[key] = entry

    by_word = {}
    for (loc, seg), (tag, role) in segments.items():
        by_word.setdefault(loc, []).append((seg, tag, role))

    result = {}
    for loc, segs in by_word.items():
        segs.sort()
        stem = next((t for _, t, r in segs if r == "STEM"), None)
        if stem is None and len(segs) == 1:
            stem = segs[0][1]
        if stem is POSTag.VERB:
            result[loc] = POSTag.VERB
        elif any(t is POSTag.NOUN for _, t, _ in segs):
            result[loc] = POSTag.NOUN
        elif stem is not None:
            result[loc] = stem
        else:
            # multi-segment word with no stem marked and no nominal segment
            result[loc] = segs[0][1]
    return result


@dataclass(frozen=True)
class AlignmentReport:
    total: int
    tagged: int
    untagged: tuple  # locators with no tag
    orphans: tuple  # tag locators absent from the corpus

    @property
    def coverage(self) -> float:
        return self.tagged / self.total if self.total else 1.0


def align_morphology(corpus: Corpus, tags: dict):
    """Attach tags to words; returns (new corpus, AlignmentReport).

    Grapheme content is never touched.  Missing tags are reported, not
    fatal: untagged words simply never satisfy a POS guard.
    """
    untagged = []
    verses = []
    for v in corpus.verses:
        words = []
        for w in v.words:
            tag = tags.get(w.loc)
            if tag is None:
                untagged.append(w.loc)
                words.append(w)
            else:
                words.append(replace(w, pos=tag))
        verses.append(Verse(v.sura, v.aya, tuple(words)))
    new = Corpus(tuple(verses), aligned=True)
    orphans = tuple(loc for loc in tags if corpus.get(loc) is None)
    report = AlignmentReport(
        total=corpus.word_count(),
        tagged=corpus.word_count() - len(untagged),
        untagged=tuple(untagged),
        orphans=orphans,
    )
    return new, report


def locate(corpus: Corpus, loc: Locator) -> Word:
    word = corpus.get(loc)
    if word is None:
        raise CorpusError(f"no word at {loc}")
    return word
