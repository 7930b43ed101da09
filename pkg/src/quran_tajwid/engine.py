"""Reversible rewrite rules applied as an ordered cascade.

A rule pairs a tajwid-side pattern with a plain-side pattern over the same
letter skeleton.  REMOVE rewrites tajwid form to plain form in ascending
rank order; ADD rewrites plain form back to tajwid form in descending rank
order, so the reverse cascade is a mirror of the forward one.

Pattern mini-notation (one token per grapheme, space separated):

    ن[]                  bare nun: no marks at all
    ن[sukun]             nun carrying exactly a sukun
    (نم)[shadda;VOWEL]   nun or mim, owns a shadda, vowel marks pass through
    IKHFA_SET[;*]        context element: any member, any marks, untouched
    ?(اى)[;round_zero]   optional seat letter between the sides
    !(ءأإؤئٱ)[;*]        negated context: next grapheme is NOT one of these
    |                    the word boundary (cross-word patterns only)
    ^  $                 word anchors (within-word patterns)

Mark names inside [] come from data/marks.tsv.  The marks left of ';' are
owned by that side of the rule and are swapped when the rule fires; marks
in the pass list (after ';', '*' for anything) survive a firing untouched.
Both sides of a rule must agree on everything except the owned marks.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum

from .corpus import Corpus, Locator, POSTag, Verse, Word
from .encoding import (
    Grapheme,
    letters_of,
    mark_named,
    segment,
    serialize,
    sort_marks,
)


class RuleError(ValueError):
    """A rule failed to compile."""


class EngineError(RuntimeError):
    """A cascade was applied outside its contract."""


class Direction(Enum):
    REMOVE = "REMOVE"
    ADD = "ADD"


MARK_GROUPS = {
    "HARAKAH": ("fatha", "damma", "kasra"),
    "VOWEL": ("fatha", "damma", "kasra", "dagger_alif"),
    "TANWIN_STD": ("fathatan", "dammatan", "kasratan"),
    "TANWIN_OPEN": ("open_fathatan", "open_dammatan", "open_kasratan"),
    "SIFR": ("round_zero", "upright_zero"),
}


@dataclass(frozen=True)
class Guard:
    pos: POSTag | None = None
    word_forms: frozenset | None = None  # tajwid-side full word forms
    exceptions: frozenset = frozenset()  # locators where the rule must not fire
    only_at: frozenset = frozenset()  # locators where alone the rule may fire

    def __post_init__(self):
        if self.only_at & self.exceptions:
            raise RuleError("guard only_at and exceptions overlap")


@dataclass(frozen=True)
class BiRule:
    id: str
    group: str  # ASSIM | ELONG | PAUSAL
    family: str  # reporting bucket, e.g. ASSIM-N
    rank: int
    tajwid: tuple  # pattern variant strings
    plain: tuple
    guard: Guard = Guard()
    note: str = ""

    @property
    def identity(self) -> bool:
        return self.tajwid == self.plain


@dataclass(frozen=True)
class Firing:
    rule_id: str
    direction: Direction
    loc: Locator  # first word of the span
    span: int  # 1 or 2 words
    before: str
    after: str


@dataclass
class Trace:
    direction: Direction
    firings: list = field(default_factory=list)
    warnings: list = field(default_factory=list)


def census(trace: Trace) -> dict:
    """Exact firing count per rule id."""
    return dict(Counter(f.rule_id for f in trace.firings))


# ---------------------------------------------------------------------------
# pattern compilation

_ELEMENT_RE = re.compile(r"^(?P<flags>[?!]*)(?P<base>[^\[\]]+)\[(?P<spec>[^\]]*)\]$")


def _parse_base(token: str):
    if token == ".":
        return None
    if token.startswith("(") and token.endswith(")"):
        return frozenset(token[1:-1])
    if re.fullmatch(r"[A-Z_]+", token):
        return letters_of(token)
    if len(token) == 1:
        return frozenset(token)
    raise RuleError(f"bad base matcher {token!r}")


def _parse_marks(names: str) -> frozenset:
    cps = set()
    for name in filter(None, (n.strip() for n in names.split(","))):
        if name in MARK_GROUPS:
            cps.update(mark_named(n) for n in MARK_GROUPS[name])
        else:
            cps.add(mark_named(name))
    return frozenset(cps)


@dataclass(frozen=True)
class _SideElem:
    bases: frozenset | None
    negate: bool
    optional: bool
    owned: frozenset
    passes: frozenset | None  # None = anything passes


def _parse_side(pattern: str):
    """One pattern string -> (tokens, boundary position or None, anchors)."""
    elems = []
    boundary = None
    anchor_start = anchor_end = False
    raw = pattern.split()
    for tok in raw:
        if tok == "|":
            if boundary is not None:
                raise RuleError("more than one boundary in pattern")
            boundary = len(elems)
            continue
        if tok == "^":
            anchor_start = True
            continue
        if tok == "$":
            anchor_end = True
            continue
        m = _ELEMENT_RE.match(tok)
        if not m:
            raise RuleError(f"bad pattern element {tok!r}")
        flags = m.group("flags")
        bases = _parse_base(m.group("base"))
        spec = m.group("spec")
        owned_part, _, pass_part = spec.partition(";")
        owned = _parse_marks(owned_part)
        pass_part = pass_part.strip()
        passes = None if pass_part == "*" else _parse_marks(pass_part)
        negate = "!" in flags
        if negate and bases is None:
            raise RuleError("negated element needs a concrete base set")
        elems.append(
            _SideElem(bases, negate, "?" in flags, owned, passes)
        )
    if not elems:
        raise RuleError("empty pattern")
    if boundary is not None and (anchor_start or anchor_end):
        raise RuleError("anchors are for within-word patterns only")
    return elems, boundary, anchor_start, anchor_end


@dataclass(frozen=True)
class _Elem:
    bases: frozenset | None
    negate: bool
    optional: bool
    owned_t: frozenset
    owned_p: frozenset
    passes: frozenset | None

    def owned(self, side: str) -> frozenset:
        return self.owned_t if side == "t" else self.owned_p

    def matches(self, g: Grapheme, side: str) -> bool:
        if self.negate:
            return g.base not in self.bases
        if self.bases is not None and g.base not in self.bases:
            return False
        marks = set(g.marks)
        owned = self.owned(side)
        if not owned <= marks:
            return False
        extra = marks - owned
        return self.passes is None or extra <= self.passes

    def rewrite(self, g: Grapheme, src: str) -> Grapheme:
        dst = "p" if src == "t" else "t"
        if self.negate or self.owned(src) == self.owned(dst):
            return g
        marks = (set(g.marks) - self.owned(src)) | self.owned(dst)
        return g.with_marks(sort_marks(marks))


@dataclass(frozen=True)
class _Variant:
    elems: tuple
    boundary: int | None  # split index for cross-word variants
    anchor_start: bool
    anchor_end: bool

    @property
    def cross(self) -> bool:
        return self.boundary is not None

    @property
    def left(self):
        return self.elems[: self.boundary]

    @property
    def right(self):
        return self.elems[self.boundary :]


def _compile_variant(rule_id: str, t_pat: str, p_pat: str) -> _Variant:
    t_elems, t_b, t_as, t_ae = _parse_side(t_pat)
    p_elems, p_b, p_as, p_ae = _parse_side(p_pat)
    if len(t_elems) != len(p_elems) or t_b != p_b or (t_as, t_ae) != (p_as, p_ae):
        raise RuleError(f"rule {rule_id}: pattern sides have different shapes")
    elems = []
    for te, pe in zip(t_elems, p_elems):
        if (te.bases, te.negate, te.optional, te.passes) != (
            pe.bases,
            pe.negate,
            pe.optional,
            pe.passes,
        ):
            raise RuleError(
                f"rule {rule_id}: sides disagree outside the owned marks"
            )
        elems.append(
            _Elem(te.bases, te.negate, te.optional, te.owned, pe.owned, te.passes)
        )
    if t_b is not None and (t_b == 0 or t_b == len(elems)):
        raise RuleError(f"rule {rule_id}: boundary needs elements on both sides")
    return _Variant(tuple(elems), t_b, t_as, t_ae)


@dataclass(frozen=True)
class CompiledRule:
    rule: BiRule
    variants: tuple
    plain_forms: frozenset | None  # guard word forms rewritten to plain side

    @property
    def id(self):
        return self.rule.id

    def forms(self, side: str):
        if self.rule.guard.word_forms is None:
            return None
        return self.rule.guard.word_forms if side == "t" else self.plain_forms


@dataclass(frozen=True)
class CompiledPack:
    rules: tuple  # CompiledRule, ascending rank
    has_pos_guards: bool

    def ids(self):
        return [r.id for r in self.rules]

    def get(self, rule_id: str) -> CompiledRule:
        for r in self.rules:
            if r.id == rule_id:
                return r
        raise KeyError(rule_id)

    def without(self, rule_id: str) -> "CompiledPack":
        """Pack with one rule removed (fault injection helper)."""
        kept = tuple(r for r in self.rules if r.id != rule_id)
        if len(kept) == len(self.rules):
            raise KeyError(rule_id)
        return CompiledPack(kept, any(r.rule.guard.pos for r in kept))


def _derive_plain_form(cr_variants, form: str, rule_id: str) -> str:
    """Apply a rule's own within-word variants once to a listed word form."""
    gs = list(segment(form))
    changed = False
    for variant in cr_variants:
        if variant.cross:
            continue
        for start, end, bindings in _scan_word(variant, gs, "t"):
            for idx, elem in bindings:
                gs[idx] = elem.rewrite(gs[idx], "t")
            changed = True
            break  # one firing per form is enough for derivation
        if changed:
            break
    if not changed:
        raise RuleError(
            f"rule {rule_id}: listed word form {form!r} does not match the rule"
        )
    return serialize(gs)


def compile_rules(rules) -> CompiledPack:
    """Validate and compile a rule list into an immutable pack."""
    seen_ids = set()
    seen_ranks = set()
    compiled = []
    for rule in rules:
        if rule.id in seen_ids:
            raise RuleError(f"duplicate rule id {rule.id}")
        seen_ids.add(rule.id)
        if rule.rank in seen_ranks:
            raise RuleError(f"rule {rule.id}: duplicate rank {rule.rank}")
        seen_ranks.add(rule.rank)
        if len(rule.tajwid) != len(rule.plain):
            raise RuleError(f"rule {rule.id}: variant lists differ in length")
        try:
            variants = tuple(
                _compile_variant(rule.id, t, p)
                for t, p in zip(rule.tajwid, rule.plain)
            )
        except RuleError:
            raise
        except Exception as exc:
            raise RuleError(f"rule {rule.id}: {exc}") from exc
        plain_forms = None
        if rule.guard.word_forms is not None:
            normalized = frozenset(rule.guard.word_forms)
            if rule.identity:
                plain_forms = normalized
            else:
                plain_forms = frozenset(
                    _derive_plain_form(variants, f, rule.id) for f in normalized
                )
        compiled.append(CompiledRule(rule, variants, plain_forms))
    compiled.sort(key=lambda cr: cr.rule.rank)
    return CompiledPack(tuple(compiled), any(r.guard.pos for r in rules))


# ---------------------------------------------------------------------------
# matching

MAX_SPAN = 8  # elements per pattern side, a small fixed bound


def _match_seq(elems, k, gs, i, side, bindings):
    """Try to match elems[k:] at gs[i:].  Returns end index or None."""
    if k == len(elems):
        return i
    elem = elems[k]
    if elem.optional:
        if i < len(gs) and elem.matches(gs[i], side):
            bindings.append((i, elem))
            end = _match_seq(elems, k + 1, gs, i + 1, side, bindings)
            if end is not None:
                return end
            bindings.pop()
        return _match_seq(elems, k + 1, gs, i, side, bindings)
    if i >= len(gs) or not elem.matches(gs[i], side):
        return None
    bindings.append((i, elem))
    end = _match_seq(elems, k + 1, gs, i + 1, side, bindings)
    if end is None:
        bindings.pop()
    return end


def _scan_word(variant: _Variant, gs, side: str):
    """Yield (start, end, bindings) for non-overlapping within-word matches."""
    if variant.cross:
        return
    i = 0
    n = len(gs)
    while i <= n - 1:
        if variant.anchor_start and i > 0:
            return
        bindings = []
        end = _match_seq(variant.elems, 0, gs, i, side, bindings)
        if end is not None and (not variant.anchor_end or end == n):
            yield i, end, bindings
            i = max(end, i + 1)
        else:
            i += 1


def _match_cross(variant: _Variant, gs_left, gs_right, side: str):
    """Match left elems as a suffix of one word, right elems as the next
    word's prefix.  Returns (left bindings, right bindings) or None."""
    if not variant.cross:
        return None
    n = len(gs_left)
    lo = max(0, n - len(variant.left))
    for i in range(n - 1, lo - 1, -1):
        bindings = []
        end = _match_seq(variant.left, 0, gs_left, i, side, bindings)
        if end == n:
            right_bindings = []
            rend = _match_seq(variant.right, 0, gs_right, 0, side, right_bindings)
            if rend is not None:
                return bindings, right_bindings
    return None


# ---------------------------------------------------------------------------
# cascade application


class _WorkWord:
    __slots__ = ("loc", "pos", "gs")

    def __init__(self, word: Word):
        self.loc = word.loc
        self.pos = word.pos
        self.gs = list(word.graphemes)

    def text(self) -> str:
        return serialize(self.gs)


def _guard_allows(cr: CompiledRule, side: str, words, wi: int, span: int) -> bool:
    guard = cr.rule.guard
    first = words[wi]
    if guard.pos is not None and first.pos is not guard.pos:
        return False
    if guard.only_at and first.loc not in guard.only_at:
        return False
    for k in range(span):
        if words[wi + k].loc in guard.exceptions:
            return False
    forms = cr.forms(side)
    if forms is not None and first.text() not in forms:
        return False
    return True


def _would_fire(cr: CompiledRule, side: str, words, wi: int) -> bool:
    """Does any variant of cr match at word wi (or boundary wi/wi+1)?"""
    if cr.rule.identity:
        return False
    word = words[wi]
    for variant in cr.variants:
        if variant.cross:
            if wi + 1 < len(words) and _guard_allows(cr, side, words, wi, 2):
                if _match_cross(variant, word.gs, words[wi + 1].gs, side):
                    return True
        else:
            if _guard_allows(cr, side, words, wi, 1):
                if next(_scan_word(variant, word.gs, side), None) is not None:
                    return True
    return False


def apply_cascade(corpus: Corpus, pack: CompiledPack, direction, check_feeding=True):
    """Run the full cascade in one direction.

    Returns (new corpus, trace).  Rules run in rank order for REMOVE and in
    reverse rank order for ADD; within one rule the corpus gets a single
    left-to-right pass with leftmost, non-overlapping matches.  Base letters
    are never rewritten.  If any rule carries a part-of-speech guard the
    corpus must be morphology-aligned.
    """
    direction = Direction(direction)
    if pack.has_pos_guards and not corpus.aligned:
        guarded = [r.id for r in pack.rules if r.rule.guard.pos]
        raise EngineError(
            "corpus is not morphology-aligned but the pack has POS-guarded "
            f"rules: {', '.join(guarded)}"
        )
    side = "t" if direction is Direction.REMOVE else "p"
    trace = Trace(direction)

    work = [
        ( (v.sura, v.aya), [_WorkWord(w) for w in v.words] )
        for v in corpus.verses
    ]

    order = pack.rules if direction is Direction.REMOVE else tuple(reversed(pack.rules))
    applied = []
    for cr in order:
        if cr.rule.identity:
            applied.append(cr)
            continue
        for _, words in work:
            for wi in range(len(words)):
                _fire_intra(cr, side, words, wi, trace, applied, check_feeding)
                if wi + 1 < len(words):
                    _fire_cross(cr, side, words, wi, trace, applied, check_feeding)
        applied.append(cr)

    verses = []
    for (sura, aya), words in work:
        verses.append(
            Verse(
                sura,
                aya,
                tuple(
                    Word(w.loc, tuple(w.gs), w.pos) for w in words
                ),
            )
        )
    return Corpus(tuple(verses), aligned=corpus.aligned), trace


def _fire_intra(cr, side, words, wi, trace, applied, check_feeding):
    word = words[wi]
    fired = False
    for variant in cr.variants:
        if variant.cross:
            continue
        if not _guard_allows(cr, side, words, wi, 1):
            break
        # collect matches first so a rewrite cannot feed this same pass
        matches = list(_scan_word(variant, word.gs, side))
        for _, _, bindings in matches:
            before = word.text()
            for idx, elem in bindings:
                word.gs[idx] = elem.rewrite(word.gs[idx], side)
            after = word.text()
            if before != after:
                trace.firings.append(
                    Firing(cr.id, trace.direction, word.loc, 1, before, after)
                )
                fired = True
    if fired and check_feeding:
        _feeding_check(cr, side, words, wi, 1, trace, applied)


def _fire_cross(cr, side, words, wi, trace, applied, check_feeding):
    left, right = words[wi], words[wi + 1]
    if not _guard_allows(cr, side, words, wi, 2):
        return
    for variant in cr.variants:
        if not variant.cross:
            continue
        m = _match_cross(variant, left.gs, right.gs, side)
        if m is None:
            continue
        lb, rb = m
        before = f"{left.text()} {right.text()}"
        for idx, elem in lb:
            left.gs[idx] = elem.rewrite(left.gs[idx], side)
        for idx, elem in rb:
            right.gs[idx] = elem.rewrite(right.gs[idx], side)
        after = f"{left.text()} {right.text()}"
        if before != after:
            trace.firings.append(
                Firing(cr.id, trace.direction, left.loc, 2, before, after)
            )
            if check_feeding:
                _feeding_check(cr, side, words, wi, 2, trace, applied)
        return  # at most one firing per word boundary per rule


def _feeding_check(cr, side, words, wi, span, trace, applied):
    """Warn when a firing creates a match for an earlier-ranked rule."""
    for earlier in applied:
        for k in range(span):
            if _would_fire(earlier, side, words, wi + k):
                trace.warnings.append(
                    f"{cr.id} at {words[wi].loc} feeds earlier rule {earlier.id}"
                )
                return


# ---------------------------------------------------------------------------
# trace replay (used by verification tests)


def replay_trace(corpus: Corpus, trace: Trace) -> Corpus:
    """Re-apply a trace's firings over the input corpus, word by word.

    Each firing's recorded before-text must match the current state; the
    result of replaying every firing equals the cascade output.
    """
    verses = {(v.sura, v.aya): [w for w in v.words] for v in corpus.verses}
    for f in trace.firings:
        words = verses[(f.loc.sura, f.loc.aya)]
        i = f.loc.word - 1
        current = " ".join(w.text() for w in words[i : i + f.span])
        if current != f.before:
            raise EngineError(
                f"replay mismatch at {f.loc}: expected {f.before!r}, got {current!r}"
            )
        new_texts = f.after.split(" ")
        for k, text in enumerate(new_texts):
            old = words[i + k]
            words[i + k] = Word(old.loc, tuple(segment(text)), old.pos)
    rebuilt = tuple(
        Verse(v.sura, v.aya, tuple(verses[(v.sura, v.aya)])) for v in corpus.verses
    )
    return Corpus(rebuilt, aligned=corpus.aligned)
