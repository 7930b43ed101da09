"""The concrete rule pack: loading, grouping, and exception lexicons.

Rules live in data/rules.json; guard lists referenced as ``@name`` live in
data/lexicons/name.txt (word-form files hold one normalized form per line,
locator files one ``sura:aya:word`` per line).  data/rule_inventory.json is
the authoritative id inventory the loaded pack is checked against.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .corpus import Locator, POSTag
from .encoding import normalize
from .engine import BiRule, Guard, RuleError, compile_rules


def _data_root():
    return resources.files("quran_tajwid.data")


def _read_lexicon(name: str, rules_dir=None) -> list:
    fname = f"{name}.txt"
    if rules_dir is not None:
        path = Path(rules_dir) / "lexicons" / fname
        if not path.is_file():
            raise RuleError(f"missing lexicon file {path}")
        text = path.read_text("utf-8")
    else:
        ref = _data_root().joinpath("lexicons").joinpath(fname)
        try:
            text = ref.read_text("utf-8")
        except FileNotFoundError:
            raise RuleError(f"missing lexicon file {fname}") from None
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(line)
    return out


def _resolve_list(value, rules_dir, lexicons_used) -> list:
    if value is None:
        return []
    if isinstance(value, str):
        if not value.startswith("@"):
            raise RuleError(f"guard list must be inline or @file, got {value!r}")
        name = value[1:]
        items = _read_lexicon(name, rules_dir)
        lexicons_used[name] = items
        return items
    return list(value)


def _build_guard(raw: dict, rules_dir, lexicons_used) -> Guard:
    pos = raw.get("pos")
    forms = raw.get("forms")
    word_forms = None
    if forms is not None:
        word_forms = frozenset(
            normalize(f) for f in _resolve_list(forms, rules_dir, lexicons_used)
        )
    exceptions = frozenset(
        Locator.parse(s)
        for s in _resolve_list(raw.get("exceptions"), rules_dir, lexicons_used)
    )
    only_at = frozenset(
        Locator.parse(s)
        for s in _resolve_list(raw.get("only_at"), rules_dir, lexicons_used)
    )
    return Guard(
        pos=POSTag(pos) if pos else None,
        word_forms=word_forms,
        exceptions=exceptions,
        only_at=only_at,
    )


@dataclass(frozen=True)
class PackBundle:
    rules: tuple  # BiRule, file order
    lexicons: dict  # lexicon name -> list of lines

    def lexicon_counts(self):
        return {name: len(items) for name, items in self.lexicons.items()}


_cached_bundle = None


def load_rules(rules_dir=None) -> PackBundle:
    """Read rules.json (packaged, or from an external rules directory)."""
    global _cached_bundle
    if rules_dir is None and _cached_bundle is not None:
        return _cached_bundle
    if rules_dir is not None:
        path = Path(rules_dir) / "rules.json"
        if not path.is_file():
            raise RuleError(f"missing rules file {path}")
        raw = json.loads(path.read_text("utf-8"))
    else:
        raw = json.loads(_data_root().joinpath("rules.json").read_text("utf-8"))
    lexicons_used: dict = {}
    rules = []
    for rec in raw["rules"]:
        scoped_dir = rules_dir
        guard = _build_guard(rec.get("guard", {}), scoped_dir, lexicons_used)
        rules.append(
            BiRule(
                id=rec["id"],
                group=rec["group"],
                family=rec["family"],
                rank=rec["rank"],
                tajwid=tuple(rec["t"]),
                plain=tuple(rec["p"]),
                guard=guard,
                note=rec.get("note", ""),
            )
        )
    bundle = PackBundle(tuple(rules), lexicons_used)
    if rules_dir is None:
        _cached_bundle = bundle
    return bundle


def inventory() -> dict:
    """The checked-in id inventory (groups, identity ids, silah family)."""
    return json.loads(_data_root().joinpath("rule_inventory.json").read_text("utf-8"))


def assimilation_rules(rules_dir=None) -> list:
    return [r for r in load_rules(rules_dir).rules if r.group == "ASSIM"]


def elongation_rules(rules_dir=None) -> list:
    return [r for r in load_rules(rules_dir).rules if r.group == "ELONG"]


def pausal_rules(rules_dir=None) -> list:
    return [r for r in load_rules(rules_dir).rules if r.group == "PAUSAL"]


def exception_lexicon(rules_dir=None) -> dict:
    """All guard lexicons referenced by the pack, plus the documentation
    lists that no pattern consumes (the word-internal glide exemptions)."""
    bundle = load_rules(rules_dir)
    lexicons = dict(bundle.lexicons)
    # documentation-only list: forms whose internal nun+glide keeps sukun
    name = "n-glide-internal-exempt.forms"
    if name not in lexicons:
        lexicons[name] = [normalize(f) for f in _read_lexicon(name, rules_dir)]
    return lexicons


def default_pack(rules_dir=None):
    """Compile the shipped rule pack (or one from an external directory)."""
    return compile_rules(load_rules(rules_dir).rules)
