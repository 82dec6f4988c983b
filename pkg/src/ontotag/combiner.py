"""Merging dictionary and classifier annotations, and abbreviation handling.

Overlapping annotations are resolved inside connected overlap components:
same-label duplicates collapse to the best-scoring one, exact-span label
conflicts keep only the winner, and genuinely distinct overlaps all survive.
Local abbreviation definitions ("long form (SF)") then propagate the long
form's label to every occurrence of the short form.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .matcher import Annotation, SOURCE_DICT


@dataclass(frozen=True)
class AbbrevPair:
    short_text: str
    short_start: int
    short_end: int
    long_text: str
    long_start: int
    long_end: int


def overlaps(a, b) -> bool:
    """Half-open character intervals share at least one position."""
    return a.start < b.end and b.start < a.end


def _winner_key(a: Annotation):
    # Higher score wins; then dictionary over classifier, longer span, smaller
    # start. Label as the last resort keeps the ordering total.
    return (a.score, a.source == SOURCE_DICT, a.end - a.start, -a.start, a.label)


def combine(dict_anns, ml_anns) -> list[Annotation]:
    """Merge the two annotation streams into a consistent set.

    Singleton components pass through. Within a component: annotations sharing
    a label keep only the best; annotations sharing an exact span keep only the
    best; the rest coexist.
    """
    pool = sorted(
        list(dict_anns) + list(ml_anns),
        key=lambda a: (a.start, a.end, a.label, a.source, -a.score),
    )
    survivors = []
    for component in _components(pool):
        if len(component) == 1:
            survivors.extend(component)
            continue
        by_label: dict[str, Annotation] = {}
        for ann in component:
            cur = by_label.get(ann.label)
            if cur is None or _winner_key(ann) > _winner_key(cur):
                by_label[ann.label] = ann
        by_span: dict[tuple[int, int], Annotation] = {}
        for ann in by_label.values():
            key = (ann.start, ann.end)
            cur = by_span.get(key)
            if cur is None or _winner_key(ann) > _winner_key(cur):
                by_span[key] = ann
        survivors.extend(by_span.values())
    unique = {(a.start, a.end, a.label): a for a in survivors}
    return sorted(unique.values(), key=lambda a: (a.start, a.end, a.label))


def _components(sorted_anns):
    component: list[Annotation] = []
    reach = -1
    for ann in sorted_anns:
        if component and ann.start >= reach:
            yield component
            component = []
        component.append(ann)
        reach = max(reach, ann.end)
    if component:
        yield component


def _valid_short_form(text: str) -> bool:
    if not 2 <= len(text) <= 10:
        return False
    if len(text.split()) > 2:
        return False
    if not text[0].isalnum():
        return False
    return any(c.isalpha() for c in text)


def _find_long_form(short: str, window: str) -> int | None:
    """Right-to-left scan matching each short-form character inside the window.

    Returns the start index of the long form within the window, or None. The
    first short-form character must match at the start of a word.
    """
    s = len(short) - 1
    l = len(window) - 1
    while s >= 0:
        c = short[s].lower()
        if not c.isalnum():
            s -= 1
            continue
        while l >= 0:
            word_initial = l == 0 or not window[l - 1].isalnum()
            if window[l].lower() == c and (s > 0 or word_initial):
                break
            l -= 1
        if l < 0:
            return None
        s -= 1
        l -= 1
    return l + 1


def _long_form_ok(short: str, long_form: str) -> bool:
    if len(long_form) <= len(short):
        return False
    short_l = short.lower()
    return all(w.lower() != short_l for w in long_form.split())


def _word_spans_before(text: str, end: int, count: int):
    spans = [(m.start(), m.end()) for m in re.finditer(r"\S+", text[:end])]
    return spans[-count:]


def extract_abbrev_pairs(text: str, sentences) -> list[AbbrevPair]:
    """Find (short form, long form) definitions within single sentences.

    Handles "long form (SF)" and "SF (long form)"; a parenthetical of more than
    two words switches to the reversed reading with the word before the
    parenthesis as the short-form candidate.
    """
    pairs = []
    for sent in sentences:
        a, b = (sent.start, sent.end) if hasattr(sent, "start") else sent
        stext = text[a:b]
        for open_idx, close_idx in _paren_groups(stext):
            content = stext[open_idx + 1 : close_idx]
            lead = len(content) - len(content.lstrip())
            inner_start = open_idx + 1 + lead
            content = content.strip()
            if not content:
                continue
            if _valid_short_form(content):
                pair = _pair_short_in_parens(
                    stext, content, inner_start, open_idx, a
                )
            elif len(content.split()) > 2:
                pair = _pair_long_in_parens(
                    stext, content, inner_start, open_idx, a
                )
            else:
                pair = None
            if pair is not None:
                pairs.append(pair)
    return pairs


def _paren_groups(stext: str):
    stack = []
    for i, ch in enumerate(stext):
        if ch == "(":
            stack.append(i)
        elif ch == ")" and stack:
            yield stack.pop(), i


def _pair_short_in_parens(stext, short, short_off, open_idx, base):
    window_words = _word_spans_before(
        stext, open_idx, min(len(short) + 5, 2 * len(short))
    )
    if not window_words:
        return None
    w_start = window_words[0][0]
    window = stext[w_start : window_words[-1][1]]
    lf = _find_long_form(short, window)
    if lf is None:
        return None
    long_form = window[lf:]
    if not _long_form_ok(short, long_form):
        return None
    return AbbrevPair(
        short_text=short,
        short_start=base + short_off,
        short_end=base + short_off + len(short),
        long_text=long_form,
        long_start=base + w_start + lf,
        long_end=base + w_start + len(window),
    )


def _pair_long_in_parens(stext, content, content_off, open_idx, base):
    before = _word_spans_before(stext, open_idx, 1)
    if not before:
        return None
    s_start, s_end = before[0]
    short = stext[s_start:s_end]
    if not _valid_short_form(short):
        return None
    if len(content.split()) > min(len(short) + 5, 2 * len(short)):
        return None
    lf = _find_long_form(short, content)
    if lf is None:
        return None
    long_form = content[lf:]
    if not _long_form_ok(short, long_form):
        return None
    return AbbrevPair(
        short_text=short,
        short_start=base + s_start,
        short_end=base + s_end,
        long_text=long_form,
        long_start=base + content_off + lf,
        long_end=base + content_off + len(content),
    )


def _covering_key(a: Annotation):
    # Prefer higher score, dictionary source, then the tightest covering span.
    return (a.score, a.source == SOURCE_DICT, a.start - a.end, -a.start, a.label)


def propagate_abbrevs(anns, pairs, text: str) -> list[Annotation]:
    """Tag every word-boundary occurrence of a defined short form whose long
    form is covered by an existing annotation; duplicates are dropped."""
    out = list(anns)
    seen = {(a.start, a.end, a.label) for a in out}
    for pair in sorted(pairs, key=lambda p: (p.short_start, p.short_end)):
        covering = [
            a
            for a in anns
            if a.start <= pair.long_start and pair.long_end <= a.end
        ]
        if not covering:
            continue
        src = max(covering, key=_covering_key)
        pattern = re.compile(rf"(?<!\w){re.escape(pair.short_text)}(?!\w)")
        for m in pattern.finditer(text):
            key = (m.start(), m.end(), src.label)
            if key in seen:
                continue
            seen.add(key)
            out.append(
                Annotation(
                    start=m.start(),
                    end=m.end(),
                    text=m.group(),
                    label=src.label,
                    score=src.score,
                    source=src.source,
                )
            )
    return sorted(out, key=lambda a: (a.start, a.end, a.label))
