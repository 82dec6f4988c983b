"""Sentence splitting, tokenization with character offsets, and coarse POS tagging.

The tokenizer here is the single source of truth for both dictionary terms and
document text, so a term that occurs verbatim in a document is guaranteed to be
token-aligned with it.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

POS_TAGS = frozenset(
    {"NOUN", "VERB", "ADJ", "ADV", "DET", "PREP", "CONJ", "PUNCT", "NUM", "OTHER"}
)

# Tags that disqualify an n-gram when they appear on its first or last token.
EDGE_EXCLUDED_TAGS = frozenset({"PUNCT", "PREP", "CONJ", "DET"})

# Sentence-final periods are not split when the word ending there is one of these.
_GUARD_ABBREVS = frozenset(
    {
        "e.g.", "i.e.", "etc.", "vs.", "cf.", "ca.", "al.", "approx.",
        "dr.", "mr.", "mrs.", "ms.", "prof.", "fig.", "figs.", "no.", "st.",
    }
)

_DET_WORDS = frozenset(
    "the a an this that these those each every either neither some any no all both such".split()
)
_PREP_WORDS = frozenset(
    "of in on at by with from to for about into onto over after before between during"
    " without under above across against among around behind below beneath beside beyond"
    " near off since through throughout toward towards upon within per via".split()
)
_CONJ_WORDS = frozenset(
    "and or but nor so yet because although though while whereas if unless until when"
    " whenever where wherever as than whether".split()
)
_VERB_WORDS = frozenset(
    "is are was were be been being am has have had do does did can could may might"
    " must shall should will would".split()
)
_OTHER_WORDS = frozenset(
    "i you he she it we they me him her us them my your his its our their not there".split()
)

_ADJ_SUFFIXES = ("ous", "ful", "ive", "able", "ible", "ic", "al", "ar")
_VERB_SUFFIXES = ("ize", "ise", "ify")


@dataclass
class Token:
    text: str
    lower: str
    start: int
    end: int
    pos: str = "OTHER"


@dataclass
class Sentence:
    text: str
    start: int
    end: int
    tokens: list[Token] = field(default_factory=list)


def split_sentences(text: str) -> list[tuple[int, int]]:
    """Return (start, end) spans of sentences, trimmed of surrounding whitespace.

    A boundary is a '.', '!' or '?' followed by whitespace and then an uppercase
    letter or digit, unless the word ending at the period is a known abbreviation.
    """
    spans = []
    n = len(text)
    seg_start = 0
    i = 0
    while i < n:
        if text[i] in ".!?":
            j = i + 1
            k = j
            while k < n and text[k].isspace():
                k += 1
            if k > j and k < n and (text[k].isupper() or text[k].isdigit()):
                w = i
                while w > 0 and not text[w - 1].isspace():
                    w -= 1
                word = text[w : i + 1].lstrip("([{\"'")
                if word.lower() not in _GUARD_ABBREVS:
                    span = _trim(text, seg_start, j)
                    if span is not None:
                        spans.append(span)
                    seg_start = k
                    i = k
                    continue
        i += 1
    span = _trim(text, seg_start, n)
    if span is not None:
        spans.append(span)
    return spans


def _trim(text, a, b):
    while a < b and text[a].isspace():
        a += 1
    while b > a and text[b - 1].isspace():
        b -= 1
    if a == b:
        return None
    return (a, b)


def tokenize(text: str, base_offset: int = 0) -> list[Token]:
    """Split text into tokens carrying absolute character offsets.

    Leading and trailing punctuation of each whitespace-delimited chunk becomes
    individual tokens, as do hyphens and slashes inside a chunk; other interior
    punctuation (e.g. "e.g", "2.5") stays attached.
    """
    tokens = []
    for m in re.finditer(r"\S+", text):
        _split_chunk(m.group(), base_offset + m.start(), tokens)
    return tokens


def _split_chunk(chunk, offset, out):
    first = 0
    last = len(chunk)
    while first < last and not chunk[first].isalnum():
        first += 1
    while last > first and not chunk[last - 1].isalnum():
        last -= 1
    for i in range(first):
        out.append(_punct_token(chunk[i], offset + i))
    if first < last:
        core = chunk[first:last]
        pos = 0
        for m in re.finditer(r"[-/]", core):
            if m.start() > pos:
                out.append(_word_token(core[pos : m.start()], offset + first + pos))
            out.append(_punct_token(m.group(), offset + first + m.start()))
            pos = m.end()
        if pos < len(core):
            out.append(_word_token(core[pos:], offset + first + pos))
    for i in range(last, len(chunk)):
        out.append(_punct_token(chunk[i], offset + i))


def _word_token(text, start):
    return Token(text=text, lower=text.lower(), start=start, end=start + len(text))


def _punct_token(text, start):
    return Token(
        text=text, lower=text, start=start, end=start + len(text), pos="PUNCT"
    )


def pos_tag(tokens: list[Token]) -> list[Token]:
    """Assign a coarse tag from POS_TAGS to every token, in place."""
    for tok in tokens:
        tok.pos = _tag_one(tok)
    return tokens


def _tag_one(tok):
    if not any(c.isalnum() for c in tok.text):
        return "PUNCT"
    w = tok.lower
    if w in _DET_WORDS:
        return "DET"
    if w in _PREP_WORDS:
        return "PREP"
    if w in _CONJ_WORDS:
        return "CONJ"
    if w in _VERB_WORDS:
        return "VERB"
    if w in _OTHER_WORDS:
        return "OTHER"
    if tok.text[0].isdigit():
        return "NUM"
    if len(w) > 4 and w.endswith("ly"):
        return "ADV"
    for suf in _VERB_SUFFIXES:
        if len(w) > len(suf) + 2 and w.endswith(suf):
            return "VERB"
    for suf in _ADJ_SUFFIXES:
        if len(w) > len(suf) + 2 and w.endswith(suf):
            return "ADJ"
    return "NOUN"


def edge_tags_allowed(tokens) -> bool:
    """True unless the first or last token carries a tag from EDGE_EXCLUDED_TAGS."""
    if not tokens:
        return False
    return (
        tokens[0].pos not in EDGE_EXCLUDED_TAGS
        and tokens[-1].pos not in EDGE_EXCLUDED_TAGS
    )


def analyze(text: str) -> list[Sentence]:
    """Split, tokenize and tag a document; sentences carry absolute offsets."""
    sentences = []
    for a, b in split_sentences(text):
        toks = pos_tag(tokenize(text[a:b], a))
        sentences.append(Sentence(text=text[a:b], start=a, end=b, tokens=toks))
    return sentences
