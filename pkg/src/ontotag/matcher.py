"""Exact dictionary matching over token sequences via a trie.

Every dictionary entry found anywhere in a sentence is reported, including
entries nested inside longer matches; overlap resolution happens later in the
combiner.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ontology import Dictionary
from .textproc import Sentence, tokenize

SOURCE_DICT = "DICT"
SOURCE_ML = "ML"


@dataclass(frozen=True)
class Annotation:
    start: int
    end: int
    text: str
    label: str
    score: float
    source: str


class TokenTrie:
    """Token-keyed trie; a node's entry label is stored under the None key."""

    def __init__(self):
        self.root: dict = {}
        self.size = 0
        self.depth = 0

    def insert(self, tokens, label: str) -> None:
        if not tokens:
            return
        node = self.root
        for tok in tokens:
            node = node.setdefault(tok, {})
        if None not in node:
            self.size += 1
        node[None] = label
        self.depth = max(self.depth, len(tokens))

    def __len__(self):
        return self.size

    def items(self):
        """Yield (token tuple, label) for every stored entry, sorted."""

        def walk(node, prefix):
            if None in node:
                yield prefix, node[None]
            for key in sorted(k for k in node if k is not None):
                yield from walk(node[key], prefix + (key,))

        yield from walk(self.root, ())


def trie_build(dictionary: Dictionary) -> TokenTrie:
    trie = TokenTrie()
    for text, label in dictionary.entries.items():
        trie.insert([t.lower for t in tokenize(text)], label)
    return trie


def tag_dictionary(trie: TokenTrie, sentence: Sentence, stats: dict | None = None) -> list[Annotation]:
    """Report every trie entry occurring in the sentence, at every position.

    Time is bounded by len(tokens) * trie depth: each start index walks the trie
    at most to its deepest entry.
    """
    tokens = sentence.tokens
    base = sentence.start
    steps = 0
    found = {}
    for i in range(len(tokens)):
        node = trie.root
        for j in range(i, len(tokens)):
            node = node.get(tokens[j].lower)
            steps += 1
            if node is None:
                break
            label = node.get(None)
            if label is not None:
                start, end = tokens[i].start, tokens[j].end
                found[(start, end, label)] = Annotation(
                    start=start,
                    end=end,
                    text=sentence.text[start - base : end - base],
                    label=label,
                    score=1.0,
                    source=SOURCE_DICT,
                )
    if stats is not None:
        stats["trie_steps"] = stats.get("trie_steps", 0) + steps
    return sorted(found.values(), key=lambda a: (a.start, a.end, a.label))
