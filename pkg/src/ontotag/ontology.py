"""OBO ontology parsing, subontology selection, and dictionary construction.

The dictionary maps normalized term text to a concept label. A term shared by
several concepts gets a composite label: the member IDs sorted and joined with
";". Each term is inserted both in its surface form and in a rule-lemmatized
form so that singular mentions of plural-only synonyms (and vice versa) still
hit the dictionary.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import TaggerError
from .textproc import tokenize


class OboParseError(TaggerError):
    pass


class OntologyValidationError(TaggerError):
    pass


class UnknownConceptError(TaggerError):
    pass


@dataclass(frozen=True)
class Concept:
    id: str
    name: str
    synonyms: tuple[str, ...] = ()
    parents: tuple[str, ...] = ()


class OntologyGraph:
    """Concepts indexed by ID plus a child index over the is_a relation."""

    def __init__(self, concepts: dict[str, Concept]):
        self.concepts = concepts
        self.children: dict[str, list[str]] = {cid: [] for cid in concepts}
        for cid, concept in concepts.items():
            for parent in concept.parents:
                self.children.setdefault(parent, []).append(cid)
        for kids in self.children.values():
            kids.sort()
        self._validate()

    @property
    def roots(self) -> list[str]:
        return sorted(cid for cid, c in self.concepts.items() if not c.parents)

    def __len__(self):
        return len(self.concepts)

    def _validate(self):
        dangling = sorted(
            {
                parent
                for c in self.concepts.values()
                for parent in c.parents
                if parent not in self.concepts
            }
        )
        if dangling:
            raise OntologyValidationError(
                "is_a references unknown concepts: " + ", ".join(dangling)
            )
        self._check_acyclic()

    def _check_acyclic(self):
        # Iterative DFS over parent edges; 0 = unvisited, 1 = on stack, 2 = done.
        state = {cid: 0 for cid in self.concepts}
        for start in self.concepts:
            if state[start]:
                continue
            stack = [(start, iter(self.concepts[start].parents))]
            state[start] = 1
            while stack:
                node, parents = stack[-1]
                advanced = False
                for parent in parents:
                    if state[parent] == 1:
                        raise OntologyValidationError(
                            f"is_a cycle detected through {parent}"
                        )
                    if state[parent] == 0:
                        state[parent] = 1
                        stack.append((parent, iter(self.concepts[parent].parents)))
                        advanced = True
                        break
                if not advanced:
                    state[node] = 2
                    stack.pop()


_SYNONYM_TEXT = re.compile(r'"((?:[^"\\]|\\.)*)"')


def parse_obo(stream) -> OntologyGraph:
    """Parse [Term] stanzas from an iterable of lines.

    Honors id, name, synonym, is_a and is_obsolete; other tags and stanza types
    are skipped. Obsolete terms are dropped.
    """
    concepts: dict[str, Concept] = {}
    stanza = None
    stanza_line = 0

    def finish():
        if stanza is None:
            return
        if stanza["obsolete"]:
            return
        if not stanza["id"] or not stanza["name"]:
            missing = "id" if not stanza["id"] else "name"
            raise OboParseError(
                f"[Term] at line {stanza_line} is missing required tag '{missing}'"
            )
        cid = stanza["id"]
        if cid in concepts:
            raise OboParseError(
                f"duplicate concept id {cid} in [Term] at line {stanza_line}"
            )
        name = stanza["name"]
        seen = {name.casefold()}
        synonyms = []
        for syn in stanza["synonyms"]:
            key = syn.casefold()
            if key in seen:
                continue
            seen.add(key)
            synonyms.append(syn)
        concepts[cid] = Concept(
            id=cid,
            name=name,
            synonyms=tuple(synonyms),
            parents=tuple(dict.fromkeys(stanza["parents"])),
        )

    for lineno, raw in enumerate(stream, 1):
        line = raw.strip()
        if line == "[Term]":
            finish()
            stanza = {
                "id": "", "name": "", "synonyms": [], "parents": [], "obsolete": False,
            }
            stanza_line = lineno
            continue
        if line.startswith("[") and line.endswith("]"):
            finish()
            stanza = None
            continue
        if stanza is None or not line or ":" not in line:
            continue
        tag, _, value = line.partition(":")
        tag = tag.strip()
        value = value.strip()
        if tag == "id":
            stanza["id"] = value.split()[0] if value else ""
        elif tag == "name":
            stanza["name"] = value
        elif tag == "synonym":
            m = _SYNONYM_TEXT.search(value)
            if m:
                text = m.group(1).replace('\\"', '"')
                if text:
                    stanza["synonyms"].append(text)
        elif tag == "is_a":
            target = value.split("!")[0].strip()
            if target:
                stanza["parents"].append(target.split()[0])
        elif tag == "is_obsolete":
            stanza["obsolete"] = value.lower().startswith("true")
    finish()
    return OntologyGraph(concepts)


def load_ontology(path) -> OntologyGraph:
    with open(path, encoding="utf-8") as fp:
        return parse_obo(fp)


def select_subontology(graph: OntologyGraph, root_id: str) -> set[str]:
    """IDs of the root and everything reachable from it via inverse is_a."""
    if root_id not in graph.concepts:
        raise UnknownConceptError(f"unknown subontology root {root_id}")
    scope = {root_id}
    frontier = [root_id]
    while frontier:
        node = frontier.pop()
        for child in graph.children.get(node, ()):
            if child not in scope:
                scope.add(child)
                frontier.append(child)
    return scope


def is_abbreviation(term: str) -> bool:
    """Single-token terms of <= 5 characters, mostly uppercase, e.g. "ASD"."""
    parts = term.split()
    if len(parts) != 1 or len(parts[0]) > 5:
        return False
    letters = [c for c in parts[0] if c.isalpha()]
    if not letters:
        return False
    upper = sum(1 for c in letters if c.isupper())
    return upper / len(letters) >= 0.6


# Plurals the suffix rules below would mangle. Checked before any rule fires.
_LEMMA_EXCEPTIONS = {
    "abuses": "abuse",
    "atlas": "atlas",
    "bases": "base",
    "biceps": "biceps",
    "bruises": "bruise",
    "cases": "case",
    "causes": "cause",
    "children": "child",
    "collapses": "collapse",
    "courses": "course",
    "creases": "crease",
    "decreases": "decrease",
    "diabetes": "diabetes",
    "diseases": "disease",
    "doses": "dose",
    "feet": "foot",
    "forceps": "forceps",
    "fuses": "fuse",
    "ganglia": "ganglion",
    "geese": "goose",
    "herpes": "herpes",
    "impulses": "impulse",
    "increases": "increase",
    "lens": "lens",
    "lenses": "lens",
    "measles": "measles",
    "men": "man",
    "mice": "mouse",
    "mitochondria": "mitochondrion",
    "misuses": "misuse",
    "news": "news",
    "noses": "nose",
    "nurses": "nurse",
    "pancreas": "pancreas",
    "pauses": "pause",
    "phases": "phase",
    "phrases": "phrase",
    "pulses": "pulse",
    "rabies": "rabies",
    "releases": "release",
    "responses": "response",
    "senses": "sense",
    "series": "series",
    "sinuses": "sinus",
    "species": "species",
    "teeth": "tooth",
    "uses": "use",
    "vertebrae": "vertebra",
    "women": "woman",
}


def lemmatize_token(token: str) -> str:
    """Rule-based singularization of one lowercase token."""
    if token in _LEMMA_EXCEPTIONS:
        return _LEMMA_EXCEPTIONS[token]
    if len(token) > 4 and token.endswith("ies"):
        return token[:-3] + "y"
    if len(token) > 4 and token.endswith("ses"):
        return token[:-3] + "sis"
    if len(token) > 3 and token.endswith("s") and not token.endswith(("ss", "us", "is")):
        return token[:-1]
    return token


def lemmatize_tokens(tokens) -> list[str]:
    return [lemmatize_token(t) for t in tokens]


def normalize_term(text: str) -> str:
    """Lowercased, tokenizer-normalized form: tokens joined by single spaces."""
    return " ".join(t.lower for t in tokenize(text))


@dataclass
class Dictionary:
    entries: dict[str, str] = field(default_factory=dict)

    @property
    def term_count(self) -> int:
        return len(self.entries)

    @property
    def labels(self) -> set[str]:
        return set(self.entries.values())

    def __contains__(self, text):
        return text in self.entries

    def lookup(self, text: str) -> str | None:
        return self.entries.get(text)


def build_dictionary(graph: OntologyGraph, scope: set[str] | None = None) -> Dictionary:
    """Collect names and synonyms of in-scope concepts into a lookup table.

    Terms that look like bare abbreviations are excluded (too ambiguous to match
    on directly; they re-enter via local abbreviation definitions at tag time).
    """
    if scope is None:
        scope = set(graph.concepts)
    collected: dict[str, set[str]] = {}
    for cid in sorted(scope):
        concept = graph.concepts[cid]
        for term in (concept.name, *concept.synonyms):
            if is_abbreviation(term):
                continue
            normalized = normalize_term(term)
            if not normalized:
                continue
            collected.setdefault(normalized, set()).add(cid)
            lemma = " ".join(lemmatize_tokens(normalized.split(" ")))
            collected.setdefault(lemma, set()).add(cid)
    entries = {text: ";".join(sorted(ids)) for text, ids in collected.items()}
    return Dictionary(entries=entries)


def save_dictionary(dictionary: Dictionary, path) -> None:
    with open(path, "w", encoding="utf-8") as fp:
        for text in sorted(dictionary.entries):
            fp.write(f"{text}\t{dictionary.entries[text]}\n")


def load_dictionary(path) -> Dictionary:
    entries = {}
    with open(path, encoding="utf-8") as fp:
        for lineno, line in enumerate(fp, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise TaggerError(f"{path}: malformed dictionary line {lineno}")
            entries[parts[0]] = parts[1]
    return Dictionary(entries=entries)
