"""Reading and writing PubTator-style document files.

A document block is a title line "id|t|...", an optional abstract line
"id|a|...", then one tab-separated annotation line per mention
(id, start, end, text, type, label); blocks are separated by blank lines.
Offsets refer to title + " " + abstract.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import TaggerError
from .matcher import Annotation, SOURCE_DICT

ANNOTATION_TYPE = "Phenotype"


class PubTatorError(TaggerError):
    pass


@dataclass
class Document:
    doc_id: str
    title: str
    abstract: str | None = None

    @property
    def text(self) -> str:
        if self.abstract is None:
            return self.title
        return f"{self.title} {self.abstract}"


def read_pubtator(path) -> list[tuple[Document, list[Annotation]]]:
    docs = []
    current: Document | None = None
    anns: list[Annotation] = []

    def finish():
        nonlocal current, anns
        if current is not None:
            docs.append((current, anns))
        current, anns = None, []

    with open(path, encoding="utf-8") as fp:
        for lineno, raw in enumerate(fp, 1):
            line = raw.rstrip("\n")
            if not line.strip():
                finish()
                continue
            t_parts = line.split("|", 2)
            if len(t_parts) == 3 and t_parts[1] in ("t", "a"):
                doc_id, kind, text = t_parts
                if kind == "t":
                    finish()
                    current = Document(doc_id=doc_id, title=text)
                else:
                    if current is None or current.doc_id != doc_id:
                        raise PubTatorError(
                            f"{path}:{lineno}: abstract line without matching title"
                        )
                    current.abstract = text
                continue
            parts = line.split("\t")
            if len(parts) < 6:
                raise PubTatorError(
                    f"{path}:{lineno}: expected 6 tab-separated annotation fields"
                )
            doc_id, start, end, text, _type, label = parts[:6]
            if current is None or current.doc_id != doc_id:
                raise PubTatorError(
                    f"{path}:{lineno}: annotation for unknown document {doc_id}"
                )
            try:
                span = (int(start), int(end))
            except ValueError as exc:
                raise PubTatorError(f"{path}:{lineno}: non-integer offsets") from exc
            anns.append(
                Annotation(
                    start=span[0],
                    end=span[1],
                    text=text,
                    label=label,
                    score=1.0,
                    source=SOURCE_DICT,
                )
            )
    finish()
    return docs


def write_pubtator(fp, doc: Document, annotations) -> None:
    fp.write(f"{doc.doc_id}|t|{doc.title}\n")
    if doc.abstract is not None:
        fp.write(f"{doc.doc_id}|a|{doc.abstract}\n")
    for ann in sorted(annotations, key=lambda a: (a.start, a.end, a.label)):
        fp.write(
            f"{doc.doc_id}\t{ann.start}\t{ann.end}\t{ann.text}"
            f"\t{ANNOTATION_TYPE}\t{ann.label}\n"
        )
    fp.write("\n")


def document_from_text(doc_id: str, raw: str) -> Document:
    """First line becomes the title; the rest, newlines flattened to spaces,
    the abstract. Flattening preserves every character offset."""
    raw = raw.rstrip("\n")
    nl = raw.find("\n")
    if nl < 0:
        return Document(doc_id=doc_id, title=raw)
    return Document(
        doc_id=doc_id, title=raw[:nl], abstract=raw[nl + 1 :].replace("\n", " ")
    )


def load_text_directory(path) -> list[Document]:
    """One document per *.txt file, id = file stem, sorted by name."""
    root = Path(path)
    docs = []
    for file in sorted(root.glob("*.txt")):
        docs.append(document_from_text(file.stem, file.read_text(encoding="utf-8")))
    return docs
