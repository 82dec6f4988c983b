"""HTTP service wrapping the tagging pipeline.

The dictionary trie and model are loaded once at application startup; requests
only run the per-document pipeline.
"""

from __future__ import annotations

from dataclasses import replace

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .combiner import extract_abbrev_pairs
from .errors import TaggerError
from .pipeline import Tagger
from .textproc import analyze


class DocumentIn(BaseModel):
    id: str = "doc"
    text: str


class TagRequest(BaseModel):
    documents: list[DocumentIn]
    threshold: float | None = Field(default=None, gt=0.0, lt=1.0)


class AnnotationOut(BaseModel):
    start: int
    end: int
    text: str
    label: str
    score: float
    source: str


class TaggedDocument(BaseModel):
    id: str
    annotations: list[AnnotationOut]


class TagResponse(BaseModel):
    documents: list[TaggedDocument]


class AbbrevRequest(BaseModel):
    text: str


class AbbrevPairOut(BaseModel):
    short_text: str
    short_start: int
    short_end: int
    long_text: str
    long_start: int
    long_end: int


class AbbrevResponse(BaseModel):
    pairs: list[AbbrevPairOut]


class HealthResponse(BaseModel):
    status: str
    dictionary_entries: int
    model_labels: int
    threshold: float


def create_app(tagger: Tagger) -> FastAPI:
    app = FastAPI(title="ontotag", version="0.1.0")

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(
            status="ok",
            dictionary_entries=len(tagger.trie) if tagger.trie else 0,
            model_labels=len(tagger.model.labels) if tagger.model else 0,
            threshold=tagger.config.threshold,
        )

    @app.post("/tag", response_model=TagResponse)
    def tag(request: TagRequest):
        active = tagger
        if request.threshold is not None:
            active = Tagger(
                trie=tagger.trie,
                model=tagger.model,
                config=replace(tagger.config, threshold=request.threshold),
                use_dict=tagger.use_dict,
                use_ml=tagger.use_ml,
            )
        out = []
        for doc in request.documents:
            try:
                anns = active.tag(doc.text)
            except TaggerError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
            out.append(
                TaggedDocument(
                    id=doc.id,
                    annotations=[AnnotationOut(**vars(a)) for a in anns],
                )
            )
        return TagResponse(documents=out)

    @app.post("/abbreviations", response_model=AbbrevResponse)
    def abbreviations(request: AbbrevRequest):
        sentences = analyze(request.text)
        pairs = extract_abbrev_pairs(request.text, sentences)
        return AbbrevResponse(pairs=[AbbrevPairOut(**vars(p)) for p in pairs])

    return app
