"""End-to-end tagging: sentence analysis, both taggers, combination, and
abbreviation propagation, behind one object that loads its resources once.
"""

from __future__ import annotations

from .combiner import combine, extract_abbrev_pairs, propagate_abbrevs
from .errors import TaggerError
from .matcher import Annotation, TokenTrie, tag_dictionary, trie_build
from .model import Model, load_model
from .ontology import Dictionary, load_dictionary
from .recognizer import RecognizerConfig, tag_ml
from .textproc import analyze


class Tagger:
    def __init__(
        self,
        trie: TokenTrie | None = None,
        model: Model | None = None,
        config: RecognizerConfig | None = None,
        use_dict: bool = True,
        use_ml: bool = True,
    ):
        if not use_dict and not use_ml:
            raise TaggerError("dictionary and classifier cannot both be disabled")
        if use_dict and trie is None:
            raise TaggerError("dictionary tagging enabled but no dictionary given")
        if use_ml and model is None:
            raise TaggerError("classifier tagging enabled but no model given")
        self.trie = trie
        self.model = model
        self.config = config or RecognizerConfig()
        self.use_dict = use_dict
        self.use_ml = use_ml

    @classmethod
    def load(
        cls,
        dict_path=None,
        model_path=None,
        config: RecognizerConfig | None = None,
        use_dict: bool = True,
        use_ml: bool = True,
    ) -> "Tagger":
        trie = None
        if use_dict and dict_path is not None:
            trie = trie_build(load_dictionary(dict_path))
        model = None
        if use_ml and model_path is not None:
            model = load_model(model_path)
        return cls(trie=trie, model=model, config=config, use_dict=use_dict, use_ml=use_ml)

    @classmethod
    def from_dictionary(cls, dictionary: Dictionary, model=None, **kwargs) -> "Tagger":
        return cls(trie=trie_build(dictionary), model=model, **kwargs)

    def tag(self, text: str) -> list[Annotation]:
        sentences = analyze(text)
        dict_anns: list[Annotation] = []
        ml_anns: list[Annotation] = []
        for sentence in sentences:
            if self.use_dict:
                dict_anns.extend(tag_dictionary(self.trie, sentence))
            if self.use_ml:
                ml_anns.extend(tag_ml(self.model, sentence, self.config))
        combined = combine(dict_anns, ml_anns)
        pairs = extract_abbrev_pairs(text, sentences)
        return propagate_abbrevs(combined, pairs, text)
