"""Hybrid ontology concept tagger: exact dictionary matching over a token trie
plus a distantly supervised n-gram classifier, merged by overlap rules and
extended through locally defined abbreviations.
"""

from .errors import TaggerError
from .matcher import Annotation, SOURCE_DICT, SOURCE_ML
from .ontology import Concept, Dictionary, OntologyGraph
from .pipeline import Tagger

__version__ = "0.1.0"

__all__ = [
    "Annotation",
    "Concept",
    "Dictionary",
    "OntologyGraph",
    "SOURCE_DICT",
    "SOURCE_ML",
    "Tagger",
    "TaggerError",
    "__version__",
]
