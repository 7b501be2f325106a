"""
Document collections and the text analysis pipeline.

The same AnalysisConfig is used to index documents and to analyze
generated queries, and its fingerprint travels with every artifact so a
mismatch can be detected downstream.
"""
from dataclasses import dataclass, field
from functools import lru_cache
from hashlib import sha256
import json
import logging
import pathlib
import re
from typing import Iterable, Iterator, List, Optional, Tuple

from nltk.stem import PorterStemmer

from findability.conf import settings
from findability.exceptions import (
    ConfigurationError,
    IntegrityError,
    ParseError,
)

logger = logging.getLogger("user_info." + __name__)

# alphanumeric runs, unicode aware (\w minus underscore)
TOKEN_PATTERN = re.compile(r"[^\W_]+")

FORMATS = ("jsonl", "tsv")
_SUFFIXES = {".jsonl": "jsonl", ".json": "jsonl", ".tsv": "tsv", ".txt": "tsv"}


def load_stopwords(path) -> frozenset:
    """One term per line, UTF-8. Blank lines and ``#`` comments are ignored."""
    with open(path, encoding="utf-8") as file:
        words = (line.strip() for line in file)
        return frozenset(word for word in words if word and not word.startswith("#"))


@dataclass(frozen=True)
class AnalysisConfig:
    lowercase: bool = True
    stopwords: frozenset = frozenset()
    min_token_length: int = 2
    stemming: bool = False

    def __post_init__(self):
        if self.min_token_length < 1:
            raise ConfigurationError("min_token_length must be >= 1")
        object.__setattr__(self, "stopwords", frozenset(self.stopwords))

    @classmethod
    def default(cls, **overrides) -> "AnalysisConfig":
        values = {
            "lowercase": settings.LOWERCASE,
            "stopwords": load_stopwords(settings.STOPWORDS_FILE),
            "min_token_length": settings.MIN_TOKEN_LENGTH,
            "stemming": settings.STEMMING,
        }
        values.update(overrides)
        return cls(**values)

    def as_dict(self) -> dict:
        return {
            "lowercase": self.lowercase,
            "stopwords": sorted(self.stopwords),
            "min_token_length": self.min_token_length,
            "stemming": self.stemming,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AnalysisConfig":
        return cls(
            lowercase=bool(data["lowercase"]),
            stopwords=frozenset(data["stopwords"]),
            min_token_length=int(data["min_token_length"]),
            stemming=bool(data["stemming"]),
        )

    @property
    def fingerprint(self) -> str:
        canonical = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return sha256(canonical.encode("utf-8")).hexdigest()

    def __str__(self):
        return (
            f"[AnalysisConfig] (lowercase={self.lowercase} stopwords={len(self.stopwords)} "
            f"min_token_length={self.min_token_length} stemming={self.stemming})"
        )


@lru_cache(maxsize=None)
def _stemmer() -> PorterStemmer:
    return PorterStemmer()


@lru_cache(maxsize=2 ** 16)
def _stem(token: str, lowercase: bool) -> str:
    return _stemmer().stem(token, to_lowercase=lowercase)


def analyze(text: str, config: AnalysisConfig) -> List[str]:
    """
    Split on non-alphanumeric boundaries, lowercase, drop stopwords and
    short tokens, then stem. Pure; safe to call from many threads.
    """
    if config.lowercase:
        # before splitting, so re-analysis of the output is a no-op
        text = text.lower()

    def keep(token):
        return len(token) >= config.min_token_length and token not in config.stopwords

    tokens = [token for token in TOKEN_PATTERN.findall(text) if keep(token)]
    if config.stemming:
        tokens = [_stem(token, config.lowercase) for token in tokens]
        tokens = [token for token in tokens if keep(token)]
    return tokens


@dataclass(frozen=True)
class Document:
    doc_id: str
    raw_text: str
    tokens: Tuple[str, ...]

    def __post_init__(self):
        if not self.doc_id:
            raise ParseError("document id must be non-empty")


@dataclass
class Corpus:
    documents: List[Document]
    source_path: str = "<memory>"
    analysis_config: AnalysisConfig = field(default_factory=AnalysisConfig.default)

    def __post_init__(self):
        seen = set()
        for document in self.documents:
            if document.doc_id in seen:
                raise IntegrityError(f"duplicate doc_id {document.doc_id!r}")
            seen.add(document.doc_id)

    def __len__(self):
        return len(self.documents)

    def __iter__(self) -> Iterator[Document]:
        return iter(self.documents)

    @property
    def doc_ids(self) -> List[str]:
        return [document.doc_id for document in self.documents]

    @classmethod
    def from_texts(
        cls,
        records: Iterable[Tuple[str, str]],
        config: Optional[AnalysisConfig] = None,
        source_path: str = "<memory>",
    ) -> "Corpus":
        config = config or AnalysisConfig.default()
        documents = [
            Document(str(doc_id), text, tuple(analyze(text, config)))
            for doc_id, text in records
        ]
        return cls(documents, source_path, config)


def _jsonl_records(file) -> Iterator[Tuple[int, str, str]]:
    for lineno, line in enumerate(file, 1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON ({exc.msg})", line=lineno) from exc
        if not isinstance(record, dict):
            raise ParseError("expected a JSON object", line=lineno)
        doc_id = record.get("id")
        text = record.get("text")
        if isinstance(doc_id, int) and not isinstance(doc_id, bool):
            doc_id = str(doc_id)
        if not isinstance(doc_id, str) or not doc_id:
            raise ParseError("missing or empty 'id'", line=lineno)
        if not isinstance(text, str):
            raise ParseError("missing 'text'", line=lineno)
        yield lineno, doc_id, text


def _tsv_records(file) -> Iterator[Tuple[int, str, str]]:
    for lineno, line in enumerate(file, 1):
        line = line.rstrip("\r\n")
        if not line.strip():
            continue
        parts = line.split("\t", 1)
        if len(parts) != 2:
            raise ParseError("expected doc_id<TAB>text", line=lineno)
        doc_id, text = parts
        if not doc_id:
            raise ParseError("empty doc_id", line=lineno)
        yield lineno, doc_id, text


def detect_format(path) -> str:
    suffix = pathlib.Path(path).suffix.lower()
    try:
        return _SUFFIXES[suffix]
    except KeyError:
        raise ConfigurationError(
            f"format: cannot infer corpus format from {path!s}, pass one of {FORMATS}"
        ) from None


def load_corpus(path, format: Optional[str] = None, config: Optional[AnalysisConfig] = None) -> Corpus:
    """
    Read a JSONL (``{"id":..., "text":...}``) or two-column TSV file,
    preserving file order.
    """
    path = pathlib.Path(path)
    format = format or detect_format(path)
    if format not in FORMATS:
        raise ConfigurationError(f"format: unknown corpus format {format!r}")
    if not path.exists():
        raise ConfigurationError(f"corpus: file does not exist: {path}")

    config = config or AnalysisConfig.default()
    reader = _jsonl_records if format == "jsonl" else _tsv_records

    documents = []
    seen = {}
    with open(path, encoding="utf-8") as file:
        for lineno, doc_id, text in reader(file):
            if doc_id in seen:
                raise IntegrityError(
                    f"duplicate doc_id {doc_id!r} at line {lineno} (first seen at line {seen[doc_id]})"
                )
            seen[doc_id] = lineno
            documents.append(Document(doc_id, text, tuple(analyze(text, config))))

    logger.info("Loaded %s documents from %s", len(documents), path)
    return Corpus(documents, str(path), config)
