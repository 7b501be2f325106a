"""
Simulated known-item queries, used as each document's relevant-query set.

Terms are drawn from a per-document selection distribution (popular,
discriminative or both) optionally mixed with the collection unigram
model. Every document has its own RNG stream keyed by (seed, doc_id), so
the output does not depend on generation order or worker count.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import Decimal
from hashlib import blake2b, sha256
import json
import logging
import math
import pathlib
from typing import Dict, List, Optional, Tuple

import numpy as np

from findability.conf import settings
from findability.exceptions import ConfigurationError, EmptyDocumentError, ParseError
from findability.index import Index

logger = logging.getLogger("user_info." + __name__)

POPULAR = "popular"
DISCRIMINATIVE = "discriminative"
POPULAR_DISCRIMINATIVE = "popular_discriminative"
STRATEGIES = (POPULAR, DISCRIMINATIVE, POPULAR_DISCRIMINATIVE)
STRATEGY_ALIASES = {
    "popular": POPULAR,
    "pop": POPULAR,
    "discriminative": DISCRIMINATIVE,
    "disc": DISCRIMINATIVE,
    "popular_discriminative": POPULAR_DISCRIMINATIVE,
    "popular+discriminative": POPULAR_DISCRIMINATIVE,
    "popdisc": POPULAR_DISCRIMINATIVE,
}


def normalize_strategy(name: str) -> str:
    try:
        return STRATEGY_ALIASES[name.lower()]
    except KeyError:
        raise ConfigurationError(
            f"strategy: unknown term selection strategy {name!r}, expected popular|discriminative|popdisc"
        ) from None


@dataclass(frozen=True)
class QueryGenConfig:
    avg_query_length: float = 4.0
    lam: float = 0.0
    fraction: float = 0.10
    cap: int = 50
    floor: int = 1
    strategy: str = POPULAR_DISCRIMINATIVE
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "strategy", normalize_strategy(self.strategy))
        if not self.avg_query_length > 0:
            raise ConfigurationError("k must be > 0")
        if not 0 <= self.lam <= 1:
            raise ConfigurationError("lambda must lie in [0, 1]")
        if not 0 < self.fraction <= 1:
            raise ConfigurationError("fraction must lie in (0, 1]")
        if not 1 <= self.floor <= self.cap:
            raise ConfigurationError("floor must satisfy 1 <= floor <= cap")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")

    @classmethod
    def default(cls, **overrides) -> "QueryGenConfig":
        values = {
            "avg_query_length": settings.QUERY_LENGTH,
            "lam": settings.LAMBDA,
            "fraction": settings.QUERY_FRACTION,
            "cap": settings.QUERY_CAP,
            "floor": settings.QUERY_FLOOR,
            "strategy": settings.QUERY_STRATEGY,
            "seed": settings.SEED,
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

    def as_dict(self) -> dict:
        return {
            "k": self.avg_query_length,
            "lambda": self.lam,
            "fraction": self.fraction,
            "cap": self.cap,
            "floor": self.floor,
            "strategy": self.strategy,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "QueryGenConfig":
        return cls(
            avg_query_length=float(data["k"]),
            lam=float(data["lambda"]),
            fraction=float(data["fraction"]),
            cap=int(data["cap"]),
            floor=int(data["floor"]),
            strategy=data["strategy"],
            seed=int(data["seed"]),
        )


def query_count(distinct_terms: int, config: QueryGenConfig) -> int:
    """clamp(ceil(fraction * distinct_terms), floor, cap), in exact decimal arithmetic."""
    wanted = math.ceil(Decimal(repr(config.fraction)) * distinct_terms)
    return min(config.cap, max(config.floor, wanted))


def hash64(seed: int, doc_id: str) -> int:
    digest = blake2b(f"{seed}\x00{doc_id}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def _strategy_weights(index: Index, doc_ord: int, term_ids: np.ndarray, tfs: np.ndarray, strategy: str) -> np.ndarray:
    tfs = tfs.astype(np.float64)
    cf = index.cf[term_ids].astype(np.float64)
    if strategy == POPULAR:
        return tfs
    if strategy == DISCRIMINATIVE:
        dl = float(index.doc_lengths[doc_ord])
        return (tfs / dl) / (cf / index.total_tokens)
    return tfs / cf


def _distribution(index: Index, doc_ord: int, strategy: str, lam: float) -> Tuple[np.ndarray, np.ndarray, int]:
    """Support term ids, their probabilities and the document's distinct-term count."""
    term_ids, tfs = index.doc_terms(doc_ord)
    if not len(term_ids):
        raise EmptyDocumentError(f"document {index.doc_ids[doc_ord]!r} has no terms")
    weights = _strategy_weights(index, doc_ord, term_ids, tfs, normalize_strategy(strategy))
    probs = weights / weights.sum()
    if lam == 0:
        return term_ids, probs, len(term_ids)

    mixed = lam * (index.cf.astype(np.float64) / index.total_tokens)
    mixed[term_ids] += (1.0 - lam) * probs
    support = np.flatnonzero(mixed)
    return support, mixed[support] / mixed[support].sum(), len(term_ids)


def term_selection_distribution(index: Index, doc_ord: int, strategy: str, lam: float = 0.0) -> Dict[str, float]:
    """
    Selection probability of every term for one document. With ``lam`` = 0
    the support is exactly the document's distinct terms.
    """
    if not 0 <= lam <= 1:
        raise ConfigurationError("lambda must lie in [0, 1]")
    support, probs, _ = _distribution(index, index.check_ordinal(doc_ord), strategy, lam)
    return {index.terms[term_id]: float(p) for term_id, p in zip(support, probs)}


def generate_queries_for_doc(index: Index, doc_ord: int, config: QueryGenConfig) -> List[List[str]]:
    doc_ord = index.check_ordinal(doc_ord)
    support, probs, distinct = _distribution(index, doc_ord, config.strategy, config.lam)
    rng = np.random.default_rng(hash64(config.seed, index.doc_ids[doc_ord]))

    queries = []
    for _ in range(query_count(distinct, config)):
        length = int(min(max(rng.poisson(config.avg_query_length), 1), distinct))
        picks = rng.choice(len(support), size=length, replace=False, p=probs)
        queries.append([index.terms[support[i]] for i in picks])
    return queries


@dataclass
class QuerySet:
    entries: Dict[str, List[List[str]]]
    config: Optional[QueryGenConfig] = None
    skipped: List[str] = field(default_factory=list)
    analysis_fingerprint: Optional[str] = None
    index_fingerprint: Optional[str] = None
    config_fingerprint: Optional[str] = None

    def __len__(self):
        return len(self.entries)

    @property
    def num_queries(self) -> int:
        return sum(len(queries) for queries in self.entries.values())

    def summary(self) -> dict:
        return {
            "analysis_fingerprint": self.analysis_fingerprint,
            "config": self.config.as_dict() if self.config else None,
            "config_fingerprint": self.config_fingerprint,
            "index_fingerprint": self.index_fingerprint,
            "num_documents": len(self.entries),
            "num_queries": self.num_queries,
            "skipped": list(self.skipped),
        }

    def to_bytes(self) -> bytes:
        lines = [
            json.dumps({"doc_id": doc_id, "queries": queries}, ensure_ascii=False, separators=(",", ":"))
            for doc_id, queries in self.entries.items()
        ]
        lines.append(json.dumps({"summary": self.summary()}, ensure_ascii=False, sort_keys=True, separators=(",", ":")))
        return ("\n".join(lines) + "\n").encode("utf-8")

    @property
    def fingerprint(self) -> str:
        return sha256(self.to_bytes()).hexdigest()

    def write_jsonl(self, path) -> pathlib.Path:
        path = pathlib.Path(path)
        path.write_bytes(self.to_bytes())
        logger.info("Wrote %s queries for %s documents to %s", self.num_queries, len(self), path)
        return path

    @classmethod
    def read_jsonl(cls, path) -> "QuerySet":
        entries, summary = {}, None
        with open(path, encoding="utf-8") as file:
            for lineno, line in enumerate(file, 1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParseError(f"invalid JSON ({exc.msg})", line=lineno) from exc
                if not isinstance(record, dict):
                    raise ParseError("expected a JSON object", line=lineno)
                if "summary" in record:
                    summary = record["summary"]
                    if not isinstance(summary, dict):
                        raise ParseError("'summary' must be a JSON object", line=lineno)
                    continue
                doc_id, queries = record.get("doc_id"), record.get("queries")
                if not isinstance(doc_id, str) or not doc_id:
                    raise ParseError("missing or empty 'doc_id'", line=lineno)
                if not isinstance(queries, list) or not all(
                    isinstance(query, list) and query and all(isinstance(t, str) for t in query)
                    for query in queries
                ):
                    raise ParseError("'queries' must be a list of non-empty token lists", line=lineno)
                entries[doc_id] = queries

        if summary is None:
            logger.warning("%s has no summary record, analysis settings cannot be checked", path)
            return cls(entries)
        config = summary.get("config")
        return cls(
            entries,
            config=QueryGenConfig.from_dict(config) if config else None,
            skipped=list(summary.get("skipped", [])),
            analysis_fingerprint=summary.get("analysis_fingerprint"),
            index_fingerprint=summary.get("index_fingerprint"),
            config_fingerprint=summary.get("config_fingerprint"),
        )


def generate_all(index: Index, config: QueryGenConfig, threads: int = 1) -> QuerySet:
    """Queries for every document, ordered by doc_id. Empty documents are skipped."""
    ordinals = sorted(range(index.num_docs), key=index.doc_ids.__getitem__)

    def work(doc_ord):
        if not len(index.doc_terms(doc_ord)[0]):
            return None
        return generate_queries_for_doc(index, doc_ord, config)

    if threads == 1:
        results = [work(doc_ord) for doc_ord in ordinals]
    else:
        with ThreadPoolExecutor(max_workers=threads or None) as executor:
            results = list(executor.map(work, ordinals))

    entries, skipped = {}, []
    for doc_ord, queries in zip(ordinals, results):
        doc_id = index.doc_ids[doc_ord]
        if queries is None:
            skipped.append(doc_id)
            logger.debug("Skipping empty document %s", doc_id)
        else:
            entries[doc_id] = queries
    if skipped:
        logger.warning("Skipped %s empty documents (first: %s)", len(skipped), skipped[0])

    return QuerySet(
        entries,
        config=config,
        skipped=skipped,
        analysis_fingerprint=index.analysis_config.fingerprint,
        index_fingerprint=index.fingerprint,
    )
