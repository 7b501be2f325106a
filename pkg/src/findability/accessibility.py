"""
Per-document accessibility scores.

Findability averages a convenience value over a document's relevant
queries; retrievability counts how many queries of a broad query set put
the document within the rank cutoff. Batch evaluation runs each distinct
query once and credits every document that depends on it.
"""
from concurrent.futures import ThreadPoolExecutor
import csv
from dataclasses import dataclass, field
from hashlib import sha256
import io
import json
import logging
import math
import pathlib
import sys
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from findability.conf import settings
from findability.exceptions import (
    ConfigMismatchError,
    ConfigurationError,
    EmptyQueryError,
    IntegrityError,
    NoRelevantQueriesError,
    ParseError,
    RankError,
)
from findability.index import Index
from findability.querygen import QuerySet
from findability.retrieval import RetrievalModel, match, order, ranks_within

logger = logging.getLogger("user_info." + __name__)
log = logging.getLogger("global")

FINDABILITY = "findability"
RETRIEVABILITY = "retrievability"
EXPONENTIAL = "exponential"
INVERSE = "inverse"
FORMS = (EXPONENTIAL, INVERSE)


@dataclass(frozen=True)
class ConvenienceSpec:
    form: str = INVERSE
    cutoff: int = 100
    decay_denominator: float = 3.0

    def __post_init__(self):
        if self.form not in FORMS:
            raise ConfigurationError(f"xi: unknown convenience form {self.form!r}, expected exponential|inverse")
        if not 1 <= self.cutoff <= settings.MAX_CUTOFF:
            raise ConfigurationError(f"c must lie in [1, {settings.MAX_CUTOFF}]")
        if not self.decay_denominator > 0:
            raise ConfigurationError("decay must be > 0")

    @classmethod
    def default(cls, **overrides) -> "ConvenienceSpec":
        values = {
            "form": settings.CONVENIENCE_FORM,
            "cutoff": settings.CUTOFF,
            "decay_denominator": settings.DECAY_DENOMINATOR,
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

    def as_dict(self) -> dict:
        values = {"form": self.form, "c": self.cutoff}
        if self.form == EXPONENTIAL:
            values["decay"] = self.decay_denominator
        return values


def convenience(spec: ConvenienceSpec, rank: int) -> float:
    """1 at rank 1, non-increasing, 0 past the cutoff."""
    if rank < 1:
        raise RankError(f"rank must be >= 1, got {rank}")
    if rank > spec.cutoff:
        return 0.0
    if spec.form == INVERSE:
        return 1.0 / rank
    return math.exp(-(rank - 1) / spec.decay_denominator)


def _mean_convenience(ranks: Sequence[Optional[int]], spec: ConvenienceSpec) -> float:
    return math.fsum(convenience(spec, rank) for rank in ranks if rank is not None) / len(ranks)


@dataclass
class AccessScores:
    metric: str
    scores: Dict[str, float]
    model: dict
    cutoff: int
    convenience: Optional[dict] = None
    query_source: dict = field(default_factory=dict)
    skipped: List[str] = field(default_factory=list)
    index_fingerprint: Optional[str] = None
    config_fingerprint: Optional[str] = None

    def __post_init__(self):
        self.scores = dict(sorted(self.scores.items()))

    def __len__(self):
        return len(self.scores)

    @property
    def doc_ids(self) -> List[str]:
        return list(self.scores)

    def values(self) -> np.ndarray:
        return np.fromiter(self.scores.values(), dtype=np.float64, count=len(self.scores))

    def to_csv_bytes(self) -> bytes:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(("doc_id", "score"))
        for doc_id, value in self.scores.items():
            writer.writerow((doc_id, repr(float(value))))
        return buffer.getvalue().encode("utf-8")

    @property
    def fingerprint(self) -> str:
        return sha256(self.to_csv_bytes()).hexdigest()

    def metadata(self) -> dict:
        return {
            "metric": self.metric,
            "model": self.model,
            "c": self.cutoff,
            "convenience": self.convenience,
            "query_source": self.query_source,
            "skipped": list(self.skipped),
            "n_docs": len(self.scores),
            "index_fingerprint": self.index_fingerprint,
            "config_fingerprint": self.config_fingerprint,
            "scores_fingerprint": self.fingerprint,
        }

    def write_csv(self, path) -> pathlib.Path:
        path = pathlib.Path(path)
        path.write_bytes(self.to_csv_bytes())
        with open(metadata_path(path), "w", encoding="utf-8", newline="\n") as file:
            json.dump(self.metadata(), file, sort_keys=True, indent=2, ensure_ascii=False)
            file.write("\n")
        logger.info("Wrote %s %s scores to %s", len(self), self.metric, path)
        return path

    @classmethod
    def read_csv(cls, path) -> "AccessScores":
        """Scores plus the sidecar metadata when present."""
        path = pathlib.Path(path)
        scores = {}
        with open(path, encoding="utf-8", newline="") as file:
            reader = csv.reader(file)
            header = next(reader, None)
            if header != ["doc_id", "score"]:
                raise ParseError("expected header doc_id,score", line=1)
            for lineno, row in enumerate(reader, 2):
                if not row:
                    continue
                if len(row) != 2 or not row[0]:
                    raise ParseError("expected doc_id,score", line=lineno)
                try:
                    value = float(row[1])
                except ValueError:
                    raise ParseError(f"invalid score {row[1]!r}", line=lineno) from None
                if row[0] in scores:
                    raise IntegrityError(f"duplicate doc_id {row[0]!r} at line {lineno}")
                scores[row[0]] = value

        meta = read_metadata(path) or {}
        return cls(
            metric=meta.get("metric", FINDABILITY),
            scores=scores,
            model=meta.get("model", {}),
            cutoff=meta.get("c", settings.CUTOFF),
            convenience=meta.get("convenience"),
            query_source=meta.get("query_source", {}),
            skipped=meta.get("skipped", []),
            index_fingerprint=meta.get("index_fingerprint"),
            config_fingerprint=meta.get("config_fingerprint"),
        )


def metadata_path(path) -> pathlib.Path:
    path = pathlib.Path(path)
    return path.with_name(path.name + ".meta.json")


def read_metadata(path) -> Optional[dict]:
    sidecar = metadata_path(path)
    if not sidecar.exists():
        logger.warning("%s has no metadata sidecar", path)
        return None
    with open(sidecar, encoding="utf-8") as file:
        try:
            metadata = json.load(file)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{sidecar.name}: invalid JSON ({exc.msg})", line=exc.lineno) from None
    if not isinstance(metadata, dict):
        raise ParseError(f"{sidecar.name}: expected a JSON object")
    return metadata


def _chunks(items: Sequence, size: int) -> Iterator[Sequence]:
    for start in range(0, len(items), size):
        yield items[start:start + size]


def run_jobs(function: Callable, jobs: Sequence, threads: int = 1, desc: str = "queries", quiet: bool = False) -> Iterator:
    """
    Apply ``function`` to every job, yielding results in job order whatever
    the worker count. Progress goes to stderr every PROGRESS_EVERY jobs.
    """
    every = settings.PROGRESS_EVERY
    chunks = list(_chunks(jobs, every))

    def evaluate(chunk):
        return [function(job) for job in chunk]

    bar = tqdm(total=len(jobs), desc=desc, unit="query", file=sys.stderr, disable=quiet or len(jobs) < every)
    with bar:
        if threads == 1:
            yield from _report(map(evaluate, chunks), bar, desc, len(jobs), quiet)
        else:
            with ThreadPoolExecutor(max_workers=threads or None) as executor:
                yield from _report(executor.map(evaluate, chunks), bar, desc, len(jobs), quiet)


def _report(batches: Iterable[list], bar, desc: str, total: int, quiet: bool) -> Iterator:
    done = 0
    for batch in batches:
        yield from batch
        done += len(batch)
        bar.update(len(batch))
        if not quiet and len(batch) == settings.PROGRESS_EVERY:
            log.info("%s: %s/%s evaluated", desc, done, total)


def _check_query_set(index: Index, query_set: QuerySet) -> None:
    if query_set.analysis_fingerprint and query_set.analysis_fingerprint != index.analysis_config.fingerprint:
        raise ConfigMismatchError(
            "analysis_fingerprint: query set was generated under different analysis settings than the index"
        )
    if query_set.index_fingerprint and query_set.index_fingerprint != index.fingerprint:
        logger.warning("Query set was generated from a different index build (%s)", query_set.index_fingerprint[:12])
    unknown = [doc_id for doc_id in query_set.entries if doc_id not in index.doc_ords]
    if unknown:
        raise ConfigMismatchError(f"queries: {len(unknown)} documents are not in the index (first: {unknown[0]!r})")


def _collect_ranks(
    model: RetrievalModel,
    index: Index,
    query_set: QuerySet,
    cutoff: int,
    threads: int = 1,
    quiet: bool = False,
) -> Tuple[Dict[str, List[Optional[int]]], List[str]]:
    """Rank of each document for each of its queries; documents without queries are returned apart."""
    groups: Dict[tuple, List[Tuple[int, str, int]]] = {}
    ranks: Dict[str, List[Optional[int]]] = {}
    empty = []
    for doc_id, queries in query_set.entries.items():
        if not queries:
            empty.append(doc_id)
            continue
        target = index.ordinal(doc_id)
        ranks[doc_id] = [None] * len(queries)
        for slot, query in enumerate(queries):
            groups.setdefault(tuple(query), []).append((target, doc_id, slot))

    jobs = list(groups.items())

    def evaluate(job):
        query, targets = job
        candidates, scores = match(model, index, query)
        return ranks_within(index, candidates, scores, [target for target, _, _ in targets], cutoff)

    for (_, targets), found in zip(jobs, run_jobs(evaluate, jobs, threads, "findability", quiet)):
        for (_, doc_id, slot), rank in zip(targets, found):
            ranks[doc_id][slot] = rank
    return ranks, empty


def _query_source(query_set: QuerySet) -> dict:
    return {
        "kind": "known_item",
        "config": query_set.config.as_dict() if query_set.config else None,
        "num_queries": query_set.num_queries,
        "queries_fingerprint": query_set.fingerprint,
    }


def findability_of_doc(
    model: RetrievalModel,
    index: Index,
    queries: Sequence[Sequence[str]],
    target: str,
    spec: ConvenienceSpec,
) -> float:
    """Mean convenience of ``target`` over its relevant queries; misses count as 0."""
    if not queries:
        raise NoRelevantQueriesError("document has no relevant queries")
    target_ord = index.ordinal(target)
    ranks = [
        ranks_within(index, *match(model, index, query), [target_ord], spec.cutoff)[0]
        for query in queries
    ]
    return _mean_convenience(ranks, spec)


def findability_all(
    model: RetrievalModel,
    index: Index,
    query_set: QuerySet,
    spec: ConvenienceSpec,
    threads: int = 1,
    quiet: bool = False,
) -> AccessScores:
    _check_query_set(index, query_set)
    ranks, empty = _collect_ranks(model, index, query_set, spec.cutoff, threads, quiet)
    return AccessScores(
        metric=FINDABILITY,
        scores={doc_id: _mean_convenience(found, spec) for doc_id, found in ranks.items()},
        model=model.descriptor(),
        cutoff=spec.cutoff,
        convenience=spec.as_dict(),
        query_source=_query_source(query_set),
        skipped=sorted(set(query_set.skipped) | set(empty)),
        index_fingerprint=index.fingerprint,
    )


def findability_sweep(
    model: RetrievalModel,
    index: Index,
    query_set: QuerySet,
    form: str,
    cutoffs: Sequence[int],
    decay_denominator: float = 3.0,
    threads: int = 1,
    quiet: bool = False,
) -> Dict[int, AccessScores]:
    """Findability for several cutoffs from a single retrieval pass at the largest one."""
    if not cutoffs:
        raise ConfigurationError("cutoffs: at least one cutoff is required")
    specs = {c: ConvenienceSpec(form, c, decay_denominator) for c in sorted(set(cutoffs))}
    _check_query_set(index, query_set)
    ranks, empty = _collect_ranks(model, index, query_set, max(specs), threads, quiet)
    source = _query_source(query_set)
    skipped = sorted(set(query_set.skipped) | set(empty))

    results = {}
    for c, spec in specs.items():
        scores = {
            doc_id: _mean_convenience([r if r is not None and r <= c else None for r in found], spec)
            for doc_id, found in ranks.items()
        }
        results[c] = AccessScores(
            metric=FINDABILITY,
            scores=scores,
            model=model.descriptor(),
            cutoff=c,
            convenience=spec.as_dict(),
            query_source=source,
            skipped=skipped,
            index_fingerprint=index.fingerprint,
        )
    return results


def flatten_queries(query_set: QuerySet) -> List[List[str]]:
    """Every known-item query, in doc_id order, for use as a retrievability query set."""
    return [list(query) for queries in query_set.entries.values() for query in queries]


def retrievability_query_set(
    index: Index,
    unigram_min_cf: int,
    bigram_min_cf: int,
    max_queries: int,
) -> List[List[str]]:
    """
    Single terms and adjacent-token bigrams frequent enough in the
    collection, most frequent first (ties by tokens), capped at
    ``max_queries``.
    """
    if unigram_min_cf < 1 or bigram_min_cf < 1:
        raise ConfigurationError("retrievability thresholds must be >= 1")
    if max_queries < 1:
        raise ConfigurationError("max_queries must be >= 1")

    candidates = [
        (-int(cf), (term,)) for term, cf in zip(index.terms, index.cf) if cf >= unigram_min_cf
    ]
    candidates.extend(
        (-count, pair) for pair, count in index.bigrams() if count >= bigram_min_cf
    )
    candidates.sort()
    return [list(tokens) for _, tokens in candidates[:max_queries]]


def retrievability_all(
    model: RetrievalModel,
    index: Index,
    queries: Sequence[Sequence[str]],
    cutoff: int,
    threads: int = 1,
    quiet: bool = False,
    query_source: Optional[dict] = None,
) -> AccessScores:
    """r(d) = number of queries that rank d within the top ``cutoff``."""
    if not queries:
        raise EmptyQueryError("retrievability needs at least one query")
    if cutoff < 1:
        raise ConfigurationError("c must be >= 1")

    def evaluate(query):
        candidates, scores = match(model, index, query)
        return candidates[order(index, candidates, scores)[:cutoff]]

    counts = np.zeros(index.num_docs, dtype=np.int64)
    for retrieved in run_jobs(evaluate, list(queries), threads, "retrievability", quiet):
        counts[retrieved] += 1

    return AccessScores(
        metric=RETRIEVABILITY,
        scores={doc_id: float(counts[ordinal]) for ordinal, doc_id in enumerate(index.doc_ids)},
        model=model.descriptor(),
        cutoff=cutoff,
        query_source=query_source or {"kind": "collection", "num_queries": len(queries)},
        index_fingerprint=index.fingerprint,
    )
