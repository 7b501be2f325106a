"""
BM25, query likelihood with Dirichlet smoothing and DFR-PL2 over the
shared :class:`~findability.index.Index`.

Every path (single document, top-k search, rank lookup) goes through
:func:`_score_candidates`, so a document gets bit-identical scores no
matter which operation asked for it. Ranked lists order by score
descending, then doc_id ascending.
"""
from collections import Counter
from dataclasses import dataclass, field
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from findability.conf import settings
from findability.exceptions import ConfigurationError, EmptyQueryError
from findability.index import Index

BM25 = "bm25"
LM_DIRICHLET = "lm_dirichlet"
DFR_PL2 = "dfr_pl2"
KINDS = (BM25, LM_DIRICHLET, DFR_PL2)

ALIASES = {
    "bm25": BM25,
    "lmdir": LM_DIRICHLET,
    "lm-dir": LM_DIRICHLET,
    "lm_dirichlet": LM_DIRICHLET,
    "pl2": DFR_PL2,
    "dfr-pl2": DFR_PL2,
    "dfr_pl2": DFR_PL2,
}

LOG2_E = math.log2(math.e)
TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class RetrievalModel:
    kind: str
    params: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"model: unknown retrieval model {self.kind!r}")
        p = self.params
        required = {BM25: ("k1", "b"), LM_DIRICHLET: ("mu",), DFR_PL2: ("c",)}[self.kind]
        missing = [name for name in required if name not in p]
        if missing:
            raise ConfigurationError(f"model: {self.kind} requires parameters {missing}")
        if self.kind == BM25:
            if not p["k1"] > 0:
                raise ConfigurationError("bm25.k1 must be > 0")
            if not 0 <= p["b"] <= 1:
                raise ConfigurationError("bm25.b must lie in [0, 1]")
        elif self.kind == LM_DIRICHLET and not p["mu"] > 0:
            raise ConfigurationError("lmdir.mu must be > 0")
        elif self.kind == DFR_PL2 and not p["c"] > 0:
            raise ConfigurationError("pl2.c must be > 0")

    @classmethod
    def bm25(cls, k1: Optional[float] = None, b: Optional[float] = None) -> "RetrievalModel":
        return cls(BM25, {
            "k1": float(settings.BM25_K1 if k1 is None else k1),
            "b": float(settings.BM25_B if b is None else b),
        })

    @classmethod
    def lm_dirichlet(cls, mu: Optional[float] = None) -> "RetrievalModel":
        return cls(LM_DIRICHLET, {"mu": float(settings.LMDIR_MU if mu is None else mu)})

    @classmethod
    def dfr_pl2(cls, c: Optional[float] = None) -> "RetrievalModel":
        return cls(DFR_PL2, {"c": float(settings.PL2_C if c is None else c)})

    @classmethod
    def from_name(cls, name: str, **params) -> "RetrievalModel":
        try:
            kind = ALIASES[name.lower()]
        except KeyError:
            raise ConfigurationError(
                f"model: unknown retrieval model {name!r}, expected one of bm25|lmdir|pl2"
            ) from None
        params = {key: value for key, value in params.items() if value is not None}
        return getattr(cls, kind)(**params)

    def descriptor(self) -> dict:
        return {"kind": self.kind, "params": dict(sorted(self.params.items()))}

    def __str__(self):
        params = " ".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.kind}({params})"


@dataclass
class RankedList:
    entries: List[Tuple[str, float]]
    query: List[str]

    def __len__(self):
        return len(self.entries)

    @property
    def doc_ids(self) -> List[str]:
        return [doc_id for doc_id, _ in self.entries]


def _query_terms(index: Index, query: Sequence[str]) -> List[Tuple[int, int]]:
    """(term id, query frequency) in order of first appearance; unseen terms dropped."""
    term_ids = index.term_ids
    return [(term_ids[term], qtf) for term, qtf in Counter(query).items() if term in term_ids]


def _weights(model: RetrievalModel, index: Index, term_id: int, tf: np.ndarray, dl: np.ndarray) -> np.ndarray:
    tf = tf.astype(np.float64)
    p = model.params

    if model.kind == BM25:
        df = float(index.df[term_id])
        idf = math.log(1.0 + (index.num_docs - df + 0.5) / (df + 0.5))
        norm = p["k1"] * (1.0 - p["b"] + p["b"] * dl / index.avg_doc_length)
        return idf * (tf * (p["k1"] + 1.0)) / (tf + norm)

    if model.kind == LM_DIRICHLET:
        background = p["mu"] * (float(index.cf[term_id]) / index.total_tokens)
        return np.log((tf + background) / (dl + p["mu"]))

    lam = float(index.cf[term_id]) / index.num_docs
    with np.errstate(divide="ignore", invalid="ignore"):
        tfn = tf * np.log2(1.0 + p["c"] * index.avg_doc_length / dl)
        value = (1.0 / (tfn + 1.0)) * (
            tfn * np.log2(tfn / lam)
            + (lam - tfn) * LOG2_E
            + 0.5 * np.log2(TWO_PI * tfn)
        )
    return np.where((tfn > 0) & (tfn > lam), np.maximum(value, 0.0), 0.0)


def _score_candidates(
    model: RetrievalModel, index: Index, qterms: List[Tuple[int, int]], candidates: np.ndarray
) -> np.ndarray:
    scores = np.zeros(len(candidates), dtype=np.float64)
    dl = index.doc_lengths[candidates].astype(np.float64)
    for term_id, qtf in qterms:
        ords, tfs = index.term_postings(term_id)
        position = np.minimum(np.searchsorted(ords, candidates), len(ords) - 1)
        tf = np.where(ords[position] == candidates, tfs[position], 0)
        scores += qtf * _weights(model, index, term_id, tf, dl)
    return scores


def match(model: RetrievalModel, index: Index, query: Sequence[str]) -> Tuple[np.ndarray, np.ndarray]:
    """Ordinals of every document containing a query term (ascending) and their scores."""
    if not query:
        raise EmptyQueryError("empty query")
    qterms = _query_terms(index, query)
    if not qterms:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.float64)
    candidates = np.unique(np.concatenate([index.term_postings(t)[0] for t, _ in qterms]))
    return candidates, _score_candidates(model, index, qterms, candidates)


def order(index: Index, candidates: np.ndarray, scores: np.ndarray) -> np.ndarray:
    """Positions into ``candidates`` by score descending, doc_id ascending."""
    return np.lexsort((index.id_rank[candidates], -scores))


def ranks_within(
    index: Index,
    candidates: np.ndarray,
    scores: np.ndarray,
    targets: Sequence[int],
    cutoff: int,
) -> List[Optional[int]]:
    """1-based rank of each target ordinal, or None when unmatched or below ``cutoff``."""
    id_rank = index.id_rank[candidates]
    ranks = []
    for target in targets:
        position = np.searchsorted(candidates, target)
        if position >= len(candidates) or candidates[position] != target:
            ranks.append(None)
            continue
        score = scores[position]
        rank = 1 + int(np.count_nonzero(scores > score)) + int(
            np.count_nonzero((scores == score) & (id_rank < id_rank[position]))
        )
        ranks.append(rank if rank <= cutoff else None)
    return ranks


def score(model: RetrievalModel, index: Index, query: Sequence[str], doc_ord: int) -> float:
    """Score of one document; 0 when it contains no query term."""
    if not query:
        raise EmptyQueryError("empty query")
    doc_ord = index.check_ordinal(doc_ord)
    qterms = _query_terms(index, query)
    contains = False
    for term_id, _ in qterms:
        ords, _ = index.term_postings(term_id)
        position = np.searchsorted(ords, doc_ord)
        if position < len(ords) and ords[position] == doc_ord:
            contains = True
            break
    if not contains:
        return 0.0
    return float(_score_candidates(model, index, qterms, np.array([doc_ord], dtype=np.int64))[0])


def search(model: RetrievalModel, index: Index, query: Sequence[str], k: int) -> RankedList:
    if k < 1:
        raise ConfigurationError("k must be >= 1")
    candidates, scores = match(model, index, query)
    top = order(index, candidates, scores)[:k]
    entries = [(index.doc_ids[candidates[i]], float(scores[i])) for i in top]
    return RankedList(entries, list(query))


def rank_of(
    model: RetrievalModel, index: Index, query: Sequence[str], target: str, cutoff: int
) -> Optional[int]:
    if cutoff < 1:
        raise ConfigurationError("c must be >= 1")
    target_ord = index.ordinal(target)
    candidates, scores = match(model, index, query)
    return ranks_within(index, candidates, scores, [target_ord], cutoff)[0]
