"""
Immutable inverted index shared by every retrieval model and by the
query generator.

On-disk layout (all integers little endian)::

    header   b"FINDIDX1" | uint32 version | uint32 section count
    section  4-byte ascii tag | uint64 payload length | payload

    ANLY  canonical JSON of the AnalysisConfig
    DOCS  varint N | N varint byte lengths | concatenated UTF-8 doc ids
    LENS  N varint document lengths
    TERM  varint V | V varint byte lengths | concatenated UTF-8 terms, sorted
    POST  V varint document frequencies | P varint ordinal gaps | P varint term frequencies
    BIGR  varint B | B varint first-term-id gaps | B varint second term ids | B varint counts

Varints are LEB128 (7 bits per byte, high bit set on every byte but the
last). Ordinal gaps restart at each term: the first entry of a postings
list is the ordinal itself. A JSON sidecar ``<index>.stats.json`` holds
the CollectionStats fields.
"""
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from hashlib import sha256
import json
import logging
import pathlib
import struct
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from findability.corpus import AnalysisConfig, Corpus
from findability.exceptions import (
    ConstructionError,
    IndexFormatError,
    UnknownDocumentError,
)

logger = logging.getLogger("user_info." + __name__)

MAGIC = b"FINDIDX1"
VERSION = 1
SECTIONS = (b"ANLY", b"DOCS", b"LENS", b"TERM", b"POST", b"BIGR")
_HEADER = struct.Struct("<4sQ")


class Posting(NamedTuple):
    doc_id_ord: int
    term_freq: int


@dataclass(frozen=True)
class CollectionStats:
    num_docs: int
    num_distinct_terms: int
    total_tokens: int
    avg_doc_length: float

    def as_dict(self) -> dict:
        return {
            "num_docs": self.num_docs,
            "num_distinct_terms": self.num_distinct_terms,
            "total_tokens": self.total_tokens,
            "avg_doc_length": self.avg_doc_length,
        }


def _readonly(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class Index:
    """
    Postings are stored as one CSR block: the postings of term ``t`` are
    ``posting_ords[offsets[t]:offsets[t+1]]`` (ascending ordinals) and the
    matching ``posting_tfs``. Use :func:`build_index` or :func:`load`.
    """

    doc_ids: Tuple[str, ...]
    doc_lengths: np.ndarray
    terms: Tuple[str, ...]
    offsets: np.ndarray
    posting_ords: np.ndarray
    posting_tfs: np.ndarray
    bigram_first: np.ndarray
    bigram_second: np.ndarray
    bigram_counts: np.ndarray
    analysis_config: AnalysisConfig

    def __post_init__(self):
        for name in (
            "doc_lengths", "offsets", "posting_ords", "posting_tfs",
            "bigram_first", "bigram_second", "bigram_counts",
        ):
            _readonly(getattr(self, name))

    def __str__(self):
        return f"[Index] ({self.num_docs} documents, {self.num_terms} terms)"

    # collection statistics
    @property
    def num_docs(self) -> int:
        return len(self.doc_ids)

    @property
    def num_terms(self) -> int:
        return len(self.terms)

    @cached_property
    def total_tokens(self) -> int:
        return int(self.doc_lengths.sum())

    @cached_property
    def avg_doc_length(self) -> float:
        return self.total_tokens / self.num_docs

    @cached_property
    def df(self) -> np.ndarray:
        return _readonly(np.diff(self.offsets))

    @cached_property
    def cf(self) -> np.ndarray:
        if not len(self.posting_tfs):
            return _readonly(np.zeros(0, dtype=np.int64))
        return _readonly(np.add.reduceat(self.posting_tfs, self.offsets[:-1]))

    # lookups
    @cached_property
    def term_ids(self) -> Dict[str, int]:
        return {term: term_id for term_id, term in enumerate(self.terms)}

    @cached_property
    def doc_ords(self) -> Dict[str, int]:
        return {doc_id: ordinal for ordinal, doc_id in enumerate(self.doc_ids)}

    @cached_property
    def id_rank(self) -> np.ndarray:
        """Position of each ordinal when doc_ids are sorted as strings."""
        order = sorted(range(self.num_docs), key=self.doc_ids.__getitem__)
        rank = np.empty(self.num_docs, dtype=np.int64)
        rank[order] = np.arange(self.num_docs)
        return _readonly(rank)

    @cached_property
    def _forward(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        # postings are sorted by (term, ordinal) so a stable sort by ordinal
        # lists each document's terms in term-id order
        order = np.argsort(self.posting_ords, kind="stable")
        term_of_posting = np.repeat(np.arange(self.num_terms), self.df)
        counts = np.bincount(self.posting_ords, minlength=self.num_docs)
        doc_offsets = np.concatenate(([0], np.cumsum(counts)))
        return (
            _readonly(doc_offsets),
            _readonly(term_of_posting[order]),
            _readonly(self.posting_tfs[order]),
        )

    def ordinal(self, doc_id: str) -> int:
        try:
            return self.doc_ords[doc_id]
        except KeyError:
            raise UnknownDocumentError(f"unknown document {doc_id!r}") from None

    def check_ordinal(self, doc_ord: int) -> int:
        if not 0 <= doc_ord < self.num_docs:
            raise UnknownDocumentError(f"invalid document ordinal {doc_ord}")
        return int(doc_ord)

    def term_postings(self, term_id: int) -> Tuple[np.ndarray, np.ndarray]:
        start, end = self.offsets[term_id], self.offsets[term_id + 1]
        return self.posting_ords[start:end], self.posting_tfs[start:end]

    def doc_terms(self, doc_ord: int) -> Tuple[np.ndarray, np.ndarray]:
        """Distinct term ids of a document (ascending) and their frequencies."""
        doc_ord = self.check_ordinal(doc_ord)
        doc_offsets, term_ids, tfs = self._forward
        start, end = doc_offsets[doc_ord], doc_offsets[doc_ord + 1]
        return term_ids[start:end], tfs[start:end]

    def postings(self, term: str) -> List[Posting]:
        term_id = self.term_ids.get(term)
        if term_id is None:
            return []
        ords, tfs = self.term_postings(term_id)
        return [Posting(int(o), int(f)) for o, f in zip(ords, tfs)]

    def doc_freq(self, term: str) -> int:
        term_id = self.term_ids.get(term)
        return 0 if term_id is None else int(self.df[term_id])

    def collection_term_freq(self, term: str) -> int:
        term_id = self.term_ids.get(term)
        return 0 if term_id is None else int(self.cf[term_id])

    @property
    def postings_map(self) -> Dict[str, List[Posting]]:
        return {term: self.postings(term) for term in self.terms}

    def bigrams(self) -> List[Tuple[Tuple[str, str], int]]:
        return [
            ((self.terms[a], self.terms[b]), int(count))
            for a, b, count in zip(self.bigram_first, self.bigram_second, self.bigram_counts)
        ]

    @cached_property
    def fingerprint(self) -> str:
        return sha256(to_bytes(self)).hexdigest()


def build_index(corpus: Corpus) -> Index:
    """Ordinals follow corpus order; the vocabulary is sorted."""
    if not len(corpus):
        raise ConstructionError("cannot build an index from an empty corpus")

    vocabulary = sorted({token for document in corpus for token in document.tokens})
    if not vocabulary:
        raise ConstructionError("corpus contains no indexable tokens")
    term_ids = {term: term_id for term_id, term in enumerate(vocabulary)}

    rows, cols, freqs = [], [], []
    bigrams = Counter()
    lengths = np.zeros(len(corpus), dtype=np.int64)
    for ordinal, document in enumerate(corpus):
        ids = [term_ids[token] for token in document.tokens]
        lengths[ordinal] = len(ids)
        for term_id, tf in Counter(ids).items():
            rows.append(term_id)
            cols.append(ordinal)
            freqs.append(tf)
        bigrams.update(zip(ids, ids[1:]))

    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    freqs = np.asarray(freqs, dtype=np.int64)
    order = np.lexsort((cols, rows))
    df = np.bincount(rows, minlength=len(vocabulary))
    offsets = np.concatenate(([0], np.cumsum(df))).astype(np.int64)

    pairs = sorted(bigrams.items())
    index = Index(
        doc_ids=tuple(corpus.doc_ids),
        doc_lengths=lengths,
        terms=tuple(vocabulary),
        offsets=offsets,
        posting_ords=cols[order],
        posting_tfs=freqs[order],
        bigram_first=np.asarray([a for (a, _), _ in pairs], dtype=np.int64),
        bigram_second=np.asarray([b for (_, b), _ in pairs], dtype=np.int64),
        bigram_counts=np.asarray([count for _, count in pairs], dtype=np.int64),
        analysis_config=corpus.analysis_config,
    )
    logger.info("Built %s", index)
    return index


def stats(index: Index) -> CollectionStats:
    return CollectionStats(
        num_docs=index.num_docs,
        num_distinct_terms=index.num_terms,
        total_tokens=index.total_tokens,
        avg_doc_length=index.avg_doc_length,
    )


def postings(index: Index, term: str) -> List[Posting]:
    return index.postings(term)


# varint codec
def encode_varints(values: Sequence[int]) -> bytes:
    values = np.asarray(values, dtype=np.uint64)
    if not len(values):
        return b""
    nbytes = np.ones(len(values), dtype=np.int64)
    rest = values >> np.uint64(7)
    while rest.any():
        nbytes += rest > 0
        rest >>= np.uint64(7)

    out = np.zeros(int(nbytes.sum()), dtype=np.uint8)
    starts = np.cumsum(nbytes) - nbytes
    for k in range(int(nbytes.max())):
        mask = nbytes > k
        chunk = (values[mask] >> np.uint64(7 * k)) & np.uint64(0x7F)
        more = (nbytes[mask] - 1 > k).astype(np.uint64) << np.uint64(7)
        out[starts[mask] + k] = (chunk | more).astype(np.uint8)
    return out.tobytes()


def decode_varints(buffer: np.ndarray, count: int, offset: int = 0) -> Tuple[np.ndarray, int]:
    """Decode ``count`` varints starting at ``offset``; returns values and the next offset."""
    if count == 0:
        return np.zeros(0, dtype=np.int64), offset
    ends = np.flatnonzero(buffer[offset:] < 0x80)[:count]
    if len(ends) < count:
        raise IndexFormatError("truncated varint stream")
    end = offset + int(ends[-1]) + 1
    chunk = buffer[offset:end].astype(np.uint64)
    value_index = np.concatenate(([0], np.cumsum(chunk[:-1] < 0x80)))
    starts = np.concatenate(([0], ends[:-1] + 1))
    position = np.arange(len(chunk)) - starts[value_index]
    shifted = (chunk & np.uint64(0x7F)) << (np.uint64(7) * position.astype(np.uint64))
    return np.add.reduceat(shifted, starts).astype(np.int64), end


def _encode_strings(strings: Sequence[str]) -> bytes:
    encoded = [string.encode("utf-8") for string in strings]
    return (
        encode_varints([len(encoded)])
        + encode_varints([len(item) for item in encoded])
        + b"".join(encoded)
    )


def _decode_strings(payload: bytes) -> Tuple[str, ...]:
    buffer = np.frombuffer(payload, dtype=np.uint8)
    (count,), offset = decode_varints(buffer, 1)
    lengths, offset = decode_varints(buffer, int(count), offset)
    strings, position = [], offset
    for length in lengths:
        strings.append(payload[position:position + length].decode("utf-8"))
        position += int(length)
    if position != len(payload):
        raise IndexFormatError("string table size mismatch")
    return tuple(strings)


def to_bytes(index: Index) -> bytes:
    gaps = index.posting_ords.copy()
    gaps[1:] -= index.posting_ords[:-1]
    starts = index.offsets[:-1]
    gaps[starts] = index.posting_ords[starts]

    first_gaps = np.diff(index.bigram_first, prepend=0)
    analysis = json.dumps(index.analysis_config.as_dict(), sort_keys=True, separators=(",", ":"))

    payloads = {
        b"ANLY": analysis.encode("utf-8"),
        b"DOCS": _encode_strings(index.doc_ids),
        b"LENS": encode_varints(index.doc_lengths),
        b"TERM": _encode_strings(index.terms),
        b"POST": encode_varints(index.df) + encode_varints(gaps) + encode_varints(index.posting_tfs),
        b"BIGR": (
            encode_varints([len(index.bigram_counts)])
            + encode_varints(first_gaps)
            + encode_varints(index.bigram_second)
            + encode_varints(index.bigram_counts)
        ),
    }
    parts = [MAGIC, struct.pack("<II", VERSION, len(SECTIONS))]
    for tag in SECTIONS:
        parts.append(_HEADER.pack(tag, len(payloads[tag])))
        parts.append(payloads[tag])
    return b"".join(parts)


def from_bytes(data: bytes) -> Index:
    if data[:len(MAGIC)] != MAGIC:
        raise IndexFormatError("bad magic bytes, not a findability index")
    try:
        version, nsections = struct.unpack_from("<II", data, len(MAGIC))
    except struct.error:
        raise IndexFormatError("truncated header") from None
    if version != VERSION:
        raise IndexFormatError(f"unsupported index version {version}")

    sections, position = {}, len(MAGIC) + 8
    for _ in range(nsections):
        try:
            tag, length = _HEADER.unpack_from(data, position)
        except struct.error:
            raise IndexFormatError("truncated section header") from None
        position += _HEADER.size
        if position + length > len(data):
            raise IndexFormatError(f"truncated section {tag!r}")
        sections[tag] = data[position:position + length]
        position += length
    missing = [tag.decode() for tag in SECTIONS if tag not in sections]
    if missing:
        raise IndexFormatError(f"missing sections {missing}")

    analysis = AnalysisConfig.from_dict(json.loads(sections[b"ANLY"].decode("utf-8")))
    doc_ids = _decode_strings(sections[b"DOCS"])
    terms = _decode_strings(sections[b"TERM"])

    lengths, _ = decode_varints(np.frombuffer(sections[b"LENS"], dtype=np.uint8), len(doc_ids))

    post = np.frombuffer(sections[b"POST"], dtype=np.uint8)
    df, offset = decode_varints(post, len(terms))
    total = int(df.sum())
    gaps, offset = decode_varints(post, total, offset)
    tfs, _ = decode_varints(post, total, offset)
    offsets = np.concatenate(([0], np.cumsum(df))).astype(np.int64)
    running = np.cumsum(gaps)
    starts = offsets[:-1]
    ords = running - np.repeat(running[starts] - gaps[starts], df)

    bigr = np.frombuffer(sections[b"BIGR"], dtype=np.uint8)
    (nbigrams,), offset = decode_varints(bigr, 1)
    first_gaps, offset = decode_varints(bigr, int(nbigrams), offset)
    second, offset = decode_varints(bigr, int(nbigrams), offset)
    counts, _ = decode_varints(bigr, int(nbigrams), offset)

    return Index(
        doc_ids=doc_ids,
        doc_lengths=lengths,
        terms=terms,
        offsets=offsets,
        posting_ords=ords,
        posting_tfs=tfs,
        bigram_first=np.cumsum(first_gaps).astype(np.int64),
        bigram_second=second,
        bigram_counts=counts,
        analysis_config=analysis,
    )


def stats_path(path) -> pathlib.Path:
    path = pathlib.Path(path)
    return path.with_name(path.name + ".stats.json")


def save(index: Index, path, config_fingerprint: Optional[str] = None) -> pathlib.Path:
    """
    Write the index and its stats sidecar. Returns the index path.
    ``config_fingerprint`` identifies the run configuration in the sidecar.
    """
    path = pathlib.Path(path)
    data = to_bytes(index)
    path.write_bytes(data)
    with open(stats_path(path), "w", encoding="utf-8", newline="\n") as file:
        record = stats(index).as_dict()
        if config_fingerprint is not None:
            record["config_fingerprint"] = config_fingerprint
        json.dump(record, file, sort_keys=True, indent=2)
        file.write("\n")
    logger.info("Saved %s to %s (%s bytes)", index, path, len(data))
    return path


def load(path) -> Index:
    path = pathlib.Path(path)
    data = path.read_bytes()
    index = from_bytes(data)
    # the fingerprint of a loaded index is the hash of the bytes it came from
    index.__dict__["fingerprint"] = sha256(data).hexdigest()
    logger.info("Loaded %s from %s", index, path)
    return index
