"""
Synthetic collections for trend checks.

Documents mix a Zipfian background vocabulary with a per-document topic.
Document ``i`` depends only on (seed, i), so a corpus of n documents is
the prefix of every larger corpus drawn with the same seed.
"""
import json
import logging
import pathlib
from typing import List, Tuple

import numpy as np

logger = logging.getLogger("user_info." + __name__)


def _word(rank: int) -> str:
    return f"w{rank:05d}"


def generate_corpus(
    n_docs: int,
    seed: int = 0,
    vocabulary_size: int = 20000,
    mean_length: float = 60.0,
    topics: int = 50,
    topic_size: int = 40,
    topic_weight: float = 0.3,
    zipf_exponent: float = 1.1,
) -> List[Tuple[str, str]]:
    """(doc_id, text) pairs; ids are zero padded so string order equals generation order."""
    ranks = np.arange(1, vocabulary_size + 1, dtype=np.float64)
    cdf = np.cumsum(ranks ** -zipf_exponent)
    cdf /= cdf[-1]

    shared = np.random.default_rng([seed, 0])
    topic_words = shared.integers(0, vocabulary_size, size=(topics, topic_size))

    records = []
    for i in range(n_docs):
        rng = np.random.default_rng([seed, 1, i])
        length = max(5, int(rng.poisson(mean_length)))
        topic = topic_words[rng.integers(topics)]
        from_topic = rng.random(length) < topic_weight
        background = np.minimum(np.searchsorted(cdf, rng.random(length)), vocabulary_size - 1)
        words = np.where(from_topic, topic[rng.integers(topic_size, size=length)], background)
        records.append((f"doc{i:07d}", " ".join(_word(int(w)) for w in words)))
    return records


def write_jsonl(records: List[Tuple[str, str]], path) -> pathlib.Path:
    path = pathlib.Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as file:
        for doc_id, text in records:
            file.write(json.dumps({"id": doc_id, "text": text}, ensure_ascii=False))
            file.write("\n")
    logger.info("Wrote %s synthetic documents to %s", len(records), path)
    return path
