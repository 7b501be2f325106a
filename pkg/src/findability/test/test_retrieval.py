from collections import Counter
import math
import random
import unittest

import numpy as np

from findability.exceptions import ConfigurationError, EmptyQueryError, UnknownDocumentError
from findability.querygen import QueryGenConfig, generate_all
from findability.retrieval import (
    RetrievalModel,
    _query_terms,
    _score_candidates,
    rank_of,
    score,
    search,
)
from findability.test import build_test_index

MODELS = (
    RetrievalModel.bm25(k1=1.2, b=0.75),
    RetrievalModel.lm_dirichlet(mu=1000.0),
    RetrievalModel.dfr_pl2(c=1.0),
)


def closed_form(model, index, query, doc_ord):
    """Straight transcription of the scoring formulas, one document at a time."""
    tokens = index.doc_terms(doc_ord)
    tf_of = {index.terms[t]: int(f) for t, f in zip(*tokens)}
    if not any(term in tf_of for term in query):
        return 0.0
    n, avdl, total = index.num_docs, index.avg_doc_length, index.total_tokens
    dl = int(index.doc_lengths[doc_ord])
    p = model.params
    value = 0.0
    for term, qtf in Counter(query).items():
        cf = index.collection_term_freq(term)
        if cf == 0:
            continue
        tf = tf_of.get(term, 0)
        if model.kind == "bm25":
            df = index.doc_freq(term)
            idf = math.log(1 + (n - df + 0.5) / (df + 0.5))
            value += qtf * idf * tf * (p["k1"] + 1) / (tf + p["k1"] * (1 - p["b"] + p["b"] * dl / avdl))
        elif model.kind == "lm_dirichlet":
            value += qtf * math.log((tf + p["mu"] * cf / total) / (dl + p["mu"]))
        else:
            lam = cf / n
            tfn = tf * math.log2(1 + p["c"] * avdl / dl)
            if tfn <= 0 or tfn <= lam:
                continue
            gain = (1 / (tfn + 1)) * (
                tfn * math.log2(tfn / lam) + (lam - tfn) * math.log2(math.e) + 0.5 * math.log2(2 * math.pi * tfn)
            )
            value += qtf * max(gain, 0.0)
    return value


def full_scan(model, index, query, vocabularies):
    """Score every document, keep those sharing a term with the query, sort by (-score, doc_id)."""
    qterms = _query_terms(index, query)
    everything = np.arange(index.num_docs, dtype=np.int64)
    scores = _score_candidates(model, index, qterms, everything)
    query_terms = set(query)
    matching = [
        (-scores[d], index.doc_ids[d])
        for d in range(index.num_docs)
        if vocabularies[d] & query_terms
    ]
    return [doc_id for _, doc_id in sorted(matching)]


def oracle_rank(ranked, target, cutoff):
    if target not in ranked:
        return None
    rank = ranked.index(target) + 1
    return rank if rank <= cutoff else None


class Test_Models(unittest.TestCase):

    def setUp(self):
        self.index = build_test_index([("d1", "a b a"), ("d2", "b c"), ("d3", "c c c")])

    def test_bm25_tf(self):
        model = RetrievalModel.bm25(k1=1.2, b=0.75)
        d1, d2, d3 = (score(model, self.index, ["c"], d) for d in range(3))
        self.assertEqual(d1, 0.0)
        self.assertGreater(d3, d2)
        self.assertGreater(d2, d1)

    def test_lmdir_length(self):
        model = RetrievalModel.lm_dirichlet(mu=1000.0)
        self.assertGreater(score(model, self.index, ["b"], 1), score(model, self.index, ["b"], 0))

    def test_lmdir_non_positive(self):
        model = RetrievalModel.lm_dirichlet(mu=1000.0)
        for d in range(3):
            self.assertLessEqual(score(model, self.index, ["a", "b", "c"], d), 0.0)

    def test_unseen_term(self):
        for model in MODELS:
            self.assertEqual([score(model, self.index, ["z"], d) for d in range(3)], [0.0] * 3)
            self.assertEqual(len(search(model, self.index, ["z"], 10)), 0)

    def test_empty_query(self):
        for model in MODELS:
            with self.assertRaises(EmptyQueryError):
                search(model, self.index, [], 10)
            with self.assertRaises(EmptyQueryError):
                score(model, self.index, [], 0)

    def test_invalid_doc(self):
        with self.assertRaises(UnknownDocumentError):
            score(MODELS[0], self.index, ["a"], 3)
        with self.assertRaises(UnknownDocumentError):
            rank_of(MODELS[0], self.index, ["a"], "d9", 10)

    def test_parameters(self):
        with self.assertRaises(ConfigurationError):
            RetrievalModel.bm25(k1=0)
        with self.assertRaises(ConfigurationError):
            RetrievalModel.bm25(b=1.5)
        with self.assertRaises(ConfigurationError):
            RetrievalModel.lm_dirichlet(mu=-1)
        with self.assertRaises(ConfigurationError):
            RetrievalModel.dfr_pl2(c=0)
        with self.assertRaises(ConfigurationError):
            RetrievalModel.from_name("tfidf")
        self.assertEqual(RetrievalModel.from_name("pl2").kind, "dfr_pl2")
        self.assertEqual(RetrievalModel.from_name("lmdir", mu=500).params, {"mu": 500.0})

    def test_bm25_monotone_bounded(self):
        docs = [(f"d{tf}", " ".join(["x"] * tf + ["y"] * (20 - tf))) for tf in range(1, 20)]
        index = build_test_index(docs + [("e", "z " * 20)])
        model = RetrievalModel.bm25()
        scores = [score(model, index, ["x"], d) for d in range(19)]
        self.assertEqual(scores, sorted(scores))
        self.assertEqual(len(set(scores)), len(scores))
        idf = math.log(1 + (index.num_docs - 19 + 0.5) / (19 + 0.5))
        self.assertLess(scores[-1], idf * (model.params["k1"] + 1))

    def test_closed_forms(self):
        rng = random.Random(17)
        words = [f"t{i}" for i in range(15)]
        docs = [(f"d{i:02d}", " ".join(rng.choice(words) for _ in range(rng.randint(1, 25)))) for i in range(40)]
        index = build_test_index(docs)
        for model in MODELS:
            for _ in range(30):
                query = [rng.choice(words + ["unseen"]) for _ in range(rng.randint(1, 4))]
                for d in range(index.num_docs):
                    expected = closed_form(model, index, query, d)
                    self.assertTrue(
                        math.isclose(score(model, index, query, d), expected, rel_tol=1e-9, abs_tol=1e-12),
                        (model.kind, query, d),
                    )


class Test_Search(unittest.TestCase):

    def test_top_k(self):
        index = build_test_index([("d1", "q"), ("d2", "q q"), ("d3", "q q q r")])
        ranked = search(RetrievalModel.bm25(), index, ["q"], 2)
        self.assertEqual(len(ranked), 2)
        full = search(RetrievalModel.bm25(), index, ["q"], 10)
        self.assertEqual(ranked.entries, full.entries[:2])
        self.assertEqual(len(full), 3)

    def test_tie_break(self):
        index = build_test_index([("b", "x y"), ("a", "x y"), ("c", "y")])
        for model in MODELS:
            ranked = search(model, index, ["x"], 10)
            self.assertEqual(ranked.doc_ids, ["a", "b"])
            self.assertEqual(ranked.entries[0][1], ranked.entries[1][1])

    def test_scores_non_increasing(self):
        rng = random.Random(2)
        words = [f"t{i}" for i in range(10)]
        index = build_test_index([(f"d{i}", " ".join(rng.choice(words) for _ in range(8))) for i in range(50)])
        for model in MODELS:
            scores = [s for _, s in search(model, index, ["t1", "t2"], 50).entries]
            self.assertEqual(scores, sorted(scores, reverse=True))

    def test_rank_of(self):
        index = build_test_index([("d1", "a"), ("d2", "b")])
        self.assertEqual(rank_of(MODELS[0], index, ["a"], "d1", 100), 1)
        self.assertIsNone(rank_of(MODELS[0], index, ["a"], "d2", 100))

    def test_rank_cutoff(self):
        # 150 documents matching "q", ranked purely by doc_id
        index = build_test_index([(f"d{i:03d}", "q") for i in range(150)])
        model = RetrievalModel.bm25()
        self.assertEqual(rank_of(model, index, ["q"], "d119", 150), 120)
        self.assertIsNone(rank_of(model, index, ["q"], "d119", 100))
        self.assertEqual(rank_of(model, index, ["q"], "d099", 100), 100)
        with self.assertRaises(ConfigurationError):
            rank_of(model, index, ["q"], "d001", 0)

    def test_score_matches_search(self):
        rng = random.Random(8)
        words = [f"t{i}" for i in range(12)]
        index = build_test_index([(f"d{i}", " ".join(rng.choice(words) for _ in range(10))) for i in range(60)])
        for model in MODELS:
            for entry_id, value in search(model, index, ["t3", "t4", "t4"], 60).entries:
                self.assertEqual(value, score(model, index, ["t3", "t4", "t4"], index.ordinal(entry_id)))


class Test_RankOracle(unittest.TestCase):

    def test_random_corpora(self):
        rng = random.Random(2024)
        checked = 0
        for corpus_no in range(50):
            vocab = rng.randint(3, 50)
            words = [f"w{i}" for i in range(vocab)]
            docs = [
                (f"doc{rng.randrange(10 ** 6):06d}-{i}", " ".join(rng.choice(words) for _ in range(rng.randint(1, 30))))
                for i in range(rng.randint(5, 200))
            ]
            index = build_test_index(docs)
            vocabularies = [{index.terms[t] for t in index.doc_terms(d)[0]} for d in range(index.num_docs)]
            query_set = generate_all(index, QueryGenConfig(seed=corpus_no))
            for model in MODELS:
                for doc_id, queries in query_set.entries.items():
                    for query in queries:
                        ranked = full_scan(model, index, query, vocabularies)
                        for cutoff in (1, 10, 100):
                            self.assertEqual(
                                rank_of(model, index, query, doc_id, cutoff),
                                oracle_rank(ranked, doc_id, cutoff),
                                (corpus_no, model.kind, doc_id, query, cutoff),
                            )
                            checked += 1
        self.assertGreater(checked, 1000)


def main_suite() -> unittest.TestSuite:
    s = unittest.TestSuite()
    load_from = unittest.defaultTestLoader.loadTestsFromTestCase
    s.addTests(load_from(Test_Models))
    s.addTests(load_from(Test_Search))
    s.addTests(load_from(Test_RankOracle))

    return s


def run():
    t = unittest.TextTestRunner()
    t.run(main_suite())
