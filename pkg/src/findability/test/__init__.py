import importlib
import unittest

from findability.corpus import AnalysisConfig, Corpus
from findability.index import build_index

TEST_MODULES = (
    "test_corpus",
    "test_index",
    "test_retrieval",
    "test_querygen",
    "test_accessibility",
    "test_metrics",
    "test_pipeline",
    "test_trend",
)

# every token counts, handy for one-letter examples
RAW = AnalysisConfig(lowercase=True, stopwords=frozenset(), min_token_length=1, stemming=False)


def build_test_index(records, config=RAW):
    """Index over (doc_id, text) pairs."""
    return build_index(Corpus.from_texts(records, config))


def main_suite() -> unittest.TestSuite:
    s = unittest.TestSuite()
    for name in TEST_MODULES:
        module = importlib.import_module(f"{__name__}.{name}")
        s.addTests(module.main_suite())

    return s


def run():
    t = unittest.TextTestRunner()
    t.run(main_suite())
