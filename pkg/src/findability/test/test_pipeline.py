import contextlib
import importlib
import io
import json
import math
import os
from pathlib import Path
import tempfile
import unittest
from unittest import mock

from findability.accessibility import AccessScores
from findability.api import Pipeline, RunConfig, correlate_scores
from findability.conf import ImproperlyConfigured, _base
from findability.exceptions import ConfigurationError, DegenerateInputError, ParseError
from findability.manage import run_command
from findability.metrics import gini, mean_score


class PipelineCase(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def path(self, name):
        return str(self.dir / name)

    def cli(self, *argv):
        return run_command([str(arg) for arg in argv])

    def cli_ok(self, *argv):
        self.assertEqual(self.cli(*argv), 0, argv)

    def experiment(self, prefix, threads, n_docs=1000, seed=0):
        """synth -> index -> genqueries -> findability -> report; returns the output paths."""
        corpus = self.path("corpus.jsonl")
        if not Path(corpus).exists():
            self.cli_ok("synth", "--n", n_docs, "--seed", seed, "--out", corpus)
        idx, queries = self.path(f"{prefix}.fidx"), self.path(f"{prefix}.q.jsonl")
        scores, report, lorenz = self.path(f"{prefix}.csv"), self.path(f"{prefix}.json"), self.path(f"{prefix}.lorenz.csv")
        self.cli_ok("index", "--corpus", corpus, "--out", idx, "--quiet", "--threads", threads)
        self.cli_ok("genqueries", "--index", idx, "--seed", 7, "--out", queries, "--quiet", "--threads", threads)
        self.cli_ok(
            "findability", "--index", idx, "--queries", queries, "--model", "bm25", "--c", 100,
            "--xi", "inverse", "--out", scores, "--quiet", "--threads", threads,
        )
        self.cli_ok("report", "--scores", scores, "--out", report, "--lorenz", lorenz, "--quiet")
        return {"index": idx, "queries": queries, "scores": scores, "report": report, "lorenz": lorenz}


class Test_EndToEnd(PipelineCase):

    def test_deterministic(self):
        runs = [self.experiment(f"run{i}", threads) for i, threads in enumerate((1, 1, 8, 8))]
        for key in ("index", "queries", "scores", "report", "lorenz"):
            contents = {Path(run[key]).read_bytes() for run in runs}
            self.assertEqual(len(contents), 1, key)

        scores = AccessScores.read_csv(runs[0]["scores"])
        lines = Path(runs[0]["scores"]).read_text(encoding="utf-8").splitlines()
        self.assertEqual(lines[0], "doc_id,score")
        self.assertEqual(len(lines) - 1, len(scores))
        self.assertEqual(len(scores), 1000)

    def test_report_composes(self):
        run = self.experiment("run", 1, n_docs=300)
        report = json.loads(Path(run["report"]).read_text(encoding="utf-8"))
        values = AccessScores.read_csv(run["scores"]).values()
        self.assertEqual(report["gini"], gini(values))
        self.assertEqual(report["mean"], mean_score(values))
        self.assertEqual(report["n_docs"], 300)
        self.assertIn("config_fingerprint", report["metadata"])
        self.assertIn("index_fingerprint", report["metadata"])

    def test_stale_scores(self):
        run = self.experiment("run", 1, n_docs=200)
        with open(run["scores"], "a", encoding="utf-8", newline="\n") as file:
            file.write("zzz-extra,1.0\n")
        self.assertEqual(self.cli("report", "--scores", run["scores"], "--quiet"), 7)
        self.assertEqual(self.cli("report", "--scores", run["scores"], "--force", "--quiet"), 0)

    def test_retrievability_and_correlate(self):
        run = self.experiment("run", 1, n_docs=300)
        retrievability = self.path("r.csv")
        known_item = self.path("rk.csv")
        corr = self.path("corr.json")
        self.cli_ok(
            "retrievability", "--index", run["index"], "--c", 100,
            "--unigram-min-cf", 2, "--bigram-min-cf", 2, "--out", retrievability, "--quiet",
        )
        self.cli_ok("retrievability", "--index", run["index"], "--queries", run["queries"], "--out", known_item, "--quiet")
        self.cli_ok("correlate", "--a", run["scores"], "--b", retrievability, "--out", corr, "--quiet")

        report = json.loads(Path(corr).read_text(encoding="utf-8"))
        self.assertEqual(report["n"], 300)
        for key in ("pearson_r", "kendall_tau"):
            self.assertTrue(math.isfinite(report[key]) and -1 <= report[key] <= 1)
        for key in ("pearson_p", "kendall_p"):
            self.assertTrue(0 <= report[key] <= 1)

        summary = self.path("summary.json")
        svg = self.path("lorenz.svg")
        self.cli_ok(
            "summary", "--scores", run["scores"], retrievability, known_item,
            "--correlate", 0, 1, "--out", summary, "--svg", svg, "--quiet",
        )
        rows = json.loads(Path(summary).read_text(encoding="utf-8"))["rows"]
        self.assertEqual([row["metric"] for row in rows], ["findability", "retrievability", "retrievability"])
        self.assertIn("<svg", Path(svg).read_text(encoding="utf-8"))

    def test_sweep(self):
        run = self.experiment("run", 1, n_docs=200)
        sweep = self.path("sweep.csv")
        self.cli_ok("sweep", "--index", run["index"], "--queries", run["queries"], "--cutoffs", "10,50,100", "--out", sweep, "--quiet")
        lines = Path(sweep).read_text(encoding="utf-8").splitlines()
        self.assertEqual(lines[0], "c,gini,mean,n_docs")
        self.assertEqual([line.split(",")[0] for line in lines[1:]], ["10", "50", "100"])
        means = [float(line.split(",")[2]) for line in lines[1:]]
        self.assertEqual(means, sorted(means))

    def test_config_fingerprints(self):
        run = self.experiment("run", 1, n_docs=50)
        fingerprint = RunConfig.from_sources(overrides={"seed": 7}).fingerprint
        sidecar = json.loads(Path(run["index"] + ".stats.json").read_text(encoding="utf-8"))
        self.assertEqual(sidecar["config_fingerprint"], RunConfig().fingerprint)
        self.assertEqual(sidecar["num_docs"], 50)
        summary = json.loads(Path(run["queries"]).read_text(encoding="utf-8").splitlines()[-1])["summary"]
        self.assertEqual(summary["config_fingerprint"], fingerprint)

    def test_stats_stdout(self):
        run = self.experiment("run", 1, n_docs=50)
        out = io.StringIO()
        with contextlib.redirect_stdout(out):
            self.cli_ok("stats", "--index", run["index"])
        stats = json.loads(out.getvalue())
        self.assertEqual(stats["num_docs"], 50)


class Test_Errors(PipelineCase):

    def write_scores(self, name, scores, fingerprint="a" * 64):
        path = self.dir / name
        AccessScores("findability", scores, {"kind": "bm25"}, 100, index_fingerprint=fingerprint).write_csv(path)
        return str(path)

    def test_disjoint(self):
        a = self.write_scores("a.csv", {"d1": 0.1, "d2": 0.5})
        b = self.write_scores("b.csv", {"x1": 0.1, "x2": 0.5})
        with self.assertLogs("global", "ERROR") as logs:
            self.assertEqual(self.cli("correlate", "--a", a, "--b", b), DegenerateInputError.code)
        self.assertIn("no overlapping documents", "\n".join(logs.output))

    def test_index_mismatch(self):
        a = self.write_scores("a.csv", {"d1": 0.1, "d2": 0.5, "d3": 0.2})
        b = self.write_scores("b.csv", {"d1": 0.3, "d2": 0.4, "d3": 0.1}, fingerprint="b" * 64)
        self.assertEqual(self.cli("correlate", "--a", a, "--b", b), 7)
        self.assertEqual(self.cli("correlate", "--a", a, "--b", b, "--force"), 0)

    def test_two_shared_documents(self):
        a = self.write_scores("a.csv", {"d1": 0.1, "d2": 0.5})
        b = self.write_scores("b.csv", {"d1": 3.0, "d2": 1.0, "d3": 2.0})
        out = self.path("corr.json")
        self.cli_ok("correlate", "--a", a, "--b", b, "--out", out)
        report = json.loads(Path(out).read_text(encoding="utf-8"))
        self.assertEqual((report["n"], report["kendall_tau"], report["kendall_p"]), (2, -1.0, 1.0))

    def test_malformed_queries(self):
        corpus = self.path("corpus.jsonl")
        self.cli_ok("synth", "--n", 20, "--out", corpus)
        self.cli_ok("index", "--corpus", corpus, "--out", self.path("i.fidx"))
        Path(self.path("q.jsonl")).write_text("[1, 2]\n", encoding="utf-8")
        with self.assertLogs("global", "ERROR") as logs:
            code = self.cli("findability", "--index", self.path("i.fidx"), "--queries", self.path("q.jsonl"), "--out", self.path("f.csv"))
        self.assertEqual(code, ParseError.code)
        self.assertIn("line 1", "\n".join(logs.output))

    def test_corrupt_sidecar(self):
        a = self.write_scores("a.csv", {"d1": 0.1, "d2": 0.5})
        Path(a + ".meta.json").write_text("{not json", encoding="utf-8")
        self.assertEqual(self.cli("report", "--scores", a), ParseError.code)

    def test_missing_file(self):
        with self.assertLogs("global", "ERROR") as logs:
            self.assertEqual(self.cli("report", "--scores", self.path("nope.csv")), ConfigurationError.code)
        self.assertIn("scores", "\n".join(logs.output))

    def test_unknown_flag(self):
        with contextlib.redirect_stderr(io.StringIO()) as err:
            self.assertEqual(self.cli("report", "--scores", "x.csv", "--bogus", "1"), 2)
        self.assertIn("--bogus", err.getvalue())

    def test_unknown_config_key(self):
        config = self.dir / "config.json"
        config.write_text(json.dumps({"model": "bm25", "mystery": 1}), encoding="utf-8")
        with self.assertLogs("global", "ERROR") as logs:
            self.assertEqual(self.cli("stats", "--index", "x", "--config", config), 2)
        self.assertIn("mystery", "\n".join(logs.output))

    def test_analysis_mismatch(self):
        corpus = self.path("corpus.jsonl")
        self.cli_ok("synth", "--n", 30, "--out", corpus)
        self.cli_ok("index", "--corpus", corpus, "--out", self.path("a.fidx"))
        self.cli_ok("index", "--corpus", corpus, "--stemming", "--out", self.path("b.fidx"))
        self.cli_ok("genqueries", "--index", self.path("a.fidx"), "--out", self.path("q.jsonl"))
        code = self.cli(
            "findability", "--index", self.path("b.fidx"), "--queries", self.path("q.jsonl"),
            "--out", self.path("f.csv"), "--force", "--quiet",
        )
        self.assertEqual(code, 7)


class Test_Settings(unittest.TestCase):

    def test_threads_variable(self):
        try:
            with mock.patch.dict(os.environ, {"FINDABILITY_THREADS": "many"}):
                with self.assertRaises(ImproperlyConfigured) as ctx:
                    importlib.reload(_base)
            self.assertIn("FINDABILITY_THREADS", str(ctx.exception))
            with mock.patch.dict(os.environ, {"FINDABILITY_THREADS": "3"}):
                self.assertEqual(importlib.reload(_base).THREADS, 3)
        finally:
            importlib.reload(_base)


class Test_RunConfig(PipelineCase):

    def test_layering(self):
        path = self.dir / "config.json"
        path.write_text(json.dumps({"model": "lmdir", "lmdir.mu": 500, "c": 20}), encoding="utf-8")
        config = RunConfig.from_sources(path, {"c": 50})
        self.assertEqual(config["c"], 50)
        self.assertEqual(config.model().descriptor(), {"kind": "lm_dirichlet", "params": {"mu": 500.0}})
        self.assertEqual(config.convenience().cutoff, 50)
        self.assertEqual(RunConfig()["model"], "bm25")

    def test_fingerprint(self):
        a = RunConfig.from_sources(overrides={"corpus": "x.jsonl", "threads": 4})
        b = RunConfig.from_sources(overrides={"corpus": "y.jsonl", "threads": 1})
        self.assertEqual(a.fingerprint, b.fingerprint)
        self.assertNotEqual(a.fingerprint, RunConfig.from_sources(overrides={"seed": 1}).fingerprint)

    def test_bad_values(self):
        with self.assertRaises(ConfigurationError):
            RunConfig.from_sources(overrides={"c": "many"})
        with self.assertRaises(ConfigurationError):
            RunConfig.from_sources(self.dir / "missing.json")

    def test_correlate_scores(self):
        a = AccessScores("findability", {"d1": 0.1, "d2": 0.7, "d3": 0.4, "d4": 0.0}, {}, 100)
        doubled = AccessScores("findability", {k: 2 * v for k, v in a.scores.items()}, {}, 100)
        self.assertAlmostEqual(correlate_scores(a, a).pearson_r, 1.0, delta=1e-12)
        self.assertAlmostEqual(correlate_scores(a, a).kendall_tau, 1.0, delta=1e-12)
        self.assertAlmostEqual(correlate_scores(a, doubled).pearson_r, 1.0, delta=1e-12)

        partial = AccessScores("retrievability", {"d2": 3.0, "d3": 1.0, "d9": 5.0}, {}, 100)
        self.assertEqual(correlate_scores(a, partial).n, 2)
        with self.assertRaises(DegenerateInputError):
            correlate_scores(a, AccessScores("retrievability", {"d1": 1.0, "x": 2.0}, {}, 100))

    def test_pipeline_object(self):
        corpus = self.dir / "c.tsv"
        corpus.write_text("d1\talpha beta\nd2\tbeta gamma\nd3\tgamma delta\n", encoding="utf-8")
        pipeline = Pipeline(RunConfig.from_sources(overrides={"corpus": str(corpus), "out_dir": self.path("out")}), quiet=True)
        pipeline.build()
        index_path = self.dir / "out" / "index.fidx"
        self.assertTrue(index_path.exists())
        pipeline.generate_queries(index_path)
        scores = pipeline.findability(index_path, self.dir / "out" / "queries.jsonl")
        self.assertEqual(sorted(scores.scores), ["d1", "d2", "d3"])
        self.assertTrue((self.dir / "out" / "findability.csv").exists())


def main_suite() -> unittest.TestSuite:
    s = unittest.TestSuite()
    load_from = unittest.defaultTestLoader.loadTestsFromTestCase
    s.addTests(load_from(Test_EndToEnd))
    s.addTests(load_from(Test_Errors))
    s.addTests(load_from(Test_Settings))
    s.addTests(load_from(Test_RunConfig))

    return s


def run():
    t = unittest.TextTestRunner()
    t.run(main_suite())
