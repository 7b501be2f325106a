"""API"""
from dataclasses import dataclass, field
from functools import wraps
from hashlib import sha256
import inspect
import json
import logging
import pathlib
import time
from typing import Any, Dict, List, Optional, Sequence

from findability import index as index_module
from findability import synthetic
from findability.accessibility import (
    AccessScores,
    ConvenienceSpec,
    findability_all,
    findability_sweep,
    flatten_queries,
    read_metadata,
    retrievability_all,
    retrievability_query_set,
)
from findability.conf import settings
from findability.corpus import AnalysisConfig, load_corpus, load_stopwords
from findability.exceptions import (
    ConfigMismatchError,
    ConfigurationError,
    DegenerateInputError,
    ParseError,
)
from findability.index import Index, build_index
from findability.log import logged
from findability.metrics import (
    AccessReport,
    CorrelationReport,
    build_report,
    correlation,
    write_lorenz_csv,
)
from findability.plugins import get_controller
from findability.querygen import QueryGenConfig, QuerySet, generate_all
from findability.retrieval import RetrievalModel

log = logging.getLogger("global")


def benchmark(method):
    @wraps(method)
    def wrapper(*args, **kwargs):
        start = time.time()

        result = method(*args, **kwargs)

        end = round(time.time() - start, 3)
        log.info("benchmarked method %s %s", method.__name__, end)
        return result

    return wrapper


def loggedmethod(method):
    """
    Log a pipeline step and confirm its successful execution
    """

    @wraps(method)
    def wrapper(self, *args, **kwargs):
        method_data = inspect.getfullargspec(method)
        mname = method.__name__.lstrip("_")
        # + 1 because of self
        try:
            self.logger.info(
                "_%s_ %s %s",
                mname.upper(),
                [
                    f"{method_data.args[index + 1]}={value}"
                    for index, value in enumerate(args)
                ],
                kwargs,
            )
        except IndexError:
            raise IndexError(
                f"Too many arguments for {mname}. Maybe you used positional arguments instead of key-value arguments?"
            ) from None

        res = method(self, *args, **kwargs)

        self.logger.debug("_%s_ --success--", mname.upper())
        return res

    return wrapper


def dumps_json(data) -> str:
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(data, path) -> pathlib.Path:
    path = pathlib.Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as file:
        file.write(dumps_json(data))
    return path


def file_fingerprint(path) -> str:
    return sha256(pathlib.Path(path).read_bytes()).hexdigest()


# flat config keys, mirroring the command line flags
CONFIG_KEYS = {
    "corpus": str,
    "format": str,
    "lowercase": bool,
    "stopwords": str,
    "min_token_length": int,
    "stemming": bool,
    "model": str,
    "bm25.k1": float,
    "bm25.b": float,
    "lmdir.mu": float,
    "pl2.c": float,
    "xi": str,
    "c": int,
    "decay": float,
    "k": float,
    "lambda": float,
    "fraction": float,
    "cap": int,
    "floor": int,
    "strategy": str,
    "seed": int,
    "unigram_min_cf": int,
    "bigram_min_cf": int,
    "max_queries": int,
    "threads": int,
    "out_dir": str,
}
# excluded from the fingerprint: they locate data, they do not change results
UNFINGERPRINTED = {"corpus", "stopwords", "out_dir", "threads", "format"}


def _defaults() -> Dict[str, Any]:
    return {
        "corpus": None,
        "format": None,
        "lowercase": settings.LOWERCASE,
        "stopwords": str(settings.STOPWORDS_FILE),
        "min_token_length": settings.MIN_TOKEN_LENGTH,
        "stemming": settings.STEMMING,
        "model": settings.DEFAULT_MODEL,
        "bm25.k1": settings.BM25_K1,
        "bm25.b": settings.BM25_B,
        "lmdir.mu": settings.LMDIR_MU,
        "pl2.c": settings.PL2_C,
        "xi": settings.CONVENIENCE_FORM,
        "c": settings.CUTOFF,
        "decay": settings.DECAY_DENOMINATOR,
        "k": settings.QUERY_LENGTH,
        "lambda": settings.LAMBDA,
        "fraction": settings.QUERY_FRACTION,
        "cap": settings.QUERY_CAP,
        "floor": settings.QUERY_FLOOR,
        "strategy": settings.QUERY_STRATEGY,
        "seed": settings.SEED,
        "unigram_min_cf": settings.UNIGRAM_MIN_CF,
        "bigram_min_cf": settings.BIGRAM_MIN_CF,
        "max_queries": settings.MAX_RETRIEVABILITY_QUERIES,
        "threads": settings.THREADS,
        "out_dir": None,
    }


def _coerce(key: str, value):
    kind = CONFIG_KEYS[key]
    if value is None:
        return None
    if kind is bool:
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "false", "1", "0", "yes", "no"):
            return value.lower() in ("true", "1", "yes")
        raise ConfigurationError(f"{key}: expected a boolean, got {value!r}")
    try:
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{key}: expected {kind.__name__}, got {value!r}") from None


@dataclass(frozen=True)
class RunConfig:
    """
    One experiment's parameters. Layered as settings defaults, then the
    JSON config file, then explicit command line flags.
    """

    values: Dict[str, Any] = field(default_factory=_defaults)

    @classmethod
    def from_sources(cls, config_path=None, overrides: Optional[Dict[str, Any]] = None) -> "RunConfig":
        values = _defaults()
        if config_path is not None:
            path = pathlib.Path(config_path)
            if not path.exists():
                raise ConfigurationError(f"config: file does not exist: {path}")
            with open(path, encoding="utf-8") as file:
                try:
                    data = json.load(file)
                except json.JSONDecodeError as exc:
                    raise ParseError(f"config: invalid JSON ({exc.msg})", line=exc.lineno) from None
            if not isinstance(data, dict):
                raise ConfigurationError("config: expected a flat JSON object")
            values.update(cls._checked(data))
        values.update(cls._checked({k: v for k, v in (overrides or {}).items() if v is not None}))
        return cls(values)

    @staticmethod
    def _checked(data: Dict[str, Any]) -> Dict[str, Any]:
        unknown = sorted(set(data) - set(CONFIG_KEYS))
        if unknown:
            raise ConfigurationError(f"{unknown[0]}: unknown configuration key")
        return {key: _coerce(key, value) for key, value in data.items()}

    def __getitem__(self, key):
        return self.values[key]

    def parameters(self) -> Dict[str, Any]:
        return {k: v for k, v in sorted(self.values.items()) if k not in UNFINGERPRINTED}

    @property
    def fingerprint(self) -> str:
        canonical = json.dumps(self.parameters(), sort_keys=True, separators=(",", ":"))
        return sha256(canonical.encode("utf-8")).hexdigest()

    @property
    def threads(self) -> int:
        threads = self["threads"]
        if threads < 0:
            raise ConfigurationError("threads: must be >= 0")
        return threads

    def analysis_config(self) -> AnalysisConfig:
        stopwords = self["stopwords"]
        if stopwords and not pathlib.Path(stopwords).exists():
            raise ConfigurationError(f"stopwords: file does not exist: {stopwords}")
        return AnalysisConfig(
            lowercase=self["lowercase"],
            stopwords=load_stopwords(stopwords) if stopwords else frozenset(),
            min_token_length=self["min_token_length"],
            stemming=self["stemming"],
        )

    def model(self) -> RetrievalModel:
        name = self["model"]
        params = {
            "bm25": {"k1": self["bm25.k1"], "b": self["bm25.b"]},
            "lmdir": {"mu": self["lmdir.mu"]},
            "pl2": {"c": self["pl2.c"]},
        }
        kind = RetrievalModel.from_name(name).kind
        section = {"bm25": "bm25", "lm_dirichlet": "lmdir", "dfr_pl2": "pl2"}[kind]
        return RetrievalModel.from_name(name, **params[section])

    def convenience(self) -> ConvenienceSpec:
        return ConvenienceSpec(self["xi"], self["c"], self["decay"])

    def querygen(self) -> QueryGenConfig:
        return QueryGenConfig(
            avg_query_length=self["k"],
            lam=self["lambda"],
            fraction=self["fraction"],
            cap=self["cap"],
            floor=self["floor"],
            strategy=self["strategy"],
            seed=self["seed"],
        )

    def output(self, given, default_name: str, key: str = "out") -> pathlib.Path:
        if given:
            return pathlib.Path(given)
        if self["out_dir"]:
            out_dir = pathlib.Path(self["out_dir"])
            out_dir.mkdir(parents=True, exist_ok=True)
            return out_dir / default_name
        raise ConfigurationError(f"{key}: an output path (or out_dir) is required")


def require(path, key: str) -> pathlib.Path:
    path = pathlib.Path(path) if path else None
    if path is None or not path.exists():
        raise ConfigurationError(f"{key}: file does not exist: {path}")
    return path


@dataclass
class ExperimentSummary:
    """Gini and mean score per scored run, optionally with a correlation."""

    rows: List[dict]
    correlation: Optional[CorrelationReport] = None

    def as_dict(self) -> dict:
        return {
            "rows": self.rows,
            "correlation": self.correlation.as_dict() if self.correlation else None,
        }


def correlate_scores(a: AccessScores, b: AccessScores) -> CorrelationReport:
    """Correlation over the documents both score vectors cover, paired by doc_id."""
    shared = sorted(set(a.scores) & set(b.scores))
    if not shared:
        raise DegenerateInputError("no overlapping documents")
    if len(shared) < 2:
        raise DegenerateInputError("degenerate input: fewer than two overlapping documents")
    return correlation([a.scores[d] for d in shared], [b.scores[d] for d in shared])


def _label(scores: AccessScores, path: pathlib.Path) -> str:
    kind = scores.model.get("kind") if scores.model else None
    return f"{scores.metric} {kind}" if kind else path.stem


def _same_index(runs: Sequence[AccessScores], force: bool) -> None:
    fingerprints = {run.index_fingerprint for run in runs if run.index_fingerprint}
    if len(fingerprints) > 1 and not force:
        raise ConfigMismatchError(
            "index_fingerprint: score files come from different indexes (use --force to override)"
        )


@logged
class Pipeline:
    """
    Composable experiment steps. Every step reads its inputs from disk and
    writes its artifacts next to a metadata record carrying fingerprints.
    """

    def __init__(self, config: Optional[RunConfig] = None, quiet: bool = False):
        self.config = config or RunConfig()
        self.quiet = quiet

    def __str__(self):
        return f"[Pipeline] ({self.config.fingerprint[:12]})"

    def load_index(self, path) -> Index:
        return index_module.load(require(path, "index"))

    @benchmark
    @loggedmethod
    def build(self, out=None) -> Index:
        corpus_path = require(self.config["corpus"], "corpus")
        corpus = load_corpus(corpus_path, self.config["format"], self.config.analysis_config())
        index = build_index(corpus)
        index_module.save(index, self.config.output(out, "index.fidx"), self.config.fingerprint)
        return index

    @benchmark
    @loggedmethod
    def generate_queries(self, index_path, out=None) -> QuerySet:
        index = self.load_index(index_path)
        query_set = generate_all(index, self.config.querygen(), self.config.threads)
        query_set.config_fingerprint = self.config.fingerprint
        query_set.write_jsonl(self.config.output(out, "queries.jsonl"))
        return query_set

    @benchmark
    @loggedmethod
    def findability(self, index_path, queries_path, out=None, force=False) -> AccessScores:
        index = self.load_index(index_path)
        query_set = QuerySet.read_jsonl(require(queries_path, "queries"))
        if query_set.index_fingerprint and query_set.index_fingerprint != index.fingerprint and not force:
            raise ConfigMismatchError(
                "index_fingerprint: queries were generated from a different index (use --force to override)"
            )
        scores = findability_all(
            self.config.model(), index, query_set, self.config.convenience(),
            self.config.threads, self.quiet,
        )
        scores.config_fingerprint = self.config.fingerprint
        if out is not None or self.config["out_dir"]:
            scores.write_csv(self.config.output(out, "findability.csv"))
        return scores

    @benchmark
    @loggedmethod
    def retrievability(self, index_path, queries_path=None, out=None) -> AccessScores:
        index = self.load_index(index_path)
        if queries_path:
            query_set = QuerySet.read_jsonl(require(queries_path, "queries"))
            queries = flatten_queries(query_set)
            source = {
                "kind": "known_item",
                "num_queries": len(queries),
                "queries_fingerprint": query_set.fingerprint,
            }
        else:
            queries = retrievability_query_set(
                index, self.config["unigram_min_cf"], self.config["bigram_min_cf"], self.config["max_queries"]
            )
            source = {
                "kind": "collection",
                "num_queries": len(queries),
                "unigram_min_cf": self.config["unigram_min_cf"],
                "bigram_min_cf": self.config["bigram_min_cf"],
                "max_queries": self.config["max_queries"],
            }
        scores = retrievability_all(
            self.config.model(), index, queries, self.config["c"],
            self.config.threads, self.quiet, source,
        )
        scores.config_fingerprint = self.config.fingerprint
        if out is not None or self.config["out_dir"]:
            scores.write_csv(self.config.output(out, "retrievability.csv"))
        return scores

    @benchmark
    @loggedmethod
    def sweep(self, index_path, queries_path, cutoffs=None, out=None) -> Dict[int, AccessScores]:
        index = self.load_index(index_path)
        query_set = QuerySet.read_jsonl(require(queries_path, "queries"))
        runs = findability_sweep(
            self.config.model(), index, query_set, self.config["xi"],
            cutoffs or settings.SWEEP_CUTOFFS, self.config["decay"],
            self.config.threads, self.quiet,
        )
        if out is not None or self.config["out_dir"]:
            path = self.config.output(out, "sweep.csv")
            lines = ["c,gini,mean,n_docs"]
            for c, run in runs.items():
                report = build_report(run.values())
                lines.append(f"{c},{report.gini!r},{report.mean_score!r},{report.n_docs}")
            path.write_bytes(("\n".join(lines) + "\n").encode("utf-8"))
            write_json(
                {
                    "config_fingerprint": self.config.fingerprint,
                    "cutoffs": sorted(runs),
                    "index_fingerprint": index.fingerprint,
                    "model": self.config.model().descriptor(),
                    "queries_fingerprint": query_set.fingerprint,
                },
                path.with_name(path.name + ".meta.json"),
            )
        return runs

    @loggedmethod
    def report(self, scores_path, out=None, lorenz=None, svg=None, force=False) -> AccessReport:
        scores_path = require(scores_path, "scores")
        scores = AccessScores.read_csv(scores_path)
        metadata = read_metadata(scores_path) or {}
        actual = file_fingerprint(scores_path)
        recorded = metadata.get("scores_fingerprint")
        if recorded and recorded != actual and not force:
            raise ConfigMismatchError(
                "scores_fingerprint: score file does not match its metadata sidecar (use --force to override)"
            )
        metadata["scores_fingerprint"] = actual

        report = build_report(scores.values(), metadata)
        if out is not None:
            write_json(report.as_dict(), out)
        if lorenz is not None:
            write_lorenz_csv(report.lorenz_points, lorenz)
        if svg is not None:
            pathlib.Path(svg).write_bytes(
                get_controller("svg").export({_label(scores, scores_path): report.lorenz_points})
            )
        return report

    @loggedmethod
    def correlate(self, a_path, b_path, out=None, force=False) -> CorrelationReport:
        a = AccessScores.read_csv(require(a_path, "a"))
        b = AccessScores.read_csv(require(b_path, "b"))
        _same_index((a, b), force)
        report = correlate_scores(a, b)
        if out is not None:
            write_json(
                {
                    **report.as_dict(),
                    "a_fingerprint": file_fingerprint(a_path),
                    "b_fingerprint": file_fingerprint(b_path),
                    "config_fingerprint": self.config.fingerprint,
                    "index_fingerprint": a.index_fingerprint or b.index_fingerprint,
                },
                out,
            )
        return report

    @loggedmethod
    def summarize(self, scores_paths, out=None, svg=None, correlate=None, force=False) -> ExperimentSummary:
        """
        One row per score file. ``correlate`` names two of the files
        (by position) whose correlation is attached.
        """
        paths = [require(path, "scores") for path in scores_paths]
        runs = [AccessScores.read_csv(path) for path in paths]
        _same_index(runs, force)

        rows, curves = [], {}
        for path, run in zip(paths, runs):
            report = build_report(run.values())
            label = _label(run, path)
            if label in curves:
                label = path.stem
            rows.append({
                "label": label,
                "metric": run.metric,
                "model": run.model.get("kind"),
                "gini": report.gini,
                "mean": report.mean_score,
                "config_fingerprint": run.config_fingerprint,
                "n_docs": report.n_docs,
                "scores_fingerprint": file_fingerprint(path),
            })
            curves[label] = report.lorenz_points

        pair = None
        if correlate:
            first, second = correlate
            if not (0 <= first < len(runs) and 0 <= second < len(runs)):
                raise ConfigurationError("correlate: positions must name two of the score files")
            pair = correlate_scores(runs[first], runs[second])
        summary = ExperimentSummary(rows, pair)
        if out is not None:
            write_json(summary.as_dict(), out)
        if svg is not None:
            pathlib.Path(svg).write_bytes(get_controller("svg").export(curves))
        return summary

    @loggedmethod
    def stats(self, index_path) -> dict:
        index = self.load_index(index_path)
        return {
            **index_module.stats(index).as_dict(),
            "analysis": index.analysis_config.as_dict(),
            "index_fingerprint": index.fingerprint,
        }

    @loggedmethod
    def synth(self, n_docs, seed=0, out=None) -> pathlib.Path:
        if n_docs < 1:
            raise ConfigurationError("n: at least one document is required")
        return synthetic.write_jsonl(synthetic.generate_corpus(n_docs, seed), self.config.output(out, "corpus.jsonl"))
