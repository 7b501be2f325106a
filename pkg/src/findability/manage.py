"""
Command line entry point.

    findability index --corpus docs.jsonl --out idx
    findability genqueries --index idx --seed 0 --out q.jsonl
    findability findability --index idx --queries q.jsonl --model bm25 --c 100 --out f.csv
    findability report --scores f.csv --out report.json --lorenz lorenz.csv
"""
import argparse
import logging
import sys
from typing import List, Optional

from findability.api import CONFIG_KEYS, Pipeline, RunConfig, dumps_json
from findability.exceptions import ConfigurationError, FindabilityError

log = logging.getLogger("global")
audit = logging.getLogger("audit." + __name__)


def _cutoffs(value: str) -> List[int]:
    try:
        return [int(part) for part in value.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {value!r}") from None


def _common(parser):
    parser.add_argument("--config", help="flat JSON file, keys mirror the flags")
    parser.add_argument("--threads", type=int, dest="threads", help="worker threads, 0 = auto")
    parser.add_argument("--out-dir", dest="out_dir")
    parser.add_argument("--quiet", action="store_true", help="no progress output")


def _analysis(parser):
    group = parser.add_argument_group("analysis")
    group.add_argument("--lowercase", action=argparse.BooleanOptionalAction, default=None)
    group.add_argument("--stopwords", help="stopword file, '' for none")
    group.add_argument("--min-token-length", type=int, dest="min_token_length")
    group.add_argument("--stemming", action=argparse.BooleanOptionalAction, default=None)


def _model(parser):
    group = parser.add_argument_group("retrieval model")
    group.add_argument("--model", help="bm25 | lmdir | pl2")
    group.add_argument("--bm25.k1", type=float, dest="bm25.k1")
    group.add_argument("--bm25.b", type=float, dest="bm25.b")
    group.add_argument("--lmdir.mu", type=float, dest="lmdir.mu")
    group.add_argument("--pl2.c", type=float, dest="pl2.c")


def _convenience(parser, cutoff=True):
    group = parser.add_argument_group("convenience")
    group.add_argument("--xi", help="inverse | exponential")
    if cutoff:
        group.add_argument("--c", type=int, dest="c", help="rank cutoff")
    group.add_argument("--decay", type=float, help="exponential decay denominator")


def _querygen(parser):
    group = parser.add_argument_group("query generation")
    group.add_argument("--seed", type=int)
    group.add_argument("--k", type=float, help="average query length")
    group.add_argument("--lambda", type=float, dest="lambda", help="collection model weight")
    group.add_argument("--fraction", type=float)
    group.add_argument("--cap", type=int)
    group.add_argument("--floor", type=int)
    group.add_argument("--strategy", help="popular | discriminative | popdisc")


def _output(parser, stdout=True):
    parser.add_argument("--out")
    if stdout:
        parser.add_argument("--stdout", action="store_true", help="write the result to standard output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="findability", description="Document findability and retrievability measurement")
    commands = parser.add_subparsers(dest="command", metavar="command", required=True)

    sub = commands.add_parser("index", help="analyze a corpus and build the inverted index")
    sub.add_argument("--corpus")
    sub.add_argument("--format", choices=("jsonl", "tsv"))
    _analysis(sub)
    _output(sub)
    _common(sub)

    sub = commands.add_parser("genqueries", help="generate known-item queries")
    sub.add_argument("--index", required=True)
    _querygen(sub)
    _output(sub, stdout=False)
    _common(sub)

    sub = commands.add_parser("findability", help="score every document's findability")
    sub.add_argument("--index", required=True)
    sub.add_argument("--queries", required=True)
    sub.add_argument("--force", action="store_true", help="accept queries from another index build")
    _model(sub)
    _convenience(sub)
    _output(sub)
    _common(sub)

    sub = commands.add_parser("retrievability", help="score every document's retrievability")
    sub.add_argument("--index", required=True)
    sub.add_argument("--queries", help="use a known-item query set instead of collection n-grams")
    sub.add_argument("--c", type=int, dest="c", help="rank cutoff")
    sub.add_argument("--unigram-min-cf", type=int, dest="unigram_min_cf")
    sub.add_argument("--bigram-min-cf", type=int, dest="bigram_min_cf")
    sub.add_argument("--max-queries", type=int, dest="max_queries")
    _model(sub)
    _output(sub)
    _common(sub)

    sub = commands.add_parser("report", help="Gini, mean and Lorenz curve of a score file")
    sub.add_argument("--scores", required=True)
    sub.add_argument("--lorenz", help="Lorenz curve CSV")
    sub.add_argument("--svg", help="Lorenz curve SVG")
    sub.add_argument("--force", action="store_true")
    _output(sub)
    _common(sub)

    sub = commands.add_parser("correlate", help="Pearson and Kendall tau-b between two score files")
    sub.add_argument("--a", required=True)
    sub.add_argument("--b", required=True)
    sub.add_argument("--force", action="store_true")
    _output(sub)
    _common(sub)

    sub = commands.add_parser("sweep", help="findability bias over several rank cutoffs")
    sub.add_argument("--index", required=True)
    sub.add_argument("--queries", required=True)
    sub.add_argument("--cutoffs", type=_cutoffs, help="comma separated, default 10,20,...,100")
    _model(sub)
    _convenience(sub, cutoff=False)
    _output(sub, stdout=False)
    _common(sub)

    sub = commands.add_parser("summary", help="one row per score file")
    sub.add_argument("--scores", required=True, nargs="+")
    sub.add_argument("--correlate", type=int, nargs=2, metavar=("I", "J"), help="positions of two score files")
    sub.add_argument("--svg")
    sub.add_argument("--force", action="store_true")
    _output(sub)
    _common(sub)

    sub = commands.add_parser("synth", help="write a synthetic corpus")
    sub.add_argument("--n", type=int, required=True, dest="n_docs")
    sub.add_argument("--seed", type=int, default=0)
    _output(sub, stdout=False)
    _common(sub)

    sub = commands.add_parser("stats", help="collection statistics of an index")
    sub.add_argument("--index", required=True)
    _common(sub)

    sub = commands.add_parser("shell", help="interactive console with an index loaded")
    sub.add_argument("--index")
    _common(sub)

    commands.add_parser("test", help="run the test suite")
    return parser


def _overrides(args) -> dict:
    values = vars(args)
    return {key: values[key] for key in CONFIG_KEYS if key in values and values[key] is not None}


def _emit(args, text: str) -> None:
    if getattr(args, "stdout", False):
        sys.stdout.write(text)


def _target(args, config: RunConfig, default_name: str):
    """Output path, or None when the result only goes to stdout."""
    if args.out or config["out_dir"] or not getattr(args, "stdout", False):
        return config.output(args.out, default_name)
    return None


def get_command(args) -> None:
    if args.command == "test":
        from findability.test import run
        run()
        return

    config = RunConfig.from_sources(args.config, _overrides(args))
    pipeline = Pipeline(config, quiet=args.quiet)

    if args.command == "index":
        path = config.output(args.out, "index.fidx")
        index = pipeline.build(out=path)
        log.info("Indexed %s", index)
        if args.stdout:
            _emit(args, dumps_json(pipeline.stats(path)))

    elif args.command == "genqueries":
        pipeline.generate_queries(args.index, out=config.output(args.out, "queries.jsonl"))

    elif args.command == "findability":
        scores = pipeline.findability(
            args.index, args.queries, out=_target(args, config, "findability.csv"), force=args.force
        )
        _emit(args, scores.to_csv_bytes().decode("utf-8"))

    elif args.command == "retrievability":
        scores = pipeline.retrievability(args.index, queries_path=args.queries, out=_target(args, config, "retrievability.csv"))
        _emit(args, scores.to_csv_bytes().decode("utf-8"))

    elif args.command == "report":
        report = pipeline.report(args.scores, out=args.out, lorenz=args.lorenz, svg=args.svg, force=args.force)
        _emit(args, dumps_json(report.as_dict()))

    elif args.command == "correlate":
        report = pipeline.correlate(args.a, args.b, out=args.out, force=args.force)
        _emit(args, dumps_json(report.as_dict()))

    elif args.command == "sweep":
        pipeline.sweep(args.index, args.queries, cutoffs=args.cutoffs, out=config.output(args.out, "sweep.csv"))

    elif args.command == "summary":
        summary = pipeline.summarize(
            args.scores, out=args.out, svg=args.svg, correlate=args.correlate, force=args.force
        )
        _emit(args, dumps_json(summary.as_dict()))

    elif args.command == "synth":
        pipeline.synth(args.n_docs, seed=args.seed, out=args.out)

    elif args.command == "stats":
        sys.stdout.write(dumps_json(pipeline.stats(args.index)))

    elif args.command == "shell":
        from findability.shell import interact
        interact(pipeline, args.index)


def run_command(argv: Optional[List[str]] = None) -> int:
    """Run one command; the return value is the process exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # usage errors: argparse already printed a message naming the flag
        return exc.code if isinstance(exc.code, int) else 2

    try:
        get_command(args)
    except FindabilityError as exc:
        log.error("%s: %s", args.command, exc)
        audit.error("%s failed (%s): %s", args.command, type(exc).__name__, exc)
        return exc.code
    except OSError as exc:
        log.error("%s: %s", args.command, exc)
        audit.error("%s failed (%s): %s", args.command, type(exc).__name__, exc)
        return ConfigurationError.code
    return 0


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
