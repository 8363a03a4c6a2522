"""Command-line entry point.

Subcommands: ``ingest`` (load and report on corpus files), ``build`` (run
the whole pipeline over a folder of query files), ``sql`` (render the
BigQuery templates for cloud execution), ``serve`` (local static server
for a bundle), ``validate`` (schema-check a bundle).

Exit codes: 0 success, 1 fatal configuration or I/O error, 2 the build ran
but produced zero networks.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import date
from pathlib import Path

from bibnet.corpus import CorpusError, corpus_stats, expand_corpus_paths, ingest
from bibnet.network import NetworkParams, normalize_kind
from bibnet.pipeline import RunConfig, run_all
from bibnet.query import NoRunnableQueriesError
from bibnet.server import DEFAULT_PORT, PORT_ENV_VAR, serve
from bibnet.sqlgen import DEFAULT_DATASET_PREFIX, SqlRequest, render_sql
from bibnet.version import ENGINE_VERSION
from bibnet.vos import BundleLockError, validate_bundle

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_NO_NETWORKS = 2


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_FATAL


def _parse_today(value: str) -> date:
    try:
        return date.fromisoformat(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--today expects YYYY-MM-DD, got {value!r}")


def _parse_kinds(value: str) -> tuple[str, ...]:
    kinds = []
    for part in value.split(","):
        part = part.strip()
        if not part:
            continue
        kinds.append(normalize_kind(part))
    if not kinds:
        raise argparse.ArgumentTypeError("--kinds needs at least one of: org, concept")
    # stable de-dup, preserving first occurrence
    return tuple(dict.fromkeys(kinds))


def _add_params_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--max-nodes", type=int, default=None, help="node cap per network")
    parser.add_argument(
        "--min-edge-weight", type=int, default=None, help="drop edges below this weight"
    )
    parser.add_argument(
        "--concept-min-relevance",
        type=float,
        default=None,
        help="relevance gate for concept mentions (concept networks only)",
    )


def _params_from_args(args: argparse.Namespace) -> NetworkParams:
    defaults = NetworkParams()
    return NetworkParams(
        max_nodes=args.max_nodes if args.max_nodes is not None else defaults.max_nodes,
        min_edge_weight=(
            args.min_edge_weight if args.min_edge_weight is not None else defaults.min_edge_weight
        ),
        concept_min_relevance=(
            args.concept_min_relevance
            if args.concept_min_relevance is not None
            else defaults.concept_min_relevance
        ),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bibnet",
        description="co-occurrence networks from bibliometric publication exports",
    )
    parser.add_argument("--version", action="version", version=f"bibnet {ENGINE_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="load corpus files and print an ingest report")
    p_ingest.add_argument("--corpus", nargs="+", required=True, help="files or directories")
    p_ingest.add_argument("--format", choices=("jsonl", "csv"), default=None)
    p_ingest.add_argument("--report", default=None, help="write the machine-readable report here")

    p_build = sub.add_parser("build", help="build all networks for a folder of query files")
    p_build.add_argument("--corpus", nargs="+", required=True, help="files or directories")
    p_build.add_argument("--format", choices=("jsonl", "csv"), default=None)
    p_build.add_argument("--queries", required=True, help="directory of .nql query files")
    p_build.add_argument("--out", required=True, help="output bundle directory")
    p_build.add_argument(
        "--kinds",
        type=_parse_kinds,
        default=("organisation", "concept"),
        help="comma list of network kinds (org, concept); default both",
    )
    p_build.add_argument(
        "--today",
        type=_parse_today,
        default=None,
        help="fix the reference date for last_days() (default: current date)",
    )
    _add_params_flags(p_build)

    p_sql = sub.add_parser("sql", help="render the BigQuery template for a subquery file")
    p_sql.add_argument("--kind", required=True, help="org or concept")
    p_sql.add_argument("--query-file", required=True, help="file containing the SQL subquery")
    p_sql.add_argument("--dataset-prefix", default=DEFAULT_DATASET_PREFIX)
    p_sql.add_argument(
        "--params-out", default=None, help="write the parameter manifest here instead of stderr"
    )
    _add_params_flags(p_sql)

    p_serve = sub.add_parser("serve", help="serve a generated bundle over HTTP")
    p_serve.add_argument("--dir", default=".", help="bundle directory (default: cwd)")
    p_serve.add_argument(
        "--port",
        type=int,
        default=None,
        help=f"TCP port (default: ${PORT_ENV_VAR} or {DEFAULT_PORT})",
    )

    p_validate = sub.add_parser("validate", help="schema-check a generated bundle")
    p_validate.add_argument("--dir", required=True, help="bundle directory")

    return parser


def cmd_ingest(args: argparse.Namespace) -> int:
    try:
        corpus, report = ingest(args.corpus, format=args.format)
    except (CorpusError, OSError, ValueError) as exc:
        return _fail(str(exc))
    print(report.summary())
    stats = corpus_stats(corpus)
    print(
        f"corpus: {stats.publications} publications, {stats.organisations} organisations, "
        f"{stats.concepts} distinct concepts"
    )
    if args.report:
        payload = {"ingest": report.to_dict(), "stats": stats.to_dict()}
        Path(args.report).write_text(
            json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
    return EXIT_OK


def cmd_build(args: argparse.Namespace) -> int:
    try:
        params = _params_from_args(args)
        corpus_paths = tuple(str(p) for p in expand_corpus_paths(args.corpus))
        config = RunConfig(
            corpus_paths=corpus_paths,
            query_dir=args.queries,
            out_dir=args.out,
            kinds=args.kinds,
            params=params,
            today=args.today,
            corpus_format=args.format,
        )
        report, _ = run_all(config)
    except (CorpusError, NoRunnableQueriesError, BundleLockError, OSError, ValueError) as exc:
        return _fail(str(exc))
    print(report.summary())
    if report.networks_produced == 0:
        print("error: no networks were produced", file=sys.stderr)
        return EXIT_NO_NETWORKS
    return EXIT_OK


def cmd_sql(args: argparse.Namespace) -> int:
    try:
        kind = normalize_kind(args.kind)
        subquery = Path(args.query_file).read_text(encoding="utf-8")
        rendered = render_sql(
            SqlRequest(
                user_subquery=subquery,
                kind=kind,
                params=_params_from_args(args),
                dataset_prefix=args.dataset_prefix,
            )
        )
    except (OSError, ValueError) as exc:
        return _fail(str(exc))
    sys.stdout.write(rendered.sql)
    manifest = json.dumps(rendered.named_params, sort_keys=True, indent=2) + "\n"
    if args.params_out:
        Path(args.params_out).write_text(manifest, encoding="utf-8")
    else:
        sys.stderr.write(manifest)
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    port = args.port
    if port is None:
        try:
            port = int(os.environ.get(PORT_ENV_VAR, DEFAULT_PORT))
        except ValueError:
            return _fail(f"${PORT_ENV_VAR} is not an integer")
    if not 1 <= port <= 65535:
        return _fail(f"port must be in [1, 65535], got {port}")
    try:
        serve(args.dir, port=port)
    except OSError as exc:
        return _fail(f"cannot serve {args.dir} on port {port}: {exc}")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        problems = validate_bundle(args.dir)
    except OSError as exc:
        return _fail(str(exc))
    if problems:
        for problem in problems:
            print(f"invalid: {problem}", file=sys.stderr)
        return EXIT_FATAL
    print(f"bundle {args.dir} is valid")
    return EXIT_OK


_COMMANDS = {
    "ingest": cmd_ingest,
    "build": cmd_build,
    "sql": cmd_sql,
    "serve": cmd_serve,
    "validate": cmd_validate,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; exit code 2 is reserved for
        # "ran but produced zero networks", so remap
        return EXIT_OK if exc.code in (0, None) else EXIT_FATAL
    return _COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
