"""Command-line interface: validate, impute, inject, bench, gen."""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .distance import load_embeddings
from .evaluation import (METHODS, attribute_accuracy, format_report, inject_missing, run_benchmark,
                         write_report_csv)
from .olapknn import ImputeConfig, h_olapknn
from .schema import SchemaError, dump_schema, load_schema, validate_schema, validate_strictness
from .synthetic import generate, random_strict_config, separation_config
from .table import TableError, load_csv, write_csv

HIER_WEIGHT = {"dependency": "dependency", "mutual-info": "mutual_info"}


class CliError(Exception):
    pass


def _percent_list(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated percentages, got {text!r}") from None
    if any(not 0 <= v <= 100 for v in vals):
        raise argparse.ArgumentTypeError("percentages must lie in [0, 100]")
    return [v / 100 for v in vals]


def _k_value(text: str) -> int:
    k = int(text)
    if not 1 <= k <= 20:
        raise argparse.ArgumentTypeError("k must be between 1 and 20")
    return k


def _add_io(p: argparse.ArgumentParser, input_required: bool = True) -> None:
    p.add_argument("--schema", required=True, help="schema file (YAML)")
    p.add_argument("--input", required=input_required, help="dimension instances (CSV)")
    p.add_argument("--missing-token", default="", help="cell text meaning 'missing' (default: empty)")
    p.add_argument("--delimiter", default=",", help="CSV delimiter (default: ,)")


def _add_knn(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=_k_value, default=5, help="neighbours per vote, 1-20 (default: 5)")
    p.add_argument("--level-weight", choices=["cardinality", "incremental"], default="incremental",
                   help="hierarchy level weights (default: incremental)")
    p.add_argument("--hierarchy-weight", choices=list(HIER_WEIGHT), default="dependency",
                   help="hierarchy weights (default: dependency)")
    p.add_argument("--embeddings", help="word-vector text file for semantic text distance (default: none)")
    p.add_argument("--threads", type=int, default=0,
                   help="worker cap for per-pass vote evaluation (default: machine parallelism)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dimimpute", description="Impute missing values in OLAP dimension tables.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a schema and, with --input, hierarchy strictness")
    _add_io(p, input_required=False)

    p = sub.add_parser("impute", help="complete a dimension table")
    _add_io(p)
    _add_knn(p)
    p.add_argument("--out", required=True, help="completed CSV")
    p.add_argument("--report", help="JSON report file (default: stdout)")
    p.add_argument("--truth", help="ground-truth CSV from 'inject', to score the result")
    p.add_argument("--seed", type=int, default=0, help="seed for column sampling (default: 0)")

    p = sub.add_parser("inject", help="mask cells at random and keep the originals")
    _add_io(p)
    p.add_argument("--rate", type=float, default=10.0, help="percent of each non-id attribute to mask (default: 10)")
    p.add_argument("--attribute-rate", action="append", default=[], metavar="ATTR=PCT",
                   help="per-attribute override, repeatable")
    p.add_argument("--out", required=True, help="masked CSV")
    p.add_argument("--truth", required=True, help="ground-truth CSV (id, attribute, value)")
    p.add_argument("--seed", type=int, default=0, help="permutation seed (default: 0)")

    p = sub.add_parser("bench", help="accuracy/runtime grid over missing rates and methods")
    p.add_argument("--schema", help="schema file; omit together with --input to use a generated dataset")
    p.add_argument("--input", help="complete dimension instances (CSV)")
    p.add_argument("--missing-token", default="")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--rows", type=int, default=1000, help="rows of the generated dataset (default: 1000)")
    p.add_argument("--rates", type=_percent_list, default=_percent_list("1,5,10,20,30,40"),
                   help="missing rates in percent (default: 1,5,10,20,30,40)")
    p.add_argument("--repeats", type=int, default=20, help="injections per rate (default: 20)")
    p.add_argument("--methods", default=",".join(METHODS), help=f"comma-separated subset of {','.join(METHODS)}")
    _add_knn(p)
    p.add_argument("--seed", type=int, default=0, help="master seed (default: 0)")
    p.add_argument("--report", help="JSON-lines report file (default: stdout)")
    p.add_argument("--csv", help="also write the grid as CSV")
    p.add_argument("--no-timings", action="store_true", help="leave runtimes out so reports are byte-reproducible")

    p = sub.add_parser("gen", help="write a synthetic strict dimension")
    p.add_argument("--preset", choices=["separation", "random"], default="separation",
                   help="separation: dominant child per parent; random: random cardinalities (default: separation)")
    p.add_argument("--rows", type=int, default=1000, help="rows (default: 1000)")
    p.add_argument("--seed", type=int, default=0, help="generator seed (default: 0)")
    p.add_argument("--out", required=True, help="CSV output")
    p.add_argument("--schema-out", required=True, help="schema output (YAML)")
    return ap


def _load(args) -> tuple:
    schema = load_schema(args.schema)
    if not getattr(args, "input", None):
        return schema, None
    return schema, load_csv(args.input, schema, args.missing_token, args.delimiter)


def _config(args) -> ImputeConfig:
    return ImputeConfig(k=args.k, level_weight=args.level_weight,
                        hierarchy_weight=HIER_WEIGHT[args.hierarchy_weight],
                        threads=args.threads or (os.cpu_count() or 1), seed=args.seed)


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_validate(args) -> int:
    schema, table = _load(args)
    problems = [str(v) for v in validate_schema(schema)]
    if table is not None and not problems:
        problems += [str(v) for v in validate_strictness(schema, table)]
    for line in problems:
        print(line)
    if problems:
        return 1
    print(f"ok: {len(schema.hierarchies)} hierarchies" + (f", {len(table)} rows" if table is not None else ""))
    return 0


def read_truth(path: str) -> dict[tuple[str, str], str]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["id", "attribute", "value"]:
            raise CliError(f"{path}: expected header id,attribute,value")
        return {(r["id"], r["attribute"]): r["value"] for r in reader}


def cmd_impute(args) -> int:
    schema, table = _load(args)
    problems = validate_schema(schema)
    if problems:
        raise CliError("invalid schema: " + "; ".join(map(str, problems)))
    embeddings = load_embeddings(args.embeddings) if args.embeddings else None
    report = h_olapknn(table, schema, _config(args), embeddings=embeddings)
    write_csv(table, args.out, args.missing_token, args.delimiter)
    if args.truth:
        per = attribute_accuracy(table, read_truth(args.truth))
        report.accuracy = per.pop(None)
        report.attribute_accuracy = per
    _emit(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", args.report)
    return 0


def cmd_inject(args) -> int:
    schema, table = _load(args)
    rates = {a: args.rate / 100 for a in schema.names if a != schema.id_attribute}
    for item in args.attribute_rate:
        name, _, pct = item.partition("=")
        if name not in schema.names:
            raise CliError(f"--attribute-rate: unknown attribute {name!r}")
        rates[name] = float(pct) / 100
    masked, mask = inject_missing(table, rates, args.seed)
    write_csv(masked, args.out, args.missing_token, args.delimiter)
    with open(args.truth, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "attribute", "value"])
        for (rid, a), v in mask.items():
            w.writerow([rid, a, v])
    print(f"masked {len(mask)} cells")
    return 0


def cmd_bench(args) -> int:
    if bool(args.schema) != bool(args.input):
        raise CliError("give both --schema and --input, or neither for a generated dataset")
    if args.schema:
        schema, table = _load(args)
        if table.missing_count():
            raise CliError("bench needs a complete table; it injects missingness itself")
    else:
        schema, table = generate(separation_config(args.rows), args.seed)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    embeddings = load_embeddings(args.embeddings) if args.embeddings else None
    provider = None
    if embeddings is not None:
        from .distance import MixedProvider, attribute_stats
        provider = MixedProvider(attribute_stats(schema, table), embeddings)
    records = run_benchmark(table, schema, args.rates, methods, args.repeats, args.seed, _config(args), provider)
    _emit(format_report(records, timings=not args.no_timings), args.report)
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            write_report_csv(records, fh, timings=not args.no_timings)
    return 0


def cmd_gen(args) -> int:
    if args.preset == "separation":
        config = separation_config(args.rows)
    else:
        config = random_strict_config(np.random.default_rng(args.seed), args.rows)
    schema, table = generate(config, args.seed)
    Path(args.schema_out).write_text(dump_schema(schema), encoding="utf-8")
    write_csv(table, args.out)
    print(f"wrote {len(table)} rows, {len(schema.names)} attributes")
    return 0


COMMANDS = {"validate": cmd_validate, "impute": cmd_impute, "inject": cmd_inject,
            "bench": cmd_bench, "gen": cmd_gen}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (SchemaError, TableError, CliError, ValueError) as exc:
        print(f"dimimpute {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"dimimpute {args.command}: error: {exc.strerror or exc}: {exc.filename or ''}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
