"""Command-line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import io
from .errors import ConfigError, FormatError, SinkrankError
from .metrics import DEFAULT_ITERATIONS, MetricsReport, paired_significance
from .protocols import (
    DEFAULT_POOL_SIZE,
    DEFAULT_RESAMPLES,
    DEFAULT_SAMPLE_SIZE,
    PseudoTestConfig,
    evaluate_full,
    single_query_eval,
    transpose_direction,
)
from .synth import SynthConfig, generate
from .transforms import (
    DEFAULT_DSL_TEMPERATURE,
    DEFAULT_SINKHORN_STEPS,
    DEFAULT_SINKHORN_TEMPERATURE,
    Method,
    TransformConfig,
    apply_transform,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

METHOD_CHOICES = ("identity", "dsl", "sinkhorn")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _ks(text: str) -> list[int]:
    try:
        ks = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not ks or min(ks) < 1:
        raise argparse.ArgumentTypeError(f"cutoffs must be positive integers, got {text!r}")
    return ks


def _add_transform_flags(p, default_method):
    p.add_argument("--method", choices=METHOD_CHOICES, default=default_method,
                   help=f"rescoring method (default: {default_method})")
    p.add_argument("--temperature", type=float, default=None,
                   help=f"temperature T (default: {DEFAULT_DSL_TEMPERATURE:g} for dsl, "
                        f"{DEFAULT_SINKHORN_TEMPERATURE:g} for sinkhorn)")
    p.add_argument("--steps", type=int, default=DEFAULT_SINKHORN_STEPS,
                   help=f"Sinkhorn steps k (default: {DEFAULT_SINKHORN_STEPS})")


def _add_report_flags(p):
    p.add_argument("--ks", type=_ks, default=[1, 5, 10], help="Recall cutoffs (default: 1,5,10)")
    p.add_argument("--dump-ranks", metavar="F", help="write per-query ranks for `compare`")
    p.add_argument("--report", metavar="F", help="also write the key=value report to F")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="sinkrank",
        description="Dual-softmax and Sinkhorn rescoring of retrieval similarity matrices.",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    p = sub.add_parser("transform", help="rescore a matrix file")
    p.add_argument("--in", dest="inp", required=True, metavar="F")
    p.add_argument("--out", required=True, metavar="F")
    _add_transform_flags(p, "sinkhorn")

    p = sub.add_parser("eval", help="Recall@K / MedR / MeanR of a matrix")
    p.add_argument("--scores", required=True, metavar="F")
    p.add_argument("--gt", required=True, metavar="F")
    p.add_argument("--direction", choices=("t2v", "v2t"), default="t2v",
                   help="v2t evaluates the transposed matrix (default: t2v)")
    _add_transform_flags(p, "identity")
    _add_report_flags(p)

    p = sub.add_parser("single-query", help="single-query pseudo-test protocol")
    p.add_argument("--test-scores", required=True, metavar="F")
    p.add_argument("--train-scores", required=True, metavar="F")
    p.add_argument("--gt", required=True, metavar="F")
    _add_transform_flags(p, "sinkhorn")
    p.add_argument("--pool", type=int, default=DEFAULT_POOL_SIZE,
                   help=f"staging pool of training queries (default: {DEFAULT_POOL_SIZE})")
    p.add_argument("--m", type=int, default=DEFAULT_SAMPLE_SIZE,
                   help=f"rows per pseudo-test matrix incl. the test query (default: {DEFAULT_SAMPLE_SIZE})")
    p.add_argument("--resamples", type=int, default=DEFAULT_RESAMPLES,
                   help=f"pseudo-test resamples averaged (default: {DEFAULT_RESAMPLES})")
    p.add_argument("--seed", type=int, default=0, help="sampling seed (default: 0)")
    p.add_argument("--workers", type=int, default=1, help="threads; output is unaffected (default: 1)")
    _add_report_flags(p)

    d = SynthConfig()
    p = sub.add_parser("synth", help="generate a planted-hub benchmark")
    p.add_argument("--queries", type=int, default=d.n_queries, help=f"(default: {d.n_queries})")
    p.add_argument("--items", type=int, default=d.n_items, help=f"(default: {d.n_items})")
    p.add_argument("--hubs", type=int, default=d.n_hubs, help=f"(default: {d.n_hubs})")
    p.add_argument("--match-strength", type=float, default=d.match_strength,
                   help=f"(default: {d.match_strength:g})")
    p.add_argument("--hub-strength", type=float, default=d.hub_strength, help=f"(default: {d.hub_strength:g})")
    p.add_argument("--noise", type=float, default=d.noise_sigma, help=f"(default: {d.noise_sigma:g})")
    p.add_argument("--seed", type=int, default=d.seed, help=f"(default: {d.seed})")
    p.add_argument("--out-prefix", required=True, metavar="PFX",
                   help="writes PFX.smx and PFX.gt")

    p = sub.add_parser("compare", help="paired randomization test on two rank dumps")
    p.add_argument("--report-a", required=True, metavar="F")
    p.add_argument("--report-b", required=True, metavar="F")
    p.add_argument("--k", type=int, default=1, help="hit cutoff (default: 1)")
    p.add_argument("--seed", type=int, default=0, help="(default: 0)")
    p.add_argument("--iterations", type=int, default=DEFAULT_ITERATIONS,
                   help=f"(default: {DEFAULT_ITERATIONS})")

    p = sub.add_parser("convert", help="convert between SMX and CSV (by .csv extension)")
    p.add_argument("--in", dest="inp", required=True, metavar="F")
    p.add_argument("--out", required=True, metavar="F")
    return parser


def _transform_config(args) -> TransformConfig:
    return TransformConfig(Method.parse(args.method), args.temperature, args.steps)


def _header(command: str, **fields) -> list[tuple[str, object]]:
    return [("command", command)] + list(fields.items())


def _transform_fields(cfg: TransformConfig) -> dict:
    fields = {"method": cfg.method.value}
    if cfg.method is not Method.IDENTITY:
        fields["temperature"] = repr(cfg.temperature)
    if cfg.method is Method.SINKHORN:
        fields["sinkhorn_steps"] = cfg.sinkhorn_steps
    return fields


def format_kv(header, report: MetricsReport) -> str:
    lines = [f"{k}={v}" for k, v in header]
    lines.append(f"n_queries={report.n_queries}")
    for k, v in report.recall_at.items():
        lines.append(f"recall@{k}={v:.6f}")
    lines.append(f"median_rank={report.median_rank:.6f}")
    lines.append(f"mean_rank={report.mean_rank:.6f}")
    return "\n".join(lines) + "\n"


def format_table(label: str, report: MetricsReport) -> str:
    cols = [f"R@{k}" for k in report.recall_at] + ["MedR", "MeanR"]
    vals = [f"{100 * v:.1f}" for v in report.recall_at.values()]
    vals += [f"{report.median_rank:g}", f"{report.mean_rank:.1f}"]
    width = max(len(label), 6)
    head = f"{'':<{width}}" + "".join(f"{c:>8}" for c in cols)
    row = f"{label:<{width}}" + "".join(f"{v:>8}" for v in vals)
    return head + "\n" + row + "\n"


def _emit(header, report, label, args, row_ids=None) -> None:
    kv = format_kv(header, report)
    sys.stdout.write(kv + "\n" + format_table(label, report))
    if args.report:
        Path(args.report).write_text(kv, encoding="utf-8")
    if args.dump_ranks:
        io.write_ranks(report, args.dump_ranks, row_ids)


def _read_any(path):
    return io.read_csv_matrix(path) if io.is_csv_path(path) else io.read_matrix(path)


def cmd_transform(args) -> int:
    cfg = _transform_config(args)
    A = io.read_matrix(args.inp)
    io.write_matrix(apply_transform(A, cfg), args.out)
    header = _header("transform", **_transform_fields(cfg), n_rows=A.n_rows, n_cols=A.n_cols)
    sys.stdout.write("".join(f"{k}={v}\n" for k, v in header))
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _transform_config(args)
    A = io.read_matrix(args.scores)
    gt = io.read_ground_truth(args.gt, A)
    if args.direction == "v2t":
        A, gt = transpose_direction(A, gt)
    report = evaluate_full(A, gt, cfg, args.ks)
    header = _header("eval", direction=args.direction, **_transform_fields(cfg),
                     n_rows=A.n_rows, n_cols=A.n_cols)
    _emit(header, report, cfg.method.value, args, A.row_ids)
    return EXIT_OK


def cmd_single_query(args) -> int:
    tcfg = _transform_config(args)
    pcfg = PseudoTestConfig(args.pool, args.m, args.resamples, args.seed)
    if args.workers < 1:
        raise ConfigError(f"--workers must be positive, got {args.workers}")
    test = io.read_matrix(args.test_scores)
    train = io.read_matrix(args.train_scores)
    gt = io.read_ground_truth(args.gt, test)
    report = single_query_eval(test, gt, train, tcfg, pcfg, args.ks, workers=args.workers)
    header = _header("single-query", **_transform_fields(tcfg), pool_size=pcfg.pool_size,
                     sample_size=pcfg.sample_size, resamples=pcfg.resamples, seed=pcfg.seed,
                     n_rows=test.n_rows, n_cols=test.n_cols, n_train=train.n_rows)
    _emit(header, report, tcfg.method.value, args, test.row_ids)
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = SynthConfig(args.queries, args.items, args.hubs, args.match_strength,
                      args.hub_strength, args.noise, args.seed)
    A, gt = generate(cfg)
    prefix = args.out_prefix
    io.write_matrix(A, f"{prefix}.smx")
    io.write_ground_truth(gt, f"{prefix}.gt")
    header = _header("synth", n_queries=cfg.n_queries, n_items=cfg.n_items, n_hubs=cfg.n_hubs,
                     match_strength=repr(cfg.match_strength), hub_strength=repr(cfg.hub_strength),
                     noise_sigma=repr(cfg.noise_sigma), seed=cfg.seed)
    sys.stdout.write("".join(f"{k}={v}\n" for k, v in header))
    return EXIT_OK


def cmd_compare(args) -> int:
    ids_a, ranks_a = io.read_ranks(args.report_a)
    ids_b, ranks_b = io.read_ranks(args.report_b)
    if ids_a != ids_b:
        raise FormatError(
            f"rank dumps list different queries ({len(ids_a)} vs {len(ids_b)} entries)",
            args.report_b,
        )
    p = paired_significance(ranks_a, ranks_b, args.k, args.iterations, args.seed)
    hits_a = int((ranks_a <= args.k).sum())
    hits_b = int((ranks_b <= args.k).sum())
    n = len(ranks_a)
    out = [
        ("command", "compare"), ("k", args.k), ("iterations", args.iterations), ("seed", args.seed),
        ("n_queries", n), (f"recall@{args.k}_a", f"{hits_a / n:.6f}"),
        (f"recall@{args.k}_b", f"{hits_b / n:.6f}"), ("p_value", f"{p:.6g}"),
    ]
    sys.stdout.write("".join(f"{k}={v}\n" for k, v in out))
    return EXIT_OK


def cmd_convert(args) -> int:
    A = _read_any(args.inp)
    if io.is_csv_path(args.out):
        io.write_csv_matrix(A, args.out)
    else:
        io.write_matrix(A, args.out)
    sys.stdout.write(f"command=convert\nn_rows={A.n_rows}\nn_cols={A.n_cols}\n")
    return EXIT_OK


COMMANDS = {
    "transform": cmd_transform,
    "eval": cmd_eval,
    "single-query": cmd_single_query,
    "synth": cmd_synth,
    "compare": cmd_compare,
    "convert": cmd_convert,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.error("a command is required")
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return exc.code or EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"sinkrank {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SinkrankError, OSError, ValueError) as exc:
        print(f"sinkrank {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run())
