"""Command-line surface binding the library into reproducible pipelines.

Exit codes: 0 success, 1 input error (bad flags, missing or malformed
files), 2 numeric or verification failure.  Requested reports go to stdout;
logs and run manifests without an output file go to stderr.  Every run that
writes an artifact also writes ``<artifact>.manifest.json`` describing the
exact command, configuration, input digests and tool version.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .boosting import AdaBoostConfig
from .data import SPLIT_NAMES
from .exceptions import EmapError, InputError, NumericError
from .grid import build_grid, emap_decompose, emap_predictions
from .logic import (
    SWEEP_METHODS,
    BooleanTable,
    additive_fit_auc,
    is_representable,
    parse_formula,
    representable_oracle,
    run_size_sweep,
    table_from_formula,
    write_sweep_csv,
)
from .metrics import (
    EvalReport,
    UndefinedMetricError,
    agreement,
    disagreement_advantage,
    metric_from_logits,
    subsampled_emap_metric,
)
from .models import (
    FeedForwardConfig,
    LinearConfig,
    Poly2Config,
    train_interactive,
    train_linear,
)
from .oracle import verify_projection
from .synth import SynthParams, generate
from . import io as emap_io

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERIC = 2


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems on stderr and exits 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise InputError(message)


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _resolve_fixture(path: str) -> str:
    if path.startswith("fixture:"):
        from importlib.resources import files

        name = path.removeprefix("fixture:")
        return str(files("emap") / "fixtures" / name)
    return path


def _manifest(args: argparse.Namespace, inputs: list[str], started: float, seed=None) -> dict:
    config = {
        k: v
        for k, v in sorted(vars(args).items())
        if k not in ("func", "argv") and v is not None
    }
    return {
        "command": list(getattr(args, "argv", [])),
        "config": config,
        "seed": seed,
        "inputs": {path: _sha256(path) for path in inputs},
        "tool_version": __version__,
        "wall_time_s": round(time.monotonic() - started, 6),
    }


def _emit_manifest(manifest: dict, artifact_path=None) -> None:
    if artifact_path is not None:
        emap_io.dump_json(manifest, str(artifact_path) + ".manifest.json")
    else:
        print(json.dumps(manifest), file=sys.stderr)


def _threads(args) -> int | None:
    if getattr(args, "threads", None):
        return args.threads
    env = os.environ.get("EMAP_THREADS")
    return int(env) if env else None


# -- subcommands -------------------------------------------------------------


def _cmd_project(args) -> int:
    started = time.monotonic()
    grid_path = _resolve_fixture(args.grid)
    grid = emap_io.load_grid(grid_path)
    dec = emap_decompose(grid)
    emap_io.save_decomposition(dec, args.out)
    _emit_manifest(_manifest(args, [grid_path], started), args.out)
    return EXIT_OK


def _cmd_verify(args) -> int:
    started = time.monotonic()
    grid_path = _resolve_fixture(args.grid)
    grid = emap_io.load_grid(grid_path)
    report, passed = verify_projection(grid, tolerance=args.tolerance, seed=args.seed)
    payload = report.to_json_dict()
    payload["passed"] = passed
    payload["tolerance"] = args.tolerance
    print(json.dumps(payload, indent=2))
    _emit_manifest(_manifest(args, [grid_path], started, seed=args.seed))
    return EXIT_OK if passed else EXIT_NUMERIC


def _cmd_synth(args) -> int:
    started = time.monotonic()
    fractions = tuple(float(x) for x in args.split.split(","))
    if len(fractions) != 3:
        raise InputError("--split expects three comma-separated fractions")
    params = SynthParams(
        d=args.latent_dim,
        d1=args.text_dim,
        d2=args.visual_dim,
        delta=args.delta,
        n=args.n,
        split=fractions,
        seed=args.seed,
    )
    dataset = generate(params)
    emap_io.save_dataset(dataset, args.out)
    _emit_manifest(_manifest(args, [], started, seed=args.seed), args.out)
    return EXIT_OK


def _parse_hidden(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x)


def _cmd_train(args) -> int:
    started = time.monotonic()
    dataset = emap_io.load_dataset(args.data)

    def given(value, default):
        return default if value is None else value

    if args.model == "linear":
        base = LinearConfig()
        cfg = LinearConfig(
            l2=args.l2,
            lr=given(args.lr, base.lr),
            epochs=given(args.epochs, base.epochs),
            seed=args.seed,
        )
        model = train_linear(dataset, cfg)
    elif args.model == "poly2":
        base = Poly2Config()
        cfg = Poly2Config(
            l2=args.l2,
            lr=given(args.lr, base.lr),
            epochs=given(args.epochs, base.epochs),
            seed=args.seed,
        )
        model = train_interactive(dataset, "poly2", cfg)
    elif args.model == "mlp":
        base = FeedForwardConfig()
        cfg = FeedForwardConfig(
            hidden=_parse_hidden(args.hidden),
            proj_width=args.proj_width,
            activation=args.activation,
            lr=given(args.lr, base.lr),
            epochs=given(args.epochs, base.epochs),
            seed=args.seed,
        )
        model = train_interactive(dataset, "feedforward", cfg)
    elif args.model == "adaboost":
        cfg = AdaBoostConfig(
            max_depth=args.max_depth,
            n_stages=args.stages,
            restriction=args.restriction,
            seed=args.seed,
        )
        model = train_interactive(dataset, "adaboost", cfg)
    else:  # pragma: no cover - argparse choices guard this
        raise InputError(f"unknown model {args.model!r}")
    emap_io.save_model(model, args.out)
    _emit_manifest(_manifest(args, [args.data], started, seed=args.seed), args.out)
    return EXIT_OK


def _split_metrics(logits, labels) -> dict:
    out = {}
    for name in ("accuracy", "auc", "weighted_f1"):
        try:
            out[name] = metric_from_logits(name, logits, labels)
        except (UndefinedMetricError, InputError):
            continue
    return out


def _cmd_eval(args) -> int:
    started = time.monotonic()
    dataset = emap_io.load_dataset(args.data)
    model = emap_io.load_model(args.model)
    part = dataset.subset(args.split)
    logits = model.logits_many(part.text, part.visual)
    report = EvalReport(
        model=Path(args.model).stem,
        split=args.split,
        metrics=_split_metrics(logits, part.labels),
    )
    if args.with_emap:
        grid = build_grid(model, part.text, part.visual, threads=_threads(args))
        proj = emap_predictions(emap_decompose(grid))
        report.emap_metrics = _split_metrics(proj, part.labels)
        report.agreement_rate = agreement(logits, proj)
        report.orig_better_frac = disagreement_advantage(logits, proj, part.labels)
    if args.subsample:
        try:
            k_str, m_str = args.subsample.split(",")
            k, m = int(k_str), int(m_str)
        except ValueError:
            raise InputError("--subsample expects 'k,m' with two integers") from None
        report.subsample = subsampled_emap_metric(
            model, part, k, m, args.metric, seed=args.seed, threads=_threads(args)
        )
    if args.report.endswith(".csv"):
        Path(args.report).write_text(
            "model,metric,value\n" + "\n".join(report.to_csv_rows()) + "\n",
            encoding="utf-8",
        )
    else:
        emap_io.dump_json(report.to_json_dict(), args.report)
    _emit_manifest(_manifest(args, [args.data, args.model], started, seed=args.seed), args.report)
    return EXIT_OK


def _all_tables(n: int):
    size = 2**n
    cells = size * size
    if cells > 16:
        raise InputError(f"census enumerates 2^(2^(2n)) tables; n={n} is out of reach")
    for code in range(2**cells):
        bits = (code >> np.arange(cells)) & 1
        yield BooleanTable(n, bits.reshape(size, size).astype(np.uint8))


def _cmd_logic_census(args) -> int:
    started = time.monotonic()
    representable = 0
    total = 0
    disagreements = 0
    for table in _all_tables(args.n):
        fast = is_representable(table)
        if args.cross_check:
            if representable_oracle(table) != fast:
                disagreements += 1
        representable += int(fast)
        total += 1
    print(f"{representable}/{total} representable")
    if args.cross_check and disagreements:
        print(f"checker/oracle disagreements: {disagreements}", file=sys.stderr)
        return EXIT_NUMERIC
    _emit_manifest(_manifest(args, [], started))
    return EXIT_OK


def _cmd_logic_check(args) -> int:
    started = time.monotonic()
    ast = parse_formula(args.formula)
    table = table_from_formula(ast, args.n)
    fast = is_representable(table)
    oracle = representable_oracle(table) if table.table.shape[0] <= 16 else None
    payload = {
        "formula": args.formula,
        "n": args.n,
        "representable": fast,
        "oracle": oracle,
        "emap_auc": None if table.is_constant else additive_fit_auc(table, "emap"),
    }
    print(json.dumps(payload, indent=2))
    _emit_manifest(_manifest(args, [], started))
    if oracle is not None and oracle != fast:
        return EXIT_NUMERIC
    return EXIT_OK


def _cmd_logic_sweep(args) -> int:
    started = time.monotonic()
    try:
        lo, hi = (int(x) for x in args.n_range.split(".."))
    except ValueError:
        raise InputError("--n-range expects 'A..B'") from None
    cfg = AdaBoostConfig(max_depth=args.max_depth, n_stages=args.stages)
    rows = run_size_sweep(
        range(lo, hi + 1),
        args.samples,
        args.seed,
        methods=SWEEP_METHODS,
        cfg=cfg,
        sampler=args.sampler,
    )
    write_sweep_csv(rows, args.out)
    print(f"sampler={args.sampler}", file=sys.stderr)
    _emit_manifest(_manifest(args, [], started, seed=args.seed), args.out)
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def _build_parser() -> _Parser:
    parser = _Parser(prog="emap", description=__doc__)
    parser.add_argument("--version", action="version", version=f"emap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("project", help="decompose a score grid into its additive parts")
    p.add_argument("--grid", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int)
    p.set_defaults(func=_cmd_project)

    p = sub.add_parser("verify", help="numerically verify projection optimality")
    p.add_argument("--grid", required=True)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("synth", help="generate the interaction-requiring synthetic task")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--latent-dim", type=int, default=10)
    p.add_argument("--text-dim", type=int, default=60)
    p.add_argument("--visual-dim", type=int, default=40)
    p.add_argument("--delta", type=float, default=0.25)
    p.add_argument("--split", default="0.8,0.1,0.1")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train a reference model on a dataset file")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True, choices=["linear", "poly2", "mlp", "adaboost"])
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--hidden", default="128,128")
    p.add_argument("--proj-width", type=int, default=64)
    p.add_argument("--activation", default="relu", choices=["relu", "gelu"])
    p.add_argument("--stages", type=int, default=200)
    p.add_argument("--max-depth", type=int, default=15)
    p.add_argument("--restriction", default="full", choices=["full", "unimodal"])
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a model (optionally with its projection)")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--split", default="test", choices=list(SPLIT_NAMES))
    p.add_argument("--with-emap", action="store_true")
    p.add_argument("--subsample", default=None, help="k,m")
    p.add_argument("--metric", default="accuracy", choices=["accuracy", "auc", "weighted_f1"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int)
    p.set_defaults(func=_cmd_eval)

    logic = sub.add_parser("logic", help="boolean representability experiments")
    logic_sub = logic.add_subparsers(dest="logic_command", required=True)

    p = logic_sub.add_parser("census", help="count representable tables at size n")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--cross-check", action="store_true", default=True)
    p.add_argument("--no-cross-check", dest="cross_check", action="store_false")
    p.set_defaults(func=_cmd_logic_census)

    p = logic_sub.add_parser("check", help="check one formula for representability")
    p.add_argument("--formula", required=True)
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=_cmd_logic_check)

    p = logic_sub.add_parser("sweep", help="additive-fit AUC vs problem size, to CSV")
    p.add_argument("--n-range", required=True, help="A..B inclusive")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--sampler", default="uniform", choices=["uniform", "circuit"])
    p.add_argument("--stages", type=int, default=200)
    p.add_argument("--max-depth", type=int, default=15)
    p.add_argument("--threads", type=int)
    p.set_defaults(func=_cmd_logic_sweep)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    raw = list(argv) if argv is not None else sys.argv[1:]
    try:
        args = parser.parse_args(raw)
        args.argv = raw
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename or exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except EmapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
