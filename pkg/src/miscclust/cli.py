"""Command line entry point: ``miscclust {run,generate,evaluate,ablate}``.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .data import GENERATOR_KINDS, GeneratorSpec, generate, load_csv, load_views, save_csv, save_views
from .errors import MiscError, ParseError
from .factorization import VARIANTS, KernelSpec, SolverConfig, ablation_solvers
from .metrics import evaluate_views, nmi, f1_pairs
from .pipeline import PipelineConfig, config_from_mapping, read_config_file, run_pipeline
from .selection import kmeans

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _json_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _params(pairs):
    out = {}
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        if not sep:
            raise UsageError(f"--param expects key=value, got {pair!r}")
        out[key.strip()] = _json_value(value.strip())
    return out


def _add_input_args(p):
    p.add_argument("--input", help="CSV data file")
    p.add_argument("--orientation", choices=("samples_as_rows", "features_as_rows"))
    p.add_argument("--generator", choices=GENERATOR_KINDS, help="use a synthetic generator instead of --input")
    p.add_argument("--n", type=int, help="sample count for --generator")
    p.add_argument("--gen-seed", type=int, default=None, help="generator seed (default: --seed)")
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="generator parameter (JSON value)")
    p.add_argument("--views", help="views CSV for scoring the result")


def build_parser():
    parser = _Parser(prog="miscclust", description="Multiple independent subspace clusterings.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run the full pipeline")
    _add_input_args(run)
    run.add_argument("--config", help="key = value configuration file")
    run.add_argument("--seed", type=int)
    run.add_argument("--lambda", dest="lam", type=float)
    run.add_argument("--eps", dest="eps_neighbors", type=int)
    run.add_argument("--kernel", choices=("gaussian", "linear"))
    run.add_argument("--kernel-width", help="'auto' or a positive number")
    run.add_argument("--k-min", type=int)
    run.add_argument("--k-max", type=int)
    run.add_argument("--k", dest="k_override", type=int, nargs="+", help="clusters per subspace")
    run.add_argument("--v", dest="v_override", type=int, help="force the number of subspaces")
    run.add_argument("--max-iter", type=int)
    run.add_argument("--rel-tol", type=float)
    run.add_argument("--out", dest="output_dir", help="output directory")
    run.add_argument("--parallel", action="store_true", default=None, help="solve subspaces concurrently")

    gen = sub.add_parser("generate", help="write a synthetic dataset")
    gen.add_argument("--kind", choices=GENERATOR_KINDS, required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--param", action="append", metavar="KEY=VALUE")
    gen.add_argument("--out", required=True, help="data CSV (samples as rows)")
    gen.add_argument("--views-out", help="views CSV (default: <out>_views.csv)")

    ev = sub.add_parser("evaluate", help="score label files against view labels")
    ev.add_argument("--labels", nargs="+", required=True, help="clustering CSV files")
    ev.add_argument("--views", required=True)

    ab = sub.add_parser("ablate", help="compare snmf, gsnmf, ksnmf and kgsnmf on one dataset")
    _add_input_args(ab)
    ab.add_argument("--k", type=int, required=True)
    ab.add_argument("--variants", nargs="+", choices=VARIANTS, default=list(VARIANTS))
    ab.add_argument("--seed", type=int, default=0)
    ab.add_argument("--lambda", dest="lam", type=float, default=10.0)
    ab.add_argument("--eps", type=int, default=5)
    ab.add_argument("--max-iter", type=int, default=500)
    ab.add_argument("--rel-tol", type=float, default=1e-6)
    ab.add_argument("--out", help="write the JSON result here instead of stdout")
    return parser


def _load_dataset(args, seed):
    """(DataMatrix, views or None) from --input or --generator."""
    if (args.input is None) == (args.generator is None):
        raise UsageError("give exactly one of --input and --generator")
    if args.generator is not None:
        if args.n is None:
            raise UsageError("--generator needs --n")
        gen_seed = args.gen_seed if args.gen_seed is not None else seed
        ds = generate(GeneratorSpec(args.generator, args.n, _params(args.param), gen_seed))
        return ds.data, list(ds.views)
    return load_csv(args.input, args.orientation or "samples_as_rows"), None


def read_labels(path):
    """Label column of a ``sample_index,label`` file, ordered by sample index."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ParseError(f"{path}: empty label file")
    if rows[0][0].strip() == "sample_index":
        rows = rows[1:]
    pairs = []
    for line, row in enumerate(rows, start=2):
        try:
            pairs.append((int(row[0]), int(row[1])))
        except (ValueError, IndexError):
            raise ParseError(f"{path}: malformed label row {line}", row=line) from None
    pairs.sort()
    return np.array([label for _, label in pairs])


def _cmd_run(args):
    values = read_config_file(args.config) if args.config else {}
    flags = {k: getattr(args, k) for k in (
        "seed", "lam", "eps_neighbors", "kernel", "kernel_width", "k_min", "k_max",
        "k_override", "v_override", "max_iter", "rel_tol", "output_dir", "parallel", "orientation",
    )}
    values.update({k: v for k, v in flags.items() if v is not None})
    if args.input is not None:
        values["input"] = args.input
    if args.generator is not None:
        values.update(generator=args.generator, n=args.n)
        if args.gen_seed is not None:
            values["generator_seed"] = args.gen_seed
    cfg = config_from_mapping(values)
    if isinstance(cfg.input, GeneratorSpec) and args.param:
        cfg.input = GeneratorSpec(cfg.input.kind, cfg.input.n, _params(args.param), cfg.input.seed)
    if cfg.input is None:
        raise UsageError("give --input, --generator, or an input in --config")
    views = load_views(args.views) if args.views else None
    report = run_pipeline(cfg, views)
    summary = {"v": report.v, "partition": report.partition.as_lists(),
               "k": [s.k for s in report.per_subspace]}
    if report.metrics is not None:
        summary["nmi"] = report.metrics.nmi.tolist()
    if cfg.output_dir is not None:
        summary["output_dir"] = str(cfg.output_dir)
    print(json.dumps(summary))
    return EXIT_OK


def _cmd_generate(args):
    ds = generate(GeneratorSpec(args.kind, args.n, _params(args.param), args.seed))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    views_out = Path(args.views_out) if args.views_out else out.with_name(out.stem + "_views.csv")
    save_csv(out, ds.data)
    save_views(views_out, ds)
    print(json.dumps({"data": str(out), "views": str(views_out), "n": ds.data.n, "d": ds.data.d}))
    return EXIT_OK


def _cmd_evaluate(args):
    labels = [read_labels(p) for p in args.labels]
    views = load_views(args.views)
    names = tuple(Path(p).stem for p in args.labels)
    print(evaluate_views(labels, views, names).to_json())
    return EXIT_OK


def _cmd_ablate(args):
    X, views = _load_dataset(args, args.seed)
    if args.views:
        views = load_views(args.views)
    cfg = SolverConfig(lam=args.lam, max_iter=args.max_iter, rel_tol=args.rel_tol, seed=args.seed)
    result = {"k": args.k, "seed": args.seed, "variants": {}}
    for variant in args.variants:
        state = ablation_solvers(X.values, args.k, variant, cfg, KernelSpec(), args.eps)
        labels = kmeans(state.H, args.k, seed=args.seed).labels
        entry = {
            "iterations": state.iterations,
            "converged": state.converged,
            "objective": state.objective,
            "objective_trace": [float(v) for v in state.objective_trace],
            "labels": labels.tolist(),
        }
        if views:
            entry["metrics"] = {name: {"nmi": nmi(labels, ref), "f1": f1_pairs(labels, ref)} for name, ref in views}
        result["variants"][variant] = entry
    text = json.dumps(result)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


_COMMANDS = {"run": _cmd_run, "generate": _cmd_generate, "evaluate": _cmd_evaluate, "ablate": _cmd_ablate}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    except (MiscError, ValueError, OSError) as exc:
        print(f"miscclust: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main():
    sys.exit(cli_main())
