"""Command-line front end with one subcommand per task.

Exit codes: 0 success, 2 usage, 3 IO, 4 numerical failure. Errors print a
single line ``error code=<CODE>: <message>`` on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bootstrap import bootstrap
from .core import AdjacencyMatrix, fit, load_prior_csv, r_squared, total_effects
from .dataset import center, load_csv
from .errors import DataError, LingamError
from .export import export_dot, export_json, read_matrix_csv, topological_order, write_matrix_csv
from .kernel import default_params
from .lasso import LassoConfig, prune_adjacency
from .simulate import DENSITIES, DagSpec, generate_instance, run_benchmark, save_instance

log = logging.getLogger("dlingam")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4
# settings that never enter a manifest
_NOT_CONFIG = {"out", "manifest", "func", "verbose"}


def _csv_ints(text):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _csv_floats(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values or min(values) <= 0:
        raise argparse.ArgumentTypeError("expected positive values")
    return values


def _density_list(text):
    values = [v.strip() for v in text.split(",") if v.strip()]
    for v in values:
        if v not in DENSITIES:
            raise argparse.ArgumentTypeError(f"unknown density {v!r}; choose from {', '.join(DENSITIES)}")
    return values


def _shared(parser):
    g = parser.add_argument_group("shared")
    g.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    g.add_argument("--threads", type=int, default=1, help="worker processes (default 1)")
    g.add_argument("--out", default="out", help="output directory (default ./out)")
    g.add_argument("--sigma", type=float, help="kernel bandwidth (default by sample size)")
    g.add_argument("--kappa", type=float, help="kernel regularization (default by sample size)")
    g.add_argument("--max-rank", type=int, default=60, help="incomplete Cholesky rank cap")
    g.add_argument("--pivot-tol", type=float, default=1e-6, help="per-sample Cholesky stopping trace")
    g.add_argument("--no-gram-centering", action="store_true", help="use uncentered Gram matrices")
    g.add_argument("--no-kernel-standardize", action="store_true", help="feed raw scales to the kernel")
    g.add_argument("--manifest", help="replay the configuration stored in a previous run's manifest.json")
    g.add_argument("-v", "--verbose", action="store_true")


def _lasso_flags(parser):
    parser.add_argument("--lasso-folds", type=int, default=5)
    parser.add_argument("--gamma-grid", type=_csv_floats, default=[0.5, 1.0, 2.0])
    parser.add_argument(
        "--refit",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="OLS refit on the selected support (default); --no-refit keeps the shrunken coefficients",
    )
    parser.add_argument("--cv-rule", choices=("1se", "min"), default="1se")


def _data_flags(parser):
    parser.add_argument("data", help="CSV file, one sample per line")
    parser.add_argument("--no-header", action="store_true", help="file has no header line")
    parser.add_argument("--transpose", action="store_true", help="file holds one variable per line")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dlingam", description="Linear non-Gaussian causal discovery.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("discover", help="estimate the causal ordering and connection strengths")
    _data_flags(p)
    p.add_argument("--prior", help="prior-knowledge CSV (p x p of 0/1/-1)")
    p.add_argument("--bootstrap", type=int, default=0, metavar="REPS", help="bootstrap replicates (0 = off)")
    p.add_argument("--level", type=float, default=0.95, help="confidence level")
    p.add_argument("--prune", action="store_true", help="prune B with the adaptive lasso")
    _lasso_flags(p)
    _shared(p)
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("simulate", help="generate one benchmark instance")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--density", choices=DENSITIES, default="sparse")
    _shared(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="synthetic benchmark over a grid of (p, n, density)")
    p.add_argument("--dims", type=_csv_ints, default=[10])
    p.add_argument("--sizes", type=_csv_ints, default=[1000])
    p.add_argument("--density", type=_density_list, default=["sparse"])
    p.add_argument("--target", type=int, choices=(2, 5), help="expected adjacent count (sparse only)")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--prior-hide", type=float, help="also run with path knowledge hidden at this rate")
    _shared(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("prune", help="prune an estimated B with the adaptive lasso")
    _data_flags(p)
    p.add_argument("--b", required=True, help="labeled B matrix CSV (as written by discover)")
    p.add_argument("--ordering", help="ordering file; defaults to the order implied by B")
    _lasso_flags(p)
    _shared(p)
    p.set_defaults(func=cmd_prune)
    return parser


# -- helpers -------------------------------------------------------------------


def _kernel_params(args, n):
    return default_params(
        n,
        sigma=args.sigma,
        kappa=args.kappa,
        max_rank=args.max_rank,
        pivot_tol=args.pivot_tol,
        center=not args.no_gram_centering,
        standardize=not args.no_kernel_standardize,
    )


def _lasso_config(args):
    return LassoConfig(
        folds=args.lasso_folds,
        gamma_grid=tuple(args.gamma_grid),
        refit=args.refit,
        cv_rule=args.cv_rule,
        seed=int(np.random.SeedSequence([args.seed, 1]).generate_state(1)[0]),
    )


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_CONFIG}


def _write_outputs(out: Path, files: dict, args) -> None:
    """Write every artifact at once, after all computation succeeded."""
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, content in files.items():
            if callable(content):
                content(out / name)
            else:
                (out / name).write_text(content, encoding="utf-8")
        manifest = {"command": args.command, "version": __version__, "config": _config(args)}
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write to {out}: {exc.strerror or exc}") from exc


def _rows_csv(rows) -> str:
    import io

    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _aligned(rows) -> str:
    widths = [max(len(str(r[k])) for r in rows) for k in range(len(rows[0]))]
    return "".join("  ".join(str(c).rjust(w) for c, w in zip(r, widths)) + "\n" for r in rows)


def _read_ordering(path, labels):
    try:
        names = [s.strip() for s in Path(path).read_text(encoding="utf-8").strip().split(",")]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc
    index = {name: k for k, name in enumerate(labels)}
    missing = [nm for nm in names if nm not in index]
    if missing or len(names) != len(labels):
        raise DataError(f"{path}: ordering must list every variable exactly once")
    return tuple(index[nm] for nm in names)


# -- commands ------------------------------------------------------------------


def cmd_discover(args) -> int:
    d = load_csv(args.data, has_header=not args.no_header, transpose=args.transpose)
    prior = load_prior_csv(args.prior, d.p) if args.prior else None
    if args.bootstrap and not 0 < args.level < 1:
        raise argparse.ArgumentTypeError("--level must lie in (0, 1)")
    params = _kernel_params(args, d.n)
    result = fit(d, params, prior)
    dc = center(d)
    labels = d.labels
    final = result.adjacency
    files = {
        "ordering.txt": ",".join(labels[k] for k in result.ordering) + "\n",
        "B.csv": lambda path: write_matrix_csv(path, result.b, labels),
    }
    if args.prune:
        failures = []
        final = prune_adjacency(dc, result.adjacency, _lasso_config(args), failures)
        files["B_pruned.csv"] = lambda path, b=final.b: write_matrix_csv(path, b, labels)
        for i, msg in failures:
            log.warning("pruning failed for %s: %s", labels[i], msg)
    A = total_effects(final).a
    files["A.csv"] = lambda path: write_matrix_csv(path, A, labels)
    files["r2.csv"] = _rows_csv([["variable", "r2"]] + [[labels[i], repr(r_squared(dc, final, i))] for i in range(d.p)])

    significant = None
    if args.bootstrap:
        boot_seed = int(np.random.SeedSequence([args.seed, 2]).generate_state(1)[0])
        boot = bootstrap(d, args.bootstrap, args.level, params, seed=boot_seed, prior=prior, threads=args.threads)
        significant = boot.b_significant
        # intervals describe the unpruned estimator, so pair them with its point values
        header = ["source", "target", "b", "b_lower", "b_upper", "b_significant", "a", "a_lower", "a_upper", "a_significant"]
        rows = [header + (["b_pruned"] if args.prune else [])]
        a_raw = result.total.a
        for j in range(d.p):
            for i in range(d.p):
                if i == j:
                    continue
                row = [
                    labels[j], labels[i], repr(float(result.b[i, j])),
                    repr(float(boot.b_lower[i, j])), repr(float(boot.b_upper[i, j])),
                    "*" if boot.b_significant[i, j] else "",
                    repr(float(a_raw[i, j])), repr(float(boot.a_lower[i, j])), repr(float(boot.a_upper[i, j])),
                    "*" if boot.a_significant[i, j] else "",
                ]
                if args.prune:
                    row.append(repr(float(final.b[i, j])))
                rows.append(row)
        files["edges.csv"] = _rows_csv(rows)
        if boot.failures:
            log.warning("%d bootstrap replicates failed", boot.failures)
    else:
        rows = [["source", "target", "b", "a"]]
        for j in range(d.p):
            for i in range(d.p):
                if i != j:
                    rows.append([labels[j], labels[i], repr(float(final.b[i, j])), repr(float(A[i, j]))])
        files["edges.csv"] = _rows_csv(rows)
    files["graph.dot"] = export_dot(final.b, labels, significant)
    files["graph.json"] = export_json(final.b, labels, significant, result.ordering)
    _write_outputs(Path(args.out), files, args)
    print(",".join(labels[k] for k in result.ordering))
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.p < 2 or args.n < 3:
        raise argparse.ArgumentTypeError("need --p >= 2 and --n >= 3")
    rng = np.random.default_rng(np.random.SeedSequence([args.seed, 3]))
    inst = generate_instance(DagSpec(args.p, args.density, args.seed), args.n, rng)
    out = Path(args.out)
    _write_outputs(out, {}, args)
    save_instance(inst, out)
    print(out)
    return EXIT_OK


def cmd_bench(args) -> int:
    densities = list(args.density)
    if args.target is not None:
        if any(dn == "dense" for dn in densities):
            raise argparse.ArgumentTypeError("--target conflicts with --density dense")
        densities = [f"sparse{args.target}" for _ in densities]
    if args.reps < 1:
        raise argparse.ArgumentTypeError("--reps must be >= 1")
    if args.prior_hide is not None and not 0 <= args.prior_hide <= 1:
        raise argparse.ArgumentTypeError("--prior-hide must lie in [0, 1]")
    overrides = dict(
        sigma=args.sigma,
        kappa=args.kappa,
        max_rank=args.max_rank,
        pivot_tol=args.pivot_tol,
        center=not args.no_gram_centering,
        standardize=not args.no_kernel_standardize,
    )
    report = run_benchmark(
        args.dims, args.sizes, densities, args.reps, args.seed, args.prior_hide, overrides, args.threads
    )
    dist_rows, time_rows = report.distance_rows(), report.time_rows()
    pretty = [dist_rows[0]] + [
        r[:5] + [f"{float(r[5]):.2f}"] + (r[6:8] + [f"{float(r[8]):.2f}"] if len(r) > 6 else []) for r in dist_rows[1:]
    ]
    files = {
        "distances.csv": _rows_csv(dist_rows),
        "distances.txt": _aligned(pretty),
        "times.csv": _rows_csv(time_rows),
        "times.txt": _aligned(time_rows),
    }
    _write_outputs(Path(args.out), files, args)
    sys.stdout.write(_aligned(pretty))
    if report.failures:
        log.warning("%d benchmark repetitions failed", report.failures)
        print(f"warning: {report.failures} failed repetitions", file=sys.stderr)
    return EXIT_OK


def cmd_prune(args) -> int:
    d = load_csv(args.data, has_header=not args.no_header, transpose=args.transpose)
    b, labels = read_matrix_csv(args.b)
    if labels != d.labels:
        raise DataError("labels of the B matrix do not match the data header")
    ordering = _read_ordering(args.ordering, labels) if args.ordering else topological_order(b)
    try:
        B = AdjacencyMatrix(b, ordering)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    dc = center(d)
    pruned = prune_adjacency(dc, B, _lasso_config(args))
    A = total_effects(pruned).a
    files = {
        "B_pruned.csv": lambda path: write_matrix_csv(path, pruned.b, labels),
        "A.csv": lambda path: write_matrix_csv(path, A, labels),
        "graph.dot": export_dot(pruned.b, labels),
        "graph.json": export_json(pruned.b, labels, ordering=ordering),
    }
    _write_outputs(Path(args.out), files, args)
    return EXIT_OK


# -- entry point ---------------------------------------------------------------


def _apply_manifest(parser, args):
    try:
        manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read manifest {args.manifest}: {exc}") from exc
    if manifest.get("command") != args.command:
        raise argparse.ArgumentTypeError(
            f"manifest is for {manifest.get('command')!r}, not {args.command!r}"
        )
    for key, value in manifest.get("config", {}).items():
        if key not in _NOT_CONFIG:
            setattr(args, key, value)
    return args


def _fail(code: str, message: str, status: int) -> int:
    print(f"error code={code}: {message}", file=sys.stderr)
    return status


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.manifest:
            args = _apply_manifest(parser, args)
        return args.func(args)
    except argparse.ArgumentTypeError as exc:
        parser.print_usage(sys.stderr)
        return _fail("USAGE", str(exc), EXIT_USAGE)
    except LingamError as exc:
        return _fail(exc.code, str(exc), exc.exit_code)
    except ValueError as exc:
        return _fail("USAGE", str(exc), EXIT_USAGE)
    except np.linalg.LinAlgError as exc:
        return _fail("NUMERIC", str(exc), EXIT_NUMERIC)


if __name__ == "__main__":
    sys.exit(main())
