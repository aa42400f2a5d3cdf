"""Command-line interface.

Exit codes: 0 success, 2 usage error, 3 invalid data, 4 numerical failure.
Machine output is JSON with floats rendered to 17 significant digits.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .exceptions import BetaGraphError, DataError, NumericalError, ParseError, SchemaError
from .experiments import (
    ExperimentConfig,
    case_study,
    rmse_vs_crb,
    roc_directionality,
    summary,
    wilks_histogram,
    write_histogram_csv,
    write_rmse_csv,
    write_roc_csv,
)
from .fisher import fisher_information
from .fitting import FitOptions, fit
from .graph_data import (
    PanelObservations,
    check_panel,
    ingest_contacts,
    read_contacts,
    read_covariates,
    read_graph,
    read_panel,
    read_whitelist,
    read_windows,
    write_panel,
)
from .hypothesis import (
    bootstrap_directionality,
    bootstrap_significance,
    glrt_directionality,
    glrt_significance,
)
from .models import ModelSpec, Variant
from .simulate import homogeneous_trials

__all__ = ["main", "run", "dumps"]

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

_VARIANTS = [v.value for v in Variant]


# --- output ----------------------------------------------------------------


def _num(v: float) -> str:
    if math.isnan(v):
        return "NaN"
    if math.isinf(v):
        return "Infinity" if v > 0 else "-Infinity"
    return format(v, ".17g")


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with every float written as 17 significant digits."""
    return _encode(obj, indent, 0)


def _emit(obj, out):
    out.write(dumps(obj) + "\n")


# --- input helpers -------------------------------------------------------------


def _load_data(path, covariates=None, header=False) -> PanelObservations:
    path = Path(path)
    design = read_covariates(covariates, header=header) if covariates else None
    if path.suffix.lower() == ".json":
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, line=exc.lineno, offset=exc.colno) from None
        if isinstance(doc, dict) and "graphs" in doc:
            return read_panel(path, covariates=design)
    return check_panel(read_graph(path), covariates=design)


def _load_params(text_or_path) -> np.ndarray:
    """Parameters from a file (JSON list, FitResult JSON, or whitespace numbers) or ``zeros(n)``."""
    s = str(text_or_path).strip()
    if s.startswith("zeros(") and s.endswith(")"):
        return np.zeros(int(s[6:-1]))
    path = Path(s)
    text = path.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        try:
            return np.array([float(v) for v in text.replace(",", " ").split()])
        except ValueError:
            raise ParseError(f"{path}: parameters must be JSON or whitespace-separated numbers") from None
    if isinstance(doc, dict):
        for key in ("theta_hat", "theta", "params"):
            if key in doc:
                return np.asarray(doc[key], dtype=float)
        raise SchemaError(f"{path}: expected a 'theta' or 'theta_hat' field")
    return np.asarray(doc, dtype=float)


def _fit_options(args) -> FitOptions:
    return FitOptions(tol=args.tol, max_iter=args.max_iter, relaxation=args.relaxation,
                      adaptive=not args.no_adaptive, anderson=args.anderson)


# --- subcommands -------------------------------------------------------------


def _cmd_fit(args, out):
    data = _load_data(args.data, args.covariates, args.covariates_header)
    res = fit(args.model, data, _fit_options(args))
    _emit(res.as_dict(), out)


def _cmd_crb(args, out):
    variant = Variant.parse(args.model)
    if args.data:
        data = _load_data(args.data, args.covariates, args.covariates_header)
    elif args.n is not None and args.trials is not None:
        if variant.generalized:
            raise DataError("the generalized models need --data with their covariates")
        N = homogeneous_trials(args.n, args.trials)
        data = PanelObservations.from_arrays(np.zeros_like(N), N, np.ones((1, 1)), variant.directed)
    else:
        raise DataError("crb needs --data, or --n together with --trials")
    if args.params:
        theta = _load_params(args.params)
    else:
        theta = fit(variant, data, _fit_options(args)).theta_hat
    spec = ModelSpec.for_data(variant, data)
    res = fisher_information(variant, spec.check_theta(theta), data)
    if args.format == "csv":
        for row in res.inverse:
            out.write(",".join(_num(float(v)) for v in row) + "\n")
    else:
        _emit({"model": variant.value, "theta": theta, **res.as_dict()}, out)


def _cmd_test(args, out):
    opts = _fit_options(args)
    if args.kind == "significance":
        data = _load_data(args.data, args.covariates, args.covariates_header)
        if args.bootstrap:
            res = bootstrap_significance(data, args.covariate, args.bootstrap, args.seed, opts,
                                         args.threads)
        else:
            res = glrt_significance(data, args.covariate, opts)
    else:
        data = _load_data(args.data)
        if data.num_graphs != 1:
            raise DataError("the directionality test takes a single directed graph")
        graph = data.graphs[0]
        if args.bootstrap:
            res = bootstrap_directionality(graph, args.bootstrap, args.seed, opts, args.threads)
        else:
            res = glrt_directionality(graph, opts)
    _emit({"test": args.kind, **res.as_dict()}, out)


def _cmd_simulate(args, out):
    cfg = ExperimentConfig.from_json(args.config)
    overrides = {"kind": args.kind, "seed": args.seed}
    if args.num_sims is not None:
        overrides["num_sims"] = args.num_sims
    doc = {**{f: getattr(cfg, f) for f in cfg.__dataclass_fields__}, **overrides}
    cfg = ExperimentConfig(**doc)
    outdir = Path(args.out or cfg.out or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    report = {"kind": cfg.kind, "seed": cfg.seed, "num_sims": cfg.num_sims, "files": []}
    if cfg.kind == "rmse":
        rows = rmse_vs_crb(cfg, args.threads)
        path = outdir / "rmse.csv"
        write_rmse_csv(rows, path)
        report["files"].append(str(path))
        report["rows"] = [summary(r) for r in rows]
    elif cfg.kind == "roc":
        curves = roc_directionality(cfg, args.threads)
        report["curves"] = []
        for c in curves:
            path = outdir / f"roc_rho{c.rho:g}.csv"
            write_roc_csv(c, path)
            report["files"].append(str(path))
            report["curves"].append(summary(c))
    else:
        results = wilks_histogram(cfg, args.threads)
        report["histograms"] = []
        for w in results:
            path = outdir / f"wilks_rho{w.rho:g}.csv"
            write_histogram_csv(w, path)
            report["files"].append(str(path))
            report["histograms"].append(summary(w))
    _emit(report, out)


def _cmd_ingest(args, out):
    whitelist = read_whitelist(args.whitelist) if args.whitelist else None
    spec = read_windows(args.windows, whitelist)
    panel = ingest_contacts(read_contacts(args.contacts), spec, args.trials_per_window)
    write_panel(panel.graphs, args.out, nodes=panel.nodes)
    _emit({"out": str(args.out), "n": panel.n, "num_graphs": len(panel.graphs),
           "nodes": list(panel.nodes), "edge_fraction": panel.edge_fraction()}, out)


def _day_starts(args, records):
    if args.day_starts:
        return [int(float(v)) for v in args.day_starts.split(",") if v.strip()]
    if not records:
        raise DataError("no contact records, so the days cannot be inferred")
    first = min(r.t for r in records) // 86400
    last = max(r.t for r in records) // 86400
    return [d * 86400 + args.start_offset for d in range(first, last + 1)]


def _cmd_case_study(args, out):
    records = read_contacts(args.contacts)
    whitelist = read_whitelist(args.whitelist) if args.whitelist else None
    report = case_study(records, _day_starts(args, records), whitelist, args.period_length,
                        args.periods, args.bootstrap, args.seed, _fit_options(args), args.threads)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "report.json").write_text(dumps(report) + "\n")
    _emit(report, out)


# --- parser ------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """Raises instead of exiting so ``run`` controls the exit code and error format."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


class UsageError(Exception):
    pass


def _add_fit_flags(p):
    p.add_argument("--tol", type=float, default=1e-4, help="stopping threshold on the update norm")
    p.add_argument("--max-iter", type=int, default=10000, help="iteration cap")
    p.add_argument("--relaxation", type=float, default=1.0,
                   help="initial update scale in (0, 1]; 1 is the plain fixed-point map")
    p.add_argument("--no-adaptive", action="store_true",
                   help="keep the update scale fixed even when the iteration stalls")
    p.add_argument("--anderson", type=int, default=10,
                   help="past steps used to extrapolate each update; 0 runs the plain map")


def _add_data_flags(p, required=True):
    p.add_argument("--data", required=required, help="graph (edge-count JSON or dense CSV) or panel JSON")
    p.add_argument("--covariates", help="covariate CSV with one row per graph")
    p.add_argument("--covariates-header", action="store_true", help="the covariate CSV has a header row")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="betagraph", description="Beta-model random graphs: fitting, bounds and tests.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--json-errors", action="store_true", help="report errors as JSON on stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="maximum-likelihood fit")
    p.add_argument("--model", required=True, choices=_VARIANTS)
    _add_data_flags(p)
    _add_fit_flags(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("crb", help="Fisher information and Cramer-Rao bounds")
    p.add_argument("--model", required=True, choices=_VARIANTS)
    p.add_argument("--params", help="parameter file, or zeros(n); default: fit --data first")
    _add_data_flags(p, required=False)
    p.add_argument("--n", type=int, help="node count for homogeneous trials")
    p.add_argument("--trials", type=int, help="trials per dyad for homogeneous trials")
    p.add_argument("--format", choices=["json", "csv"], default="json",
                   help="json: full result; csv: inverse FIM rows")
    _add_fit_flags(p)
    p.set_defaults(func=_cmd_crb)

    p = sub.add_parser("test", help="likelihood-ratio tests")
    p.add_argument("kind", choices=["significance", "directionality"])
    p.add_argument("--covariate", type=int, default=1, help="index of the covariate to test (0-based)")
    _add_data_flags(p)
    p.add_argument("--bootstrap", type=int, default=0, metavar="S", help="bootstrap simulations (>= 100)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1, help="worker processes for the bootstrap")
    _add_fit_flags(p)
    p.set_defaults(func=_cmd_test)

    p = sub.add_parser("simulate", help="simulation studies; writes CSV tables")
    p.add_argument("kind", choices=["rmse", "roc", "wilks"])
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output directory")
    p.add_argument("--num-sims", type=int, help="override the config's num_sims")
    p.add_argument("--threads", type=int, default=1, help="worker processes")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("ingest", help="bin a contact list into a panel JSON")
    p.add_argument("--contacts", required=True, help="contact file: t i j per line")
    p.add_argument("--windows", required=True, help="window file: start end [graph] per line")
    p.add_argument("--whitelist", help="node identifiers to keep, in order")
    p.add_argument("--trials-per-window", type=int, default=1)
    p.add_argument("--out", required=True, help="panel JSON to write")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("case-study", help="covariate tests and time-of-day regression on contacts")
    p.add_argument("--contacts", required=True)
    p.add_argument("--out", required=True, help="output directory for report.json")
    p.add_argument("--whitelist")
    p.add_argument("--day-starts", help="comma-separated start times (s) of the first period of each day")
    p.add_argument("--start-offset", type=int, default=36000,
                   help="seconds after midnight of the first period when --day-starts is absent")
    p.add_argument("--period-length", type=int, default=3600)
    p.add_argument("--periods", type=int, default=3)
    p.add_argument("--bootstrap", type=int, default=0, metavar="S")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    _add_fit_flags(p)
    p.set_defaults(func=_cmd_case_study)
    return parser


def _report_error(exc, code, json_errors, err):
    if json_errors:
        doc = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
        err.write(json.dumps(doc) + "\n")
    else:
        err.write(f"error: {type(exc).__name__}: {exc}\n")
    return code


def run(argv=None, out=None, err=None) -> int:
    """Run the CLI and return the exit code."""
    out = out or sys.stdout
    err = err or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    # accepted anywhere on the command line
    json_errors = "--json-errors" in argv
    argv = [a for a in argv if a != "--json-errors"]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        if json_errors:
            return _report_error(exc, EXIT_USAGE, True, err)
        parser.print_usage(err)
        err.write(f"{exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help, --version
        return int(exc.code or 0)
    try:
        args.func(args, out)
    except DataError as exc:
        return _report_error(exc, EXIT_DATA, json_errors, err)
    except NumericalError as exc:
        return _report_error(exc, EXIT_NUMERIC, json_errors, err)
    except (OSError, ValueError) as exc:
        return _report_error(exc, EXIT_DATA, json_errors, err)
    except BetaGraphError as exc:
        return _report_error(exc, EXIT_DATA, json_errors, err)
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
