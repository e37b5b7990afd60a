"""Command-line interface.

Subcommands::

    sdrkit reproduce --table 2 --reps 100 --seed 7 --out results/
    sdrkit simulate --setting S1 --law V3 --tuning gcv --reps 50
    sdrkit kernel-check "matern(c=1,nu=1.5)"
    sdrkit fit data.csv --method gsir --tuning gcv --out fit/
    sdrkit predict fit/model.txt new.csv

Exit codes: 0 success, 2 partial failure, 3 kernel not a member,
64 usage error, 66 missing input.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import SdrError, ShapeError
from .kernels import bandwidth_heuristic, center_gram, gaussian, gram, parse_kernel_spec
from .schoenberg import CertifyConfig, certify_membership, polynomial_kernel
from .sdr import (
    fit_gsir,
    fit_kcca,
    fit_ksir,
    fit_sir,
    gcv_select,
    load_model,
    predict,
    ridge_param,
    save_model,
)
from .sim import (
    LAWS,
    METHODS,
    SETTINGS,
    ExperimentConfig,
    config_dict,
    default_threads,
    run_experiment,
)

log = logging.getLogger("sdrkit")

EXIT_OK = 0
EXIT_PARTIAL = 2
EXIT_NOT_MEMBER = 3
EXIT_USAGE = 64
EXIT_NOINPUT = 66

BANDWIDTH_NOTE = (
    "sigma2 = mean of ||x_i - x_j||^2 over the n(n-1)/2 unordered pairs; "
    "gamma = 1/(2 sigma2); kernel exp(-gamma ||x - x'||^2)"
)
RIDGE_NOTE = "eta = zeta * lambda_max(centred Gram); GCV evaluated on centred Grams"

TABLE_CELLS = [(s, law) for s in SETTINGS for law in LAWS]
TABLE_TUNING = {2: "fixed", 3: "gcv"}
_LAW_LABEL = {"V1": "(i)", "V2": "(ii)", "V3": "(iii)"}
_SETTING_LABEL = {"S1": "Setting 1", "S2": "Setting 2"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _write_manifest(out_dir: Path, command: str, config: dict, outputs: list, started: float, extra=None):
    manifest = {
        "tool": "sdrkit",
        "version": __version__,
        "command": command,
        "config": config,
        "notes": {"bandwidth": BANDWIDTH_NOTE, "ridge": RIDGE_NOTE},
        "outputs": sorted(outputs),
        "wall_clock_seconds": round(time.time() - started, 3),
    }
    if extra:
        manifest.update(extra)
    path = out_dir / f"manifest_{command}.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _summary_rows(cell: str, result) -> list:
    rows = []
    for method in METHODS:
        s = result.summaries.get(method)
        if s is None:
            continue
        rows.append([method, cell, "cor_truth", f"{s.mean_truth:.6f}", f"{s.sd_truth:.6f}"])
        rows.append([method, cell, "cor_response", f"{s.mean_response:.6f}", f"{s.sd_response:.6f}"])
    return rows


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def render_markdown(table: int, results: dict) -> str:
    """Markdown table laid out like the published tables: mean row, then (sd) row."""
    head = "| Setting | X | " + " | ".join(f"truth {m}" for m in METHODS) + " | "
    head += " | ".join(f"response {m}" for m in METHODS) + " |"
    sep = "|" + "---|" * (2 + 2 * len(METHODS))
    caption = (
        "tuning zeta_X = zeta_Y = 0.2" if table == 2 else "tuning zeta_X, zeta_Y by GCV"
    )
    lines = [f"Table {table}: mean |Spearman correlation| (sd), {caption}", "", head, sep]
    for setting, law in TABLE_CELLS:
        res = results.get((setting, law))
        if res is None:
            continue
        s = res.summaries
        fmt = lambda v: f"{v:.3f}"
        means = [fmt(s[m].mean_truth) if m in s else "-" for m in METHODS]
        means += [fmt(s[m].mean_response) if m in s else "-" for m in METHODS]
        sds = [f"({s[m].sd_truth:.3f})" if m in s else "" for m in METHODS]
        sds += [f"({s[m].sd_response:.3f})" if m in s else "" for m in METHODS]
        label = _SETTING_LABEL[setting] if law == "V1" else ""
        lines.append(f"| {label} | {_LAW_LABEL[law]} | " + " | ".join(means) + " |")
        lines.append("| | | " + " | ".join(sds) + " |")
    return "\n".join(lines) + "\n"


def _read_data_csv(path: Path):
    """Numeric CSV with a header row; the last column is the response."""
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ShapeError(f"{path}: empty file") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ShapeError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise ShapeError(f"{path}:{lineno}: non-numeric field in {row!r}") from None
    if not rows:
        raise ShapeError(f"{path}: no data rows")
    data = np.array(rows)
    return header, data[:, :-1], data[:, -1]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_reproduce(args) -> int:
    table = int(args.table)
    started = time.time()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    results, rows, raw_parts, failed = {}, [], [], []
    for setting, law in TABLE_CELLS:
        cfg = ExperimentConfig(
            setting=setting, law=law, n_reps=args.reps, tuning=TABLE_TUNING[table], seed=args.seed
        )
        log.info("table %d cell %s-%s (%d reps)", table, setting, law, args.reps)
        try:
            res = run_experiment(cfg, threads=args.threads)
        except SdrError as exc:
            failed.append({"cell": cfg.cell, "error": str(exc)})
            continue
        results[(setting, law)] = res
        rows.extend(_summary_rows(cfg.cell, res))
        for o in res.outcomes:
            raw_parts.append([cfg.cell, o.rep, o.method, f"{o.cor_truth:.10f}", f"{o.cor_response:.10f}", o.status])
            if o.status != "ok":
                failed.append({"cell": cfg.cell, "rep": o.rep, "method": o.method, "status": o.status})

    csv_path = out_dir / f"table{table}.csv"
    csv_path.write_text(_csv_text(["method", "cell", "metric", "mean", "sd"], rows))
    md_path = out_dir / f"table{table}.md"
    md_path.write_text(render_markdown(table, results))
    raw_path = out_dir / f"table{table}_reps.csv"
    raw_path.write_text(_csv_text(["cell", "rep", "method", "cor_truth", "cor_response", "status"], raw_parts))
    config = {"table": table, "reps": args.reps, "seed": args.seed, "tuning": TABLE_TUNING[table],
              "cell_defaults": config_dict(ExperimentConfig(n_reps=args.reps, seed=args.seed,
                                                            tuning=TABLE_TUNING[table]))}
    _write_manifest(out_dir, f"reproduce_table{table}", config,
                    [csv_path.name, md_path.name, raw_path.name], started, {"failed": failed})
    sys.stdout.write(md_path.read_text())
    return EXIT_PARTIAL if failed else EXIT_OK


def _experiment_from_args(args) -> ExperimentConfig:
    values = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise FileNotFoundError(str(path))
        parser = configparser.ConfigParser()
        parser.read(path)
        if parser.has_section("experiment"):
            sec = parser["experiment"]
            for key in ("setting", "law", "tuning"):
                if key in sec:
                    values[key] = sec[key].strip()
            for key in ("p", "n_train", "n_test", "n_reps", "n_slices", "seed"):
                if key in sec:
                    values[key] = sec.getint(key)
            for key in ("zeta_x", "zeta_y", "var_threshold"):
                if key in sec:
                    values[key] = sec.getfloat(key)
            if "methods" in sec:
                values["methods"] = tuple(m.strip() for m in sec["methods"].split(",") if m.strip())
            if "gcv_grid" in sec:
                values["gcv_grid"] = tuple(float(z) for z in sec["gcv_grid"].split(","))
    for key in ("setting", "law", "tuning", "seed"):
        v = getattr(args, key)
        if v is not None:
            values[key] = v
    if args.reps is not None:
        values["n_reps"] = args.reps
    if args.methods:
        values["methods"] = tuple(m.strip() for m in args.methods.split(","))
    return ExperimentConfig(**values)


def cmd_simulate(args) -> int:
    started = time.time()
    cfg = _experiment_from_args(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    res = run_experiment(cfg, threads=args.threads)
    summary = out_dir / f"simulate_{cfg.cell}.csv"
    summary.write_text(_csv_text(["method", "cell", "metric", "mean", "sd"], _summary_rows(cfg.cell, res)))
    raw = out_dir / f"simulate_{cfg.cell}_reps.csv"
    raw.write_text(res.raw_csv())
    failed = sum(s.n_failed for s in res.summaries.values())
    _write_manifest(out_dir, f"simulate_{cfg.cell}", config_dict(cfg), [summary.name, raw.name], started,
                    {"failed_reps": failed})
    sys.stdout.write(summary.read_text())
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_kernel_check(args) -> int:
    started = time.time()
    spec = args.spec.strip()
    if spec.startswith("mixture:") and not Path(spec[len("mixture:"):]).exists():
        print(f"missing mixture file {spec[len('mixture:'):]}", file=sys.stderr)
        return EXIT_NOINPUT
    try:
        kernel = polynomial_kernel() if spec.lower() == "poly1" else parse_kernel_spec(spec)
    except SdrError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    cfg = CertifyConfig(seed=args.seed if args.seed is not None else CertifyConfig.seed)
    if args.dims:
        cfg.dims = tuple(int(p) for p in args.dims.split(","))
    report = certify_membership(kernel, cfg)
    sys.stdout.write(report.to_text())
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        kv = out_dir / "membership.kv"
        kv.write_text(report.to_kv())
        _write_manifest(out_dir, "kernel_check", {"spec": spec, "seed": cfg.seed, "dims": list(cfg.dims),
                                                  "n": cfg.n, "draws": cfg.draws, "cm_order": cfg.cm_order},
                        [kv.name], started)
    return EXIT_OK if report.verdict == "Member" else EXIT_NOT_MEMBER


def cmd_fit(args) -> int:
    started = time.time()
    path = Path(args.data)
    if not path.exists():
        print(f"missing input file {path}", file=sys.stderr)
        return EXIT_NOINPUT
    header, X, Y = _read_data_csv(path)
    method = args.method.upper()
    extra = {}
    if method == "SIR":
        model = fit_sir(X, Y, n_slices=args.slices, d=args.d)
    else:
        gamma_x, _ = bandwidth_heuristic(X)
        gamma_y, _ = bandwidth_heuristic(Y)
        kx, ky = gaussian(1.0 / gamma_x), gaussian(1.0 / gamma_y)
        extra.update(gamma_x=gamma_x, gamma_y=gamma_y)
        if method == "KSIR":
            model = fit_ksir(X, Y, kx, n_slices=args.slices, d=args.d, var_threshold=args.var_threshold)
        else:
            Gx, Gy = center_gram(gram(kx, X)), center_gram(gram(ky, Y))
            zx, zy = args.zeta, args.zeta
            if args.tuning == "gcv":
                from .sim import default_gcv_grid

                zx, zy = gcv_select(Gx, Gy, default_gcv_grid())
            eta_x, eta_y = ridge_param(Gx, zx), ridge_param(Gy, zy)
            extra.update(zeta_x=zx, zeta_y=zy, eta_x=eta_x, eta_y=eta_y)
            fitter = fit_kcca if method == "KCCA" else fit_gsir
            model = fitter(X, Y, kx, ky, eta_x, eta_y, d=args.d)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    model_path = out_dir / "model.txt"
    save_model(model, model_path)
    pred = predict(model, X)
    pred_path = out_dir / "predictors.csv"
    pred_path.write_text(_csv_text([f"pred{j + 1}" for j in range(pred.shape[1])],
                                   [[repr(float(v)) for v in row] for row in pred]))
    config = {"data": str(path), "method": method, "tuning": args.tuning, "zeta": args.zeta,
              "slices": args.slices, "d": args.d, "columns": header}
    _write_manifest(out_dir, "fit", config, [model_path.name, pred_path.name], started,
                    {"selected": extra, "eigenvalues": [float(v) for v in model.eigenvalues]})
    print(f"{method} model written to {model_path}; eigenvalues {np.round(model.eigenvalues, 6).tolist()}")
    return EXIT_OK


def cmd_predict(args) -> int:
    for p in (args.model, args.data):
        if not Path(p).exists():
            print(f"missing input file {p}", file=sys.stderr)
            return EXIT_NOINPUT
    model = load_model(args.model)
    try:
        data = np.loadtxt(args.data, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        print(f"{args.data}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    # a trailing response column (as written for `fit`) is ignored
    if data.shape[1] == model.p + 1:
        data = data[:, :-1]
    X = data
    pred = predict(model, X)
    sys.stdout.write(_csv_text([f"pred{j + 1}" for j in range(pred.shape[1])],
                               [[repr(float(v)) for v in row] for row in pred]))
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $SDRKIT_THREADS or 1)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="sdrkit", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"sdrkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("reproduce", parents=[common], help="rerun all cells of a simulation table")
    p.add_argument("--table", type=int, choices=(2, 3), required=True)
    p.add_argument("--reps", type=int, default=100)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("simulate", parents=[common], help="run one setting x covariate cell")
    p.add_argument("--config", help="INI file with an [experiment] section")
    p.add_argument("--setting", choices=SETTINGS)
    p.add_argument("--law", choices=LAWS)
    p.add_argument("--tuning", choices=("fixed", "gcv"))
    p.add_argument("--methods", help="comma-separated subset of SIR,KCCA,KSIR,GSIR")
    p.add_argument("--reps", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("kernel-check", parents=[common], help="screen a kernel for membership")
    p.add_argument("spec", help="family(name=value,...), mixture:PATH, or poly1")
    p.add_argument("--dims", help="comma-separated dimension ladder")
    p.set_defaults(func=cmd_kernel_check, out=None)

    p = sub.add_parser("fit", parents=[common], help="fit one method to a CSV data file")
    p.add_argument("data")
    p.add_argument("--method", choices=[m.lower() for m in METHODS] + list(METHODS), default="sir")
    p.add_argument("--tuning", choices=("fixed", "gcv"), default="fixed")
    p.add_argument("--zeta", type=float, default=0.2)
    p.add_argument("--slices", type=int, default=10)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--var-threshold", type=float, default=0.8)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="apply a saved model to a CSV of predictors")
    p.add_argument("model")
    p.add_argument("data")
    p.set_defaults(func=cmd_predict)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "threads", None) is None and hasattr(args, "threads"):
        args.threads = default_threads()
    if getattr(args, "seed", None) is None and args.command in ("reproduce",):
        args.seed = 0
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"missing input: {exc}", file=sys.stderr)
        return EXIT_NOINPUT
    except SdrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE if isinstance(exc, ValueError) else 1


if __name__ == "__main__":
    sys.exit(main())
