"""Command-line interface.

Subcommands
-----------
fit-null   estimate the null model from a statistics file, report JSON
test       run testing procedures on a statistics file, report JSON
simulate   run the synthetic benchmark grids, report CSV
histogram  standard vs fitted-null p-value histograms, report JSON
tstats     Welch two-sample t-statistics from a two-group CSV matrix

All reports embed the resolved configuration and tool version, numbers are
serialized with full round-trip precision, and re-running a command with
the same inputs reproduces the output byte for byte.  Errors exit non-zero
with a single JSON line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import __version__
from .nullmodel import (
    GaussianNull,
    MixtureNull,
    NullModel,
    SkewNormalNull,
    StatSample,
    TruncationRule,
    select_null,
)
from .procedures import bh, c_storey_bh, d_storey_bh, storey_bh, storey_pi0
from .pvalues import eb_pvalues, standard_pvalues
from .simulate import (
    HalfNormalPrior,
    SimScenario,
    TwoPointPrior,
    pvalue_histogram,
    run_scenario,
)

DEFAULT_METHODS = ("stbh", "c-stbh", "d-stbh", "proposed")
DEFAULT_RHO_GRID = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
DEFAULT_SIGMA0_GRID = (1.0, 1.2, 1.4, 1.6, 1.8, 2.0)


class CLIError(Exception):
    """User-facing failure with a one-line message."""


# ---------------------------------------------------------------------------
# input handling


def _normalize_number(text: str) -> str:
    # tolerate the typographic minus that spreadsheet exports sometimes emit
    return text.strip().replace("−", "-")


def _parse_float(text: str, lineno: int, what: str = "statistic") -> float:
    try:
        value = float(_normalize_number(text))
    except ValueError:
        raise CLIError(f"line {lineno}: cannot parse {what} from {text.strip()!r}")
    if not np.isfinite(value):
        raise CLIError(f"line {lineno}: {what} must be finite, got {text.strip()!r}")
    return value


def ingest_statistics(path: str) -> StatSample:
    """Load statistics from a plain-number file or a CSV with a
    ``statistic`` column (and optional ``id`` column).

    Blank lines and ``#`` comment lines are skipped in both formats; every
    parse failure names the offending 1-based line number.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.readlines()
    except OSError as exc:
        raise CLIError(f"cannot read {path}: {exc.strerror or exc}")

    lines = [
        (lineno, line.rstrip("\n"))
        for lineno, line in enumerate(raw, start=1)
        if line.strip() and not line.lstrip().startswith("#")
    ]
    if not lines:
        raise CLIError(f"{path}: no statistics found")

    first = lines[0][1]
    try:
        float(_normalize_number(first))
        is_plain = True
    except ValueError:
        is_plain = False

    if is_plain:
        values = [_parse_float(text, lineno) for lineno, text in lines]
        return StatSample(values=np.asarray(values))

    header = next(csv.reader([first]))
    header = [cell.strip() for cell in header]
    if "statistic" not in header:
        raise CLIError(
            f"line {lines[0][0]}: expected a number or a CSV header with a "
            "'statistic' column"
        )
    stat_col = header.index("statistic")
    id_col = header.index("id") if "id" in header else None

    values: list[float] = []
    ids: list[str] = []
    for lineno, text in lines[1:]:
        row = next(csv.reader([text]))
        if len(row) != len(header):
            raise CLIError(
                f"line {lineno}: expected {len(header)} fields, got {len(row)}"
            )
        values.append(_parse_float(row[stat_col], lineno))
        ids.append(row[id_col].strip() if id_col is not None else str(len(ids)))
    if not values:
        raise CLIError(f"{path}: no statistics found")
    return StatSample(values=np.asarray(values), ids=tuple(ids))


# ---------------------------------------------------------------------------
# serialization helpers


def _fmt(value) -> object:
    """JSON-ready representation; floats keep round-trip precision."""
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, np.ndarray):
        return [_fmt(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_fmt(v) for v in value]
    if isinstance(value, dict):
        return {k: _fmt(v) for k, v in value.items()}
    return value


def _write_output(text: str, output: str | None):
    if output is None:
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _json_report(payload: dict, output: str | None):
    _write_output(json.dumps(_fmt(payload), indent=2) + "\n", output)


def _variant_params(model: NullModel) -> dict:
    variant = model.variant
    if isinstance(variant, GaussianNull):
        return {
            "mu0": variant.mu0,
            "iterations": variant.iterations,
            "converged": variant.converged,
        }
    if isinstance(variant, SkewNormalNull):
        return {
            "sigma0": variant.sigma0,
            "eta": variant.eta,
            "at_boundary": variant.at_boundary,
        }
    assert isinstance(variant, MixtureNull)
    return {
        "grid": variant.grid,
        "weights": variant.weights_p,
        "iterations": variant.iterations,
        "converged": variant.converged,
        "kkt_gap": variant.kkt_gap,
    }


def _fit_block(model: NullModel) -> dict:
    return {
        "family": model.family,
        "params": _variant_params(model),
        "logliks": model.family_logliks,
        "xi": model.cut_xi,
        "n_truncated": model.n_truncated,
    }


# ---------------------------------------------------------------------------
# subcommands


def cmd_fit_null(args) -> int:
    sample = ingest_statistics(args.input)
    rule = TruncationRule(quantile_level=args.xi_quantile)
    model = select_null(sample, rule, k=args.k)
    config = {
        "command": "fit-null",
        "input": args.input,
        "xi_quantile": args.xi_quantile,
        "k": args.k,
        "version": __version__,
    }
    report = _fit_block(model)
    report["config"] = config
    _json_report(report, args.output)
    return 0


def _resolve_methods(args) -> tuple[str, ...]:
    methods = tuple(args.method) if args.method else DEFAULT_METHODS
    seen = set()
    unique = []
    for method in methods:
        if method not in seen:
            seen.add(method)
            unique.append(method)
    return tuple(unique)


def cmd_test(args) -> int:
    sample = ingest_statistics(args.input)
    methods = _resolve_methods(args)
    model = select_null(
        sample, TruncationRule(quantile_level=args.xi_quantile), k=args.k
    )
    p_std = standard_pvalues(sample)
    p_eb = eb_pvalues(sample, model)

    results = {}
    for method in methods:
        if method == "bh":
            results[method] = bh(p_std, args.q)
        elif method == "stbh":
            results[method] = storey_bh(p_std, args.q, lam=args.lambda_storey)
        elif method == "c-stbh":
            results[method] = c_storey_bh(
                p_std, args.q, tau=args.tau, lam=args.lambda_storey
            )
        elif method == "d-stbh":
            results[method] = d_storey_bh(
                p_std, args.q, lam=args.lambda_discard, tau=args.tau
            )
        else:
            results[method] = storey_bh(p_eb, args.q, lam=args.lambda_storey)

    config = {
        "command": "test",
        "input": args.input,
        "q": args.q,
        "methods": list(methods),
        "tau": args.tau,
        "lambda_storey": args.lambda_storey,
        "lambda_discard": args.lambda_discard,
        "xi_quantile": args.xi_quantile,
        "k": args.k,
        "version": __version__,
    }
    masks = {method: results[method].mask() for method in methods}
    ids = sample.ids or tuple(str(i) for i in range(len(sample)))
    records = [
        {
            "id": ids[i],
            "statistic": sample.values[i],
            "p_std": p_std.values[i],
            "p_eb": p_eb.values[i],
            "rejected": {method: bool(masks[method][i]) for method in methods},
        }
        for i in range(len(sample))
    ]
    report = {
        "config": config,
        "fit": _fit_block(model),
        "methods": {
            method: {
                "n_rejected": results[method].n_rejected,
                "threshold": results[method].threshold,
                "pi0_hat": results[method].pi0_hat,
            }
            for method in methods
        },
        "records": records,
    }
    _json_report(report, args.output)
    return 0


def _parse_grid(text: str, name: str) -> tuple[float, ...]:
    try:
        values = tuple(float(_normalize_number(v)) for v in text.split(",") if v.strip())
    except ValueError:
        raise CLIError(f"cannot parse --{name} grid from {text!r}")
    if not values:
        raise CLIError(f"--{name} grid is empty")
    return values


def cmd_simulate(args) -> int:
    methods = _resolve_methods(args)
    rho_grid = sigma0_grid = ()
    if args.rho_grid is None and args.sigma0_grid is None:
        rho_grid = DEFAULT_RHO_GRID
        sigma0_grid = DEFAULT_SIGMA0_GRID
    else:
        if args.rho_grid is not None:
            rho_grid = _parse_grid(args.rho_grid, "rho-grid")
        if args.sigma0_grid is not None:
            sigma0_grid = _parse_grid(args.sigma0_grid, "sigma0-grid")

    priors = [TwoPointPrior(rho) for rho in rho_grid]
    priors += [HalfNormalPrior(s) for s in sigma0_grid]

    config = {
        "command": "simulate",
        "methods": list(methods),
        "q": args.q,
        "n_reps": args.n_reps,
        "seed": args.seed,
        "rho_grid": list(rho_grid),
        "sigma0_grid": list(sigma0_grid),
        "tau": args.tau,
        "lambda_storey": args.lambda_storey,
        "lambda_discard": args.lambda_discard,
        "xi_quantile": args.xi_quantile,
        "k": args.k,
        "version": __version__,
    }
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(_fmt(config)) + "\n")
    buf.write("scenario,param,method,fdr,fdr_se,tpr,tpr_se,n_reps,seed\n")
    for prior in priors:
        scenario = SimScenario(
            null_prior=prior, q=args.q, n_reps=args.n_reps, base_seed=args.seed
        )
        summary = run_scenario(
            scenario,
            methods=methods,
            tau=args.tau,
            lambda_storey=args.lambda_storey,
            lambda_discard=args.lambda_discard,
            xi_quantile=args.xi_quantile,
            mixture_k=args.k,
        )
        for method in methods:
            stats = summary.methods[method]
            buf.write(
                f"{prior.name},{prior.param!r},{method},"
                f"{stats.fdr!r},{stats.fdr_se!r},{stats.tpr!r},{stats.tpr_se!r},"
                f"{summary.n_reps_used},{args.seed}\n"
            )
    _write_output(buf.getvalue(), args.output)
    return 0


def cmd_histogram(args) -> int:
    sample = ingest_statistics(args.input)
    model = select_null(
        sample, TruncationRule(quantile_level=args.xi_quantile), k=args.k
    )
    p_std = standard_pvalues(sample)
    p_eb = eb_pvalues(sample, model)
    config = {
        "command": "histogram",
        "input": args.input,
        "bins": args.bins,
        "xi_quantile": args.xi_quantile,
        "k": args.k,
        "version": __version__,
    }
    pi0_raw = storey_pi0(p_eb.values, args.lambda_storey)
    report = {
        "config": config,
        "edges": np.linspace(0.0, 1.0, args.bins + 1),
        "p_std_counts": pvalue_histogram(p_std, args.bins),
        "p_eb_counts": pvalue_histogram(p_eb, args.bins),
        "family": model.family,
        "xi": model.cut_xi,
        "pi0_hat": min(pi0_raw, 1.0),
    }
    _json_report(report, args.output)
    return 0


def _read_matrix(path: str):
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise CLIError(f"cannot read {path}: {exc.strerror or exc}")
    rows = [row for row in rows if row and any(cell.strip() for cell in row)]
    if len(rows) < 2:
        raise CLIError(f"{path}: need a header row and at least one data row")
    header = [cell.strip() for cell in rows[0]]
    return header, rows[1:]


def _group_values(row, cols, lineno, row_id):
    out = []
    for col in cols:
        cell = row[col].strip()
        if cell == "" or cell.upper() in ("NA", "NAN"):
            continue
        out.append(_parse_float(cell, lineno, what=f"value for {row_id!r}"))
    return out


def cmd_tstats(args) -> int:
    header, rows = _read_matrix(args.input)
    group_a = [name.strip() for name in args.group_a.split(",") if name.strip()]
    group_b = [name.strip() for name in args.group_b.split(",") if name.strip()]
    if not group_a or not group_b:
        raise CLIError("both --group-a and --group-b need at least one column")
    for name in group_a + group_b:
        if name not in header:
            raise CLIError(f"column {name!r} not found in {args.input}")
    cols_a = [header.index(name) for name in group_a]
    cols_b = [header.index(name) for name in group_b]

    config = {
        "command": "tstats",
        "input": args.input,
        "group_a": group_a,
        "group_b": group_b,
        "pooled": bool(args.pooled),
        "version": __version__,
    }
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(_fmt(config)) + "\n")
    buf.write("id,statistic\n")
    for offset, row in enumerate(rows):
        lineno = offset + 2
        if len(row) != len(header):
            raise CLIError(
                f"line {lineno}: expected {len(header)} fields, got {len(row)}"
            )
        row_id = row[0].strip()
        a = _group_values(row, cols_a, lineno, row_id)
        b = _group_values(row, cols_b, lineno, row_id)
        if len(a) < 2 or len(b) < 2:
            raise CLIError(
                f"line {lineno}: row {row_id!r} needs at least 2 values per group"
            )
        na, nb = len(a), len(b)
        ma, mb = float(np.mean(a)), float(np.mean(b))
        va, vb = float(np.var(a, ddof=1)), float(np.var(b, ddof=1))
        if args.pooled:
            pooled = ((na - 1) * va + (nb - 1) * vb) / (na + nb - 2)
            denom = np.sqrt(pooled * (1.0 / na + 1.0 / nb))
        else:
            denom = np.sqrt(va / na + vb / nb)
        if denom == 0.0:
            raise CLIError(f"line {lineno}: row {row_id!r} has zero variance")
        t = (ma - mb) / float(denom)
        buf.write(f"{row_id},{t!r}\n")
    _write_output(buf.getvalue(), args.output)
    return 0


# ---------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(json.dumps({"error": message}) + "\n")
        raise SystemExit(2)


def _add_fit_flags(sub):
    sub.add_argument("--xi-quantile", type=float, default=0.85,
                     help="sample quantile for the truncation cut")
    sub.add_argument("--k", type=int, default=50,
                     help="number of mixture grid atoms")


def _add_method_flags(sub):
    sub.add_argument("--q", type=float, default=0.1, help="target FDR level")
    sub.add_argument("--method", action="append",
                     choices=["bh", "stbh", "c-stbh", "d-stbh", "proposed"],
                     help="procedure to run (repeatable; default all four "
                          "adaptive methods)")
    sub.add_argument("--tau", type=float, default=0.5,
                     help="conditioning / discarding threshold")
    sub.add_argument("--lambda-storey", type=float, default=0.5,
                     help="Storey lambda for pi0 estimation")
    sub.add_argument("--lambda-discard", type=float, default=0.25,
                     help="lower lambda for the discarding pi0 estimate")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ebnull",
                     description="Empirical-Bayes null estimation and "
                                 "multiple testing for one-sided z-statistics")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("fit-null", help="estimate the null model")
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    _add_fit_flags(p)
    p.set_defaults(func=cmd_fit_null)

    p = sub.add_parser("test", help="run testing procedures on statistics")
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    _add_method_flags(p)
    _add_fit_flags(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("simulate", help="run the synthetic benchmarks")
    p.add_argument("--output")
    _add_method_flags(p)
    _add_fit_flags(p)
    p.add_argument("--n-reps", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rho-grid", help="comma-separated two-point weights")
    p.add_argument("--sigma0-grid", help="comma-separated one-sided prior spreads")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("histogram", help="p-value histograms, standard vs fitted")
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--lambda-storey", type=float, default=0.5)
    _add_fit_flags(p)
    p.set_defaults(func=cmd_histogram)

    p = sub.add_parser("tstats", help="Welch t-statistics from a two-group matrix")
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.add_argument("--group-a", required=True,
                   help="comma-separated column names of the first group")
    p.add_argument("--group-b", required=True,
                   help="comma-separated column names of the second group")
    p.add_argument("--pooled", action="store_true",
                   help="pooled-variance t instead of Welch")
    p.set_defaults(func=cmd_tstats)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CLIError as exc:
        sys.stderr.write(json.dumps({"error": str(exc)}) + "\n")
        return 1
    except (ValueError, RuntimeError) as exc:
        sys.stderr.write(json.dumps({"error": str(exc)}) + "\n")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
