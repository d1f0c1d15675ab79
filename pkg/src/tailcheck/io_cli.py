"""CSV ingestion, run reports and the ``tailcheck`` command line.

Accepted decimal grammar for numeric cells (no locale separators)::

    [+-]? ( digits [ "." digits* ] | "." digits ) ( [eE] [+-]? digits )?

Empty cells and the tokens ``na``, ``nan``, ``null``, ``inf``, ``+inf``,
``-inf``, ``infinity`` (any case) count as missing; such rows are dropped and
reported. Outcome cells additionally accept ``true``/``false``.

Option precedence: command-line flags, then ``TAILCHECK_<OPTION>``
environment variables, then a ``key=value`` file given by ``--config``,
then built-in defaults.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import re
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__, diagnostics, lr_test, mc_harness
from .diagnostics import BinaryDataset, TailTestRequest, TwoSidedResult
from .errors import NumericError, TailcheckError, ValidationError, SchemaError
from .lr_test import TestConfig, TestResult

REPORT_VERSION = "1"
ENV_PREFIX = "TAILCHECK_"

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERIC = 2

_DECIMAL = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$", re.ASCII)
_MISSING = {"", "na", "nan", "null", "inf", "+inf", "-inf", "infinity", "+infinity", "-infinity"}
_INT = re.compile(r"^[+-]?\d+$", re.ASCII)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def parse_decimal(token: str, line: int | None = None, column: str = "") -> float:
    """Parse one numeric cell; NaN for a missing token."""
    t = token.strip()
    if t.lower() in _MISSING:
        return math.nan
    if not _DECIMAL.match(t):
        raise ValidationError(f"column {column!r}: {token!r} is not a decimal number", row=line)
    return float(t)


def _parse_outcome(token: str, line: int, column: str) -> float:
    t = token.strip().lower()
    if t == "true":
        return 1.0
    if t == "false":
        return 0.0
    v = parse_decimal(token, line, column)
    if not math.isnan(v) and v not in (0.0, 1.0):
        raise ValidationError(f"column {column!r}: outcome must be 0/1, got {token!r}", row=line)
    return v


def _labels(values: list[str]) -> np.ndarray:
    if values and all(_INT.match(v.strip()) for v in values):
        return np.array([int(v) for v in values])
    return np.array([v.strip() for v in values], dtype=object)


def load_csv(path, y_col: str = "y", x_col: str = "x", unit_col: str | None = None,
             period_col: str | None = None, index_col: str | None = None) -> BinaryDataset:
    """Read a UTF-8, comma-separated file with a header row.

    Rows with a missing ``y``, ``x`` (or fitted index) are dropped; the count
    is available as ``dataset.dropped``. Errors name the offending column or
    file line.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValidationError("file is empty; a header row is required") from None
        wanted = [c for c in (y_col, x_col, unit_col, period_col, index_col) if c]
        for c in wanted:
            if c not in header:
                raise SchemaError(c)
        pos = {c: header.index(c) for c in wanted}
        ys, xs, units, periods, idx = [], [], [], [], []
        for line, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < len(header):
                raise ValidationError(f"expected {len(header)} fields, got {len(row)}", row=line)
            ys.append(_parse_outcome(row[pos[y_col]], line, y_col))
            xs.append(parse_decimal(row[pos[x_col]], line, x_col))
            if unit_col:
                units.append(row[pos[unit_col]])
            if period_col:
                periods.append(row[pos[period_col]])
            if index_col:
                idx.append(parse_decimal(row[pos[index_col]], line, index_col))
    return BinaryDataset.from_raw(
        ys, xs,
        unit=_labels(units) if unit_col else None,
        period=_labels(periods) if period_col else None,
        fitted_index=idx if index_col else None,
    )


def write_csv(data: BinaryDataset, path) -> None:
    """Write a dataset with shortest round-trip decimals (``y, x[, unit, period, index]``)."""
    cols = [("y", data.y), ("x", data.x)]
    if data.unit is not None:
        cols.append(("unit", data.unit))
    if data.period is not None:
        cols.append(("period", data.period))
    if data.fitted_index is not None:
        cols.append(("index", data.fitted_index))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([c for c, _ in cols])
        for i in range(len(data)):
            w.writerow([_cell(a[i]) for _, a in cols])


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass
class Warning_:
    code: str
    count: int
    message: str
    details: list | None = None

    def to_dict(self) -> dict:
        d = {"code": self.code, "count": self.count, "message": self.message}
        if self.details is not None:
            d["details"] = self.details
        return d


@dataclass
class RunReport:
    command: str
    inputs: dict
    results: Any = None
    warnings: list[Warning_] = field(default_factory=list)
    error: dict | None = None

    def to_dict(self) -> dict:
        d = {
            "version": REPORT_VERSION,
            "tool": {"name": "tailcheck", "version": __version__},
            "command": self.command,
            "inputs": self.inputs,
            "results": self.results,
            "warnings": [w.to_dict() for w in self.warnings],
        }
        if self.error is not None:
            d["error"] = self.error
        return _jsonable(d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def report_schema() -> dict:
    """The JSON schema every report conforms to."""
    text = resources.files("tailcheck").joinpath("report.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

SUBCOMMANDS = ("test", "panel-test", "cv", "mc", "tailfit")

DEFAULTS: dict[str, Any] = {
    "y_col": "y",
    "x_col": "x",
    "unit_col": None,
    "period_col": "period",
    "index_col": None,
    "k": None,
    "alpha": 0.05,
    "tail": "both",
    "draws": lr_test.DEFAULT_DRAWS,
    "seed": lr_test.DEFAULT_SEED,
    "format": "json",
    "top_fraction": 0.001,
    "grid_file": None,
    "workers": 1,
    "weight_lower": 0.0,
    "weight_upper": 1.0,
    "weight_nodes": 50,
    "alphas": None,
    "ks": None,
    "output": None,
}

_CASTS = {
    "k": int, "alpha": float, "draws": int, "seed": int, "top_fraction": float, "workers": int,
    "weight_lower": float, "weight_upper": float, "weight_nodes": int,
}


@dataclass
class CliConfig:
    subcommand: str
    input_path: str | None = None
    y_col: str = "y"
    x_col: str = "x"
    unit_col: str | None = None
    period_col: str | None = "period"
    index_col: str | None = None
    k: int | None = None
    alpha: float = 0.05
    tail: str = "both"
    draws: int = lr_test.DEFAULT_DRAWS
    seed: int = lr_test.DEFAULT_SEED
    format: str = "json"
    top_fraction: float = 0.001
    grid_file: str | None = None
    workers: int = 1
    weight_lower: float = 0.0
    weight_upper: float = 1.0
    weight_nodes: int = 50
    ks: str | None = None
    alphas: str | None = None
    output: str | None = None

    def weight(self) -> lr_test.WeightSpec:
        return lr_test.WeightSpec(lower=self.weight_lower, upper=self.weight_upper,
                                  nodes=self.weight_nodes)

    def test_config(self) -> TestConfig:
        if self.k is None:
            raise ValidationError("--k is required (there is no default tail size)")
        return TestConfig(k=self.k, alpha=self.alpha, weight=self.weight(),
                          null_draws=self.draws, seed=self.seed)


def read_config_file(path) -> dict[str, str]:
    out = {}
    for n, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"config file line {n}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_").lower()] = val
    return out


def _cast(key, value):
    if value is None or key not in _CASTS:
        return value
    try:
        return _CASTS[key](value)
    except ValueError:
        raise ValidationError(f"option {key}: cannot parse {value!r}") from None


def resolve_config(subcommand: str, flags: dict, env: dict | None = None) -> CliConfig:
    """Layer defaults < config file < environment < flags."""
    env = os.environ if env is None else env
    merged = dict(DEFAULTS)
    cfg_path = flags.get("config") or env.get(ENV_PREFIX + "CONFIG")
    if cfg_path:
        for key, val in read_config_file(cfg_path).items():
            if key not in DEFAULTS:
                raise ValidationError(f"unknown config key {key!r}")
            merged[key] = _cast(key, val)
    for key in DEFAULTS:
        val = env.get(ENV_PREFIX + key.upper())
        if val is not None:
            merged[key] = _cast(key, val)
    for key, val in flags.items():
        if key in DEFAULTS and val is not None:
            merged[key] = _cast(key, val)
    return CliConfig(subcommand=subcommand, input_path=flags.get("input"), **merged)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _inputs(cfg: CliConfig, *keys) -> dict:
    d = {"input_path": cfg.input_path}
    for key in keys:
        d[key] = getattr(cfg, key)
    return d


def _dropped_warning(data: BinaryDataset) -> list[Warning_]:
    if data.dropped:
        return [Warning_("dropped_rows", data.dropped,
                         f"{data.dropped} row(s) with missing or non-finite values dropped")]
    return []


def _result_dict(res) -> dict:
    if isinstance(res, TwoSidedResult):
        return {"kind": "two_sided", **res.to_dict()}
    return {"kind": "single", **res.to_dict()}


def _weight_dict(cfg):
    return {"lower": cfg.weight_lower, "upper": cfg.weight_upper, "nodes": cfg.weight_nodes}


def cmd_test(cfg: CliConfig, report: RunReport | None = None) -> RunReport:
    """Cross-sectional test (plug-in mode when ``index_col`` is set)."""
    inputs = _inputs(cfg, "y_col", "x_col", "index_col", "k", "alpha", "tail", "draws", "seed")
    inputs["weight"] = _weight_dict(cfg)
    report = report or RunReport("test", {})
    report.inputs = inputs
    tc = cfg.test_config()
    data = load_csv(cfg.input_path, cfg.y_col, cfg.x_col, index_col=cfg.index_col)
    report.warnings += _dropped_warning(data)
    req = TailTestRequest(cfg.tail, tc.k, tc)
    if cfg.index_col:
        res = diagnostics.run_fitted_index_test(data, req)
    else:
        res = diagnostics.run_tail_test(data, req)
    report.results = _result_dict(res)
    return report


def cmd_panel_test(cfg: CliConfig, report: RunReport | None = None) -> RunReport:
    inputs = _inputs(cfg, "y_col", "x_col", "unit_col", "period_col", "index_col", "k", "alpha",
                     "tail", "draws", "seed")
    inputs["weight"] = _weight_dict(cfg)
    report = report or RunReport("panel-test", {})
    report.inputs = inputs
    tc = cfg.test_config()
    if not cfg.period_col:
        raise ValidationError("panel-test needs --period-col")
    data = load_csv(cfg.input_path, cfg.y_col, cfg.x_col, cfg.unit_col, cfg.period_col,
                    cfg.index_col)
    report.warnings += _dropped_warning(data)
    res = diagnostics.run_panel_test(data, TailTestRequest(cfg.tail, tc.k, tc),
                                     use_index=bool(cfg.index_col))
    if res.skipped:
        report.warnings.append(Warning_(
            "skipped_periods", len(res.skipped),
            f"{len(res.skipped)} period(s) had fewer than k={tc.k} tail observations",
            [str(p) for p in res.skipped],
        ))
    report.results = res.to_dict()
    return report


def _split(text, cast):
    return [cast(t) for t in str(text).replace(";", ",").split(",") if t.strip()]


def cmd_cv(cfg: CliConfig, report: RunReport | None = None) -> RunReport:
    ks = _split(cfg.ks, int) if cfg.ks else ([cfg.k] if cfg.k else list(lr_test.TABLE_K))
    alphas = _split(cfg.alphas, float) if cfg.alphas else (
        [cfg.alpha] if cfg.k else list(lr_test.TABLE_ALPHA))
    inputs = {"ks": ks, "alphas": alphas, "draws": cfg.draws, "seed": cfg.seed,
              "weight": _weight_dict(cfg)}
    report = report or RunReport("cv", {})
    report.inputs = inputs
    for k in ks:
        TestConfig(k=k, alpha=alphas[0], null_draws=cfg.draws, seed=cfg.seed)
    for a in alphas:
        lr_test._check_alpha(a)
    table = lr_test.critical_value_table(ks, alphas, cfg.draws, cfg.seed, cfg.weight())
    report.results = {
        "draws": table.draws,
        "seed": table.seed,
        "entries": [
            {"k": k, "alpha": a, "cv": table[(k, a)],
             "se": lr_test.critical_value_se(k, a, cfg.draws, cfg.seed, cfg.weight())}
            for k in table.ks() for a in table.alphas()
        ],
    }
    report._table = table  # for text/csv rendering
    return report


def load_grid(path) -> mc_harness.ExperimentGrid:
    """Read an experiment grid from JSON.

    Either an explicit ``dgps`` list of :class:`DgpSpec` fields, or the
    shorthand ``design`` + ``ns`` + ``error_dists`` (+ ``T``,
    ``dominating_dist``). Other keys: ``k_values``, ``alpha``,
    ``replications``, ``tails``, ``seed``, ``null_draws``.
    """
    try:
        spec = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"grid file is not valid JSON: {exc}") from None
    if "dgps" in spec:
        dgps = [mc_harness.DgpSpec(**d) for d in spec.pop("dgps")]
    else:
        design = spec.pop("design", "cross_section")
        T = spec.pop("T", 1 if design == "cross_section" else 2)
        dom = spec.pop("dominating_dist", "student_t(2)")
        dgps = [
            mc_harness.DgpSpec(design=design, n=n, T=T, error_dist=e, dominating_dist=dom)
            for e in spec.pop("error_dists", ["normal"]) for n in spec.pop("ns", [2000])
        ]
        for key in ("ns", "error_dists"):
            spec.pop(key, None)
    allowed = {"k_values", "alpha", "replications", "tails", "seed", "null_draws"}
    unknown = set(spec) - allowed
    if unknown:
        raise ValidationError(f"unknown grid keys: {sorted(unknown)}")
    return mc_harness.ExperimentGrid(dgps=dgps, **spec)


def cmd_mc(cfg: CliConfig, report: RunReport | None = None) -> RunReport:
    if not cfg.grid_file:
        raise ValidationError("mc needs --grid-file")
    if report is not None:
        report.inputs = {"grid_file": cfg.grid_file}
    grid = load_grid(cfg.grid_file)
    inputs = {"grid_file": cfg.grid_file, "replications": grid.replications, "seed": grid.seed,
              "k_values": list(grid.k_values), "alpha": grid.alpha, "tails": list(grid.tails),
              "null_draws": grid.null_draws,
              "dgps": [dict(vars(d)) for d in grid.dgps]}
    report = report or RunReport("mc", {})
    report.inputs = inputs
    table = mc_harness.rejection_study(grid, workers=cfg.workers)
    report.results = {
        "design": table.design,
        "T": table.T,
        "replications": table.replications,
        "seed": table.seed,
        "cells": [
            {"error_dist": d, "n": n, "k": k, "tail": t, "rate": table.rate(d, n, k, t),
             "rejections": table.counts[(d, n, k, t)], "failures": table.failures((d, n, k, t))}
            for (d, n, k, t) in table.counts
        ],
    }
    if table.flagged:
        report.warnings.append(Warning_(
            "flagged_cells", len(table.flagged),
            "cells with replications lacking enough tail observations",
            [list(key) for key in table.flagged],
        ))
    report._table = table
    return report


def cmd_tailfit(cfg: CliConfig, report: RunReport | None = None) -> RunReport:
    """Pareto fit to ``X | Y=0`` (tail=right) or ``-X | Y=1`` (tail=left)."""
    inputs = _inputs(cfg, "y_col", "x_col", "tail", "top_fraction")
    report = report or RunReport("tailfit", {})
    report.inputs = inputs
    if cfg.tail not in ("right", "left"):
        raise ValidationError("tailfit needs --tail right or left")
    data = load_csv(cfg.input_path, cfg.y_col, cfg.x_col)
    report.warnings += _dropped_warning(data)
    sample = data.x[data.y == 0] if cfg.tail == "right" else -data.x[data.y == 1]
    fit = diagnostics.pareto_tail_fit(sample, cfg.top_fraction)
    report.results = {**fit.to_dict(), "n_subsample": int(sample.size),
                      "points": [{"x": a, "empirical_cdf": b, "fitted_cdf": c} for a, b, c in
                                 zip(fit.x.tolist(), fit.empirical_cdf.tolist(),
                                     fit.fitted_cdf.tolist())]}
    report._fit = fit
    return report


COMMANDS = {
    "test": cmd_test,
    "panel-test": cmd_panel_test,
    "cv": cmd_cv,
    "mc": cmd_mc,
    "tailfit": cmd_tailfit,
}


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    return "nan" if v is None else f"{v:.4g}"


def _test_lines(res: dict, label: str = "") -> list[str]:
    pre = f"{label} " if label else ""
    if "right" in res:
        lines = _test_lines({"kind": "single", **res["right"]}, label)
        lines += _test_lines({"kind": "single", **res["left"]}, label)
        lines.append(
            f"{pre}both   combined p={_fmt(res['combined_p'])}  cv(alpha/2)="
            f"{_fmt(res['critical_value'])}  decision={'reject' if res['reject'] else 'accept'}"
        )
        return lines
    return [
        f"{pre}{res['tail']:<6} statistic={_fmt(res['statistic'])}  cv={_fmt(res['critical_value'])}"
        f"  p={_fmt(res['p_value'])}  n0={res['n_subsample']}  "
        f"decision={'reject' if res['reject'] else 'accept'}"
    ]


def _test_rows(res: dict, period=None) -> list[list]:
    if "right" in res:
        rows = _test_rows(res["right"], period) + _test_rows(res["left"], period)
        rows.append([period, "both", "", res["critical_value"], res["combined_p"], res["reject"],
                     res["k_used"], "", res["alpha"]])
        return rows
    return [[period, res["tail"], res["statistic"], res["critical_value"], res["p_value"],
             res["reject"], res["k_used"], res["n_subsample"], res["alpha"]]]


def render(report: RunReport, fmt: str) -> str:
    if fmt == "json":
        return report.to_json()
    d = report.to_dict()
    res = d["results"]
    if report.error is not None:
        return ""
    if report.command == "cv":
        return report._table.to_text() if fmt == "text" else report._table.to_csv()
    if report.command == "mc":
        return report._table.to_text() if fmt == "text" else report._table.to_csv()
    if report.command == "tailfit":
        if fmt == "csv":
            return report._fit.to_csv()
        return (f"hill index {_fmt(res['hill_index'])}  threshold {_fmt(res['threshold'])}  "
                f"exceedances {res['n_exceedances']}  max CDF gap {_fmt(res['max_gap'])}\n")
    if fmt == "text":
        if report.command == "test":
            lines = _test_lines(res)
        else:
            lines = []
            for entry in res["per_period"]:
                lines += _test_lines(entry, f"period {entry['period']}:")
            lines.append(f"panel  combined p={_fmt(res['combined_p'])}  n_tests={res['n_tests']}"
                         f"  decision={'reject' if res['reject'] else 'accept'}")
        for w in d["warnings"]:
            lines.append(f"warning [{w['code']}] {w['message']}")
        return "\n".join(lines) + "\n"
    # csv
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["period", "tail", "statistic", "critical_value", "p_value", "reject", "k",
                "n_subsample", "alpha"])
    if report.command == "test":
        rows = _test_rows(res)
    else:
        rows = [r for e in res["per_period"] for r in _test_rows(e, e["period"])]
        rows.append(["all", res["tail"], "", "", res["combined_p"], res["reject"], "", "",
                     res["alpha"]])
    for r in rows:
        w.writerow(["" if c is None else c for c in r])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="tailcheck",
        description="Fixed-k extreme-value test for thin-tailed latent errors in binary choice models.",
    )
    p.add_argument("--version", action="version", version=f"tailcheck {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(sp, data=True):
        sp.add_argument("--config", help="key=value file with option defaults")
        sp.add_argument("--format", choices=("json", "csv", "text"))
        sp.add_argument("--output", "-o", help="write to this file instead of stdout")
        sp.add_argument("--draws", type=int, help="null simulation draws (default 10000)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--weight-lower", type=float)
        sp.add_argument("--weight-upper", type=float)
        sp.add_argument("--weight-nodes", type=int)
        if data:
            sp.add_argument("input", help="UTF-8 CSV with a header row")
            sp.add_argument("--y-col")
            sp.add_argument("--x-col")

    t = sub.add_parser("test", help="cross-sectional tail test")
    common(t)
    t.add_argument("--index-col", help="fitted linear index column (plug-in mode)")
    t.add_argument("--k", type=int)
    t.add_argument("--alpha", type=float)
    t.add_argument("--tail", choices=("left", "right", "both"))

    pt = sub.add_parser("panel-test", help="per-period tests with Bonferroni combination")
    common(pt)
    pt.add_argument("--unit-col")
    pt.add_argument("--period-col")
    pt.add_argument("--index-col")
    pt.add_argument("--k", type=int)
    pt.add_argument("--alpha", type=float)
    pt.add_argument("--tail", choices=("left", "right", "both"))

    cv = sub.add_parser("cv", help="simulate critical values")
    common(cv, data=False)
    cv.add_argument("--k", type=int)
    cv.add_argument("--alpha", type=float)
    cv.add_argument("--ks", help="comma-separated k values")
    cv.add_argument("--alphas", help="comma-separated significance levels")

    mc = sub.add_parser("mc", help="Monte Carlo rejection study")
    common(mc, data=False)
    mc.add_argument("--grid-file", help="JSON experiment grid")
    mc.add_argument("--workers", type=int)

    tf = sub.add_parser("tailfit", help="Hill index and Pareto fit of the outcome subsample")
    common(tf)
    tf.add_argument("--top-fraction", type=float)
    tf.add_argument("--tail", choices=("left", "right"))
    return p


def _error_code(exc: Exception) -> tuple[str, int]:
    if isinstance(exc, NumericError):
        return "numeric_failure", EXIT_NUMERIC
    name = re.sub(r"(?<!^)(?=[A-Z])", "_", type(exc).__name__).lower()
    return name, EXIT_VALIDATION


def run(argv: Sequence[str] | None = None, env: dict | None = None) -> tuple[RunReport, str, int]:
    """Parse, execute and render; returns ``(report, rendered output, exit code)``."""
    args = build_parser().parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k != "subcommand"}
    report = RunReport(args.subcommand, {"input_path": flags.get("input")})
    fmt = "json"
    try:
        cfg = resolve_config(args.subcommand, flags, env)
        fmt = cfg.format
        if fmt not in ("json", "csv", "text"):
            raise ValidationError(f"unknown format {fmt!r}")
        COMMANDS[args.subcommand](cfg, report)
        code = EXIT_OK
    except (TailcheckError, OSError, ValueError) as exc:
        err, code = _error_code(exc)
        if isinstance(exc, OSError) and not isinstance(exc, TailcheckError):
            err = "io_error"
        report.error = {"code": err, "message": str(exc)}
        if hasattr(exc, "n_subsample"):
            report.error["n_subsample"] = exc.n_subsample
            report.error["k"] = exc.k
    return report, render(report, fmt), code


def main(argv: Sequence[str] | None = None) -> int:
    report, text, code = run(argv)
    out = None
    if report.error is None:
        out = vars(build_parser().parse_args(argv)).get("output")
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if report.error is not None:
        sys.stderr.write(f"tailcheck: {report.error['message']}\n")
    return code


if __name__ == "__main__":
    raise SystemExit(main())
