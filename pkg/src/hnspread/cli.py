"""Command-line front end.

Subcommands
-----------
calibrate    fit HN-GARCH(1,1) to a ``date,price`` CSV
price        price a strike ladder of spread calls
concordance  rank correlations and the median-quadrant Plackett theta of two series
figures      write CSV data behind the standard diagnostic plots

Exit codes are 0 on success, 2 for invalid input, 3 for data problems and
4 for numerical failures.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import calibration, concordance, copula, fourier, garch, pricing
from .errors import DataError, HNSpreadError, NumericalError, ValidationError

logger = logging.getLogger("hnspread")

EXIT_OK, EXIT_VALIDATION, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4
METHOD_TAGS = {"single": "single", "double": "double", "mc": "monte_carlo"}
DEFAULT_STRIKES = "0,2.5,5,7.5,10"
SCATTER_THETAS = (0.04, 1.0, 30.0)
MODEL_KEYS = ("omega", "alpha", "beta", "gamma", "lambda", "h0", "s0", "r", "measure")


# --------------------------------------------------------------------------- config

@dataclass(frozen=True)
class ModelSpec:
    """One asset: GARCH parameters plus spot, next-step variance and optional rate."""

    params: garch.GarchParams
    s0: float
    h0: float
    rate: float | None = None

    def risk_neutral(self) -> garch.GarchParams:
        if self.params.measure == garch.RISK_NEUTRAL:
            return self.params
        return garch.risk_neutralize(self.params)


@dataclass(frozen=True)
class RunConfig:
    model1: ModelSpec
    model2: ModelSpec
    theta: float
    strikes: tuple[float, ...]
    maturity_days: int
    rate: float
    methods: tuple[str, ...]
    n_values: tuple[int, ...]
    sims: int
    seed: int
    timing: bool = True

    def validate(self):
        if not (self.theta > 0 and math.isfinite(self.theta)):
            raise ValidationError("--theta must be a positive finite number")
        if not self.strikes:
            raise ValidationError("--strikes is empty")
        if any(not (k >= 0 and math.isfinite(k)) for k in self.strikes):
            raise ValidationError("strikes must be finite and non-negative")
        if self.maturity_days < 1:
            raise ValidationError("--maturity-days must be at least 1")
        quad = {"single", "double"} & set(self.methods)
        if quad and min(self.n_values) < 10:
            raise ValidationError("--n must be at least 10 for quadrature methods")
        if "monte_carlo" in self.methods and self.sims < 100:
            raise ValidationError("--sims must be at least 100 for Monte Carlo")
        if not math.isfinite(self.rate):
            raise ValidationError("--rate must be finite")


def _parse_model_text(text: str, source: str) -> dict:
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            raw = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{source}: invalid JSON: {exc}") from None
        # accept the output of `calibrate` directly
        if isinstance(raw, dict) and "model" in raw:
            raw = raw["model"]
        if not isinstance(raw, dict):
            raise ValidationError(f"{source}: expected a JSON object")
        return raw
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{source}: line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        raw[key] = value
    return raw


def load_model(path) -> ModelSpec:
    """Read a model file: JSON or ``key=value`` lines.

    Keys are omega, alpha, beta, gamma, lambda, s0, and optionally h0 (the
    next-step variance, defaulting to the long-run variance), r (per-step
    rate) and measure (``physical`` or ``risk-neutral``).
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read model file {path}: {exc.strerror}") from None
    raw = _parse_model_text(text, str(path))
    unknown = set(raw) - set(MODEL_KEYS)
    if unknown:
        raise ValidationError(f"{path}: unknown keys {sorted(unknown)}")
    missing = {"omega", "alpha", "beta", "gamma", "lambda", "s0"} - set(raw)
    if missing:
        raise ValidationError(f"{path}: missing keys {sorted(missing)}")
    try:
        num = {k: float(v) for k, v in raw.items() if k != "measure" and v is not None}
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{path}: non-numeric value: {exc}") from None
    measure = raw.get("measure", garch.PHYSICAL)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        params = garch.GarchParams(num["omega"], num["alpha"], num["beta"], num["gamma"],
                                   num["lambda"], measure)
    if "h0" in num:
        h0 = num["h0"]
    elif params.stationary:
        h0 = garch.long_run_variance(params)
    else:
        raise ValidationError(f"{path}: h0 is required for non-stationary parameters")
    if not h0 > 0:
        raise ValidationError(f"{path}: h0 must be positive")
    if not num["s0"] > 0:
        raise ValidationError(f"{path}: s0 must be positive")
    return ModelSpec(params, num["s0"], h0, num.get("r"))


def _float_list(text: str, flag: str) -> tuple[float, ...]:
    try:
        return tuple(float(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise ValidationError(f"{flag}: expected a comma-separated list of numbers") from None


def _int_list(text: str, flag: str) -> tuple[int, ...]:
    try:
        return tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise ValidationError(f"{flag}: expected a comma-separated list of integers") from None


def _methods(tag: str) -> tuple[str, ...]:
    if tag == "all":
        return tuple(METHOD_TAGS.values())
    out = []
    for t in tag.split(","):
        if t not in METHOD_TAGS:
            raise ValidationError(f"unknown method {t!r}; choose single, double, mc or all")
        out.append(METHOD_TAGS[t])
    return tuple(out)


def _resolve_rate(args, *models) -> float:
    if args.rate is not None:
        return args.rate
    rates = {m.rate for m in models if m.rate is not None}
    if len(rates) > 1:
        raise ValidationError("model files disagree on r; pass --rate")
    return rates.pop() if rates else 0.0


def build_run_config(args) -> RunConfig:
    if args.model1 is None or args.model2 is None:
        raise ValidationError("price needs --model1 and --model2")
    if args.theta is None:
        raise ValidationError("price needs --theta")
    m1, m2 = load_model(args.model1), load_model(args.model2)
    cfg = RunConfig(
        model1=m1, model2=m2, theta=args.theta,
        strikes=_float_list(args.strikes, "--strikes"),
        maturity_days=args.maturity_days,
        rate=_resolve_rate(args, m1, m2),
        methods=_methods(args.method),
        n_values=_int_list(args.n, "--n"),
        sims=args.sims, seed=args.seed, timing=not args.no_timing)
    if not cfg.n_values:
        raise ValidationError("--n is empty")
    cfg.validate()
    return cfg


# --------------------------------------------------------------------------- output

def _money(x):
    return None if x is None else round(float(x), 3)


def _fmt_money(x):
    return "" if x is None else f"{x:.3f}"


def _write(text: str, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _csv_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


# --------------------------------------------------------------------------- calibrate

def cmd_calibrate(args) -> int:
    prices = calibration.load_price_csv(args.csv)
    rate = args.rate if args.rate is not None else 0.0
    series = prices.log_returns(rate)
    if len(series) < calibration.MIN_FIT_LENGTH:
        raise DataError(f"{args.csv}: {len(series)} returns; at least "
                        f"{calibration.MIN_FIT_LENGTH} are needed to calibrate")
    result = calibration.mle_fit(series)
    record = result.to_dict()
    # next-step variance filtered through the sample, so the record doubles as a model file
    h = result.h_init
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for R in series.returns:
            h = float(garch.h_from_return(result.params, h, R, rate))
    record["model"] = {**{k: record["estimates"][k] for k in calibration.PARAM_NAMES},
                       "h0": h, "s0": float(prices.prices[-1]), "r": rate}
    if args.format == "json":
        _write(_dump_json(record), args.out)
    else:
        rows = [["parameter", "estimate", "std_error"]]
        for k in calibration.PARAM_NAMES:
            se = record["std_errors"][k]
            rows.append([k, repr(record["estimates"][k]), "" if se is None else repr(se)])
        for k in ("persistence", "annualized_vol", "loglik", "h_init", "n_obs", "converged"):
            rows.append([k, record[k], ""])
        _write(_csv_text(rows), args.out)
    return EXIT_OK if result.converged else EXIT_NUMERICAL


# --------------------------------------------------------------------------- price

def _build_laws(cfg: RunConfig):
    laws = []
    for m in (cfg.model1, cfg.model2):
        ctx = garch.MarketContext(m.s0, cfg.rate, m.h0)
        laws.append(fourier.marginal_from_garch(m.risk_neutral(), ctx, cfg.maturity_days))
    return laws


def run_pricing(cfg: RunConfig) -> list[dict]:
    law1, law2 = _build_laws(cfg)
    c = copula.PlackettCopula(cfg.theta)
    reports = []
    for k in cfg.strikes:
        opt = pricing.SpreadOption(cfg.model1.s0, cfg.model2.s0, k, cfg.maturity_days, cfg.rate)
        for method in cfg.methods:
            if method == "monte_carlo":
                reps = [pricing.price_monte_carlo(law1, law2, c, opt, M=cfg.sims, seed=cfg.seed)]
            elif method == "single":
                reps = [pricing.price_single_integral(law1, law2, c, opt, N=n) for n in cfg.n_values]
            else:
                reps = [pricing.price_double_integral(law1, law2, c, opt, N=n) for n in cfg.n_values]
            for rep in reps:
                d = rep.to_dict()
                if not cfg.timing:
                    d["elapsed_seconds"] = 0.0
                reports.append({"strike": k, **d})
    return reports


def _convergence(reports, cfg: RunConfig) -> list[dict]:
    """Successive-N differences per strike and quadrature method."""
    out = []
    if len(cfg.n_values) < 2:
        return out
    for method in ("single", "double"):
        for k in cfg.strikes:
            series = [r["price"] for r in reports if r["strike"] == k and r["method"] == method]
            if len(series) < 2:
                continue
            diffs = np.abs(np.diff(series))
            out.append({"strike": k, "method": method,
                        "abs_diffs": [round(float(d), 6) for d in diffs],
                        "monotone": bool(np.all(np.diff(diffs) <= 0))})
    return out


def _price_columns(cfg: RunConfig):
    cols = []
    for method in cfg.methods:
        if method == "monte_carlo":
            cols.append((method, cfg.sims))
        else:
            cols.extend((method, n) for n in cfg.n_values)
    return cols


def _price_table(reports, cfg: RunConfig) -> list[list]:
    """Wide table: one row per strike, one price column per (method, N) pair."""
    cols = _price_columns(cfg)
    header = ["strike"]
    for method, n in cols:
        tag = f"{method}[{n}]"
        header.append(tag)
        if method == "monte_carlo":
            header += [f"{tag}_ci_low", f"{tag}_ci_high"]
        header.append(f"{tag}_seconds")
    rows = [header]
    index = {(r["strike"], r["method"], r["N_or_M"]): r for r in reports}
    for k in cfg.strikes:
        row = [f"{k:g}"]
        for method, n in cols:
            r = index[(k, method, n)]
            row.append(_fmt_money(r["price"]))
            if method == "monte_carlo":
                row += [_fmt_money(r["ci_low"]), _fmt_money(r["ci_high"])]
            row.append(f"{r['elapsed_seconds']:.4f}")
        rows.append(row)
    return rows


def cmd_price(args) -> int:
    cfg = build_run_config(args)
    reports = run_pricing(cfg)
    if args.format == "csv":
        _write(_csv_text(_price_table(reports, cfg)), args.out)
        return EXIT_OK
    for r in reports:
        for key in ("price", "ci_low", "ci_high"):
            r[key] = _money(r[key])
    record = {
        "config": {
            "theta": cfg.theta, "strikes": list(cfg.strikes),
            "maturity_days": cfg.maturity_days, "rate": cfg.rate,
            "methods": list(cfg.methods), "N": list(cfg.n_values),
            "sims": cfg.sims, "seed": cfg.seed,
            "s1_0": cfg.model1.s0, "s2_0": cfg.model2.s0,
        },
        "reports": reports,
    }
    conv = _convergence(reports, cfg)
    if conv:
        record["convergence"] = conv
    _write(_dump_json(record), args.out)
    return EXIT_OK


# --------------------------------------------------------------------------- concordance

def cmd_concordance(args) -> int:
    a = calibration.load_price_csv(args.csv1)
    b = calibration.load_price_csv(args.csv2)
    ra, rb = calibration.align_series(a, b)
    pairs = np.column_stack([ra.returns, rb.returns])
    freq = concordance.median_quadrant_frequency(pairs)
    record = {
        "n": int(pairs.shape[0]),
        "kendall_tau": concordance.empirical_kendall(pairs),
        "spearman_rho": concordance.empirical_spearman(pairs),
        "median_quadrant_frequency": freq,
        "theta_star": None,
        "spearman_rho_at_theta_star": None,
    }
    try:
        theta = concordance.theta_from_quadrant_frequency(freq)
        record["theta_star"] = theta
        record["spearman_rho_at_theta_star"] = float(copula.spearman_from_theta(theta))
    except HNSpreadError as exc:
        record["theta_error"] = str(exc)
    if args.format == "json":
        _write(_dump_json(record), args.out)
    else:
        rows = [["quantity", "value"]] + [[k, "" if v is None else v] for k, v in record.items()]
        _write(_csv_text(rows), args.out)
    return EXIT_OK


# --------------------------------------------------------------------------- figures

def _write_rows(path: Path, header, columns):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([str(int(v)) if isinstance(v, (int, np.integer)) else repr(float(v))
                             for v in row])


def emit_figures(out_dir: Path, models: dict, rate: float, horizons, sims: int, seed: int,
                 scatter_n: int, curve_rows: int = 200, bins: int = 60) -> list[Path]:
    """Write the CSV bundles; returns the written paths in creation order."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    thetas = np.logspace(-2, 2, curve_rows)
    path = out_dir / "rho_theta.csv"
    _write_rows(path, ["theta", "spearman_rho"], [thetas, copula.spearman_from_theta(thetas)])
    written.append(path)

    for i, th in enumerate(SCATTER_THETAS):
        pts = copula.sample(copula.PlackettCopula(th), scatter_n, seed=[seed, i])
        path = out_dir / f"scatter_theta_{th:g}.csv"
        _write_rows(path, ["u", "v"], [pts[:, 0], pts[:, 1]])
        written.append(path)

    for j, (name, m) in enumerate(sorted(models.items())):
        ctx = garch.MarketContext(m.s0, rate, m.h0)
        rn = m.risk_neutral()
        log_s, _ = garch.simulate_paths(m.params, ctx, max(horizons), sims, seed=[seed, 100 + j])
        for hz in horizons:
            prices = np.exp(log_s[:, hz])
            counts, edges = np.histogram(prices, bins=bins)
            path = out_dir / f"hist_{name}_{hz}d.csv"
            _write_rows(path, ["bin_lo", "bin_hi", "count"], [edges[:-1], edges[1:], counts])
            written.append(path)
        law = fourier.marginal_from_garch(rn, ctx, max(horizons))
        path = out_dir / f"cf_{name}.csv"
        _write_rows(path, ["u", "re_phi", "im_phi"], [law.freqs, law.phi.real, law.phi.imag])
        written.append(path)
        path = out_dir / f"law_{name}.csv"
        law.to_csv(path)
        written.append(path)
    return written


def cmd_figures(args) -> int:
    if args.out is None:
        raise ValidationError("figures needs --out <directory>")
    horizons = _int_list(args.horizons, "--horizons")
    if not horizons or min(horizons) < 1:
        raise ValidationError("--horizons must be positive integers")
    if args.sims < 100:
        raise ValidationError("--sims must be at least 100")
    if args.scatter_n < 1:
        raise ValidationError("--scatter-n must be positive")
    models = {}
    if args.model1:
        models["model1"] = load_model(args.model1)
    if args.model2:
        models["model2"] = load_model(args.model2)
    rate = _resolve_rate(args, *models.values())
    written = emit_figures(Path(args.out), models, rate, horizons, args.sims, args.seed,
                           args.scatter_n)
    for p in written:
        print(p)
    return EXIT_OK


# --------------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hnspread", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt=True):
        p.add_argument("--out", help="output path (stdout when omitted)")
        if fmt:
            p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--rate", type=float, default=None, help="per-step risk-free rate")

    p = sub.add_parser("calibrate", help="fit HN-GARCH(1,1) to a price CSV")
    p.add_argument("csv", help="CSV file with header date,price")
    common(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("price", help="price spread calls over a strike ladder")
    p.add_argument("--model1", help="parameter file for asset 1")
    p.add_argument("--model2", help="parameter file for asset 2")
    p.add_argument("--theta", type=float, help="Plackett dependence parameter")
    p.add_argument("--strikes", default=DEFAULT_STRIKES, help="comma-separated strikes")
    p.add_argument("--maturity-days", type=int, default=90)
    p.add_argument("--method", default="single", help="single, double, mc or all")
    p.add_argument("--n", default="5000", help="quadrature nodes; a comma list gives a ladder")
    p.add_argument("--sims", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-timing", action="store_true", help="report elapsed times as zero")
    common(p)
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("concordance", help="rank correlations and theta* of two price series")
    p.add_argument("csv1")
    p.add_argument("csv2")
    common(p)
    p.set_defaults(func=cmd_concordance)

    p = sub.add_parser("figures", help="write CSV data for the diagnostic plots")
    p.add_argument("--model1")
    p.add_argument("--model2")
    p.add_argument("--horizons", default="30,90,250", help="histogram horizons in days")
    p.add_argument("--sims", type=int, default=10_000)
    p.add_argument("--scatter-n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    common(p, fmt=False)
    p.set_defaults(func=cmd_figures)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (HNSpreadError, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
