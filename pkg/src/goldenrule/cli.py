"""Command-line entry point.

Subcommands ``first-order``, ``exact``, ``sampling-figure``, ``analyze`` and
``convergence`` write CSV (or JSON) curve data and reports.  Every CSV file
starts with ``#``-prefixed metadata lines followed by a header row.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from .analysis import breakdown_scan, detect_kinks, fit_rate, order_scaling
from .errors import GoldenRuleError
from .exact import survival_amplitude as exact_amplitude, survival_probability
from .first_order import ideal_spectrum, p_ideal_first_order, validity_window, w_alpha, w_alpha_direct
from .io import ConfigError, RunConfig, build_config, emit, load_config_file, render_csv, render_json
from .params import heisenberg_grid, interval_index
from . import propagator

logger = logging.getLogger("goldenrule")

DENSE_LIMIT = 1500


def _add_common(p: argparse.ArgumentParser) -> None:
    # defaults stay None so file values survive unless a flag is given
    p.add_argument("--config", help="JSON file with run parameters; flags override it")
    p.add_argument("--e-b", dest="e_b", type=float, help="energy of the discrete level")
    p.add_argument("--delta", type=float, help="level spacing (default 1)")
    p.add_argument("--g", type=float, help="coupling strength (default 0.15)")
    p.add_argument("--alpha", dest="alphas", type=float, action="append", help="offset alpha in [0, 1); repeatable")
    p.add_argument("--t-max-over-th", dest="t_max_over_th", type=float, help="time span in Heisenberg times (default 4)")
    p.add_argument("--points-per-interval", dest="points_per_interval", type=int, help="grid points per t_H (default 200)")
    p.add_argument("--truncation-n", dest="truncation_n", type=int, help="continuum half-width N (default 1000)")
    p.add_argument("--oracle", action="store_const", const=True, help="add brute-force oracle columns")
    p.add_argument("--format", choices=("csv", "json"), help="output format (default csv; json for analyze)")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="goldenrule", description="First-order and exact decay of a level coupled to an equidistant quasi-continuum.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("first-order", help="closed-form W_alpha(T) and P(t) curves")
    _add_common(p)
    p.add_argument("--oracle-m", dest="oracle_m", type=int, help="direct-sum truncation M (default 100000)")

    p = sub.add_parser("exact", help="exact survival amplitude per Heisenberg interval")
    _add_common(p)

    p = sub.add_parser("sampling-figure", help="sinc^2 curve and its periodic samples")
    _add_common(p)
    p.add_argument("--T-sample", dest="sample_t", type=float, help="dimensionless time T of the sampling (default 1)")
    p.add_argument("--sample-range", dest="sample_range", type=int, help="samples for |m| <= this (default 10)")

    p = sub.add_parser("analyze", help="kinks, rate fits, breakdown table, order scaling")
    _add_common(p)

    p = sub.add_parser("convergence", help="self-convergence of the numeric propagator in N")
    _add_common(p)
    p.add_argument("--n-list", dest="n_list", type=int, nargs="+", help="increasing truncations (default 100 300 1000)")
    p.add_argument("--tolerance", type=float, help="convergence tolerance on P_i (default 1e-4)")
    return parser


def _alpha_label(a: float) -> str:
    return format(a, ".6g")


def _metadata(command: str, cfg: RunConfig, alphas: List[float]) -> Dict:
    params = [cfg.params_for(a) for a in alphas] if alphas else [cfg.params_for(0.0)]
    return {
        "command": command,
        # the output path is not a model input; leaving it out keeps files comparable
        "config": {k: v for k, v in cfg.as_dict().items() if k != "out"},
        "alpha": alphas,
        "gamma": params[0].gamma,
        "t_H": params[0].t_h,
    }


def _time_grid(cfg: RunConfig, t_h: float):
    """Grid with every boundary ``k t_H`` listed twice, tagged with its interval.

    Returns times and interval ids; the first copy of a boundary belongs to
    the interval it closes, the second to the one it opens.
    """
    n_int = int(math.ceil(cfg.t_max_over_th - 1e-12))
    grid = heisenberg_grid(t_h, n_int, cfg.points_per_interval)
    grid = grid[grid <= cfg.t_max_over_th * t_h * (1 + 1e-12)]
    ids = interval_index(grid, t_h)
    times, tags = [], []
    for j, (t, k) in enumerate(zip(grid, ids)):
        times.append(t)
        tags.append(int(k))
        if j > 0 and j % cfg.points_per_interval == 0 and j < grid.size - 1:
            times.append(t)
            tags.append(int(k) + 1)
    return np.array(times), np.array(tags)


def cmd_first_order(cfg: RunConfig) -> str:
    alphas = cfg.alpha_list()
    params = [cfg.params_for(a) for a in alphas]
    t_h = params[0].t_h
    times, tags = _time_grid(cfg, t_h)
    T = cfg.delta * times / 2.0
    columns = ["t", "t_over_th", "T", "interval"]
    blocks = []
    for a, p in zip(alphas, params):
        lab = _alpha_label(a)
        columns += [f"W[alpha={lab}]", f"P[alpha={lab}]"]
        W = w_alpha(T, p.alpha)
        blocks.append(W)
        blocks.append(4.0 * p.g**2 / p.delta**2 * W)
        if cfg.oracle:
            columns += [f"W_direct[alpha={lab}]", f"tail_bound[alpha={lab}]"]
            direct = [w_alpha_direct(x, p.alpha, cfg.oracle_m) for x in T]
            blocks.append(np.array([d.value for d in direct]))
            blocks.append(np.array([d.tail_bound for d in direct]))
    rows = ([t, t / t_h, x, k] + [b[i] for b in blocks] for i, (t, x, k) in enumerate(zip(times, T, tags)))
    meta = _metadata("first-order", cfg, alphas)
    if cfg.output_format() == "json":
        return render_json({"metadata": meta, "columns": columns, "rows": [list(r) for r in rows]})
    return render_csv(meta, columns, rows)


def cmd_exact(cfg: RunConfig) -> str:
    alphas = cfg.alpha_list()
    params = [cfg.params_for(a) for a in alphas]
    t_h = params[0].t_h
    times, tags = _time_grid(cfg, t_h)
    needed = int(tags.max(initial=0))
    second = np.zeros(times.size, dtype=bool)
    second[1:] = times[1:] == times[:-1]
    if needed > cfg.k_max and not cfg.oracle:
        raise ConfigError(
            f"span {cfg.t_max_over_th} t_H needs echo index {needed} > k_max = {cfg.k_max}; "
            "rerun with --oracle to use the numeric propagator"
        )
    columns = ["t", "t_over_th", "interval"]
    blocks = []
    for a, p in zip(alphas, params):
        lab = _alpha_label(a)
        columns += [f"ReS[alpha={lab}]", f"ImS[alpha={lab}]", f"P_i[alpha={lab}]"]
        S = np.full(times.size, np.nan, dtype=complex)
        ok = tags <= cfg.k_max
        # the second copy of a boundary carries the right-sided value
        right = ok & second
        left = ok & ~second
        S[left] = exact_amplitude(p, times[left], k_max=cfg.k_max)
        S[right] = exact_amplitude(p, times[right], k_max=cfg.k_max, side="right")
        blocks += [S.real, S.imag, np.abs(S) ** 2]
        if cfg.oracle:
            columns += [f"P_i_numeric[alpha={lab}]", f"deviation[alpha={lab}]"]
            method = "dense" if cfg.truncation_n <= DENSE_LIMIT else "arrowhead"
            logger.info("building N=%d propagator (%s) for alpha=%s", cfg.truncation_n, method, lab)
            state = propagator.build(p, cfg.truncation_n, method=method)
            num = np.abs(propagator.survival_amplitude(state, times)) ** 2
            blocks += [num, np.abs(num - np.abs(S) ** 2)]
    rows = ([t, t / t_h, k] + [b[i] for b in blocks] for i, (t, k) in enumerate(zip(times, tags)))
    meta = _metadata("exact", cfg, alphas)
    if cfg.output_format() == "json":
        return render_json({"metadata": meta, "columns": columns, "rows": [list(r) for r in rows]})
    return render_csv(meta, columns, rows)


def _sinc2(x):
    return np.sinc(np.asarray(x) / math.pi) ** 2


def cmd_sampling_figure(cfg: RunConfig) -> str:
    alphas = cfg.alpha_list(default=(3.0 / 7.0,))
    T = cfg.sample_t
    if not T > 0:
        raise ConfigError("--T-sample must be positive")
    R = cfg.sample_range
    if R < 0:
        raise ConfigError("--sample-range must be non-negative")
    columns = ["kind", "alpha", "m", "x", "sinc2"]
    rows = []
    half = (R + 1) * T
    x = np.linspace(-half, half, 40 * (2 * R + 2) + 1)
    for xi, yi in zip(x, _sinc2(x)):
        rows.append(["curve", None, None, xi, yi])
    for a in alphas:
        m = np.arange(-R, R + 1)
        xs = (m - a) * T
        for mi, xi, yi in zip(m, xs, _sinc2(xs)):
            rows.append(["sample", a, int(mi), xi, yi])
    meta = _metadata("sampling-figure", cfg, alphas)
    meta["T_sample"] = T
    if cfg.output_format() == "json":
        return render_json({"metadata": meta, "columns": columns, "rows": rows})
    return render_csv(meta, columns, rows)


def run_analysis(cfg: RunConfig) -> Dict:
    """Kink, rate, breakdown and order-scaling analysis for every alpha."""
    alphas = cfg.alpha_list()
    n_int = int(math.ceil(cfg.t_max_over_th - 1e-12))
    per_alpha = []
    for a in alphas:
        p = cfg.params_for(a)
        grid = heisenberg_grid(p.t_h, n_int, cfg.points_per_interval)
        entry = {"alpha": a}
        first = p_ideal_first_order(p, grid)
        entry["first_order_kinks"] = _kink_summary(detect_kinks(grid, first, p.t_h), p.t_h)
        sel = grid <= p.t_h * (1 + 1e-12)
        lin = fit_rate(grid[sel], first[sel], p.t_h, mode="linear", reference=p.gamma)
        entry["first_order_rate"] = _rate_summary(lin)
        if n_int <= cfg.k_max:
            surv = np.asarray(survival_probability(p, grid, k_max=cfg.k_max))
            entry["exact_kinks"] = _kink_summary(detect_kinks(grid, surv, p.t_h), p.t_h)
            entry["exact_rate"] = _rate_summary(fit_rate(grid[sel], surv[sel], p.t_h, mode="log", reference=p.gamma))
        per_alpha.append(entry)

    params = [cfg.params_for(a) for a in alphas]
    rows = breakdown_scan(params, n_intervals=max(3, n_int), points_per_interval=cfg.points_per_interval)
    scaling_params = cfg.params_for(alphas[0])
    g_list = [f * cfg.delta for f in cfg.scaling_g_over_delta]
    scaling = order_scaling(scaling_params, cfg.scaling_t_over_th * scaling_params.t_h, g_list, k_max=cfg.k_max)
    window = validity_window(ideal_spectrum(scaling_params, 1), scaling_params.e_b)
    return {
        "alphas": per_alpha,
        "breakdown": [r.__dict__ for r in rows],
        "order_scaling": {
            "alpha": scaling_params.alpha,
            "t_over_th": cfg.scaling_t_over_th,
            "couplings": scaling.couplings,
            "residuals": scaling.residuals,
            "power": scaling.power,
        },
        "validity_window": {"t_min": window.t_min, "t_max": window.t_max, "t_max_over_th": window.t_max / scaling_params.t_h},
    }


def _kink_summary(report, t_h) -> Dict:
    return {
        "locations_over_th": [loc / t_h for loc in report.locations],
        "slopes": [list(s) for s in report.slopes],
        "gaps": report.gaps,
        "significance": report.significance,
        "expected_over_th": [e / t_h for e in report.expected],
        "matched": [e / t_h for e, loc in report.matched if loc is not None],
        "missing": [e / t_h for e, loc in report.matched if loc is None],
        "unmatched": [loc / t_h for loc in report.unmatched_detections],
    }


def _rate_summary(fit) -> Dict:
    return {
        "rate": fit.rate,
        "reference": fit.reference,
        "relative_error": fit.relative_error,
        "window": [fit.t_lo, fit.t_hi],
        "residual_rms": fit.residual_rms,
        "mode": fit.mode,
    }


def summarize(report: Dict) -> str:
    lines = []
    for entry in report["alphas"]:
        a = entry["alpha"]
        fo = entry["first_order_kinks"]
        lines.append(f"alpha={a:.6g}: first-order kinks at t/t_H = {_fmt(fo['locations_over_th'])}; missing {_fmt(fo['missing'])}")
        if "exact_kinks" in entry:
            ex = entry["exact_kinks"]
            lines.append(f"alpha={a:.6g}: exact cusps at t/t_H = {_fmt(ex['locations_over_th'])}; missing {_fmt(ex['missing'])}")
            r = entry["exact_rate"]
            lines.append(f"alpha={a:.6g}: log-survival rate {r['rate']:.6g} vs gamma {r['reference']:.6g}")
        r = entry["first_order_rate"]
        lines.append(f"alpha={a:.6g}: first-order rate {r['rate']:.6g} vs gamma {r['reference']:.6g}")
    lines.append("breakdown (max |P - gamma t| / gamma t per interval):")
    for row in report["breakdown"]:
        lines.append(f"  alpha={row['alpha']:.6g} interval {row['interval']}: {row['max_relative_deviation']:.4g} (abs {row['max_absolute_deviation']:.3g})")
    sc = report["order_scaling"]
    lines.append(f"order scaling at t = {sc['t_over_th']:g} t_H, alpha={sc['alpha']:.6g}: power {sc['power']:.4g}")
    vw = report["validity_window"]
    lines.append(f"golden-rule window: t_min = {vw['t_min']:.6g}, t_max = {vw['t_max']:.6g} ({vw['t_max_over_th']:.6g} t_H)")
    return "\n".join(lines) + "\n"


def _fmt(values) -> str:
    return "[" + ", ".join(f"{v:.4f}" for v in values) + "]"


def cmd_analyze(cfg: RunConfig):
    report = run_analysis(cfg)
    meta = _metadata("analyze", cfg, cfg.alpha_list())
    if cfg.output_format("json") == "csv":
        columns = ["alpha", "interval", "max_relative_deviation", "max_absolute_deviation", "t_at_max"]
        rows = [[r["alpha"], r["interval"], r["max_relative_deviation"], r["max_absolute_deviation"], r["t_at_max"]] for r in report["breakdown"]]
        text = render_csv(meta, columns, rows)
    else:
        text = render_json({"metadata": meta, "report": report})
    return text, summarize(report)


def cmd_convergence(cfg: RunConfig) -> str:
    alphas = cfg.alpha_list(default=(0.3,))
    p = cfg.params_for(alphas[0])
    n_int = int(math.ceil(cfg.t_max_over_th - 1e-12))
    grid = heisenberg_grid(p.t_h, n_int, cfg.points_per_interval)
    grid = grid[grid <= cfg.t_max_over_th * p.t_h * (1 + 1e-12)]
    report = propagator.convergence_study(p, grid, cfg.n_list, tolerance=cfg.tolerance)
    meta = _metadata("convergence", cfg, alphas[:1])
    meta["smallest_converged_n"] = report.smallest_converged_n
    meta["warnings"] = report.warnings
    columns = ["N", "max_deviation", "edge_population"]
    rows = list(zip(report.n_list, report.max_deviation, report.edge_population))
    if cfg.output_format() == "json":
        return render_json({"metadata": meta, "columns": columns, "rows": [list(r) for r in rows]})
    return render_csv(meta, columns, rows)


_COMMANDS = {
    "first-order": cmd_first_order,
    "exact": cmd_exact,
    "sampling-figure": cmd_sampling_figure,
    "analyze": cmd_analyze,
    "convergence": cmd_convergence,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s", stream=sys.stderr)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose")}
    try:
        file_values = load_config_file(args.config) if args.config else {}
        cfg = build_config(file_values, flags).validate(analysis=args.command == "analyze")
        result = _COMMANDS[args.command](cfg)
        if args.command == "analyze":
            text, summary = result
            emit(text, cfg.out)
            # keep stdout clean for the report when it goes there
            (sys.stderr if cfg.out in (None, "-") else sys.stdout).write(summary)
        else:
            emit(result, cfg.out)
    except GoldenRuleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
