"""Command-line interface: fit | simulate | placebo | conformal | report.

Options may come from a JSON config file (--config); flags override config
keys.  All outputs land in the --out directory with deterministic filenames,
and runs with a fixed seed and config are byte-reproducible.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .conformal import conformal_interval
from .effects import placebo_run
from .estimators import ESTIMATOR_NAMES, run_estimator
from .exceptions import ProxscError
from .panel import RoleMap, ingest
from .simulate import SimDesign, results_table, run_monte_carlo

EFFECT_MODELS = ("constant", "linear_trend", "quadratic_trend")


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", help="long-format delimited file (unit,time,outcome,...)")
    p.add_argument("--roles", help="JSON role map (treated/donors/proxies/covariates)")
    p.add_argument("--t0", type=int, help="last pre-treatment period (raw time value)")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its keys")
    p.add_argument("--out", help="output directory", default="proxsc_out")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proxsc",
        description="Proximal-inference synthetic controls: estimation, "
                    "inference, simulation, and falsification checks.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit weights and treatment effect on a panel")
    _add_data_args(p_fit)
    _add_common(p_fit)
    p_fit.add_argument("--estimator", choices=ESTIMATOR_NAMES, default="pi-joint")
    p_fit.add_argument("--effect", choices=EFFECT_MODELS, default="constant",
                       help="effect path basis evaluated at t/T")
    p_fit.add_argument("--g", dest="g_spec", choices=("affine", "affine+squares"),
                       default="affine", help="instrument spec g(Z)")
    p_fit.add_argument("--covariates", choices=("none", "per_unit", "pooled"),
                       default="none", help="covariate adjustment mode")
    p_fit.add_argument("--cov", choices=("hc", "hac", "both"), default="both",
                       help="which covariance estimator to report")
    p_fit.add_argument("--bandwidth", type=int, default=None,
                       help="HAC bandwidth (default: automatic)")

    p_sim = sub.add_parser("simulate", help="run a Monte Carlo study of a design")
    _add_common(p_sim)
    p_sim.add_argument("--design", help="JSON design file (SimDesign fields)")
    p_sim.add_argument("--estimators", default="pi,ols",
                       help="comma-separated estimator list")
    p_sim.add_argument("--reps", type=int, default=500)
    p_sim.add_argument("--workers", type=int, default=1)

    p_pl = sub.add_parser("placebo", help="falsification refit with a fictitious t0")
    _add_data_args(p_pl)
    _add_common(p_pl)
    p_pl.add_argument("--pseudo-t0", type=int, required=True,
                      help="placebo treatment period inside the pre-period")
    p_pl.add_argument("--g", dest="g_spec", choices=("affine", "affine+squares"),
                      default="affine")
    p_pl.add_argument("--covariates", choices=("none", "per_unit", "pooled"),
                      default="none")

    p_cf = sub.add_parser("conformal", help="per-period conformal prediction intervals")
    _add_data_args(p_cf)
    _add_common(p_cf)
    p_cf.add_argument("--post-period", type=int, default=None,
                      help="single post period (default: all post periods)")
    p_cf.add_argument("--grid", default=None,
                      help="lo,hi,n hypothesis grid (default: tau_hat +/- 6 SE, 101 points)")
    p_cf.add_argument("--level", type=float, default=0.10)
    p_cf.add_argument("--scheme", choices=("iid-permutation", "moving-block"),
                      default="moving-block")

    p_rep = sub.add_parser("report", help="print the parameter table of a saved fit")
    p_rep.add_argument("--out", required=True, help="output directory of a previous run")

    return parser


def _merge_config(args: argparse.Namespace, explicit: set[str]) -> argparse.Namespace:
    if getattr(args, "config", None):
        with open(args.config) as fh:
            cfg = json.load(fh)
        for key, val in cfg.items():
            attr = key.replace("-", "_")
            if not hasattr(args, attr):
                raise ProxscError(f"unknown config key {key!r}")
            # flags explicitly given on the command line win over the config
            if attr not in explicit:
                setattr(args, attr, val)
    return args


def _load_panel(args):
    if not args.data or not args.roles or args.t0 is None:
        raise ProxscError("--data, --roles, and --t0 are required")
    roles = RoleMap.from_json(args.roles)
    return ingest(args.data, roles, args.t0)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def cmd_fit(args) -> int:
    panel = _load_panel(args)
    cov_mode = None if args.covariates == "none" else args.covariates
    res = run_estimator(args.estimator, panel, effect_model=args.effect,
                        g_spec=getattr(args, "g_spec", "affine"),
                        covariates=cov_mode, hac_bandwidth=args.bandwidth)
    report = res.report
    out = _outdir(args)

    summary = {
        "command": "fit",
        "estimator": args.estimator,
        "effect_model": args.effect,
        "covariates": args.covariates,
        "t0": panel.t0,
        "n_pre": panel.n_pre,
        "n_post": panel.n_post,
        "effect": report.to_dict(),
    }
    if hasattr(res, "fit"):
        summary["parameters"] = {
            "hc": res.fit_hc.summary_rows(),
            "hac": res.fit_hac.summary_rows(),
        }
        summary["moment_norm"] = res.fit.moment_norm
        summary["converged"] = bool(res.fit.converged)
        if res.fit_hc.j_stat is not None:
            summary["j_stat_hc"] = res.fit_hc.j_stat
    else:  # baseline OLS fits
        summary["weights"] = dict(zip(res.weight_names, res.weights.tolist()))
        summary["constrained"] = res.constrained
    _write_json(out / "summary.json", summary)

    lines = [f"proxsc fit: estimator={args.estimator} effect={args.effect}",
             f"pre-period RMSE: {report.pre_rmse:.6g}", "", report.table()]
    (out / "parameters.txt").write_text("\n".join(lines) + "\n")

    trend = report.fitted_trend
    ci = report.ci_hc if args.cov != "hac" else report.ci_hac
    half = (ci[:, 1] - ci[:, 0]).mean() / 2.0 if ci.size else 0.0
    rows = ["time,e_hat,fitted_trend,ci_low,ci_high"]
    post_times = panel.time_index[panel.post_mask]
    for j, t in enumerate(post_times):
        rows.append(f"{t},{report.e_hat[j]:.10g},{trend[j]:.10g},"
                    f"{trend[j]-half:.10g},{trend[j]+half:.10g}")
    (out / "effect_series.csv").write_text("\n".join(rows) + "\n")

    if report.e_full is not None:
        rows = ["time,e_hat"]
        rows += [f"{t},{e:.10g}" for t, e in zip(panel.time_index, report.e_full)]
        (out / "residuals.csv").write_text("\n".join(rows) + "\n")

    print((out / "parameters.txt").read_text())
    return 0


def cmd_simulate(args) -> int:
    if args.design:
        with open(args.design) as fh:
            design = SimDesign.from_dict(json.load(fh))
    else:
        design = SimDesign(seed=args.seed)
    estimators = [e.strip() for e in args.estimators.split(",") if e.strip()]
    summaries = run_monte_carlo(design, estimators, args.reps, args.workers)
    out = _outdir(args)
    table = results_table(summaries)
    (out / "mc_results.tsv").write_text(table)
    _write_json(out / "mc_results.json",
                [row for s in summaries for row in s.to_rows()])
    print(table)
    return 0


def cmd_placebo(args) -> int:
    panel = _load_panel(args)
    cov_mode = None if args.covariates == "none" else args.covariates
    report = placebo_run(panel, args.pseudo_t0, g_spec=args.g_spec,
                         covariates=cov_mode)
    out = _outdir(args)
    _write_json(out / "placebo_summary.json", {
        "command": "placebo",
        "pseudo_t0": args.pseudo_t0,
        "t0": panel.t0,
        "effect": report.to_dict(),
    })
    (out / "placebo.txt").write_text(report.table() + "\n")
    print(report.table())
    return 0


def cmd_conformal(args) -> int:
    panel = _load_panel(args)
    grid = None
    if args.grid:
        lo, hi, n = args.grid.split(",")
        grid = np.linspace(float(lo), float(hi), int(n))
    if args.post_period is not None:
        periods = [args.post_period]
    else:
        periods = panel.time_index[panel.post_mask].tolist()
    rows = ["post_period,interval_low,interval_high,level,connected"]
    detail = []
    for t_star in periods:
        res = conformal_interval(panel, t_star, grid=grid, scheme=args.scheme,
                                 level=args.level)
        rows.append(f"{t_star},{res.interval[0]:.10g},{res.interval[1]:.10g},"
                    f"{res.level},{res.connected}")
        detail.append({"post_period": t_star, "grid": res.to_rows(),
                       "interval": list(res.interval)})
    out = _outdir(args)
    (out / "conformal_intervals.csv").write_text("\n".join(rows) + "\n")
    _write_json(out / "conformal_detail.json", detail)
    print("\n".join(rows))
    return 0


def cmd_report(args) -> int:
    out = Path(args.out)
    path = out / "parameters.txt"
    if not path.exists():
        raise ProxscError(f"no saved fit in {out} (missing parameters.txt)")
    print(path.read_text())
    return 0


_COMMANDS = {
    "fit": cmd_fit,
    "simulate": cmd_simulate,
    "placebo": cmd_placebo,
    "conformal": cmd_conformal,
    "report": cmd_report,
}


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    args = parser.parse_args(argv)
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    explicit = {a.dest for a in subparser._actions
                if any(opt in argv for opt in a.option_strings)}
    try:
        args = _merge_config(args, explicit)
        return _COMMANDS[args.command](args)
    except ProxscError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
