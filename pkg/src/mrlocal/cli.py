"""Command line front end: analyze / simulate / benchmark / density.

Numeric output is a pure function of the input files and flags; result
files are structured text with stable key order (plus TSV summaries) so
they can be diffed and golden-tested. Exit codes: 0 success, 2 input or
validation failure, 3 estimator degeneracy.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .algorithm import (
    PATH_BALANCED,
    MrLocalConfig,
    run_mr_local,
    uncertainty_test,
)
from .bootstrap import BootstrapError
from .data import SummaryDataError, load_summary_tsv, ratio_estimates
from .estimators import WeakInstrumentError, avg_iv_strength
from .harness import ALL_METHODS, monte_carlo, write_per_rep_tsv, write_report
from .simulate import (
    SETTING_BUILDERS,
    generate,
    setting_from_config,
    setting_to_config,
    write_truth_tsv,
)
from .data import write_summary_tsv

EXIT_OK = 0
EXIT_INVALID_INPUT = 2
EXIT_DEGENERATE = 3

_BALANCED_HINT = (
    "no candidate passed the uncertainty test; balanced pleiotropy is one "
    "plausible cause. Compare the pooled estimate against a balanced-model "
    "method: agreement supports the balanced reading."
)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--c-beta", type=float, default=1.0,
                        help="half-range of the candidate effect grid")
    parser.add_argument("--tau0", type=float, default=1.6,
                        help="cluster bandwidth in standard-deviation units")
    parser.add_argument("--tau0-mode", choices=("fixed", "theory"), default="fixed",
                        help="'theory' rescales tau0 as 1.5*sqrt(2*log p)")
    parser.add_argument("--grid", type=int, default=None,
                        help="number of grid candidates (default max(p, 2000))")
    parser.add_argument("--alpha", type=float, default=0.05,
                        help="one minus the confidence level")
    parser.add_argument("--plus", action="store_true",
                        help="enable the skewness refinement of the uncertainty test")
    parser.add_argument("--no-screen", action="store_true",
                        help="skip the exposure-strength pre-screen")
    parser.add_argument("--slack-scale", type=float, default=0.0,
                        help="multiplier of a 1/log(p) uncertainty-test allowance "
                             "for biased summary statistics (default off)")
    parser.add_argument("--bootstrap", type=int, default=0,
                        help="bootstrap replicates for the reported standard error")
    parser.add_argument("--seed", type=int, default=0)


def _config_from_args(args) -> MrLocalConfig:
    return MrLocalConfig(
        c_beta=args.c_beta,
        tau0=args.tau0,
        tau0_mode=args.tau0_mode,
        grid_size=args.grid,
        alpha=args.alpha,
        use_plus=args.plus,
        screen=not args.no_screen,
        slack_scale=args.slack_scale,
        bootstrap_reps=args.bootstrap,
        seed=args.seed,
    )


def _config_lines(cfg: MrLocalConfig) -> list[str]:
    return [
        f"c_beta = {cfg.c_beta!r}",
        f"tau0 = {cfg.tau0!r}",
        f"tau0_mode = {cfg.tau0_mode}",
        f"grid_size = {'auto' if cfg.grid_size is None else cfg.grid_size}",
        f"alpha = {cfg.alpha!r}",
        f"use_plus = {str(cfg.use_plus).lower()}",
        f"screen = {str(cfg.screen).lower()}",
        f"slack_scale = {cfg.slack_scale!r}",
        f"bootstrap_reps = {cfg.bootstrap_reps}",
        f"seed = {cfg.seed}",
    ]


def _write_text(path, lines) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _profile_path(output: Path) -> Path:
    return output.with_suffix(".profile.tsv")


def _write_profile(path, diagnostics) -> None:
    lines = ["b\tcluster_size\tq"]
    for ev in diagnostics.grid:
        lines.append(f"{ev.b!r}\t{ev.members.size}\t{ev.q!r}")
    _write_text(path, lines)


def _opt_repr(value) -> str:
    return "none" if value is None else repr(value)


def _cmd_analyze(args) -> int:
    ds, report = load_summary_tsv(args.input)
    cfg = _config_from_args(args)
    estimate = run_mr_local(ds, cfg)
    diag = estimate.diagnostics
    screened_ids = [ds.records[i].snp_id for i in diag.kept]
    cluster_ids = [screened_ids[i] for i in estimate.selected_cluster]
    strength = avg_iv_strength(ds.subset(diag.kept), estimate.selected_cluster)
    lines = [f"input = {args.input}"]
    lines += _config_lines(cfg)
    lines += [
        f"n_records = {ds.p}",
        f"n_rejected = {report.n_rejected}",
        f"n_used = {estimate.n_used}",
        f"tau0_effective = {diag.tau0!r}",
        f"grid_points = {len(diag.grid)}",
        f"size_floor = {diag.size_floor}",
        f"b_set_empty = {str(len(diag.b_set) == 0).lower()}",
        f"path = {estimate.path}",
        f"beta_hat = {estimate.beta_hat!r}",
        f"sigma_hat = {estimate.sigma_hat!r}",
        f"ci_low = {estimate.ci_low!r}",
        f"ci_high = {estimate.ci_high!r}",
        f"analytic_sigma = {estimate.analytic_sigma!r}",
        f"bootstrap_sigma = {_opt_repr(estimate.bootstrap_sigma)}",
        f"sigma_pi_hat = {_opt_repr(estimate.sigma_pi_hat)}",
        f"selected_b = {_opt_repr(estimate.selected_b)}",
        f"cluster_size = {estimate.selected_cluster.size}",
        f"cluster_avg_strength = {strength!r}",
        f"cluster_snps = {','.join(cluster_ids)}",
    ]
    if estimate.path == PATH_BALANCED:
        lines.append(f"note = {_BALANCED_HINT}")
        print(f"note: {_BALANCED_HINT}", file=sys.stderr)
    output = Path(args.output)
    _write_text(output, lines)
    _write_profile(_profile_path(output), diag)
    print(
        f"beta_hat={estimate.beta_hat!r} sigma_hat={estimate.sigma_hat!r} "
        f"path={estimate.path}"
    )
    return EXIT_OK


def _resolve_setting(args):
    if args.setting == "file":
        if args.input is None:
            raise SummaryDataError("--setting file requires --input with a setting config")
        text = Path(args.input).read_text(encoding="utf-8")
        setting = setting_from_config(text)
        if args.beta is not None:
            setting = replace(setting, beta=args.beta)
        return setting
    builder = SETTING_BUILDERS[args.setting]
    beta = 0.0 if args.beta is None else args.beta
    return builder(beta, p=args.p, n_d=args.nd, n_y=args.ny)


def _add_setting_flags(parser) -> None:
    parser.add_argument("--setting", choices=(*sorted(SETTING_BUILDERS), "file"),
                        required=True, help="named scenario, or 'file' to read --input")
    parser.add_argument("--beta", type=float, default=None, help="true causal effect")
    parser.add_argument("--p", type=int, default=2000, help="number of instruments")
    parser.add_argument("--nd", type=int, default=100_000, help="exposure GWAS sample size")
    parser.add_argument("--ny", type=int, default=100_000, help="outcome GWAS sample size")


def _cmd_simulate(args) -> int:
    setting = _resolve_setting(args)
    ds, truth = generate(setting, args.seed)
    output = Path(args.output)
    write_summary_tsv(ds, output)
    write_truth_tsv(ds, truth, output.with_suffix(".truth.tsv"))
    _write_text(output.with_suffix(".setting.txt"),
                setting_to_config(setting).splitlines() + [f"# seed = {args.seed}"])
    print(
        f"wrote {ds.p} records to {output}; valid instruments: "
        f"{len(truth.valid_set)}; realized avg strength: {truth.kappa!r}"
    )
    return EXIT_OK


def _cmd_benchmark(args) -> int:
    setting = _resolve_setting(args)
    cfg = _config_from_args(args)
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    reports = monte_carlo(setting, cfg, methods, args.reps, args.seed,
                          workers=args.workers)
    output = Path(args.output)
    write_report(reports, output)
    _write_text(
        output.with_suffix(".config.txt"),
        _config_lines(cfg)
        + [f"reps = {args.reps}", f"master_seed = {args.seed}",
           f"methods = {','.join(methods)}"]
        + setting_to_config(setting).splitlines(),
    )
    if args.per_rep is not None:
        write_per_rep_tsv(reports, args.per_rep)
    for method in methods:
        rep = reports[method]
        print(
            f"{method}: mae={rep.mae!r} coverage={rep.coverage!r} "
            f"empty_b_rate={rep.empty_b_rate!r}"
        )
    return EXIT_OK


def _cmd_density(args) -> int:
    ds, _ = load_summary_tsv(args.input)
    cfg = _config_from_args(args)
    cand = uncertainty_test(ds, cfg)
    screened = ds.subset(cand.kept)
    ratios = ratio_estimates(screened)
    # Delta-method inverse variance of each ratio, usable as a plot weight.
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio_var = (screened.sigma_y**2 + ratios**2 * screened.sigma_d**2) / screened.gamma_d**2
        weights = 1.0 / ratio_var
    lines = ["snp\tratio\tweight"]
    for rec, ratio, weight in zip(screened, ratios, weights):
        lines.append(f"{rec.snp_id}\t{float(ratio)!r}\t{float(weight)!r}")
    output = Path(args.output)
    _write_text(output, lines)
    _write_profile(_profile_path(output), cand)
    print(f"wrote {screened.p} ratios and {len(cand.grid)} profile rows")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mrlocal",
        description="Two-sample Mendelian randomization robust to invalid instruments",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_analyze = sub.add_parser("analyze", help="estimate a causal effect from a summary TSV")
    p_analyze.add_argument("--input", required=True, help="summary-statistics TSV")
    p_analyze.add_argument("--output", required=True, help="result file (key = value lines)")
    _add_config_flags(p_analyze)

    p_sim = sub.add_parser("simulate", help="write a simulated dataset and its ground truth")
    p_sim.add_argument("--input", default=None, help="setting config (with --setting file)")
    p_sim.add_argument("--output", required=True, help="dataset TSV path")
    p_sim.add_argument("--seed", type=int, default=0)
    _add_setting_flags(p_sim)

    p_bench = sub.add_parser("benchmark", help="Monte Carlo comparison of methods")
    p_bench.add_argument("--input", default=None, help="setting config (with --setting file)")
    p_bench.add_argument("--output", required=True, help="report TSV path")
    p_bench.add_argument("--reps", type=int, default=200)
    p_bench.add_argument("--methods", default="mr_local,divw_all,ivw_all",
                         help=f"comma list from {','.join(ALL_METHODS)}")
    p_bench.add_argument("--workers", type=int, default=1,
                         help="parallel replicate workers (result-identical)")
    p_bench.add_argument("--per-rep", default=None, help="optional per-replicate TSV path")
    _add_setting_flags(p_bench)
    _add_config_flags(p_bench)

    p_density = sub.add_parser("density", help="plot-ready ratio table and grid profile")
    p_density.add_argument("--input", required=True, help="summary-statistics TSV")
    p_density.add_argument("--output", required=True, help="ratio TSV path")
    _add_config_flags(p_density)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "analyze": _cmd_analyze,
        "simulate": _cmd_simulate,
        "benchmark": _cmd_benchmark,
        "density": _cmd_density,
    }
    try:
        return handlers[args.subcommand](args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    except (SummaryDataError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    except (WeakInstrumentError, BootstrapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
