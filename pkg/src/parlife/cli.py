"""Command-line interface.

Subcommands: price, solve-vb, optimize, sweep, regions, asset-sub,
validate, reproduce-paper.  Table-producing commands write CSV (UTF-8,
LF, header row) and, when an output path is given, render a matching
figure alongside unless --no-plot is passed.

Exit codes: 0 success, 1 validation/reproduction failure, 2 configuration
error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis, closedforms as cf, mc
from .barrier_solver import SolverError, check_assumptions, solve_vb
from .config import ConfigError, RunConfig
from .core import a_constants, lambdas
from .optimize import (
    find_tau_bar,
    optimize_alpha,
    optimize_g,
    optimize_joint,
    optimize_rates_ceteris_paribus,
)
from .params import Scenario
from .quadrature import QuadratureError, integrate_finite, integrate_semi_infinite
from .valuation import cohort_liability, firm_value

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def write_csv(path: str | Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def _emit_table(table: analysis.SweepTable, out: str | None,
                plot: bool, title: str = "") -> int:
    header = table.column_names()
    rows = list(table.rows())
    if out:
        write_csv(out, header, rows)
        if plot:
            from .plots import plot_sweep
            plot_sweep(table, Path(out).with_suffix(".png"), title)
    else:
        print(",".join(header))
        for row in rows:
            print(",".join(_fmt(x) for x in row))
    return EXIT_OK if table.failure_fraction <= 0.10 else EXIT_NUMERIC


def cmd_price(cfg: RunConfig, args) -> int:
    s = cfg.scenario()
    vb = args.vb if args.vb is not None else solve_vb(s).vb
    bd = firm_value(s, vb)
    header = ["firm_value", "equity", "liability", "tb1", "tb2", "bc",
              "vb", "vb_over_v0"]
    row = [bd.firm_value, bd.equity, bd.liability, bd.tb1, bd.tb2, bd.bc,
           bd.vb, bd.vb / s.v0]
    for name, value in zip(header, row):
        print(f"{name:12s} {value:.6g}")
    if args.out:
        write_csv(args.out, header, [row])
    return EXIT_OK


def cmd_solve_vb(cfg: RunConfig, args) -> int:
    s = cfg.scenario()
    sol = solve_vb(s)
    report = check_assumptions(s, sol.vb)
    print(f"vb           {sol.vb:.6g}")
    print(f"vb_over_v0   {sol.vb / s.v0:.6g}")
    print(f"method       {sol.method}")
    print(f"residual     {sol.residual:.3e}")
    for name in ("alpha_below_bar", "alpha_below_tilde",
                 "guarantee_value_exceeds_tb", "surplus_value_exceeds_tb",
                 "continuity_sufficient", "g_star_positive_condition"):
        print(f"{name:28s} {getattr(report, name)}")
    if args.out:
        write_csv(args.out, ["vb", "vb_over_v0", "method", "residual"],
                  [[sol.vb, sol.vb / s.v0, sol.method, sol.residual]])
    return EXIT_OK


def cmd_optimize(cfg: RunConfig, args) -> int:
    s = cfg.scenario()
    t_mat = s.contract.t_mat
    if args.target == "alpha":
        res = optimize_alpha(s)
        rows = [["alpha_star", float(res.arg)], ["v", res.objective],
                ["vb", res.vb], ["boundary", res.boundary_flag]]
    elif args.target == "g":
        res = optimize_g(s)
        rows = [["g_star", float(res.arg)],
                ["g_star_over_p", float(res.arg) * t_mat / s.contract.p_lump],
                ["v", res.objective], ["vb", res.vb],
                ["boundary", res.boundary_flag]]
    else:
        res = (optimize_joint(s) if args.target == "joint"
               else optimize_rates_ceteris_paribus(s))
        a_star, g_star = res.arg
        rows = [["alpha_star", a_star], ["g_star", g_star],
                ["g_star_over_p", g_star * t_mat / s.contract.p_lump],
                ["v", res.objective], ["vb", res.vb],
                ["vb_over_v0", res.vb / s.v0], ["boundary", res.boundary_flag]]
    for name, value in rows:
        print(f"{name:14s} {_fmt(value)}")
    if args.out:
        write_csv(args.out, [r[0] for r in rows], [[r[1] for r in rows]])
    return EXIT_OK


def _parse_grid(text: str) -> np.ndarray:
    try:
        lo, hi, n = text.split(":")
        return np.linspace(float(lo), float(hi), int(n))
    except ValueError:
        raise ConfigError(f"grid must be 'lo:hi:count', got {text!r}") from None


def cmd_sweep(cfg: RunConfig, args) -> int:
    s = cfg.scenario()
    grid = _parse_grid(args.grid)
    axis = args.axis.replace("-", "_")
    if axis in ("alpha", "g_over_p"):
        table = analysis.sweep_vb(s, axis, grid)
        title = "bankruptcy barrier"
    elif axis == "guarantee":
        table = analysis.curves_vs_guarantee(s, grid)
        title = "value components vs guarantee ratio"
    elif axis == "asset":
        table = analysis.curves_vs_asset(s, grid)
        title = "value components vs asset value"
    elif axis in ("nu", "t_mat", "tau2"):
        table = analysis.sensitivity_alpha_star(s, axis, grid)
        title = "optimal participation rate"
    else:
        raise ConfigError(f"unknown sweep axis {args.axis!r}")
    return _emit_table(table, args.out, not args.no_plot, title)


def cmd_regions(cfg: RunConfig, args) -> int:
    s = cfg.scenario()
    y_axis = args.y_axis.replace("-", "_")
    table = analysis.region_scan(s, args.which, _parse_grid(args.x_grid),
                                 y_axis, _parse_grid(args.y_grid))
    code = _emit_table(table, args.out, False)
    if args.out and not args.no_plot:
        from .plots import plot_region
        plot_region(table, y_axis, Path(args.out).with_suffix(".png"),
                    f"{args.which}* positivity")
    return code


def cmd_asset_sub(cfg: RunConfig, args) -> int:
    s = cfg.scenario()
    alphas = [float(a) for a in args.alphas.split(",")]
    t_mats = [float(t) for t in args.t_mats.split(",")]
    v_grid = _parse_grid(args.v_grid) * s.v0 if args.v_grid else None
    reports = analysis.asset_substitution(s, v_grid=v_grid, alphas=alphas,
                                          t_mats=t_mats)
    header = ["alpha", "t_mat", "asset_value", "de_dsigma", "dl_dsigma",
              "substitution"]
    rows = []
    for rep in reports:
        for v, de, dl, flag in zip(rep.v_grid, rep.de_dsigma, rep.dl_dsigma,
                                   rep.flags):
            rows.append([rep.alpha, rep.t_mat, v, de, dl, int(flag)])
        onset = rep.onset
        print(f"alpha={rep.alpha:g} T={rep.t_mat:g}: "
              + (f"substitution onset at V/V0={onset / s.v0:.3f}"
                 if onset is not None else "no substitution region"))
    if args.out:
        write_csv(args.out, header, rows)
        if not args.no_plot:
            from .plots import plot_substitution
            plot_substitution(reports, Path(args.out).with_suffix(".png"), s.v0)
    return EXIT_OK


class _CheckRunner:
    def __init__(self):
        self.failures = 0

    def check(self, name: str, ok: bool, detail: str = ""):
        status = "PASS" if ok else "FAIL"
        print(f"{status} {name}" + (f": {detail}" if detail else ""))
        if not ok:
            self.failures += 1


def _validate_lemma_integrals(runner: _CheckRunner, rng: np.random.Generator,
                              draws: int = 100):
    """The four closed-form time integrals against adaptive quadrature."""
    from .params import MarketParams

    worst = 0.0
    for _ in range(draws):
        m = MarketParams(r=float(rng.uniform(0.003, 0.08)),
                         nu=float(rng.uniform(0.01, 0.12)),
                         sigma=float(rng.uniform(0.08, 0.5)))
        t_mat = float(rng.uniform(1.0, 40.0))
        lam1 = lambdas(m).lambda1
        sig = m.sigma

        def f_phi(t):
            return np.exp(-m.nu * t) / np.sqrt(t) * (
                np.exp(-0.5 * (lam1 * sig) ** 2 * t) / math.sqrt(2 * math.pi))

        def f_cdf(t):
            from .core import std_normal_cdf
            return np.exp(-m.nu * t) * std_normal_cdf(lam1 * sig * np.sqrt(t))

        root = math.sqrt(lam1 * lam1 * sig * sig + 2 * m.nu)
        from .core import std_normal_cdf as ncdf
        expected = {
            "a": (1.0 / root) * (2.0 * float(ncdf(root * math.sqrt(t_mat))) - 1.0),
            "b": 1.0 / root,
            "c": (0.5 / m.nu
                  - math.exp(-m.nu * t_mat) * float(ncdf(lam1 * sig * math.sqrt(t_mat))) / m.nu
                  + lam1 * sig / (2 * m.nu) / root
                  * (2.0 * float(ncdf(root * math.sqrt(t_mat))) - 1.0)),
            "d": 0.5 / m.nu + lam1 * sig / (2 * m.nu) / root,
        }
        tail_amp = abs(lam1) + 1.0

        def tail(t_max):
            return tail_amp * math.exp(-m.nu * t_max) / m.nu

        got = {
            "a": integrate_finite(f_phi, 0.0, t_mat, tol=1e-11).value,
            "b": integrate_semi_infinite(f_phi, tol=1e-11, tail_bound=tail).value,
            "c": integrate_finite(f_cdf, 0.0, t_mat, tol=1e-11).value,
            "d": integrate_semi_infinite(f_cdf, tol=1e-11, tail_bound=tail).value,
        }
        for part in "abcd":
            rel = abs(got[part] - expected[part]) / max(1e-300, abs(expected[part]))
            worst = max(worst, rel)
    runner.check("closed-form time integrals vs quadrature",
                 worst < 1e-8, f"worst rel err {worst:.2e} over {draws} draws")


def _validate_mc(runner: _CheckRunner, scenario: Scenario, cfg: RunConfig,
                 fast: bool):
    paths = 10_000 if fast else cfg.paths
    gate = 10.0 if fast else 3.0
    mcfg = mc.McConfig(paths=paths, steps_per_year=cfg.steps_per_year,
                       seed=cfg.seed)
    m = scenario.market
    sol = solve_vb(scenario)
    vb, k = sol.vb, scenario.contract.k_threshold
    t = min(scenario.contract.t_mat, 10.0)

    est = mc.mc_barrier_call(scenario.v0, k, vb, t, m, mcfg)
    ref = float(cf.down_and_out_call(scenario.v0, k, vb, t, m))
    runner.check("barrier call vs Monte Carlo",
                 est.distance_in_se(ref) < gate,
                 f"{est.mean:.5g}+-{est.std_error:.2g} vs {ref:.5g} "
                 f"({est.distance_in_se(ref):.2f} SE)")

    f_est, g_est = mc.mc_first_passage(scenario.v0, vb, t, m, mcfg)
    f_ref = float(cf.first_passage_cdf(scenario.v0, vb, t, m))
    g_ref = float(cf.discounted_passage(scenario.v0, vb, t, m))
    runner.check("first-passage probability vs Monte Carlo",
                 f_est.distance_in_se(f_ref) < gate,
                 f"{f_est.mean:.5g} vs {f_ref:.5g} ({f_est.distance_in_se(f_ref):.2f} SE)")
    runner.check("discounted passage vs Monte Carlo",
                 g_est.distance_in_se(g_ref) < gate,
                 f"{g_est.mean:.5g} vs {g_ref:.5g} ({g_est.distance_in_se(g_ref):.2f} SE)")

    comps = mc.mc_liability_components(scenario, vb, t, mcfg)
    total = sum(e.mean for e in comps.values())
    se = math.sqrt(sum(e.std_error ** 2 for e in comps.values())) or 1e-300
    ref_l = cohort_liability(scenario, vb, t)
    runner.check("cohort liability vs Monte Carlo",
                 abs(total - ref_l) / se < gate,
                 f"{total:.6g} vs {ref_l:.6g} ({abs(total - ref_l) / se:.2f} SE)")


def cmd_validate(cfg: RunConfig, args) -> int:
    s = cfg.scenario()
    runner = _CheckRunner()
    rng = np.random.default_rng(cfg.seed)
    _validate_lemma_integrals(runner, rng, draws=20 if args.fast else 100)

    # Closed-form identities on the configured scenario.
    i1, i2 = cf.i1_i2(s.v0, 0.5 * s.v0, s.contract.t_mat, s.market)
    from scipy.integrate import quad  # independent oracle
    i2_q = quad(lambda t: float(cf.discounted_passage(s.v0, 0.5 * s.v0, t, s.market)),
                0, s.contract.t_mat, limit=200)[0] / s.contract.t_mat
    runner.check("maturity-averaged passage integral identity",
                 abs(float(i2) - i2_q) <= 1e-7 * max(1.0, abs(i2_q)),
                 f"closed {float(i2):.10g} vs quadrature {i2_q:.10g}")

    sol = solve_vb(s)
    report = check_assumptions(s, sol.vb)
    runner.check("assumption report computed", True,
                 ", ".join(f"{k}={getattr(report, k)}" for k in (
                     "alpha_below_bar", "alpha_below_tilde",
                     "guarantee_value_exceeds_tb", "surplus_value_exceeds_tb",
                     "continuity_sufficient", "g_star_positive_condition")))

    _validate_mc(runner, s, cfg, args.fast)
    return EXIT_OK if runner.failures == 0 else EXIT_CHECK_FAILED


def cmd_reproduce_paper(cfg: RunConfig, args) -> int:
    t_start = time.time()
    s = cfg.scenario()
    ac = a_constants(s.market, s.contract.t_mat, s.frictions)
    rows = []

    def row(name, computed, reference, tol, ok=None):
        if ok is None:
            ok = abs(computed - reference) <= tol
        rows.append((name, computed, reference, tol, ok))

    row("alpha_bar", ac.alpha_bar, 0.1171, 5e-5)
    res_a = optimize_alpha(s)
    row("alpha_star", float(res_a.arg), 0.099, 0.005)
    res_g = optimize_g(s)
    g_over_p = float(res_g.arg) * s.contract.t_mat / s.contract.p_lump
    row("g_star_over_p", g_over_p, 0.0191, 0.0005)
    s_star = s.with_contract(alpha=float(res_a.arg),
                             g_total=float(res_g.arg) * s.contract.t_mat)
    vb_star = solve_vb(s_star).vb
    row("vb_star_over_v0", vb_star / s.v0, 0.4536, 0.005)
    tau_bar = find_tau_bar(s)
    row("tau_bar", tau_bar if tau_bar is not None else math.nan, 0.08, 0.01)
    crossing = analysis.immediate_bankruptcy_guarantee(s, hi=0.2)
    row("guarantee_ratio_immediate_bankruptcy", crossing, 0.111, 0.003)

    step = 0.05 if args.fast else 0.01
    v_grid = np.arange(0.5, 2.0 + 1e-9, step) * s.v0
    rep0 = analysis.asset_substitution(s, v_grid=v_grid, alphas=(0.0,))[0]
    onset = rep0.onset
    row("substitution_onset_no_participation",
        (onset / s.v0) if onset is not None else math.nan, 0.75, 0.05)
    t_mats = (30.0,) if args.fast else (10.0, 30.0, 50.0)
    reps = analysis.asset_substitution(s, v_grid=v_grid,
                                       alphas=(float(res_a.arg),),
                                       t_mats=t_mats)
    empty = all(rep.region_empty for rep in reps)
    row("substitution_region_empty_at_optimum", float(empty), 1.0, 0.0, ok=empty)

    header = ["quantity", "computed", "reference", "tolerance", "status"]
    print(f"{'quantity':42s} {'computed':>12s} {'reference':>12s} "
          f"{'tolerance':>10s}  status")
    failures = 0
    for name, computed, reference, tol, ok in rows:
        status = "PASS" if ok else "FAIL"
        failures += 0 if ok else 1
        print(f"{name:42s} {computed:12.6g} {reference:12.6g} {tol:10.4g}  {status}")
    print(f"elapsed: {time.time() - t_start:.1f}s")
    if args.out:
        write_csv(args.out, header,
                  [[n, c, r, t, "PASS" if ok else "FAIL"]
                   for n, c, r, t, ok in rows])
    return EXIT_OK if failures == 0 else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parlife",
        description="Structural valuation of participating life insurance "
                    "contracts with endogenous bankruptcy.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value configuration file")
        p.add_argument("--out", help="CSV output path")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--fast", action="store_true",
                       help="coarse grids / smoke-sized Monte Carlo")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override a config value")
        p.add_argument("--no-plot", action="store_true",
                       help="suppress the figure next to the CSV")

    p = sub.add_parser("price", help="value the company at a barrier")
    common(p)
    p.add_argument("--vb", type=float, default=None,
                   help="barrier level (default: solve it)")
    p.set_defaults(fn=cmd_price)

    p = sub.add_parser("solve-vb", help="solve the bankruptcy barrier")
    common(p)
    p.set_defaults(fn=cmd_solve_vb)

    p = sub.add_parser("optimize", help="optimal participation/guarantee rates")
    common(p)
    p.add_argument("--target", choices=["alpha", "g", "joint", "paper"],
                   default="paper")
    p.set_defaults(fn=cmd_optimize)

    p = sub.add_parser("sweep", help="parameter sweeps")
    common(p)
    p.add_argument("--axis", required=True,
                   choices=["alpha", "g-over-p", "guarantee", "asset",
                            "nu", "t-mat", "tau2"])
    p.add_argument("--grid", required=True, metavar="LO:HI:N")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("regions", help="optimal-rate positivity regions")
    common(p)
    p.add_argument("--which", choices=["alpha", "g"], default="alpha")
    p.add_argument("--y-axis", choices=["tau", "g-over-p"], default="tau")
    p.add_argument("--x-grid", default="0.5:3.0:26", metavar="LO:HI:N")
    p.add_argument("--y-grid", default="0.05:1.0:20", metavar="LO:HI:N")
    p.set_defaults(fn=cmd_regions)

    p = sub.add_parser("asset-sub", help="asset substitution detection")
    common(p)
    p.add_argument("--alphas", default="0.0", help="comma-separated rates")
    p.add_argument("--t-mats", default="30", help="comma-separated maturities")
    p.add_argument("--v-grid", default="0.5:2.0:151", metavar="LO:HI:N",
                   help="asset grid in multiples of V0")
    p.set_defaults(fn=cmd_asset_sub)

    p = sub.add_parser("validate", help="oracle checks: quadrature and Monte Carlo")
    common(p)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("reproduce-paper",
                       help="headline quantities of the numerical study")
    common(p)
    p.set_defaults(fn=cmd_reproduce_paper)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.load(args.config, args.overrides, args.seed)
        return args.fn(cfg, args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureError, SolverError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
