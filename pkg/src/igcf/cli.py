"""Command line driver: ``python -m igcf <subcommand> ...``.

Exit codes are 0 (pass), 1 (a monitor or estimate failed), 2 (initial data
not admissible) and 3 (configuration, I/O or usage error).  The last line
printed is always ``STATUS=<PASS|FAIL|ERROR> REASON=<token>``.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from .flow import FlowError, adaptive_dt, check_admissible, make_state, run_flow, step
from .geometry import AdmissibilityError
from .io import ConfigError, parse_config, write_series, write_snapshot
from .monitors import (
    comparison_check,
    curvature_consistency,
    estimate_report,
    random_ordered_pair,
)
from .covariant import ScalarField

__all__ = ["cli_main", "build_parser", "EXIT_PASS", "EXIT_MONITOR", "EXIT_ADMISSIBLE", "EXIT_ERROR"]

EXIT_PASS, EXIT_MONITOR, EXIT_ADMISSIBLE, EXIT_ERROR = 0, 1, 2, 3
_STATUS = {EXIT_PASS: "PASS", EXIT_MONITOR: "FAIL", EXIT_ADMISSIBLE: "FAIL", EXIT_ERROR: "ERROR"}


class _Exit(Exception):
    def __init__(self, code, reason):
        self.code, self.reason = code, reason


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; route those to our code 3
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise _Exit(EXIT_ERROR, "usage")


class _Out:
    def __init__(self, quiet):
        self.quiet = quiet

    def __call__(self, *lines):
        if not self.quiet:
            for line in lines:
                print(line)


def build_parser():
    p = _Parser(prog="igcf", description="Inverse Gauss curvature flow of graphs over a hyperbolic cap.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", help="override [output] out_dir")
    common.add_argument("--quiet", action="store_true", help="print only the final status line")
    common.add_argument("--seed", type=int, default=None, help="seed for randomised harnesses")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("validate", parents=[common], help="check admissibility of the initial data")
    s.add_argument("config")
    s = sub.add_parser("run", parents=[common], help="run the flow and check every estimate")
    s.add_argument("config")
    s = sub.add_parser("compare", parents=[common], help="comparison principle harness")
    s.add_argument("config_low")
    s.add_argument("config_high", nargs="?",
                   help="upper initial data; if omitted, --pairs seeded random pairs are used")
    s.add_argument("--pairs", type=int, default=20)
    s = sub.add_parser("refine", parents=[common], help="grid refinement study")
    s.add_argument("config")
    s.add_argument("--levels", type=int, default=3)
    s = sub.add_parser("exact", parents=[common], help="constant data against the closed-form solution")
    s.add_argument("config")
    return p


def _load(path):
    try:
        return parse_config(path)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        raise _Exit(EXIT_ERROR, "config") from exc


def _out_dir(cfg, args):
    d = args.out_dir or cfg.out_dir
    try:
        os.makedirs(d, exist_ok=True)
    except OSError as exc:
        print(f"cannot create output directory {d}: {exc}", file=sys.stderr)
        raise _Exit(EXIT_ERROR, "io") from exc
    return d


def _admissibility(cfg, phi, out):
    rep = check_admissible(phi, tol=cfg.admissible_floor)
    out(
        f"sup|D phi|      = {rep.rho:.6g}",
        f"eigmin(iota)    = {rep.eigmin_iota:.6g}",
        f"NBC residual    = {rep.nbc_residual:.6g} (tolerance {rep.nbc_tolerance:.3g})",
    )
    for kind, msg in rep.failures:
        out(f"not admissible [{kind}]: {msg}")
    return rep


def _write(fn, *a):
    try:
        fn(*a)
    except OSError as exc:
        print(f"write failed: {exc}", file=sys.stderr)
        raise _Exit(EXIT_ERROR, "io") from exc


def cmd_validate(args, out):
    cfg = _load(args.config)
    out(cfg.echo())
    cap = cfg.cap()
    rep = _admissibility(cfg, cfg.initial_data().field(cap), out)
    if rep.failures:
        raise _Exit(EXIT_ADMISSIBLE, rep.failures[0][0])
    return EXIT_PASS, "admissible"


def _run_one(cfg, refine=0, out=None):
    cap = cfg.cap(refine)
    phi0 = cfg.initial_data().field(cap)
    rep = check_admissible(phi0, tol=cfg.admissible_floor)
    if rep.failures:
        if out:
            for kind, msg in rep.failures:
                out(f"not admissible [{kind}]: {msg}")
        raise _Exit(EXIT_ADMISSIBLE, rep.failures[0][0])
    fc = cfg.flow_config()
    try:
        res = run_flow(phi0, fc)
        series, broke = res.series, None
    except FlowError as exc:
        res, series, broke = None, exc.series, exc
    dt_used = max(series.dt) if len(series) else 0.0
    delta = cfg.slack(cap.dr, dt_used)
    report = estimate_report(series, delta=delta, nbc_tol=cfg.monitor_slack_factor * cap.dr**2)
    return cap, res, series, broke, report, delta


def cmd_run(args, out):
    cfg = _load(args.config)
    out(cfg.echo())
    d = _out_dir(cfg, args)
    cap, res, series, broke, report, delta = _run_one(cfg, out=out)
    _write(write_series, series, os.path.join(d, "series.csv"))
    if res is not None:
        for i, (ts, state) in enumerate(res.snapshots):
            _write(write_snapshot, state, os.path.join(d, f"snapshot_{i:03d}.csv"), ts)
    out(f"grid {cap.Nr}x{cap.Ntheta}, {len(series)} samples, slack delta = {delta:.3e}")
    out(*report.lines())
    if broke is not None:
        out(f"flow stopped: {broke}")
        raise _Exit(EXIT_MONITOR, "breakdown")
    if not report.passed:
        raise _Exit(EXIT_MONITOR, report.first_failed)
    return EXIT_PASS, "estimates"


def _pair_check(low, high, fc, factor, out, label):
    try:
        res = comparison_check(low, high, fc)
    except AdmissibilityError as exc:
        out(f"{label}: flow broke down: {exc}")
        raise _Exit(EXIT_MONITOR, "breakdown") from exc
    tol = factor * (low.cap.dr**2 + float(np.max(np.diff(res.times))))
    ok = res.worst_gap >= -tol
    out(f"{label}: initial gap {res.initial_gap:.6e}  worst gap {res.worst_gap:.6e}  "
        f"tolerance {tol:.3e}  {'PASS' if ok else 'FAIL'}")
    return ok


def cmd_compare(args, out):
    lo_cfg = _load(args.config_low)
    cap = lo_cfg.cap()
    fc = lo_cfg.flow_config()
    if args.config_high is not None:
        hi_cfg = _load(args.config_high)
        if (hi_cfg.n, hi_cfg.r_max, hi_cfg.Nr, hi_cfg.Ntheta) != (lo_cfg.n, lo_cfg.r_max, lo_cfg.Nr, lo_cfg.Ntheta):
            print("compare needs both configs on the same grid", file=sys.stderr)
            raise _Exit(EXIT_ERROR, "config")
        pairs = [(lo_cfg.initial_data().field(cap), hi_cfg.initial_data().field(cap))]
        for which, phi in zip(("low", "high"), pairs[0]):
            if _admissibility(lo_cfg, phi, lambda *a: None).failures:
                out(f"{which} initial data not admissible")
                raise _Exit(EXIT_ADMISSIBLE, "admissibility")
        if (pairs[0][1].values - pairs[0][0].values).min() < 0:
            out("initial data are not ordered")
            raise _Exit(EXIT_ADMISSIBLE, "unordered")
    else:
        rng = np.random.default_rng(0 if args.seed is None else args.seed)
        pairs = [random_ordered_pair(cap, rng) for _ in range(args.pairs)]
    ok = all([_pair_check(lo, hi, fc, lo_cfg.monitor_slack_factor, out, f"pair {i}")
              for i, (lo, hi) in enumerate(pairs)])
    if not ok:
        raise _Exit(EXIT_MONITOR, "comparison")
    return EXIT_PASS, "comparison"


def _order(a, b):
    return float(np.log2(a / b)) if a > 0 and b > 0 else float("nan")


def cmd_refine(args, out):
    cfg = _load(args.config)
    out(cfg.echo())
    if args.levels < 1:
        print("--levels must be >= 1", file=sys.stderr)
        raise _Exit(EXIT_ERROR, "usage")
    d = _out_dir(cfg, args)
    rows, all_pass = [], True
    for lev in range(args.levels):
        cap = cfg.cap(lev)
        u0 = ScalarField(np.exp(cfg.initial_data().field(cap).values), cap)
        try:
            cc = curvature_consistency(u0)
        except AdmissibilityError:
            raise _Exit(EXIT_ADMISSIBLE, "admissibility")
        _, _, series, broke, report, delta = _run_one(cfg, lev, out)
        worst = max(r.max_violation for name, r in report.results.items() if name != "convexity")
        all_pass &= report.passed and broke is None
        rows.append((cap.Nr, cap.Ntheta, cc["K_three_way"], cc["h_vs_emb"], cc["g_vs_emb"],
                     cc["gauss_formula"], worst, delta, report.passed and broke is None))
    header = "Nr,Ntheta,K_three_way,h_vs_emb,g_vs_emb,gauss_formula,max_violation,delta,passed"
    lines = [header]
    for r in rows:
        lines.append(",".join([str(r[0]), str(r[1])] + ["%.17g" % x for x in r[2:8]] + [str(int(r[8]))]))
    try:
        with open(os.path.join(d, "refine.csv"), "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        print(f"write failed: {exc}", file=sys.stderr)
        raise _Exit(EXIT_ERROR, "io") from exc
    out(f"{'Nr':>5} {'K 3-way':>11} {'order':>6} {'h vs emb':>11} {'order':>6} {'delta':>10} {'monitors':>8}")
    for i, r in enumerate(rows):
        oK = _order(rows[i - 1][2], r[2]) if i else float("nan")
        oh = _order(rows[i - 1][3], r[3]) if i else float("nan")
        out(f"{r[0]:>5} {r[2]:11.3e} {oK:6.2f} {r[3]:11.3e} {oh:6.2f} {r[7]:10.3e} {'pass' if r[8] else 'FAIL':>8}")
    if not all_pass:
        raise _Exit(EXIT_MONITOR, "estimates")
    return EXIT_PASS, "refine"


def exact_error(cfg):
    """Raw-mode run from ``phi = log c`` compared with ``log c - t``.

    Returns ``(max error over all steps, steps)``.
    """
    cap = cfg.cap()
    phi0 = ScalarField(np.full(cap.shape, np.log(cfg.c)), cap)
    fc = cfg.flow_config(mode="raw")
    state = make_state(phi0, "raw", cfg.admissible_floor)
    T, err = fc.T_final, 0.0
    while state.t < T:
        dt = adaptive_dt(state, fc)
        if state.t + dt >= T or T - (state.t + dt) < 1e-12 * T:
            dt = T - state.t
        state = step(state, dt, cfg.admissible_floor)
        err = max(err, float(np.abs(state.phi.values - (np.log(cfg.c) - state.t)).max()))
    return err, state.steps


def cmd_exact(args, out):
    cfg = _load(args.config)
    out(cfg.echo())
    try:
        err, steps = exact_error(cfg)
    except AdmissibilityError as exc:
        out(f"flow broke down: {exc}")
        raise _Exit(EXIT_MONITOR, "breakdown") from exc
    out(f"max |phi - (log c - t)| = {err:.6e} over {steps} steps (tolerance {cfg.exact_tol:.3e})")
    if not err <= cfg.exact_tol:
        raise _Exit(EXIT_MONITOR, "exact")
    return EXIT_PASS, "exact"


COMMANDS = {
    "validate": cmd_validate,
    "run": cmd_run,
    "compare": cmd_compare,
    "refine": cmd_refine,
    "exact": cmd_exact,
}


def cli_main(argv=None) -> int:
    parser = build_parser()
    quiet = False
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            raise _Exit(EXIT_ERROR, "usage")
        quiet = args.quiet
        if quiet:
            logging.getLogger("igcf").setLevel(logging.ERROR)
        code, reason = COMMANDS[args.command](args, _Out(quiet))
    except _Exit as exc:
        code, reason = exc.code, exc.reason
    print(f"STATUS={_STATUS[code]} REASON={reason}")
    return code


def main():
    sys.exit(cli_main())
