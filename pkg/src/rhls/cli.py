"""Command-line driver.

Every command prints a JSON :class:`~rhls.report.RunReport` on stdout
(and optionally writes it to ``--report``). Exit codes: 0 success,
1 property failure, 2 invalid exponents, 3 convergence failure, 64 usage.

A JSON config file (``--config``) may preset quadrature tolerances with
the keys ``rel_tol``, ``abs_tol``, ``max_subdivisions`` and ``rule``;
explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import constants, system, varmin
from .errors import DegenerateExponent, NoConvergence, OutOfRange, RootBracketFailure, Stalled
from .exponents import diagonal, diagonal_family, from_lambda_p
from .operators import functional_quotient
from .quadrature import DEFAULT_SPEC, QuadratureSpec
from .report import RunReport
from .trials import run_trial

EXIT_OK, EXIT_FAIL, EXIT_EXPONENTS, EXIT_CONVERGENCE, EXIT_USAGE = 0, 1, 2, 3, 64
CONFIG_KEYS = ("rel_tol", "abs_tol", "max_subdivisions", "rule")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for invalid exponents here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x: float) -> str:
    return "nan" if not math.isfinite(x) else f"{x:.17g}"


def _quadrature_spec(args) -> QuadratureSpec:
    settings = {}
    if args.config:
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        if not isinstance(raw, dict):
            raise UsageError("config must be a JSON object")
        unknown = set(raw) - set(CONFIG_KEYS)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        settings.update(raw)
    for key in CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    try:
        return DEFAULT_SPEC.with_(**settings) if settings else DEFAULT_SPEC
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad quadrature settings: {exc}") from exc


def _check_n_lambda(n: int, lam: float) -> None:
    if n < 2:
        raise OutOfRange("n must be >= 2")
    if not lam > 0:
        raise OutOfRange("lambda must be positive")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_constants(args, spec: QuadratureSpec) -> tuple[RunReport, int]:
    n, lam = args.n, args.lam
    _check_n_lambda(n, lam)
    if args.method in ("closed-form", "both") and lam != 2:
        raise OutOfRange("the closed form exists only for lambda = 2")
    rep = RunReport("constants", {"n": n, "lambda": lam, "method": args.method})
    if args.method in ("spherical", "both"):
        r = constants.c_spherical(n, lam, spec)
        rep.add("c_spherical", r.c_spherical, r.error_estimate)
    if args.method in ("closed-form", "both"):
        rep.add("c_closed_form", constants.c_explicit_lambda2(n), 0.0)
    if args.method == "both":
        cs, cc = rep.outputs["c_spherical"], rep.outputs["c_closed_form"]
        rep.add("relative_discrepancy", abs(cs / cc - 1.0), rep.error_estimates["c_spherical"] / cc)
    return rep, EXIT_OK


def _scan_row(job):
    n, lam, c_log, spec = job
    try:
        r = constants.c_spherical(n, lam, spec)
        return lam, r.c_spherical, constants.c_near_zero(n, lam, spec, c_log), r.error_estimate, True
    except NoConvergence:
        return lam, math.nan, math.nan, math.nan, False


def cmd_scan(args, spec: QuadratureSpec) -> tuple[RunReport, int]:
    n, lo, hi, steps = args.n, args.lambda_from, args.lambda_to, args.steps
    if not 0 < lo < hi:
        raise UsageError("need 0 < lambda-from < lambda-to")
    if steps < 1:
        raise UsageError("steps must be >= 1")
    _check_n_lambda(n, lo)
    c_log = constants.c_n_log(n, spec)
    jobs = [(n, float(lam), c_log, spec) for lam in np.linspace(lo, hi, steps + 1)]
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            rows = list(pool.map(_scan_row, jobs))
    else:
        rows = [_scan_row(j) for j in jobs]
    rows.sort(key=lambda r: r[0])
    out = Path(args.out)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda", "c_spherical", "c_near_zero", "abs_err_estimate"])
        for lam, c, cz, err, _ in rows:
            w.writerow([_fmt(lam), _fmt(c), _fmt(cz), _fmt(err)])
    failed = sum(not r[4] for r in rows)
    rep = RunReport("scan", {"n": n, "lambda_from": lo, "lambda_to": hi, "steps": steps, "out": str(out)})
    rep.add("rows", len(rows), 0.0)
    rep.add("failed_rows", failed, 0.0)
    rep.add("c_n_log", c_log, None)
    return rep, EXIT_CONVERGENCE if failed else EXIT_OK


def cmd_verify(args, spec: QuadratureSpec) -> tuple[RunReport, int]:
    n, lam = args.n, args.lam
    _check_n_lambda(n, lam)
    if args.trials < 1:
        raise UsageError("trials must be >= 1")
    p = args.p if args.p is not None else diagonal_family(n, lam)[0]
    exps = from_lambda_p(n, lam, p)
    on_diagonal = abs(p - diagonal_family(n, lam)[0]) < 1e-12
    if on_diagonal:
        c = constants.c_spherical(n, lam, spec)
        constant, c_err = c.c_spherical, c.error_estimate
    else:
        res = varmin.minimize_profile(exps, varmin.MinimizeOptions(init="flat"))
        constant, c_err = res.constant, None
    jobs = [(exps, args.seed, i, args.samples) for i in range(args.trials)]
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            outcomes = list(pool.map(_trial_job, jobs))
    else:
        outcomes = [_trial_job(j) for j in jobs]
    outcomes.sort(key=lambda o: o.index)
    worst = min(outcomes, key=lambda o: o.quotient + 3 * o.stderr)
    passed = all(o.quotient >= constant * (1 - 1e-6) - 3 * o.stderr for o in outcomes)
    rep = RunReport("verify", {"n": n, "lambda": lam, "p": p, "trials": args.trials, "samples": args.samples}, seed=args.seed)
    rep.add("constant", constant, c_err)
    rep.add("min_quotient", min(o.quotient for o in outcomes), worst.stderr)
    rep.add("worst_margin_sigma", (worst.quotient - constant) / worst.stderr if worst.stderr > 0 else math.inf, 0.0)
    if on_diagonal and not args.skip_extremal:
        f = varmin.extremal_reference(n, lam)
        g = varmin.induced_partner(f, exps)
        q = functional_quotient(f, g, exps).quotient
        rep.add("extremal_quotient", q, None)
        rep.add("extremal_ok", bool(abs(q - constant) <= 1e-4))
        passed = passed and abs(q - constant) <= 1e-4
    rep.add("pass", bool(passed))
    return rep, EXIT_OK if passed else EXIT_FAIL


def _trial_job(job):
    exps, seed, index, samples = job
    return run_trial(exps, seed, index, samples)


def cmd_check_system(args, spec: QuadratureSpec) -> tuple[RunReport, int]:
    n, lam, b = args.n, args.lam, args.b
    _check_n_lambda(n, lam)
    if not b > 0:
        raise OutOfRange("b must be positive")
    sol = system.fixed_point_solution(n, lam, b)
    res = system.system_residual(sol)
    growth = system.growth_and_identity_checks(sol)
    ms = max(system.moving_sphere_invariance(sol, x) for x in np.random.default_rng(args.seed).uniform(-3, 3, (5, n - 1)))
    rep = RunReport("check-system", {"n": n, "lambda": lam, "b": b, "strict_trace": args.strict_trace}, seed=args.seed)
    rep.add("amplitude", sol.a, None)
    rep.add("res_u", res.res_u, None)
    rep.add("res_v", res.res_v, None)
    rep.add("trace_residual", res.trace, None)
    rep.add("trace_ratio", float(np.mean(res.trace_ratio)), float(np.ptp(res.trace_ratio)))
    rep.add("mass_u", growth.mass_u, None)
    rep.add("mass_v", growth.mass_v, None)
    rep.add("identity_error", growth.identity_error, None)
    rep.add("growth_u_error", growth.growth_u_error, None)
    rep.add("growth_v_error", growth.growth_v_error, None)
    rep.add("moving_sphere_residual", ms, None)
    equations_ok = res.res_u <= 1e-6 and res.res_v <= 1e-6 and growth.identity_error <= 1e-6
    equations_ok = equations_ok and growth.growth_u_error <= 1e-3 and growth.growth_v_error <= 1e-3 and ms <= 1e-10
    trace_ok = res.trace <= 1e-8
    rep.add("equations_ok", bool(equations_ok))
    rep.add("trace_ok", bool(trace_ok))
    ok = equations_ok and (trace_ok or not args.strict_trace)
    return rep, EXIT_OK if ok else EXIT_FAIL


def cmd_minimize(args, spec: QuadratureSpec) -> tuple[RunReport, int]:
    n, lam = args.n, args.lam
    _check_n_lambda(n, lam)
    exps = diagonal(n, lam)
    opts = varmin.MinimizeOptions(grid_size=args.grid, init=args.init, seed=args.seed, max_iters=args.max_iters, tol=args.tol)
    res = varmin.minimize_profile(exps, opts)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["r", "value"])
            for r, v in zip(res.profile.radii, res.profile.values):
                w.writerow([_fmt(r), _fmt(v)])
    rep = RunReport("minimize", {"n": n, "lambda": lam, "grid": args.grid, "init": args.init, "out": args.out}, seed=args.seed)
    rep.add("constant", res.constant, None)
    rep.add("iterations", res.trace.iterations, 0.0)
    rep.add("stationarity", res.stationarity, 0.0)
    rep.add("monotone_trace", res.trace.is_monotone())
    if lam == 2:
        ref = constants.c_explicit_lambda2(n)
        rep.add("closed_form", ref, 0.0)
        rep.add("relative_error", abs(res.constant / ref - 1), None)
    return rep, EXIT_OK


def cmd_loghls(args, spec: QuadratureSpec) -> tuple[RunReport, int]:
    n = args.n
    if n < 2:
        raise OutOfRange("n must be >= 2")
    c_n = constants.c_n_log(n, spec)
    f = constants.f0_profile(n)
    g = constants.loghls_extremal_g(f)
    deficit = constants.loghls_deficit(f, g, c_n)
    rep = RunReport("loghls", {"n": n})
    rep.add("c_n", c_n, None)
    rep.add("deficit_at_extremal", deficit, None)
    ok = abs(deficit) <= 1e-5
    rep.add("pass", bool(ok))
    return rep, EXIT_OK if ok else EXIT_FAIL


COMMANDS = {
    "constants": cmd_constants,
    "scan": cmd_scan,
    "verify": cmd_verify,
    "check-system": cmd_check_system,
    "minimize": cmd_minimize,
    "loghls": cmd_loghls,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file presetting quadrature tolerances")
    common.add_argument("--rel-tol", dest="rel_tol", type=float)
    common.add_argument("--abs-tol", dest="abs_tol", type=float)
    common.add_argument("--report", help="also write the JSON report to this path")
    common.add_argument("--record-time", action="store_true",
                        help="store the wall time in the report (off by default so reports are byte-identical)")

    parser = _Parser(prog="rhls", description="Sharp reversed HLS inequality on the half space: numerical checks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("constants", parents=[common], help="sharp constant for given n, lambda")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--method", choices=["spherical", "closed-form", "both"], default="spherical")

    p = sub.add_parser("scan", parents=[common], help="tabulate the constant over a lambda range")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--lambda-from", dest="lambda_from", type=float, required=True)
    p.add_argument("--lambda-to", dest="lambda_to", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("verify", parents=[common], help="Monte Carlo check of the reversed inequality")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--p", type=float, default=None, help="defaults to the diagonal exponent")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--skip-extremal", action="store_true", help="do not include the extremal-pair trial")

    p = sub.add_parser("check-system", parents=[common], help="classified solution of the integral system")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strict-trace", action="store_true", help="also fail when v(x, 0) differs from u(x)")

    p = sub.add_parser("minimize", parents=[common], help="variational minimisation over radial profiles")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--grid", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init", choices=["extremal-seed", "flat", "random"], default="random")
    p.add_argument("--max-iters", dest="max_iters", type=int, default=3000)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--out", help="CSV path for the profile (r,value)")

    p = sub.add_parser("loghls", parents=[common], help="log-HLS constant and deficit at the extremal pair")
    p.add_argument("--n", type=int, required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # usage errors and --help end parsing; report their code instead of exiting
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    start = time.perf_counter()
    try:
        spec = _quadrature_spec(args)
        report, code = COMMANDS[args.command](args, spec)
    except UsageError as exc:
        print(f"rhls: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OutOfRange, DegenerateExponent) as exc:
        print(f"rhls: invalid exponents: {exc}", file=sys.stderr)
        return EXIT_EXPONENTS
    except (NoConvergence, RootBracketFailure, Stalled) as exc:
        print(f"rhls: convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    if args.record_time:
        report.wall_time_ms = int(round(1000 * (time.perf_counter() - start)))
    text = report.to_json()
    sys.stdout.write(text)
    if args.report:
        Path(args.report).write_text(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
