"""Command-line front end: ``renewcouple <subcommand> [flags]``.

Subcommands
-----------
bound        print the bound constants and write the curve ``t,bound``
couple       coupling times as ``run,tau,attempts,coupled``
lorden       Monte Carlo ``E D_t`` against Lorden's bound
tvcurve      ``t,tv_binned,ci,tv_coupling,ci,bound`` for overlay plots
lemma-check  empirical check of the three-uniform coupled sampler
verify       PASS/FAIL report over the whole pipeline

Exit codes: 0 success, 1 a check failed, 2 bad input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import zlib

import numpy as np
from scipy import stats

from . import _rng
from .bounds import BoundConfigError, bound_set, check_alpha, lorden_theta, tv_bound_from_K
from .chain import MAX_ATTEMPTS, CouplingConfig, CouplingConfigError, sample_tau
from .estimators import lorden_check, tv_binned_curve, tv_coupling_tail
from .laws import DistSpecError, DomainError, InfiniteMomentError, UnsupportedAgeError, parse_law
from .lemma import NoOverlapError, decompose, sample_coupled_many

SUBCOMMANDS = ("bound", "couple", "lorden", "tvcurve", "lemma-check", "verify")
INPUT_ERRORS = (DistSpecError, DomainError, InfiniteMomentError, UnsupportedAgeError,
                BoundConfigError, CouplingConfigError, NoOverlapError, ValueError)


class UsageError(Exception):
    """Invalid flag value or config file; reported with exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def mixed_seed(seed: int, subcommand: str) -> int:
    """Fold the subcommand name into the seed so subcommands never share streams."""
    ss = np.random.SeedSequence([int(seed) & ((1 << 64) - 1), zlib.crc32(subcommand.encode())])
    return int(ss.generate_state(1, np.uint64)[0])


def _positive_int(text):
    v = int(float(text))
    if v <= 0:
        raise argparse.ArgumentTypeError(f"{text} is not a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key=value file mirroring the flags")
    common.add_argument("--dist", default="exp(rate=1.0)", help="lifetime law, e.g. 'gamma(shape=2,rate=1)'")
    common.add_argument("--b1", type=float, default=0.0, help="initial age of the first process")
    common.add_argument("--b2", type=float, default=0.0, help="initial age of the second process (couple)")
    common.add_argument("--alpha", type=float, default=1.0, help="moment order of the bound")
    common.add_argument("--R", type=float, default=None, help="threshold; optimised when absent")
    common.add_argument("--t-start", type=float, default=5.0)
    common.add_argument("--t-stop", type=float, default=500.0)
    common.add_argument("--t-points", type=_positive_int, default=10)
    common.add_argument("--t-scale", choices=("log", "linear"), default="log")
    common.add_argument("--t", type=float, default=None, help="single query time (lorden; default 50 E zeta)")
    common.add_argument("--paths", type=_positive_int, default=100_000, help="renewal paths / lemma draws")
    common.add_argument("--runs", type=_positive_int, default=100_000, help="coupled runs")
    common.add_argument("--bins", type=_positive_int, default=128)
    common.add_argument("--max-attempts", type=_positive_int, default=MAX_ATTEMPTS)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=_positive_int, default=1, help="worker threads (output is unaffected)")
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--trace", default=None, help="couple: per-attempt trace CSV file")
    common.add_argument("--dist2", default=None, help="lemma-check: second law (default: the residual at --b1)")
    # test hook: multiply K before building the bound curve (negative controls)
    common.add_argument("--bound-scale", type=float, default=1.0, help=argparse.SUPPRESS)

    parser = _Parser(prog="renewcouple", description="Coupling bounds for renewal processes, with Monte Carlo checks.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "bound": "bound constants and TV bound curve",
        "couple": "sample coupling times",
        "lorden": "check E D_t <= Theta",
        "tvcurve": "TV estimates and bound on a time grid",
        "lemma-check": "check the coupled sampler",
        "verify": "PASS/FAIL report",
    }
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def _read_config(path, subparser):
    types = {a.dest: a for a in subparser._actions if a.dest not in ("help", "config")}
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    for n, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        dest = key.strip().lstrip("-").replace("-", "_")
        if not sep or dest not in types:
            raise UsageError(f"{path}:{n}: unknown setting {key.strip()!r}")
        action = types[dest]
        value = value.strip()
        try:
            values[dest] = action.type(value) if action.type else value
        except (ValueError, argparse.ArgumentTypeError):
            raise UsageError(f"{path}:{n}: bad value {value!r} for {key.strip()}") from None
        if action.choices and values[dest] not in action.choices:
            raise UsageError(f"{path}:{n}: {key.strip()} must be one of {', '.join(action.choices)}")
    return values


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        # flags beat the config file: re-parse with the file as defaults
        sub = parser._subparsers._group_actions[0].choices[args.command]
        sub.set_defaults(**_read_config(args.config, sub))
        args = parser.parse_args(argv)
    return args


def t_grid(args) -> np.ndarray:
    if not 0 < args.t_start <= args.t_stop:
        raise UsageError("need 0 < t-start <= t-stop")
    if args.t_scale == "log":
        return np.geomspace(args.t_start, args.t_stop, args.t_points)
    return np.linspace(args.t_start, args.t_stop, args.t_points)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return "nan" if math.isnan(x) else repr(x)


def _write_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _emit(args, text, out):
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        out.write(text)


def _law(args):
    return parse_law(args.dist)


def cmd_bound(args, out, err) -> int:
    law = _law(args)
    bs = bound_set(law, args.alpha, args.b1, args.R)
    t = t_grid(args)
    curve = tv_bound_from_K(bs.K_of_alpha_b1 * args.bound_scale, args.alpha, t)
    if args.format == "json":
        payload = dict(bs.to_dict(), curve={"t": t.tolist(), "bound": curve.tolist()})
        out.write(json.dumps(payload, indent=2) + "\n")
        return 0
    out.write(bs.format() + "\n")
    if args.out:
        _emit(args, _write_csv(["t", "bound"], zip(t, curve)), out)
    return 0


def cmd_couple(args, out, err) -> int:
    law = _law(args)
    cfg = CouplingConfig(law, args.b1, args.b2, args.R, args.max_attempts, mixed_seed(args.seed, "couple"),
                         args.alpha).resolved()
    sample = sample_tau(cfg, args.runs, threads=args.threads, keep_runs=args.trace is not None)
    rows = zip(range(args.runs), sample.tau, sample.attempts, sample.coupled)
    _emit(args, _write_csv(["run", "tau", "attempts", "coupled"], rows), out)
    if args.trace:
        trace = []
        for i, run in enumerate(sample.runs):
            for k, a in enumerate(run.attempt_log, start=1):
                trace.append((i, k, a.leader + 1, a.epoch, a.D, a.zeta, a.window,
                              "" if a.coupled is None else a.coupled,
                              "" if a.beta is None else a.beta, "" if a.kappa is None else a.kappa))
        with open(args.trace, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["run", "attempt", "leader", "epoch", "D", "zeta", "window", "coupled", "beta", "kappa"])
            for row in trace:
                w.writerow([v if v == "" else _fmt(v) for v in row])
    ok = sample.coupled
    mean_tau = float(np.mean(sample.tau[ok])) if ok.any() else math.nan
    err.write(
        f"runs={args.runs} R={cfg.R:.6g} mean_tau={mean_tau:.6g} "
        f"mean_attempts={np.mean(sample.attempts):.4g} max_attempts={int(np.max(sample.attempts))} "
        f"non_coupled={sample.n_failed}\n"
    )
    return 0


def cmd_lorden(args, out, err) -> int:
    law = _law(args)
    t = args.t if args.t is not None else 50.0 * law.mean
    rep = lorden_check(law, args.b1, t, args.paths, mixed_seed(args.seed, "lorden"))
    if args.format == "json":
        out.write(json.dumps({
            "law": str(law), "t": t, "mean": rep.estimate.mean, "stderr": rep.estimate.stderr,
            "ci95": rep.estimate.ci, "theta": rep.theta, "equilibrium_mean": rep.equilibrium_mean,
            "holds": rep.holds,
        }, indent=2) + "\n")
    else:
        out.write(
            f"law={law} t={t:.6g} paths={args.paths}\n"
            f"E D_t = {rep.estimate.mean:.6f} +- {rep.estimate.ci:.6f} (95%)\n"
            f"Theta = {rep.theta:.6f}  equilibrium mean = {rep.equilibrium_mean:.6f}\n"
            f"{'PASS' if rep.holds else 'FAIL'} E D_t <= Theta + 3 sigma\n"
        )
    return 0 if rep.holds else 1


def _tv_pipeline(args, name):
    law = _law(args)
    check_alpha(law, args.alpha)
    seed = mixed_seed(args.seed, name)
    bs = bound_set(law, args.alpha, args.b1, args.R)
    t = t_grid(args)
    binned = tv_binned_curve(law, args.b1, t, args.paths, args.bins, seed)
    tail = tv_coupling_tail(law, args.b1, args.alpha, t, args.runs, seed, R=bs.R,
                            max_attempts=args.max_attempts, threads=args.threads)
    bound = tv_bound_from_K(bs.K_of_alpha_b1 * args.bound_scale, args.alpha, t)
    return law, bs, t, binned, tail, bound


def cmd_tvcurve(args, out, err) -> int:
    law, bs, t, binned, tail, bound = _tv_pipeline(args, "tvcurve")
    rows = zip(t, binned.tv_hat, binned.ci_halfwidth, tail.tv_hat, tail.ci_halfwidth, bound)
    _emit(args, _write_csv(["t", "tv_binned", "ci", "tv_coupling", "ci", "bound"], rows), out)
    return 0


def cmd_lemma_check(args, out, err) -> int:
    law = _law(args)
    other = parse_law(args.dist2) if args.dist2 else None
    if other is None:
        from .laws import residual
        other = residual(law, args.b1)
    dec = decompose(law, other)
    rng = _rng.stream(mixed_seed(args.seed, "lemma-check"), _rng.LEMMA)
    n = args.paths
    u = rng.random((3, n))
    v1, v2, same = sample_coupled_many(dec, u[0], u[1], u[2])
    freq = float(np.mean(same))
    tol = 4.0 * math.sqrt(dec.kappa * (1.0 - dec.kappa) / n)
    p1 = stats.kstest(v1, law.cdf).pvalue
    p2 = stats.kstest(v2, other.cdf).pvalue
    checks = [
        (abs(freq - dec.kappa) <= tol, f"coupling frequency {freq:.6f} within {tol:.2g} of kappa={dec.kappa:.6f}"),
        (p1 >= 1e-3, f"marginal 1 KS p={p1:.4g} against {law}"),
        (p2 >= 1e-3, f"marginal 2 KS p={p2:.4g} against {other}"),
        (bool(np.all(v1[same] == v2[same])), "coupled draws identical"),
    ]
    for ok, text in checks:
        out.write(f"{'PASS' if ok else 'FAIL'} {text}\n")
    return 0 if all(ok for ok, _ in checks) else 1


def cmd_verify(args, out, err) -> int:
    law, bs, t, binned, tail, bound = _tv_pipeline(args, "verify")
    seed = mixed_seed(args.seed, "verify-lorden")
    t_lorden = args.t if args.t is not None else 50.0 * law.mean
    rep = lorden_check(law, args.b1, t_lorden, args.paths, seed)
    joint = binned.ci_halfwidth + tail.ci_halfwidth
    order_ok = binned.tv_hat <= tail.tv_hat + joint
    dom_ok = tail.tv_hat <= bound + tail.ci_halfwidth
    iso = tail.isotonic()
    mono_ok = np.abs(iso - tail.tv_hat) <= tail.ci_halfwidth + 1e-12
    failed_frac = tail.n_failed / tail.n_paths
    lines = [
        f"verify law={law} b1={args.b1:g} alpha={args.alpha:g} R={bs.R:.6g} K={bs.K_of_alpha_b1:.6g} "
        f"paths={args.paths} runs={args.runs} seed={args.seed}",
    ]
    checks = [
        (rep.holds, f"lorden: E D_t={rep.estimate.mean:.6f} <= Theta + 3 sigma = "
                    f"{rep.theta + 3 * rep.estimate.stderr:.6f} at t={t_lorden:.6g}"),
        (bool(order_ok.all()), f"tv-order: tv_binned <= tv_coupling + joint CI at {int(order_ok.sum())}/{t.size} times"),
        (bool(dom_ok.all()), f"domination: tv_coupling <= 2K/t^alpha + CI at {int(dom_ok.sum())}/{t.size} times"),
        (bool(mono_ok.all()), f"monotone: isotonic projection within CI at {int(mono_ok.sum())}/{t.size} times"),
        (failed_frac < 1e-3, f"coupled: non-coupled fraction {failed_frac:.6g} < 0.001"),
    ]
    for ok, text in checks:
        lines.append(f"{'PASS' if ok else 'FAIL'} {text}")
    lines.append("t,tv_binned,ci,tv_coupling,ci,bound")
    for row in zip(t, binned.tv_hat, binned.ci_halfwidth, tail.tv_hat, tail.ci_halfwidth, bound):
        lines.append(",".join(f"{v:.6g}" for v in row))
    report = "\n".join(lines) + "\n"
    _emit(args, report, out)
    return 0 if all(ok for ok, _ in checks) else 1


COMMANDS = {
    "bound": cmd_bound,
    "couple": cmd_couple,
    "lorden": cmd_lorden,
    "tvcurve": cmd_tvcurve,
    "lemma-check": cmd_lemma_check,
    "verify": cmd_verify,
}


def main(argv=None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args, out, err)
    except SystemExit as exc:  # --help
        return int(exc.code) if isinstance(exc.code, int) else 2
    except (UsageError, *INPUT_ERRORS) as exc:
        err.write(f"renewcouple: error: {' '.join(str(exc).split())}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
