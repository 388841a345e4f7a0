"""``sdperc`` command-line driver.

Exit codes: 0 success, 1 validation error, 2 runtime failure, 3 selftest failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from fractions import Fraction

from .dynamics import DynParams, crossing_estimate_dynamics, params_from_times
from .errors import ContractViolation
from .estimators.criterion import CriterionConfig, estimate_phi, finite_size_criterion
from .estimators.mc import estimate_crossing, estimate_pc, estimate_theta
from .estimators.runner import default_threads
from .heatmap import emit_heatmap
from .lattice import rectangle_window
from .sdp import DestructionRule, RuleKind, SdpParams
from .selftest import run_selftest
from .sweep import SweepSpec, export_csv, record_pc, run_sweep

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_SELFTEST = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with status 2
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _common(sample_default: int = 1000) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--samples", type=int, default=sample_default)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None, help="default: $SDP_THREADS or CPU count")
    p.add_argument("--json", action="store_true", help="print one machine-readable result")
    return p


def _model() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    _rule_args(p)
    return p


def _rule_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rule", choices=[k.value for k in RuleKind], default=RuleKind.WINDOW_BOUNDARY.value)
    p.add_argument("--k", type=int, default=None, help="range of the finite-range rule (default 1)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="sdperc", description="Self-destructive percolation estimators.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("theta", parents=[_model(), _common()], help="one-arm probability theta_n")
    s.add_argument("--n", type=int, required=True)

    s = sub.add_parser("crossing", parents=[_model(), _common()], help="crossing probability f(rho, n)")
    s.add_argument("--rho", type=Fraction, required=True)
    s.add_argument("--n", type=int, required=True)

    s = sub.add_parser("criterion", parents=[_model(), _common(200_000)], help="finite-size criterion at one scale")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--alpha", type=float, default=0.005)
    s.add_argument("--phi-k", type=_ints, default=None, help="radii for a decay-rate fit that sets the admissible scale")

    s = sub.add_parser("dynamics", parents=[_common()], help="crossing probability of the clock dynamics")
    s.add_argument("--tau", type=float, required=True)
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--rho", type=Fraction, default=Fraction(1))
    s.add_argument("--n", type=int, required=True)
    _rule_args(s)

    s = sub.add_parser("pc", parents=[_common(2000)], help="estimate the Bernoulli critical density")
    s.add_argument("--n", type=int, default=64)
    s.add_argument("--steps", type=int, default=8)
    s.add_argument("--store", default=None, help="record the estimate in this store")

    s = sub.add_parser("sweep", parents=[_common(1000)], help="resumable sweep over a (p, delta, n) grid")
    s.add_argument("--p-grid", type=_floats, required=True)
    s.add_argument("--delta-grid", type=_floats, required=True)
    s.add_argument("--scales", type=_ints, required=True)
    s.add_argument("--quantity", choices=("theta", "crossing", "criterion"), default="theta")
    s.add_argument("--rho", type=Fraction, default=None)
    s.add_argument("--alpha", type=float, default=0.005)
    s.add_argument("--store", required=True)
    s.add_argument("--max-evaluations", type=int, default=None)
    _rule_args(s)

    s = sub.add_parser("export", help="write the store as CSV")
    s.add_argument("--store", required=True)
    s.add_argument("--out", required=True)

    s = sub.add_parser("heatmap", help="write an SVG heatmap of one stored quantity")
    s.add_argument("--store", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--quantity", default="theta", help="stored quantity label, e.g. theta or crossing(rho=3)")
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--pc", type=float, default=None, help="marker position; default: last stored estimate")

    s = sub.add_parser("selftest", help="run the invariant suite")
    s.add_argument("--samples", type=int, default=1000)
    s.add_argument("--seed", type=int, default=7)
    return ap


def _rule(args) -> DestructionRule:
    if args.k is not None and args.rule != RuleKind.FINITE_RANGE.value:
        raise ContractViolation("--k only applies to --rule finite-range")
    return DestructionRule.parse(args.rule, args.k)


def _emit(args, quantity: str, params: dict, est, t0: float, extra: dict | None = None) -> None:
    elapsed = (time.perf_counter() - t0) * 1000.0
    if args.json:
        doc = {
            "quantity": quantity,
            "params": params,
            "estimate": est.point,
            "ci": [est.ci_low, est.ci_high],
            "n_samples": est.n_samples,
            "seed": est.seed,
            "elapsed_ms": elapsed,
        }
        if extra:
            doc["params"] = {**params, **extra}
        print(json.dumps(doc, sort_keys=True))
    else:
        print(f"{est.quantity}: {est.point:.6g}  95% CI [{est.ci_low:.6g}, {est.ci_high:.6g}]  "
              f"n={est.n_samples} seed={est.seed} ({elapsed:.0f} ms)")
        for k, v in (extra or {}).items():
            print(f"  {k}: {v}")


def _threads(args) -> int:
    t = args.threads if args.threads is not None else default_threads()
    if t < 1:
        raise ContractViolation("--threads must be positive")
    return t


def cmd_theta(args) -> int:
    t0 = time.perf_counter()
    params, rule = SdpParams(args.p, args.delta), _rule(args)
    est = estimate_theta(params, args.n, rule, args.samples, args.seed, _threads(args))
    _emit(args, "theta", {"p": args.p, "delta": args.delta, "n": args.n, "rule": str(rule)}, est, t0)
    return EXIT_OK


def cmd_crossing(args) -> int:
    t0 = time.perf_counter()
    params, rule = SdpParams(args.p, args.delta), _rule(args)
    est = estimate_crossing(params, args.rho, args.n, rule, args.samples, args.seed, _threads(args))
    p = {"p": args.p, "delta": args.delta, "rho": str(args.rho), "n": args.n, "rule": str(rule)}
    _emit(args, "crossing", p, est, t0)
    return EXIT_OK


def cmd_criterion(args) -> int:
    t0 = time.perf_counter()
    params, rule = SdpParams(args.p, args.delta), _rule(args)
    threads = _threads(args)
    if args.phi_k:
        phi = estimate_phi(args.p, args.phi_k, max(1000, args.samples // 100), args.seed, threads)
        cfg = CriterionConfig.from_phi(args.alpha, args.n, phi.phi)
    else:
        cfg = CriterionConfig(args.alpha, args.n)
    v = finite_size_criterion(params, cfg, rule, args.samples, args.seed, threads)
    p = {"p": args.p, "delta": args.delta, "n": args.n, "alpha": args.alpha, "rule": str(rule)}
    extra = {"holds": v.holds, "margin": v.margin, "n_hat": cfg.n_hat, "stopped_early": v.stopped_early}
    _emit(args, "criterion", p, v.f3n, t0, extra)
    return EXIT_OK


def cmd_dynamics(args) -> int:
    t0 = time.perf_counter()
    rule = _rule(args)
    d = DynParams(args.tau, args.t)
    region = rectangle_window(args.rho, args.n)
    est = crossing_estimate_dynamics(region, d, rule, args.samples, args.seed)
    mapped = params_from_times(d)
    p = {"tau": args.tau, "t": args.t, "rho": str(args.rho), "n": args.n, "rule": str(rule)}
    _emit(args, "dynamics-crossing", p, est, t0, {"p": mapped.p, "delta": mapped.delta})
    return EXIT_OK


def cmd_pc(args) -> int:
    t0 = time.perf_counter()
    est = estimate_pc([args.n], args.samples, args.seed, steps=args.steps, threads=_threads(args))
    if args.store:
        record_pc(args.store, est.to_dict())
    elapsed = (time.perf_counter() - t0) * 1000.0
    if args.json:
        doc = {
            "quantity": "pc",
            "params": {"s": args.n, "steps": args.steps},
            "estimate": est.point,
            "ci": [est.lo, est.hi],
            "n_samples": args.samples,
            "seed": args.seed,
            "elapsed_ms": elapsed,
        }
        print(json.dumps(doc, sort_keys=True))
    else:
        print(f"p_c estimate {est.point:.5f} in [{est.lo:.5f}, {est.hi:.5f}] (s={args.n}, {elapsed:.0f} ms)")
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = SweepSpec(
        tuple(args.p_grid),
        tuple(args.delta_grid),
        tuple(args.scales),
        _rule(args),
        args.samples,
        args.seed,
        args.quantity,
        args.rho,
        args.alpha,
    )
    rep = run_sweep(spec, args.store, _threads(args), args.max_evaluations)
    msg = {"spec_hash": rep.spec_hash, "evaluated": rep.evaluated, "skipped": rep.skipped, "remaining": rep.remaining}
    print(json.dumps(msg, sort_keys=True) if args.json else
          f"spec {rep.spec_hash}: evaluated {rep.evaluated}, already stored {rep.skipped}, remaining {rep.remaining}")
    return EXIT_OK


def cmd_export(args) -> int:
    n = export_csv(args.store, args.out)
    print(f"wrote {n} rows to {args.out}")
    return EXIT_OK


def cmd_heatmap(args) -> int:
    out = emit_heatmap(args.store, args.quantity, args.out, args.n, args.pc)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_selftest(args) -> int:
    checks = run_selftest(args.samples, args.seed, emit=print)
    failed = [c for c in checks if not c.ok]
    print(f"selftest: {len(checks) - len(failed)}/{len(checks)} passed")
    return EXIT_SELFTEST if failed else EXIT_OK


COMMANDS = {
    "theta": cmd_theta,
    "crossing": cmd_crossing,
    "criterion": cmd_criterion,
    "dynamics": cmd_dynamics,
    "pc": cmd_pc,
    "sweep": cmd_sweep,
    "export": cmd_export,
    "heatmap": cmd_heatmap,
    "selftest": cmd_selftest,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_VALIDATION
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except ValueError as exc:  # includes ContractViolation
        print(f"sdperc: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime error
        print(f"sdperc: runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
