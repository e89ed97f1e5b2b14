"""Command-line front end for feasibility checks, solves, oracles and agreement batches."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import files
from .lagrangian import DomainBoundary, finite_difference_check
from .oracle import (FAMILIES, brute_force_feasible, cross_validate, generate_instance, hankel_check,
                     support_kind_of, write_xval_csv, xval_summary)
from .quadrature import QuadratureFailure
from .solver import FEASIBLE_BOUNDARY, FEASIBLE_INTERIOR, INFEASIBLE, maximize, reconstruct_density

EXIT_FEASIBLE = 0
EXIT_INFEASIBLE = 1
EXIT_INCONCLUSIVE = 2
EXIT_USAGE = 3
EXIT_NUMERICAL = 4

GRADCHECK_POINTS = 4
GRADCHECK_JITTER = 0.1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _status_exit(status: str) -> int:
    if status in (FEASIBLE_INTERIOR, FEASIBLE_BOUNDARY):
        return EXIT_FEASIBLE
    if status == INFEASIBLE:
        return EXIT_INFEASIBLE
    return EXIT_INCONCLUSIVE


def _fmt(v) -> str:
    return np.array2string(np.asarray(v, dtype=float), precision=10, separator=", ", max_line_width=120)


def _load(args):
    inst = files.read_instance(args.instance)
    changes = {}
    if args.tol_quad is not None:
        changes["quad_rel"] = args.tol_quad
    if args.tol_grad is not None:
        changes["grad"] = args.tol_grad
    if args.max_iter is not None:
        changes["max_iter"] = args.max_iter
    return inst.with_tol(**changes) if changes else inst


def _print_outcome(out, inst) -> None:
    print(f"verdict: {out.status} ({out.message})")
    if out.value is not None:
        print(f"max L: {out.value!r}")
    if out.lam_star is not None and out.feasible:
        print(f"lambda*: {_fmt(out.lam_star)}")
    if out.deficits is not None:
        print(f"top-degree deficits g - M: {_fmt(out.deficits)}")
    if out.certificate is not None:
        c = out.certificate
        print(f"certificate p = {c.p}")
        print(f"  max p on samples: {c.sign_check!r}  phi_g(p): {c.riesz_value!r}  ({c.source})")
    lam = "" if out.lam_star is None or not out.feasible else ",".join(repr(float(x)) for x in out.lam_star)
    cert = "" if out.certificate is None else ",".join(
        repr(float(x)) for x in out.certificate.p.to_vector(inst.index_set))
    print(f"RESULT: status={out.status} iterations={len(out.trace)} value={out.value!r} "
          f"lambda=[{lam}] certificate=[{cert}]")


def cmd_check(args) -> int:
    inst = _load(args)
    out = maximize(inst)
    _print_outcome(out, inst)
    return _status_exit(out.status)


def cmd_solve(args) -> int:
    inst = _load(args)
    out = maximize(inst)
    _print_outcome(out, inst)
    report = out.to_json(inst)
    report["instance"] = files.instance_to_json(inst)
    report_path = Path(args.out) if args.out else Path(args.instance).with_suffix(".report.json")
    files.write_report(report, report_path)
    print(f"report: {report_path}")
    if out.feasible:
        pts = files.density_grid(inst, args.density_grid)
        samples, _ = reconstruct_density(out.lam_star, inst, pts)
        csv_path = report_path.with_name(report_path.stem + ".density.csv")
        files.write_density_csv(samples, inst.n, csv_path)
        print(f"density samples: {csv_path} ({len(samples)} rows)")
    return _status_exit(out.status)


def cmd_oracle(args) -> int:
    inst = _load(args)
    code = EXIT_INCONCLUSIVE
    verdict = "n/a"
    if inst.n == 1:
        hv = hankel_check(inst.moments, support_kind_of(inst))
        verdict = hv.verdict
        print(f"hankel: {hv.verdict} (min normalized eigenvalues {_fmt(hv.min_eigenvalues)}, eps {hv.eps:.3g})")
        code = EXIT_FEASIBLE if hv.verdict == "interior" else EXIT_INFEASIBLE
    else:
        print("hankel: not applicable for n > 1")
    residual = float("nan")
    if inst.n <= 2:
        bf = brute_force_feasible(inst, args.grid_radius, args.grid_points)
        residual = bf.residual
        flag = " (ill-conditioned)" if bf.ill_conditioned else ""
        print(f"brute force: residual {bf.residual:.3e} over {len(bf.nodes)} nodes in [-{args.grid_radius}, "
              f"{args.grid_radius}]^{inst.n}{flag}")
    print(f"RESULT: hankel={verdict} bf_residual={residual!r}")
    return code


def cmd_gen(args) -> int:
    if args.family not in FAMILIES:
        raise UsageError(f"--family must be one of {FAMILIES}")
    inst, _ = generate_instance(args.seed, args.family, args.k or 2, n=args.n)
    changes = {}
    if args.tol_quad is not None:
        changes["quad_rel"] = args.tol_quad
    if args.tol_grad is not None:
        changes["grad"] = args.tol_grad
    if args.max_iter is not None:
        changes["max_iter"] = args.max_iter
    if changes:
        inst = inst.with_tol(**changes)
    if args.out:
        files.write_instance(inst, args.out)
        print(f"instance: {args.out}")
    else:
        sys.stdout.write(files.json.dumps(files.instance_to_json(inst), indent=2) + "\n")
    return EXIT_FEASIBLE


def cmd_xval(args) -> int:
    workers = args.workers or os.cpu_count() or 1
    rows = cross_validate(range(args.seeds), args.k, workers)
    out = args.out or "xval.csv"
    write_xval_csv(rows, out)
    s = xval_summary(rows)
    print(f"rows: {len(rows)} -> {out}")
    print(f"RESULT: agree={s['agree']} allowed={s['allowed']} contradictions={s['contradiction']} "
          f"decisive={s['decisive']} decisive_agreement={s['decisive_agreement']:.4f} wall_time={s['wall_time']:.1f}")
    return EXIT_FEASIBLE if s["contradiction"] == 0 else EXIT_INFEASIBLE


def cmd_gradcheck(args) -> int:
    inst = _load(args)
    rng = np.random.default_rng(args.seed)
    worst_g = worst_h = worst_eig = 0.0
    base = inst.initial_point()
    done = 0
    for _ in range(10 * args.points):
        if done == args.points:
            break
        lam = base + rng.uniform(-GRADCHECK_JITTER, GRADCHECK_JITTER, size=base.shape)
        try:
            fd = finite_difference_check(lam, inst)
        except DomainBoundary:
            continue
        done += 1
        worst_g = max(worst_g, fd.grad_rel_error)
        worst_h = max(worst_h, fd.hess_rel_error)
        worst_eig = max(worst_eig, fd.hess_max_eig / fd.hess_norm)
        print(f"point {done}: grad rel err {fd.grad_rel_error:.3e}  hess rel err {fd.hess_rel_error:.3e}  "
              f"max eig / |H| {fd.hess_max_eig / fd.hess_norm:.3e}")
    ok = done > 0 and worst_g <= 1e-5 and worst_h <= 1e-4 and worst_eig <= 1e-8
    print(f"RESULT: points={done} grad_rel={worst_g:.3e} hess_rel={worst_h:.3e} "
          f"max_eig_rel={worst_eig:.3e} ok={ok}")
    return EXIT_FEASIBLE if ok else EXIT_NUMERICAL


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tmoment", description="Decide whether truncated moments admit a density.")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    def tolerances(p):
        p.add_argument("--tol-quad", type=float, help="relative quadrature tolerance")
        p.add_argument("--tol-grad", type=float, help="gradient tolerance for stationarity")
        p.add_argument("--max-iter", type=int, help="Newton iteration budget")

    p = sub.add_parser("check", help="decide feasibility and print the verdict")
    p.add_argument("instance")
    tolerances(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("solve", help="decide feasibility and write a report plus density samples")
    p.add_argument("instance")
    tolerances(p)
    p.add_argument("--out", help="report path (default: <instance>.report.json)")
    p.add_argument("--density-grid", type=int, default=201, help="samples per axis for the density CSV")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="Hankel test and brute-force nonnegative fit")
    p.add_argument("instance")
    tolerances(p)
    p.add_argument("--grid-radius", type=float, default=8.0)
    p.add_argument("--grid-points", type=int, default=801, help="total number of grid nodes")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gen", help="write a known-feasible mixture instance")
    p.add_argument("--family", default="gaussian", help=f"one of {', '.join(FAMILIES)}")
    p.add_argument("--k", type=int, help="half-degree (default 2)")
    p.add_argument("--n", type=int, default=1, help="dimension")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="instance path (default: stdout)")
    tolerances(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("xval", help="solver vs oracle agreement batch")
    p.add_argument("--seeds", type=int, default=200, help="number of seeds (0..N-1)")
    p.add_argument("--k", type=int, help="fix the half-degree (default: cycle 1..3)")
    p.add_argument("--workers", type=int, help="worker processes (default: hardware threads)")
    p.add_argument("--out", help="CSV path (default: xval.csv)")
    p.set_defaults(func=cmd_xval)

    p = sub.add_parser("gradcheck", help="finite-difference check of gradient and Hessian")
    p.add_argument("instance")
    tolerances(p)
    p.add_argument("--points", type=int, default=GRADCHECK_POINTS)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (files.InstanceParseError, UsageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QuadratureFailure, DomainBoundary, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
