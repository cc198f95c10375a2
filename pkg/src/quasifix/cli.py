"""``quasifix`` command-line front end.

Exit codes: 0 when every requested check passes and every run converges, 2
when a check fails or a run does not converge, 1 for usage or config errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import PRESETS, ConfigError, SystemConfig, canonical_json, load_config, preset
from .contraction import audit_hypotheses, image_samples, verify_inequality
from .expr import ExprError
from .hyperspace import FiniteCompactSet, hausdorff, q_gap, read_set_csv, set_csv
from .ifs import (AttractorOverflow, audit_monotonicity, compute_attractor, random_set_pairs,
                  verify_hyperspace_contraction)
from .picard import iterate, trajectory_csv
from .report import FAIL, PASS, Report
from .simfun import check_z_properties
from .spaces import QuasiMetricError, SampleGrid, check_axioms, estimate_delta

__all__ = ["run", "main"]

OK, FAILED, USAGE = 0, 2, 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _parser() -> _Parser:
    common = _Parser(add_help=False)
    src = common.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=sorted(PRESETS), help="built-in system")
    src.add_argument("--config", metavar="FILE", help="JSON system config")
    common.add_argument("--json", action="store_true", help="print reports as JSON")

    p = _Parser(prog="quasifix", description="Z-contractions on quasi-metric intervals.")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    v = sub.add_parser("verify", parents=[common], help="check axioms, contraction and hypotheses")
    v.add_argument("--inequality-only", action="store_true",
                   help="only run the point-level contraction inequality")
    v.add_argument("--samples", type=int, default=201, metavar="N", help="uniform grid size (201)")
    v.add_argument("--seed", type=int, default=0)

    it = sub.add_parser("iterate", parents=[common], help="Picard iteration of a single map")
    it.add_argument("--x0", type=float, required=True)
    it.add_argument("--tol", type=float, default=1e-12)
    it.add_argument("--max-iter", type=int, default=100)
    it.add_argument("--out", metavar="CSV", help="trajectory CSV (default: stdout)")

    a = sub.add_parser("attractor", parents=[common], help="iterate the fractal operator")
    init = a.add_mutually_exclusive_group(required=True)
    init.add_argument("--grid", type=int, metavar="N", help="start from an N-point domain grid")
    init.add_argument("--initial", metavar="CSV", help="start from a set file (header x)")
    a.add_argument("--tol", type=float, default=1e-6)
    a.add_argument("--max-iter", type=int, default=100)
    a.add_argument("--max-points", type=int, default=4096)
    a.add_argument("--out", metavar="CSV", help="final set CSV")
    a.add_argument("--meta", metavar="JSON", help="run metadata JSON")

    h = sub.add_parser("hausdorff", parents=[common], help="Hausdorff-Pompeu distance of two sets")
    h.add_argument("--set-a", required=True, metavar="CSV")
    h.add_argument("--set-b", required=True, metavar="CSV")

    pr = sub.add_parser("preset", help="list or dump built-in presets")
    prs = pr.add_subparsers(dest="action", required=True, metavar="ACTION")
    prs.add_parser("list")
    show = prs.add_parser("show")
    show.add_argument("name", choices=sorted(PRESETS))
    return p


def _config(args) -> SystemConfig:
    return preset(args.preset) if args.preset else load_config(args.config)


def _emit(report: Report, args) -> int:
    if args.json:
        print(report.to_json())
    else:
        for c in report.checks:
            line = f"{c.status.upper():8s} {c.name}"
            if c.witness is not None:
                line += f"  witness={list(c.witness)}"
            if c.detail:
                line += f"  ({c.detail})"
            print(line)
    return OK if report.passed else FAILED


def _delta_check(space, grid) -> Report:
    est = estimate_delta(space, grid)
    r = Report()
    if est.unbounded or est.warning:
        r.add("delta-estimate", FAIL, est.witness, est.warning)
    else:
        r.add("delta-estimate", PASS, est.witness, f"sampled delta {est.value!r}")
    return r


def _z_grid(space, grid) -> np.ndarray:
    ts = image_samples(space, grid)
    t_max = float(ts[-1]) if ts.size else 1.0
    return np.linspace(0.0, t_max, 101)


def cmd_verify(args) -> int:
    cfg = _config(args)
    space = cfg.space
    if args.samples < 2:
        raise UsageError("--samples must be at least 2")
    grid = SampleGrid.uniform(space.lo, space.hi, args.samples)
    systems = cfg.map_systems()
    tag = (lambda i: "") if not cfg.is_ifs else (lambda i: f"w{i + 1}:")
    report = Report()

    if not args.inequality_only:
        report.extend(check_axioms(space, grid), "axioms:")
        report.extend(_delta_check(space, grid), "axioms:")
        zg = _z_grid(space, grid)
        for i, s in enumerate(systems):
            report.extend(check_z_properties(s.xi, zg, zg, seed=args.seed), f"{tag(i)}xi:")
        if cfg.is_ifs and len(systems) > 1:
            report.extend(check_z_properties(cfg.ifs.combined_xi, zg, zg, seed=args.seed),
                          "combined-xi:")

    for i, s in enumerate(systems):
        report.extend(verify_inequality(s, grid), tag(i))

    if not args.inequality_only:
        for i, s in enumerate(systems):
            report.extend(audit_hypotheses(s, grid, seed=args.seed), tag(i))
        if cfg.is_ifs:
            zg = _z_grid(space, grid)
            report.extend(audit_monotonicity(cfg.ifs, zg, zg))
            pairs = random_set_pairs(space, 64, seed=args.seed)
            report.extend(verify_hyperspace_contraction(cfg.ifs, pairs))
    return _emit(report, args)


def cmd_iterate(args) -> int:
    cfg = _config(args)
    if cfg.is_ifs:
        raise UsageError("iterate needs a single-map system; use 'attractor' for an IFS")
    traj = iterate(cfg.system, args.x0, args.tol, args.max_iter)
    csv_text = trajectory_csv(traj)
    summary = {
        "x0": traj.x0,
        "converged": traj.converged,
        "fixed_point": traj.fixed_point,
        "iterations_used": traj.iterations_used,
        "last": traj.iterates[-1],
    }
    if args.out:
        Path(args.out).write_text(csv_text, encoding="utf-8")
    if args.json:
        print(json.dumps(summary, indent=2))
    elif args.out:
        state = "converged" if traj.converged else "did not converge"
        print(f"{state} after {traj.iterations_used} iterations; last iterate {traj.iterates[-1]!r}")
    else:
        sys.stdout.write(csv_text)
    return OK if traj.converged else FAILED


def cmd_attractor(args) -> int:
    cfg = _config(args)
    space = cfg.space
    if args.initial:
        A0 = read_set_csv(Path(args.initial).read_text(encoding="utf-8"))
    else:
        if args.grid < 1:
            raise UsageError("--grid must be at least 1")
        A0 = FiniteCompactSet.grid(space.lo, space.hi, args.grid) if args.grid > 1 \
            else FiniteCompactSet.of(space.lo)
    if args.max_points < 1:
        raise UsageError("--max-points must be at least 1")
    try:
        run_ = compute_attractor(cfg.as_ifs(), A0, args.tol, args.max_iter, args.max_points)
    except AttractorOverflow as exc:
        print(f"attractor: {exc}", file=sys.stderr)
        return FAILED
    meta = run_.metadata()
    if args.out:
        Path(args.out).write_text(set_csv(run_.final), encoding="utf-8")
    if args.meta:
        Path(args.meta).write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    if args.json:
        print(json.dumps({**meta, "size": len(run_.final), "min": run_.final.min,
                          "max": run_.final.max}, indent=2))
    else:
        state = "converged" if run_.converged else "did not converge"
        last = run_.h_trace[-1] if run_.h_trace else None
        print(f"{state} after {run_.stopped_at} steps; {len(run_.final)} points in "
              f"[{run_.final.min!r}, {run_.final.max!r}]; last step h_q {last!r}")
    return OK if run_.converged else FAILED


def cmd_hausdorff(args) -> int:
    cfg = _config(args)
    A = read_set_csv(Path(args.set_a).read_text(encoding="utf-8"))
    B = read_set_csv(Path(args.set_b).read_text(encoding="utf-8"))
    A.check_within(cfg.space)
    B.check_within(cfg.space)
    h = hausdorff(A, B, cfg.space)
    if args.json:
        print(json.dumps({"q_ab": q_gap(A, B, cfg.space), "q_ba": q_gap(B, A, cfg.space), "h": h},
                         indent=2))
    else:
        print(repr(h))
    return OK


def cmd_preset(args) -> int:
    if args.action == "list":
        for name in sorted(PRESETS):
            print(name)
    else:
        sys.stdout.write(canonical_json(preset(args.name).descriptor))
    return OK


_COMMANDS = {"verify": cmd_verify, "iterate": cmd_iterate, "attractor": cmd_attractor,
             "hausdorff": cmd_hausdorff, "preset": cmd_preset}


def run(argv) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(list(argv))
        return _COMMANDS[args.command](args)
    except SystemExit as exc:  # --help
        return exc.code if isinstance(exc.code, int) else USAGE
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return USAGE
    except (ConfigError, ExprError, QuasiMetricError, ValueError, OSError) as exc:
        print(f"quasifix: error: {exc}", file=sys.stderr)
        return USAGE


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
