"""Picard iteration with forward/backward step diagnostics."""
from __future__ import annotations

import csv
import io
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .contraction import ContractionSystem
from .report import FAIL, PASS, Report, max_workers
from .spaces import QuasiMetricError

__all__ = ["Trajectory", "iterate", "uniqueness_probe", "trajectory_csv"]

CSV_HEADER = ("n", "x", "q_fwd", "q_bwd")


@dataclass
class Trajectory:
    x0: float
    iterates: list[float] = field(default_factory=list)
    q_fwd: list[float] = field(default_factory=list)
    q_bwd: list[float] = field(default_factory=list)
    converged: bool = False
    fixed_point: float | None = None
    iterations_used: int = 0


def iterate(sys: ContractionSystem, x0: float, tol: float = 1e-12,
            max_iter: int = 100) -> Trajectory:
    """Iterate ``x_{n+1} = T(x_n)`` from `x0`.

    Stops at the first ``n`` with ``max(q(x_n, x_{n+1}), q(x_{n+1}, x_n)) < tol``
    and then reports ``x_{n+1}`` as the fixed point; ``iterations_used`` is that
    ``n``.  Hitting `max_iter` is a normal, non-converged outcome.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    if not sys.space.contains(x0):
        raise QuasiMetricError(f"x0 = {x0!r} outside the domain")
    q = sys.space.raw
    traj = Trajectory(float(x0), [float(x0)])
    x = float(x0)
    for n in range(max_iter):
        nxt = float(sys.apply(x))
        traj.iterates.append(nxt)
        fwd, bwd = float(q(x, nxt)), float(q(nxt, x))
        traj.q_fwd.append(fwd)
        traj.q_bwd.append(bwd)
        traj.iterations_used = n
        if max(fwd, bwd) < tol:
            traj.converged = True
            traj.fixed_point = nxt
            break
        x = nxt
    else:
        traj.iterations_used = max_iter
    return traj


def uniqueness_probe(sys: ContractionSystem, seeds, tol: float = 1e-12,
                     max_iter: int = 100) -> Report:
    """Run `iterate` from every seed; pass iff all converge to one point.

    Seeds run concurrently (capped by ``QUASIFIX_THREADS``); the report order
    follows the seed order.
    """
    seeds = [float(s) for s in seeds]
    if not seeds:
        raise ValueError("need at least one seed")
    with ThreadPoolExecutor(max_workers=max_workers()) as pool:
        trajs = list(pool.map(lambda s: iterate(sys, s, tol, max_iter), seeds))
    report = Report()
    for s, tr in zip(seeds, trajs):
        if tr.converged:
            report.add(f"converge[{s!r}]", PASS,
                       detail=f"fixed point {tr.fixed_point!r} after {tr.iterations_used} iterations")
        else:
            report.add(f"converge[{s!r}]", FAIL, (s, tr.iterates[-1]),
                       f"no convergence within {max_iter} iterations")
    if not all(tr.converged for tr in trajs):
        report.add("unique-limit", FAIL, detail="not every seed converged")
        return report
    q = sys.space.raw
    for (sa, ta), (sb, tb) in itertools.combinations(zip(seeds, trajs), 2):
        d = max(float(q(ta.fixed_point, tb.fixed_point)), float(q(tb.fixed_point, ta.fixed_point)))
        if not d < tol:
            report.add("unique-limit", FAIL, (sa, ta.fixed_point, sb, tb.fixed_point),
                       f"limits differ: q = {d!r} >= tol")
            return report
    pts = sorted({tr.fixed_point for tr in trajs})
    report.add("unique-limit", PASS, detail=f"all {len(seeds)} seeds agree; limits {pts}")
    return report


def trajectory_csv(traj: Trajectory) -> str:
    """CSV text with header ``n,x,q_fwd,q_bwd``; the final row has no step distances."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for n, x in enumerate(traj.iterates):
        if n < len(traj.q_fwd):
            w.writerow([n, repr(x), repr(traj.q_fwd[n]), repr(traj.q_bwd[n])])
        else:
            w.writerow([n, repr(x), "", ""])
    return buf.getvalue()


def read_trajectory_csv(text: str) -> np.ndarray:
    """Iterates column of a trajectory CSV, as floats."""
    rows = list(csv.DictReader(io.StringIO(text)))
    return np.array([float(r["x"]) for r in rows])
