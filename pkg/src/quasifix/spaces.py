"""Quasi-metric spaces on closed real intervals.

A space is a distance ``q(x, y)`` that may be asymmetric.  The shipped
presets are closed-form; user spaces are piecewise in the order of the
arguments, with one expression for ``x > y`` and one for ``x < y`` and the
diagonal forced to zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .expr import Expression, parse
from .report import FAIL, PASS, Check, Report

__all__ = [
    "QuasiMetricSpace", "SampleGrid", "DeltaEstimate", "QuasiMetricError",
    "eval_q", "check_axioms", "estimate_delta", "ball_contains",
    "probe_convergence_equivalence", "SPACE_PRESETS",
]

TRIANGLE_SLACK = 1e-12

SPACE_PRESETS = ("sorgenfrey", "weighted-abs", "example3", "example4")


class QuasiMetricError(ValueError):
    pass


@dataclass(frozen=True)
class QuasiMetricSpace:
    kind: str
    lo: float = 0.0
    hi: float = 1.0
    lam: float | None = None
    above: Expression | None = None  # q for x > y (piecewise only)
    below: Expression | None = None  # q for x < y (piecewise only)
    declared_delta: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo < self.hi):
            raise QuasiMetricError(f"domain must be a bounded interval lo < hi, got [{self.lo}, {self.hi}]")
        if self.kind not in SPACE_PRESETS + ("piecewise",):
            raise QuasiMetricError(f"unknown space kind {self.kind!r}")
        if self.kind == "weighted-abs" and not (self.lam is not None and self.lam > 0):
            raise QuasiMetricError("weighted-abs needs lambda > 0")
        if self.kind == "piecewise":
            if self.above is None or self.below is None:
                raise QuasiMetricError("piecewise space needs both the x>y and x<y expressions")
            for e in (self.above, self.below):
                e.function("x", "y")  # rejects stray variables
        if self.declared_delta is not None and not self.declared_delta > 0:
            raise QuasiMetricError("declared delta must be positive")

    # -- constructors ---------------------------------------------------------

    @classmethod
    def sorgenfrey(cls, lo=0.0, hi=1.0, **kw):
        return cls("sorgenfrey", lo, hi, **kw)

    @classmethod
    def weighted_abs(cls, lam, lo=0.0, hi=1.0, **kw):
        return cls("weighted-abs", lo, hi, lam=float(lam), **kw)

    @classmethod
    def example3(cls, lo=0.0, hi=1.0, **kw):
        return cls("example3", lo, hi, **kw)

    @classmethod
    def example4(cls, lo=0.0, hi=1.0, **kw):
        return cls("example4", lo, hi, **kw)

    @classmethod
    def piecewise(cls, above: str | Expression, below: str | Expression, lo=0.0, hi=1.0, **kw):
        above = parse(above) if isinstance(above, str) else above
        below = parse(below) if isinstance(below, str) else below
        return cls("piecewise", lo, hi, above=above, below=below, **kw)

    # -- evaluation -----------------------------------------------------------

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains(self, x) -> bool:
        return bool(np.all((np.asarray(x) >= self.lo) & (np.asarray(x) <= self.hi)))

    def raw(self, x, y):
        """Vectorised ``q(x, y)`` without any validation."""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        x, y = np.broadcast_arrays(x, y)
        gt = x > y
        lt = x < y
        out = np.zeros(x.shape, dtype=np.float64)
        k = self.kind
        if k == "example3":
            out[gt] = 2.0 * x[gt]
            out[lt] = y[lt]
        elif k == "example4":
            out[gt] = 8.0 * x[gt]
            out[lt] = 4.0 * y[lt]
        elif k == "weighted-abs":
            out[gt] = x[gt] - y[gt]
            out[lt] = self.lam * (y[lt] - x[lt])
        elif k == "sorgenfrey":
            out[gt] = 1.0
            out[lt] = y[lt] - x[lt]
        else:
            if gt.any():
                out[gt] = self.above(x=x[gt], y=y[gt])
            if lt.any():
                out[lt] = self.below(x=x[lt], y=y[lt])
        return out

    def matrix(self, a, b) -> np.ndarray:
        """``M[i, j] = q(a[i], b[j])``."""
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        return self.raw(a[:, None], b[None, :])

    def to_descriptor(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.kind == "weighted-abs":
            d["lambda"] = self.lam
        if self.kind == "piecewise":
            d["above"] = self.above.text
            d["below"] = self.below.text
        d["domain"] = [self.lo, self.hi]
        if self.declared_delta is not None:
            d["delta"] = self.declared_delta
        return d


def eval_q(space: QuasiMetricSpace, x: float, y: float) -> float:
    if not (space.contains(x) and space.contains(y)):
        raise QuasiMetricError(f"arguments ({x}, {y}) outside the domain [{space.lo}, {space.hi}]")
    if x == y:
        return 0.0
    value = float(space.raw(x, y))
    if value < 0:
        raise QuasiMetricError(f"axiom violation: q({x}, {y}) = {value} is negative")
    return value


@dataclass(frozen=True)
class SampleGrid:
    points: np.ndarray
    seed: int = 0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 1 or pts.size == 0:
            raise ValueError("sample grid must be a nonempty 1-d sequence")
        if pts.size > 1 and not np.all(np.diff(pts) > 0):
            raise ValueError("sample grid must be strictly ascending")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, lo: float, hi: float, n: int) -> "SampleGrid":
        return cls(np.linspace(lo, hi, n))

    @classmethod
    def default(cls, lo: float, hi: float, n_uniform: int = 101, n_random: int = 100,
                seed: int = 0) -> "SampleGrid":
        """Equispaced nodes plus seeded uniform draws, merged and deduplicated."""
        pts = np.linspace(lo, hi, n_uniform)
        if n_random:
            rng = np.random.default_rng(seed)
            pts = np.concatenate([pts, rng.uniform(lo, hi, n_random)])
        return cls(np.unique(pts), seed)

    @classmethod
    def for_space(cls, space: QuasiMetricSpace, **kw) -> "SampleGrid":
        return cls.default(space.lo, space.hi, **kw)

    def __len__(self) -> int:
        return self.points.size

    def check_within(self, space: QuasiMetricSpace):
        if not space.contains(self.points):
            raise QuasiMetricError("grid points fall outside the space domain")


def _first_true(mask: np.ndarray):
    """Index tuple of the first True entry in C order, or None."""
    flat = np.flatnonzero(mask)
    if flat.size == 0:
        return None
    return np.unravel_index(flat[0], mask.shape)


def check_axioms(space: QuasiMetricSpace, grid: SampleGrid) -> Report:
    """Exhaustive axiom check over all grid pairs and triples.

    Witnesses are the lexicographically smallest failing tuples, so reports
    do not depend on evaluation order.
    """
    p = grid.points
    report = Report()
    try:
        Q = space.matrix(p, p)
    except Exception as exc:  # a user expression blew up somewhere on the grid
        bad = _first_eval_failure(space, p)
        report.add("evaluation", FAIL, bad, f"q could not be evaluated: {exc}")
        return report

    neg = _first_true(Q < 0)
    if neg is None:
        report.add("non-negativity", PASS, detail=f"{Q.size} pairs")
    else:
        i, j = neg
        report.add("non-negativity", FAIL, (p[i], p[j]), f"q = {float(Q[i, j])!r} < 0")

    diag = np.diag(Q)
    bad_diag = np.flatnonzero(diag != 0)
    if bad_diag.size == 0:
        report.add("identity", PASS, detail="q(x,x) = 0 on every grid point")
    else:
        i = bad_diag[0]
        report.add("identity", FAIL, (p[i], p[i]), f"q(x,x) = {float(diag[i])!r}")

    off = ~np.eye(p.size, dtype=bool)
    sep = _first_true((Q == 0) & off)
    if sep is None:
        report.add("separation", PASS, detail="q(x,y) > 0 whenever x != y")
    else:
        i, j = sep
        report.add("separation", FAIL, (p[i], p[j]), "q(x,y) = 0 for distinct points")

    report.checks.append(_triangle(Q, p))

    if space.declared_delta is not None:
        viol = _first_true(Q > space.declared_delta * Q.T + TRIANGLE_SLACK)
        if viol is None:
            report.add("delta-symmetry", PASS, detail=f"q(x,y) <= {space.declared_delta} q(y,x)")
        else:
            i, j = viol
            report.add("delta-symmetry", FAIL, (p[i], p[j]),
                       f"q(x,y) = {float(Q[i, j])!r} > delta * q(y,x) = {float(space.declared_delta * Q[j, i])!r}")
    return report


def _triangle(Q: np.ndarray, p: np.ndarray) -> Check:
    n = p.size
    QT = Q.T
    for i in range(n):
        # M[y, z] = q(x, y) - q(x, z) - q(z, y)
        M = Q[i][:, None] - Q[i][None, :] - QT
        hit = _first_true(M > TRIANGLE_SLACK)
        if hit is not None:
            j, k = hit
            return Check("triangle", FAIL, (p[i], p[j], p[k]),
                         f"q(x,y) = {float(Q[i, j])!r} > q(x,z) + q(z,y) = {float(Q[i, k] + Q[k, j])!r}")
    return Check("triangle", PASS, None, f"{n ** 3} triples, slack {TRIANGLE_SLACK}")


def _first_eval_failure(space, p):
    for x in p:
        for y in p:
            try:
                space.raw(x, y)
            except Exception:
                return (x, y)
    return None


@dataclass(frozen=True)
class DeltaEstimate:
    value: float
    unbounded: bool = False
    witness: tuple | None = None
    warning: str | None = None


def estimate_delta(space: QuasiMetricSpace, grid: SampleGrid) -> DeltaEstimate:
    """Largest sampled ratio ``q(x,y) / q(y,x)`` over distinct grid pairs.

    A zero reverse distance with positive forward distance gives the
    unbounded flag.  The ratio is recomputed on the midpoint refinement of
    the grid; growth there is reported as a warning that no finite constant
    appears to fit.
    """
    p = grid.points
    if p.size < 2:
        raise ValueError("need at least two grid points")
    value, unbounded, witness = _max_ratio(space, p)
    if unbounded:
        return DeltaEstimate(math.inf, True, witness, "q(y,x) = 0 while q(x,y) > 0; no finite delta")
    refined = np.unique(np.concatenate([p, (p[1:] + p[:-1]) / 2]))
    value2, unbounded2, _ = _max_ratio(space, refined)
    warning = None
    if unbounded2 or value2 > value * (1 + 1e-9):
        warning = (f"ratio grows under grid refinement ({float(value)!r} -> {float(value2)!r}); "
                   "no finite delta appears to fit")
    return DeltaEstimate(value, False, witness, warning)


def _max_ratio(space, p):
    Q = space.matrix(p, p)
    QT = Q.T
    off = ~np.eye(p.size, dtype=bool)
    zero_back = off & (QT == 0) & (Q > 0)
    hit = _first_true(zero_back)
    if hit is not None:
        i, j = hit
        return math.inf, True, (p[i], p[j])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(off & (QT > 0), Q / np.where(QT > 0, QT, 1.0), -np.inf)
    k = np.unravel_index(np.argmax(ratio), ratio.shape)
    return float(ratio[k]), False, (p[k[0]], p[k[1]])


def ball_contains(space: QuasiMetricSpace, center: float, radius: float, point: float,
                  direction: str = "forward") -> bool:
    if not radius > 0:
        raise ValueError("radius must be positive")
    if direction == "forward":
        return eval_q(space, center, point) < radius
    if direction == "backward":
        return eval_q(space, point, center) < radius
    raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")


def probe_convergence_equivalence(space: QuasiMetricSpace, a: float, c: float,
                                  n_max: int = 10**7, tol: float = 1e-6, tail: int = 100) -> dict:
    """Does ``a_n = a + c/n`` f-converge to `a`, b-converge, both, neither?

    Convergence is judged on the tail ``n_max - tail < n <= n_max``.
    """
    n = np.arange(n_max - tail + 1, n_max + 1, dtype=np.float64)
    seq = a + c / n
    seq = seq[(seq >= space.lo) & (seq <= space.hi)]
    if seq.size == 0:
        raise ValueError("test sequence leaves the domain")
    fwd = float(np.max(space.raw(a, seq)))
    bwd = float(np.max(space.raw(seq, a)))
    return {"forward": fwd < tol, "backward": bwd < tol, "q_forward": fwd, "q_backward": bwd}
