"""Sampled verification of forward/backward Proinov-type Z-contractions.

The forward condition is ``xi(zeta(q(Tx,Ty)), eta(q(x,y))) >= 0`` and the
backward one swaps the eta argument to ``q(y,x)``.  ``zeta`` and ``eta`` are
only defined on ``(0, inf)``, so pairs with a zero distance in either slot are
counted as vacuous rather than evaluated.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .expr import Expression, ExprError, parse
from .report import FAIL, PASS, VACUOUS, Report
from .simfun import SimulationFunction, z3_families
from .spaces import QuasiMetricError, QuasiMetricSpace, SampleGrid

__all__ = [
    "ControlPair", "ContractionSystem", "as_function", "verify_inequality",
    "audit_hypotheses", "probe_asymptotic_regularity", "RegularityProbe",
    "probe_continuity", "image_samples",
]

ZETA_LIMIT_TOL = 1e-6
REGULARITY_TOL = 1e-9
CONTINUITY_TOL = 1e-6


def as_function(obj, var: str) -> Callable:
    """Turn an expression string, parsed expression or callable into ``f(var)``."""
    if isinstance(obj, str):
        obj = parse(obj)
    if isinstance(obj, Expression):
        return obj.function(var)
    if callable(obj):
        return obj
    raise TypeError(f"expected an expression or a callable, got {type(obj).__name__}")


def _text(f) -> str | None:
    e = getattr(f, "expression", None)
    return e.text if e is not None else None


@dataclass(frozen=True)
class ControlPair:
    zeta: Callable
    eta: Callable

    @classmethod
    def of(cls, zeta, eta) -> "ControlPair":
        return cls(as_function(zeta, "t"), as_function(eta, "t"))


@dataclass(frozen=True)
class ContractionSystem:
    space: QuasiMetricSpace
    T: Callable
    xi: SimulationFunction
    controls: ControlPair
    orientation: str = "forward"

    def __post_init__(self):
        if self.orientation not in ("forward", "backward"):
            raise ValueError(f"orientation must be 'forward' or 'backward', got {self.orientation!r}")

    @classmethod
    def build(cls, space, T, xi, zeta, eta, orientation="forward") -> "ContractionSystem":
        return cls(space, as_function(T, "x"), xi, ControlPair.of(zeta, eta), orientation)

    def apply(self, x):
        """``T(x)`` with a domain check on the result."""
        y = self.T(x)
        if not np.all(np.isfinite(y)):
            raise QuasiMetricError(f"T produced a non-finite value from {x!r}")
        if not self.space.contains(y):
            raise QuasiMetricError(f"T maps {x!r} to {y!r}, outside [{self.space.lo}, {self.space.hi}]")
        return y

    def to_descriptor(self) -> dict:
        return {
            "space": self.space.to_descriptor(),
            "map": _text(self.T),
            "xi": self.xi.to_descriptor(),
            "controls": {"zeta": _text(self.controls.zeta), "eta": _text(self.controls.eta)},
            "orientation": self.orientation,
        }


def _margins(sys: ContractionSystem, p: np.ndarray):
    """Return (contraction margins, vacuous mask) over all ordered grid pairs."""
    tp = np.broadcast_to(np.asarray(sys.T(p), dtype=np.float64), p.shape)
    img = sys.space.matrix(tp, tp)
    Q = sys.space.matrix(p, p)
    arg = Q if sys.orientation == "forward" else Q.T
    vacuous = (img == 0) | (arg == 0)
    live = ~vacuous
    margin = np.full(Q.shape, np.nan)
    if live.any():
        z = sys.controls.zeta(img[live])
        e = sys.controls.eta(arg[live])
        margin[live] = sys.xi(np.asarray(z, dtype=np.float64), np.asarray(e, dtype=np.float64))
    return margin, vacuous


def _pair_margin(sys: ContractionSystem, x: float, y: float):
    q = sys.space.raw
    tx, ty = sys.T(x), sys.T(y)
    d_img = float(q(tx, ty))
    d_arg = float(q(x, y) if sys.orientation == "forward" else q(y, x))
    if d_img == 0 or d_arg == 0:
        return None
    return float(sys.xi(sys.controls.zeta(d_img), sys.controls.eta(d_arg)))


def verify_inequality(sys: ContractionSystem, grid: SampleGrid) -> Report:
    """Evaluate the oriented contraction inequality on every ordered grid pair."""
    p = grid.points
    report = Report()
    try:
        images = np.asarray(sys.T(p), dtype=np.float64)
    except ExprError:
        images = None
    if images is None or not np.all(np.isfinite(images)) or not sys.space.contains(images):
        for x in p:
            try:
                sys.apply(float(x))
            except (ExprError, QuasiMetricError) as exc:
                report.add("self-map", FAIL, (float(x),), str(exc))
                return report
    report.add("self-map", PASS, detail=f"T maps all {p.size} grid points into the domain")

    name = f"{sys.orientation}-inequality"
    try:
        margin, vacuous = _margins(sys, p)
    except ExprError:
        return _verify_scalar(sys, p, report, name)
    bad = np.flatnonzero((~vacuous).ravel() & ~(margin.ravel() >= 0))
    n_vac = int(vacuous.sum())
    n_live = vacuous.size - n_vac
    if bad.size:
        i, j = np.unravel_index(bad[0], margin.shape)
        report.add(name, FAIL, (float(p[i]), float(p[j])),
                   f"xi(...) = {float(margin[i, j])!r} < 0; {bad.size} of {n_live} non-vacuous pairs fail")
    elif n_live == 0:
        report.add(name, VACUOUS, detail=f"all {n_vac} pairs vacuous (zero distance)")
    else:
        report.add(name, PASS, detail=f"{n_live} pairs hold, {n_vac} vacuous; "
                                      f"smallest margin {float(np.nanmin(margin))!r}")
    return report


def _verify_scalar(sys, p, report, name):
    n_live = n_vac = 0
    for x in p:
        for y in p:
            try:
                m = _pair_margin(sys, float(x), float(y))
            except ExprError as exc:
                report.add(name, FAIL, (float(x), float(y)), f"evaluation failed: {exc}")
                return report
            if m is None:
                n_vac += 1
                continue
            n_live += 1
            if not m >= 0:
                report.add(name, FAIL, (float(x), float(y)), f"xi(...) = {float(m)!r} < 0")
                return report
    if n_live == 0:
        report.add(name, VACUOUS, detail=f"all {n_vac} pairs vacuous (zero distance)")
    else:
        report.add(name, PASS, detail=f"{n_live} pairs hold, {n_vac} vacuous")
    return report


def image_samples(space: QuasiMetricSpace, grid: SampleGrid) -> np.ndarray:
    """Sorted distinct positive values of q over all grid pairs."""
    Q = space.matrix(grid.points, grid.points)
    return np.unique(Q[Q > 0])


def zeta_limit_check(zeta: Callable, t_max: float, count: int, seed: int):
    """Surrogate for: x_n, y_n -> L > 0 implies lim zeta(x_n) = lim zeta(y_n) > 0.

    Limits are estimated from the tails at n = 900 and n = 1000 by Richardson
    extrapolation in 1/n, which is exact for ``zeta(L + c/n)`` affine in 1/n.
    Returns ``(failures, first witness, worst gap)``.
    """
    n1, n2 = 900.0, 1000.0
    failures = 0
    witness = None
    worst = 0.0
    for L, a, b in z3_families(t_max, count, seed):
        zx1, zx2 = zeta(L + a / n1), zeta(L + a / n2)
        zy1, zy2 = zeta(L + b / n1), zeta(L + b / n2)
        lim_x = (n2 * zx2 - n1 * zx1) / (n2 - n1)
        lim_y = (n2 * zy2 - n1 * zy1) / (n2 - n1)
        gap = abs(lim_x - lim_y)
        worst = max(worst, gap)
        if not (gap <= ZETA_LIMIT_TOL and lim_x > 0 and lim_y > 0):
            failures += 1
            if witness is None:
                witness = (L, a, b, lim_x, lim_y)
    return failures, witness, worst


def audit_hypotheses(sys: ContractionSystem, grid: SampleGrid, family_count: int = 64,
                     seed: int = 0) -> Report:
    """Sampled audit of the control-function hypotheses (i)-(iii)."""
    report = Report()
    ts = image_samples(sys.space, grid)
    zeta, eta = sys.controls.zeta, sys.controls.eta
    if ts.size == 0:
        for name in ("hypothesis-i", "hypothesis-ii", "hypothesis-iii"):
            report.add(name, VACUOUS, detail="q has no positive sampled values")
        return report

    z = np.asarray(zeta(ts), dtype=np.float64)
    drop = np.flatnonzero(np.diff(z) < 0)
    if drop.size:
        k = drop[0]
        report.add("hypothesis-i", FAIL, (float(ts[k]), float(ts[k + 1])),
                   f"zeta decreases: {float(z[k])!r} > {float(z[k + 1])!r}")
    else:
        report.add("hypothesis-i", PASS, detail=f"zeta nondecreasing on {ts.size} image samples "
                                                f"in [{float(ts[0])!r}, {float(ts[-1])!r}]")

    e = np.asarray(eta(ts), dtype=np.float64)
    bad = np.flatnonzero(~(e < z))
    if bad.size:
        k = bad[0]
        report.add("hypothesis-ii", FAIL, (float(ts[k]), float(e[k]), float(z[k])),
                   f"eta(t) = {float(e[k])!r} is not below zeta(t) = {float(z[k])!r} at t = {float(ts[k])!r}; "
                   f"{bad.size} of {ts.size} image samples fail")
    else:
        report.add("hypothesis-ii", PASS, detail=f"eta < zeta on {ts.size} image samples "
                                                 f"in [{float(ts[0])!r}, {float(ts[-1])!r}]")

    failures, witness, worst = zeta_limit_check(zeta, float(ts[-1]), family_count, seed)
    caveat = f"surrogate over {family_count} sequence families; not a proof"
    if failures:
        report.add("hypothesis-iii", FAIL, witness, f"{failures} families fail; {caveat}")
    else:
        report.add("hypothesis-iii", PASS, detail=f"largest limit gap {float(worst)!r}; {caveat}")
    return report


@dataclass
class RegularityProbe:
    n: np.ndarray
    q_fwd: np.ndarray
    q_bwd: np.ndarray
    verdict: str

    @property
    def regular(self) -> bool:
        return self.verdict == "regular"


def probe_asymptotic_regularity(sys: ContractionSystem, x0: float, n_max: int) -> RegularityProbe:
    """Step distances ``q(T^n x0, T^{n+1} x0)`` and reverse, for n = 0..n_max."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    if not sys.space.contains(x0):
        raise QuasiMetricError(f"x0 = {x0!r} outside the domain")
    orbit = [float(x0)]
    for _ in range(n_max + 1):
        orbit.append(float(sys.apply(orbit[-1])))
    xs = np.asarray(orbit)
    q_fwd = sys.space.raw(xs[:-1], xs[1:])
    q_bwd = sys.space.raw(xs[1:], xs[:-1])
    regular = q_fwd[-1] < REGULARITY_TOL and q_bwd[-1] < REGULARITY_TOL
    return RegularityProbe(np.arange(n_max + 1), q_fwd, q_bwd,
                           "regular" if regular else "not-regular")


def probe_continuity(sys: ContractionSystem, x: float, c: float, n_max: int = 10**7,
                     tail: int = 100) -> Report:
    """Probe ff- and bb-continuity of T at `x` along ``x_n = x + c/n``.

    ff: if q(x, x_n) -> 0 then q(Tx, Tx_n) -> 0.  bb: the same with both
    arguments reversed.  "-> 0" means below 1e-6 over the last `tail` terms up
    to `n_max`; when the premise does not hold the check is vacuous.
    """
    if not (sys.space.contains(x) and sys.space.contains(x + c)):
        raise QuasiMetricError("x and x + c must lie in the domain")
    n = np.arange(max(1, n_max - tail + 1), n_max + 1, dtype=np.float64)
    xn = x + c / n
    tx = sys.T(x)
    txn = np.asarray(sys.T(xn), dtype=np.float64)
    q = sys.space.raw
    report = Report()
    for name, premise, concl in (
        ("ff-continuity", q(x, xn), q(tx, txn)),
        ("bb-continuity", q(xn, x), q(txn, tx)),
    ):
        if not np.max(premise) < CONTINUITY_TOL:
            report.add(name, VACUOUS,
                       detail=f"premise fails: distance tail reaches {float(np.max(premise))!r}")
        elif np.max(concl) < CONTINUITY_TOL:
            report.add(name, PASS, detail=f"image distance tail max {float(np.max(concl))!r}")
        else:
            k = int(np.argmax(concl >= CONTINUITY_TOL))
            report.add(name, FAIL, (float(n[k]), float(xn[k]), float(concl[k])),
                       "image distance stays away from 0 while the premise distance vanishes")
    return report
