"""Iterated function systems on a quasi-metric interval and their attractors."""
from __future__ import annotations

import collections
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .contraction import ContractionSystem, ControlPair, as_function
from .expr import ExprError
from .hyperspace import FiniteCompactSet, hausdorff
from .report import FAIL, PASS, VACUOUS, Report, max_workers
from .simfun import SimulationFunction, make_max_combined
from .spaces import QuasiMetricError, QuasiMetricSpace

__all__ = [
    "IfsSystem", "AttractorRun", "AttractorOverflow", "apply_operator", "compute_attractor",
    "verify_hyperspace_contraction", "audit_monotonicity", "random_set_pairs",
]


class AttractorOverflow(RuntimeError):
    def __init__(self, iteration: int, size: int, max_points: int):
        self.iteration = iteration
        super().__init__(f"iteration {iteration}: set has {size} points after pruning "
                         f"(max_points={max_points})")


@dataclass(frozen=True)
class IfsSystem:
    space: QuasiMetricSpace
    maps: tuple
    xis: tuple
    etas: tuple
    zeta: Callable

    def __post_init__(self):
        n = len(self.maps)
        if n == 0:
            raise ValueError("an IFS needs at least one map")
        if len(self.xis) != n or len(self.etas) != n:
            raise ValueError("every map needs its own xi and eta")

    @classmethod
    def build(cls, space, maps: Sequence, xis: Sequence[SimulationFunction], etas: Sequence, zeta):
        return cls(space, tuple(as_function(m, "x") for m in maps), tuple(xis),
                   tuple(as_function(e, "t") for e in etas), as_function(zeta, "t"))

    @classmethod
    def from_system(cls, sys: ContractionSystem) -> "IfsSystem":
        return cls(sys.space, (sys.T,), (sys.xi,), (sys.controls.eta,), sys.controls.zeta)

    @property
    def combined_xi(self) -> SimulationFunction:
        return make_max_combined(self.xis)

    def combined_eta(self, t):
        out = self.etas[0](t)
        for e in self.etas[1:]:
            out = np.maximum(out, e(t))
        return out

    def system(self, i: int) -> ContractionSystem:
        """The i-th map as a forward contraction system with controls (zeta, eta_i)."""
        return ContractionSystem(self.space, self.maps[i], self.xis[i],
                                 ControlPair(self.zeta, self.etas[i]), "forward")

    def image(self, i: int, A: FiniteCompactSet) -> FiniteCompactSet:
        y = np.asarray(self.maps[i](A.points), dtype=np.float64)
        if y.shape != A.points.shape:
            y = np.broadcast_to(y, A.points.shape)
        if not np.all(np.isfinite(y)) or not self.space.contains(y):
            k = int(np.flatnonzero(~(np.isfinite(y) & (y >= self.space.lo) & (y <= self.space.hi)))[0])
            raise QuasiMetricError(f"map {i} sends {A.points[k]!r} to {y[k]!r}, outside the domain")
        return FiniteCompactSet(y)

    def to_descriptor(self) -> dict:
        def text(f):
            e = getattr(f, "expression", None)
            return e.text if e is not None else None
        return {
            "space": self.space.to_descriptor(),
            "ifs": {
                "zeta": text(self.zeta),
                "maps": [{"map": text(m), "xi": x.to_descriptor(), "eta": text(e)}
                         for m, x, e in zip(self.maps, self.xis, self.etas)],
            },
        }


def _snap(points: np.ndarray, space: QuasiMetricSpace, max_points: int):
    mesh = space.length / max_points
    snapped = space.lo + np.round((points - space.lo) / mesh) * mesh
    return np.unique(np.clip(snapped, space.lo, space.hi)), mesh


def _step(ifs: IfsSystem, A: FiniteCompactSet, max_points: int | None):
    images = [ifs.image(i, A).points for i in range(len(ifs.maps))]
    pts = np.unique(np.concatenate(images))
    mesh = None
    if max_points is not None and pts.size > max_points:
        pts, mesh = _snap(pts, ifs.space, max_points)
    return FiniteCompactSet(pts), mesh


def apply_operator(ifs: IfsSystem, A: FiniteCompactSet, max_points: int | None = None) -> FiniteCompactSet:
    """``W(A)``: union of the map images, deduplicated exactly.

    When `max_points` is given and the union is larger, points are snapped to
    a mesh of spacing ``(hi - lo) / max_points`` and deduplicated again.
    """
    return _step(ifs, A, max_points)[0]


@dataclass
class AttractorRun:
    initial: FiniteCompactSet
    iterates_kept: collections.deque = field(default_factory=lambda: collections.deque(maxlen=2))
    h_trace: list[float] = field(default_factory=list)
    sup_trace: list[float] = field(default_factory=list)
    inf_trace: list[float] = field(default_factory=list)
    stopped_at: int = 0
    final: FiniteCompactSet | None = None
    converged: bool = False
    mesh: float | None = None

    def metadata(self) -> dict:
        meta = {
            "stopped_at": self.stopped_at,
            "converged": self.converged,
            "h_trace": self.h_trace,
            "sup_trace": self.sup_trace,
            "inf_trace": self.inf_trace,
        }
        if self.mesh is not None:
            meta["mesh"] = self.mesh
        return meta


def compute_attractor(ifs: IfsSystem, A0: FiniteCompactSet, tol: float = 1e-6,
                      max_iter: int = 100, max_points: int = 4096,
                      track_distance: bool = True) -> AttractorRun:
    """Iterate ``A_{n+1} = W(A_n)`` until ``h_q(A_n, A_{n+1}) < tol``.

    Traces record the step distance and the extrema of every set, starting
    with ``A_0``.  If sets stay below `max_points` there is no pruning and
    the final set is exactly ``W^stopped_at(A0)``.
    """
    A0.check_within(ifs.space)
    run = AttractorRun(A0)
    run.iterates_kept.append(A0)
    run.sup_trace.append(A0.max)
    run.inf_trace.append(A0.min)
    A = A0
    for n in range(max_iter):
        B, mesh = _step(ifs, A, max_points)
        if mesh is not None:
            run.mesh = mesh
            if len(B) > max_points:
                raise AttractorOverflow(n + 1, len(B), max_points)
        run.iterates_kept.append(B)
        run.sup_trace.append(B.max)
        run.inf_trace.append(B.min)
        run.stopped_at = n + 1
        if track_distance:
            h = hausdorff(A, B, ifs.space)
            run.h_trace.append(h)
            if h < tol:
                run.converged = True
                A = B
                break
        A = B
    run.final = A
    return run


def _pair_margins(ifs: IfsSystem, A: FiniteCompactSet, B: FiniteCompactSet):
    space = ifs.space
    h_ab = hausdorff(A, B, space)
    WA = apply_operator(ifs, A)
    WB = apply_operator(ifs, B)
    h_w = hausdorff(WA, WB, space)
    out = {"h_ab": h_ab, "h_w": h_w}
    if h_ab == 0 or h_w == 0:
        out["W"] = None
    else:
        out["W"] = float(ifs.combined_xi(ifs.zeta(h_w), ifs.combined_eta(h_ab)))
    per = []
    for i in range(len(ifs.maps)):
        h_i = hausdorff(ifs.image(i, A), ifs.image(i, B), space)
        if h_ab == 0 or h_i == 0:
            per.append((h_i, None))
        else:
            per.append((h_i, float(ifs.xis[i](ifs.zeta(h_i), ifs.etas[i](h_ab)))))
    out["maps"] = per
    return out


def verify_hyperspace_contraction(ifs: IfsSystem, set_samples) -> Report:
    """Check the induced contraction of W, and of each map, on set pairs.

    Vacuous pairs are those with a zero set distance in either slot, following
    the point-level convention.
    """
    set_samples = list(set_samples)
    if not set_samples:
        raise ValueError("need at least one set pair")
    with ThreadPoolExecutor(max_workers=max_workers()) as pool:
        results = list(pool.map(lambda ab: _pair_margins(ifs, *ab), set_samples))

    report = Report()

    def summarize(name, margins):
        live = [(k, m) for k, m in enumerate(margins) if m is not None]
        bad = [(k, m) for k, m in live if not m >= 0]
        if bad:
            k, m = bad[0]
            A, B = set_samples[k]
            report.add(name, FAIL, (A.points.tolist(), B.points.tolist()),
                       f"pair {k}: margin {m!r} < 0; {len(bad)} of {len(live)} non-vacuous pairs fail")
        elif not live:
            report.add(name, VACUOUS, detail=f"all {len(margins)} pairs vacuous")
        else:
            report.add(name, PASS, detail=f"{len(live)} pairs hold, {len(margins) - len(live)} vacuous; "
                                          f"smallest margin {min(m for _, m in live)!r}")

    summarize("hyperspace-W", [r["W"] for r in results])
    for i in range(len(ifs.maps)):
        summarize(f"hyperspace-w{i + 1}", [r["maps"][i][1] for r in results])
    return report


def audit_monotonicity(ifs: IfsSystem, s_grid, t_grid) -> Report:
    """Sampled monotonicity needed to lift point contractions to sets.

    Each xi_i must be nonincreasing in s and nondecreasing in t; zeta and
    every eta_i must be nondecreasing.
    """
    s = np.unique(np.asarray(s_grid, dtype=np.float64))
    t = np.unique(np.asarray(t_grid, dtype=np.float64))
    S, T = np.meshgrid(s, t, indexing="ij")
    report = Report()
    for i, xi in enumerate(ifs.xis):
        name = f"xi{i + 1}-monotone"
        try:
            V = np.asarray(xi(S, T))
        except ExprError as exc:
            report.add(name, FAIL, None, str(exc))
            continue
        up_s = np.argwhere(np.diff(V, axis=0) > 0)
        down_t = np.argwhere(np.diff(V, axis=1) < 0)
        if up_s.size:
            a, b = up_s[0]
            report.add(name, FAIL, (s[a], s[a + 1], t[b]), "xi increases in s")
        elif down_t.size:
            a, b = down_t[0]
            report.add(name, FAIL, (s[a], t[b], t[b + 1]), "xi decreases in t")
        else:
            report.add(name, PASS, detail=f"on a {s.size}x{t.size} grid")
    for name, f in [("zeta-monotone", ifs.zeta)] + [
            (f"eta{i + 1}-monotone", e) for i, e in enumerate(ifs.etas)]:
        v = np.asarray(f(t), dtype=np.float64)
        drop = np.flatnonzero(np.diff(v) < 0)
        if drop.size:
            k = drop[0]
            report.add(name, FAIL, (t[k], t[k + 1]), "decreases")
        else:
            report.add(name, PASS, detail=f"nondecreasing on {t.size} samples")
    return report


def random_set_pairs(space: QuasiMetricSpace, count: int, max_size: int = 8, seed: int = 0):
    """Seeded pairs of random finite sets with 1..max_size points each."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        na, nb = rng.integers(1, max_size + 1, 2)
        out.append((FiniteCompactSet(rng.uniform(space.lo, space.hi, na)),
                    FiniteCompactSet(rng.uniform(space.lo, space.hi, nb))))
    return out
