"""Finite point sets and the Hausdorff-Pompeu quasi-metric between them."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .report import FAIL, PASS, Report
from .spaces import QuasiMetricError, QuasiMetricSpace

__all__ = [
    "FiniteCompactSet", "q_gap", "hausdorff", "check_union_bound",
    "read_set_csv", "set_csv", "UNION_SLACK",
]

UNION_SLACK = 1e-12
_CHUNK = 1 << 22  # matrix entries per block in q_gap


@dataclass(frozen=True, eq=False)
class FiniteCompactSet:
    """Nonempty finite set of reals, stored sorted and deduplicated."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.unique(np.asarray(self.points, dtype=np.float64).ravel())
        if pts.size == 0:
            raise ValueError("a compact set approximation must be nonempty")
        if not np.all(np.isfinite(pts)):
            raise ValueError("set points must be finite")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @classmethod
    def of(cls, *points: float) -> "FiniteCompactSet":
        return cls(np.array(points, dtype=np.float64))

    @classmethod
    def grid(cls, lo: float, hi: float, n: int) -> "FiniteCompactSet":
        return cls(np.linspace(lo, hi, n))

    def __len__(self) -> int:
        return self.points.size

    def __iter__(self):
        return iter(self.points.tolist())

    def __eq__(self, other) -> bool:
        if not isinstance(other, FiniteCompactSet):
            return NotImplemented
        return self.points.shape == other.points.shape and bool(np.all(self.points == other.points))

    def __hash__(self):
        return hash(self.points.tobytes())

    def __repr__(self) -> str:
        return f"FiniteCompactSet({self.points.tolist()})"

    def union(self, *others: "FiniteCompactSet") -> "FiniteCompactSet":
        return FiniteCompactSet(np.concatenate([self.points] + [o.points for o in others]))

    def issubset(self, other: "FiniteCompactSet") -> bool:
        return bool(np.all(np.isin(self.points, other.points)))

    def check_within(self, space: QuasiMetricSpace):
        if not space.contains(self.points):
            raise QuasiMetricError("set has points outside the space domain")

    @property
    def min(self) -> float:
        return float(self.points[0])

    @property
    def max(self) -> float:
        return float(self.points[-1])


def _pts(A) -> np.ndarray:
    return A.points if isinstance(A, FiniteCompactSet) else FiniteCompactSet(A).points


def q_gap(A, B, space: QuasiMetricSpace) -> float:
    """``sup_{x in A} inf_{y in B} q(x, y)`` by exhaustive evaluation."""
    a, b = _pts(A), _pts(B)
    rows = max(1, _CHUNK // b.size)
    worst = 0.0
    for start in range(0, a.size, rows):
        M = space.matrix(a[start:start + rows], b)
        worst = max(worst, float(M.min(axis=1).max()))
    return worst


def hausdorff(A, B, space: QuasiMetricSpace) -> float:
    return max(q_gap(A, B, space), q_gap(B, A, space))


def check_union_bound(space: QuasiMetricSpace, pairs, slack: float = UNION_SLACK) -> Report:
    """Check ``h(U A_i, U B_i) <= max_i h(A_i, B_i)`` on a finite family."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("need at least one (A, B) pair")
    union_a = FiniteCompactSet(np.concatenate([_pts(a) for a, _ in pairs]))
    union_b = FiniteCompactSet(np.concatenate([_pts(b) for _, b in pairs]))
    lhs = hausdorff(union_a, union_b, space)
    rhs = max(hausdorff(a, b, space) for a, b in pairs)
    report = Report()
    if lhs <= rhs + slack:
        report.add("union-bound", PASS, detail=f"lhs {float(lhs)!r} <= rhs {float(rhs)!r}")
    else:
        report.add("union-bound", FAIL, (lhs, rhs), f"lhs {float(lhs)!r} > rhs {float(rhs)!r}")
    return report


def read_set_csv(text: str) -> FiniteCompactSet:
    """Parse a set file: header ``x`` then one point per row, any order."""
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if r and any(c.strip() for c in r)]
    if not rows or [c.strip() for c in rows[0]] != ["x"]:
        raise ValueError("set CSV must start with the header 'x'")
    try:
        pts = [float(r[0]) for r in rows[1:]]
    except ValueError as exc:
        raise ValueError(f"bad point in set CSV: {exc}") from None
    return FiniteCompactSet(np.array(pts, dtype=np.float64))


def set_csv(A: FiniteCompactSet) -> str:
    return "x\n" + "".join(f"{x!r}\n" for x in A.points.tolist())
