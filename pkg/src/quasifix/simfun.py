"""Simulation functions xi(s, t) on [0, inf)^2 and their sampled checks."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .expr import DomainError, Expression, ExprError, parse
from .report import FAIL, PASS, Report

__all__ = [
    "SimulationFunction", "eval_xi", "check_z_properties", "make_max_combined",
    "Z3_FAMILIES", "Z3_TAIL",
]

Z3_FAMILIES = 64
Z3_TAIL = (900, 1000)

_ARGS = {
    "expr": {"xi": ("s", "t")},
    "xi1": {"p": ("t",), "q": ("t",)},
    "xi2": {"f": ("s", "t"), "g": ("s", "t")},
    "xi3": {"h": ("t",)},
}


def _expr(v) -> Expression:
    return parse(v) if isinstance(v, str) else v


@dataclass(frozen=True)
class SimulationFunction:
    """One of the supported families, or a pointwise max of several.

    ``expr``  xi given directly in ``s`` and ``t``
    ``xi1``   p(t) - q(s)
    ``xi2``   t - f(s,t)/g(s,t) * s
    ``xi3``   t - h(t) - s
    ``max``   max over `parts`
    """

    kind: str
    exprs: dict = field(default_factory=dict)
    parts: tuple = ()

    def __post_init__(self):
        if self.kind == "max":
            if not self.parts:
                raise ValueError("max-combined simulation function needs at least one part")
            return
        if self.kind not in _ARGS:
            raise ValueError(f"unknown simulation function kind {self.kind!r}")
        want = _ARGS[self.kind]
        if set(self.exprs) != set(want):
            raise ValueError(f"{self.kind} needs fields {sorted(want)}, got {sorted(self.exprs)}")
        for name, args in want.items():
            self.exprs[name].function(*args)
        if self.kind == "xi2":
            self._check_g_positive()

    def _check_g_positive(self):
        s, t = np.meshgrid(np.linspace(0.05, 10.0, 40), np.linspace(0.05, 10.0, 40))
        g = self.exprs["g"](s=s, t=t)
        if np.any(g <= 0):
            k = np.flatnonzero(g.ravel() <= 0)[0]
            raise ValueError(f"xi2 needs g(s,t) > 0; g({s.ravel()[k]}, {t.ravel()[k]}) = {g.ravel()[k]}")

    @classmethod
    def from_expr(cls, xi: str) -> "SimulationFunction":
        return cls("expr", {"xi": _expr(xi)})

    @classmethod
    def xi1(cls, p: str, q: str) -> "SimulationFunction":
        return cls("xi1", {"p": _expr(p), "q": _expr(q)})

    @classmethod
    def xi2(cls, f: str, g: str) -> "SimulationFunction":
        return cls("xi2", {"f": _expr(f), "g": _expr(g)})

    @classmethod
    def xi3(cls, h: str) -> "SimulationFunction":
        return cls("xi3", {"h": _expr(h)})

    def __call__(self, s, t):
        k = self.kind
        e = self.exprs
        if k == "expr":
            return e["xi"](s=s, t=t)
        if k == "xi1":
            return e["p"](t=t) - e["q"](t=s)
        if k == "xi2":
            g = e["g"](s=s, t=t)
            if np.any(np.asarray(g) == 0):
                raise DomainError("division by zero", e["g"].text)
            return t - e["f"](s=s, t=t) / g * s
        if k == "xi3":
            return t - e["h"](t=t) - s
        out = self.parts[0](s, t)
        for p in self.parts[1:]:
            out = np.maximum(out, p(s, t))
        return out if np.ndim(out) else float(out)

    def to_descriptor(self) -> dict:
        if self.kind == "max":
            return {"kind": "max", "of": [p.to_descriptor() for p in self.parts]}
        return {"kind": self.kind, **{k: v.text for k, v in self.exprs.items()}}


def eval_xi(sim: SimulationFunction, s: float, t: float) -> float:
    if s < 0 or t < 0:
        raise ValueError(f"simulation functions live on [0, inf)^2, got ({s}, {t})")
    return float(sim(s, t))


def make_max_combined(sims) -> SimulationFunction:
    sims = tuple(sims)
    if not sims:
        raise ValueError("cannot combine an empty list of simulation functions")
    return SimulationFunction("max", parts=sims)


def z3_families(t_max: float, count: int, seed: int):
    """Seeded ``(L, a, b)`` with ``L`` in ``(0, t_max]`` and ``a, b`` in ``[-L/2, L/2]``."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        L = t_max * (1.0 - rng.random())
        a, b = rng.uniform(-L / 2, L / 2, 2)
        out.append((float(L), float(a), float(b)))
    return out


def check_z_properties(sim: SimulationFunction, s_grid, t_grid,
                       sequence_family_count: int = Z3_FAMILIES, seed: int = 0) -> Report:
    """Check z1 exactly, z2 on the grid product, z3 on a sequence surrogate.

    The z3 surrogate draws pairs ``s_n = L + a/n``, ``t_n = L + b/n`` and
    requires ``xi < 0`` throughout ``n = 900..1000``.  That is evidence, not a
    proof: z3 quantifies over every sequence pair with a common positive limit.
    """
    s_grid = np.sort(np.asarray(s_grid, dtype=np.float64))
    t_grid = np.sort(np.asarray(t_grid, dtype=np.float64))
    report = Report()

    try:
        v = float(sim(0.0, 0.0))
        report.add("z1", PASS if v == 0 else FAIL, None if v == 0 else (0.0, 0.0),
                   f"xi(0,0) = {v!r}")
    except ExprError as exc:
        report.add("z1", FAIL, (0.0, 0.0), str(exc))

    s = s_grid[s_grid > 0]
    t = t_grid[t_grid > 0]
    S, T = np.meshgrid(s, t, indexing="ij")
    try:
        val = np.asarray(sim(S, T))
        bad = np.flatnonzero(~(val < T - S))
        if bad.size == 0:
            report.add("z2", PASS, detail=f"xi(s,t) < t - s on {S.size} positive grid points")
        else:
            i, j = np.unravel_index(bad[0], S.shape)
            report.add("z2", FAIL, (s[i], t[j]),
                       f"xi = {float(val[i, j])!r} is not below t - s = {float(t[j] - s[i])!r}")
    except ExprError as exc:
        report.add("z2", FAIL, None, str(exc))

    t_max = float(t.max()) if t.size else 1.0
    n = np.arange(Z3_TAIL[0], Z3_TAIL[1] + 1, dtype=np.float64)
    failures = 0
    witness = None
    worst = -np.inf
    for L, a, b in z3_families(t_max, sequence_family_count, seed):
        try:
            tail_max = float(np.max(sim(L + a / n, L + b / n)))
        except ExprError:
            tail_max = np.inf
        worst = max(worst, tail_max)
        if not tail_max < 0:
            failures += 1
            if witness is None:
                witness = (L, a, b, tail_max)
    caveat = (f"surrogate: {sequence_family_count} families s_n=L+a/n, t_n=L+b/n, "
              f"tail n={Z3_TAIL[0]}..{Z3_TAIL[1]}; not a proof of z3")
    if failures:
        report.add("z3", FAIL, witness, f"{failures} families with tail max >= 0; {caveat}")
    else:
        report.add("z3", PASS, detail=f"largest tail value {float(worst)!r}; {caveat}")
    return report
