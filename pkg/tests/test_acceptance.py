"""Acceptance suite: one test per criterion, summarized at the end of the run."""
import subprocess
import sys
import time

import numpy as np
import pytest

from quasifix.config import preset
from quasifix.contraction import (ContractionSystem, audit_hypotheses, image_samples,
                                  probe_asymptotic_regularity, verify_inequality)
from quasifix.hyperspace import FiniteCompactSet, check_union_bound, hausdorff, q_gap
from quasifix.ifs import apply_operator, compute_attractor, random_set_pairs, verify_hyperspace_contraction
from quasifix.picard import iterate
from quasifix.simfun import SimulationFunction, check_z_properties, make_max_combined
from quasifix.spaces import QuasiMetricSpace, SampleGrid

crit = pytest.mark.criterion
GRID201 = SampleGrid.uniform(0, 1, 201)

ALL_SPACES = [QuasiMetricSpace.sorgenfrey(), QuasiMetricSpace.weighted_abs(2.0),
              QuasiMetricSpace.example3(), QuasiMetricSpace.example4()]
DELTA_SPACES = ALL_SPACES[1:]


def random_set(rng, max_size=8):
    return FiniteCompactSet(rng.uniform(0, 1, rng.integers(1, max_size + 1)))


def _q_oracle(space):
    """The preset formulas written out directly, independent of the library."""
    if space.kind == "sorgenfrey":
        return lambda x, y: y - x if y >= x else 1.0
    if space.kind == "weighted-abs":
        lam = space.lam
        return lambda x, y: x - y if x >= y else lam * (y - x)
    if space.kind == "example3":
        return lambda x, y: 2 * x if x > y else (y if x < y else 0.0)
    return lambda x, y: 8 * x if x > y else (4 * y if x < y else 0.0)


def brute_gap(A, B, space):
    q = _q_oracle(space)
    return max(min(q(x, y) for y in B) for x in A)


def cantor_intervals(k):
    iv = [(0.0, 1.0)]
    for _ in range(k):
        iv = [p for a, b in iv for p in ((a, a + (b - a) / 3), (b - (b - a) / 3, b))]
    return iv


@crit(1, "example3 Picard iteration converges to the unique fixed point 0")
def test_fixed_point_reproduction():
    sys_ = preset("example3").system
    start = time.perf_counter()
    for x0 in (1.0, 0.75, 0.5, 0.25):
        tr = iterate(sys_, x0, tol=1e-12, max_iter=100)
        assert tr.converged and tr.iterations_used <= 10
        assert abs(tr.fixed_point) < 1e-12
        assert all(abs(x) < 2e-5 for x in tr.iterates[3:])
    assert time.perf_counter() - start < 1.0


@crit(2, "example3 contraction inequality holds on 201x201; identity map fails")
def test_contraction_inequality():
    sys_ = preset("example3").system
    start = time.perf_counter()
    rep = verify_inequality(sys_, GRID201)
    assert rep.passed and rep["forward-inequality"].status == "pass"
    ident = ContractionSystem(sys_.space, lambda x: x, sys_.xi, sys_.controls)
    c = verify_inequality(ident, GRID201)["forward-inequality"]
    assert c.failed
    x, y = c.witness
    q = sys_.space.raw
    margin = float(sys_.xi(sys_.controls.zeta(q(x, y)), sys_.controls.eta(q(x, y))))
    assert margin < 0
    assert verify_inequality(ident, GRID201)["forward-inequality"].witness == c.witness
    assert time.perf_counter() - start < 5.0


@crit(3, "hypothesis audit passes on example3 and flags eta < zeta on example4a/b")
def test_hypothesis_audit_honesty():
    assert audit_hypotheses(preset("example3").system, GRID201).passed
    for name in ("example4a", "example4b"):
        cfg = preset(name)
        for s in cfg.map_systems():
            assert verify_inequality(s, GRID201).passed
            c = audit_hypotheses(s, GRID201)["hypothesis-ii"]
            assert c.failed
            t, eta, zeta = c.witness
            assert float(s.controls.eta(t)) == eta and float(s.controls.zeta(t)) == zeta
            assert not eta < zeta
            ts = image_samples(s.space, GRID201)
            assert 2.0 in ts
            assert float(s.controls.eta(2.0)) == 4.0 and float(s.controls.zeta(2.0)) == 2.0


@crit(4, "example3 step distances decrease and fall below 1e-9 within 10 steps")
def test_asymptotic_regularity():
    pr = probe_asymptotic_regularity(preset("example3").system, 1.0, 10)
    assert np.all(np.diff(pr.q_fwd) <= 1e-12)
    assert np.all(np.diff(pr.q_bwd) <= 1e-12)
    assert pr.q_fwd[10] < 1e-9 and pr.q_bwd[10] < 1e-9
    assert pr.regular


@crit(5, "Hausdorff-Pompeu kernel matches brute force; symmetry, identity, triangle")
def test_hausdorff_kernel():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        A, B = random_set(rng), random_set(rng)
        for space in ALL_SPACES:
            a, b = list(A), list(B)
            assert q_gap(A, B, space) == brute_gap(a, b, space)
            assert q_gap(B, A, space) == brute_gap(b, a, space)
            assert hausdorff(A, B, space) == max(brute_gap(a, b, space), brute_gap(b, a, space))
            assert hausdorff(A, B, space) == hausdorff(B, A, space)
            assert hausdorff(A, A, space) == 0.0
    for _ in range(1000):
        A, B, C = random_set(rng), random_set(rng), random_set(rng)
        for space in DELTA_SPACES:
            assert hausdorff(A, C, space) <= hausdorff(A, B, space) + hausdorff(B, C, space) + 1e-12


@crit(6, "union bound holds on random families under example3 and weighted-abs 2")
def test_union_bound():
    rng = np.random.default_rng(1)
    for space in (QuasiMetricSpace.example3(), QuasiMetricSpace.weighted_abs(2.0)):
        for _ in range(1000):
            n = int(rng.integers(1, 5))
            pairs = [(random_set(rng), random_set(rng)) for _ in range(n)]
            assert check_union_bound(space, pairs, slack=1e-12).passed


@crit(7, "max-combined simulation function passes z1, z2 and the z3 surrogate")
def test_max_combined_simulation():
    sim = make_max_combined([SimulationFunction.from_expr("t/(t+1)-s"),
                             SimulationFunction.from_expr("16*t/(t+16)-s")])
    grid = np.linspace(0, 10, 101)[1:]
    assert grid.size == 100 and np.all(grid > 0)
    rep = check_z_properties(sim, grid, grid, sequence_family_count=64, seed=0)
    assert float(sim(0.0, 0.0)) == 0.0
    assert rep["z1"].status == "pass" and rep["z2"].status == "pass" and rep["z3"].status == "pass"


@crit(8, "cantor IFS: hyperspace contraction, step bound, depth-10 Cantor oracle")
def test_cantor_attractor():
    start = time.perf_counter()
    cantor = preset("cantor").ifs
    assert verify_hyperspace_contraction(cantor, random_set_pairs(cantor.space, 64, seed=0)).passed
    A = [FiniteCompactSet.of(0.0)]
    for _ in range(12):
        A.append(apply_operator(cantor, A[-1], max_points=4096))
    for k in range(4, 11):
        assert hausdorff(A[k], A[k + 2], cantor.space) <= 2 * 3.0 ** -k
    run = compute_attractor(cantor, A[0], tol=1e-4, max_iter=12, max_points=4096)
    assert run.converged and run.final == A[run.stopped_at]
    deep = compute_attractor(cantor, A[0], tol=0, max_iter=10, max_points=4096).final
    iv = cantor_intervals(10)
    lo = np.array([a for a, _ in iv])
    hi = np.array([b for _, b in iv])
    for x in deep:
        d = np.where((lo <= x) & (x <= hi), 0.0, np.minimum(abs(x - lo), abs(x - hi))).min()
        assert d <= 3.0 ** -10
    assert time.perf_counter() - start < 5.0


@crit(9, "example4: W keeps [0,1/2] with exact endpoints; sup trace reaches 1/2 within 1e-3 in 200 steps")
def test_example4_attractor_facts():
    half = FiniteCompactSet.grid(0, 0.5, 1001)
    for name in ("example4a", "example4b"):
        ifs = preset(name).ifs
        W = apply_operator(ifs, half)
        assert W.min == 0.0 and W.max == 0.5
        assert np.all((W.points >= 0) & (W.points <= 0.5))
    failures = []
    for name in ("example4a", "example4b"):
        ifs = preset(name).ifs
        run = compute_attractor(ifs, FiniteCompactSet.grid(0, 1, 1001), tol=0, max_iter=200,
                                max_points=4096, track_distance=False)
        sup = np.array(run.sup_trace)
        assert run.stopped_at == 200
        assert np.all(np.diff(sup) <= 0)
        if not abs(sup[-1] - 0.5) <= 1e-3:
            failures.append(f"{name}: sup after 200 steps is {float(sup[-1])!r}")
    assert not failures, "; ".join(failures)


@crit(10, "repeated CLI runs give byte-identical CSV and JSON output")
def test_determinism(tmp_path):
    def cli(*argv, cwd):
        r = subprocess.run([sys.executable, "-m", "quasifix.cli", *argv], capture_output=True, cwd=cwd)
        return r.returncode, r.stdout

    outputs = []
    for rep in range(2):
        d = tmp_path / f"run{rep}"
        d.mkdir()
        got = [
            cli("verify", "--preset", "cantor", "--json", "--seed", "7", cwd=d),
            cli("verify", "--preset", "example4a", "--json", cwd=d),
            cli("iterate", "--preset", "example3", "--x0", "1", "--out", "t.csv", cwd=d),
            cli("attractor", "--preset", "cantor", "--grid", "1", "--tol", "1e-4", "--out", "s.csv",
                "--meta", "m.json", "--json", cwd=d),
        ]
        files = [(d / f).read_bytes() for f in ("t.csv", "s.csv", "m.json")]
        outputs.append((got, files))
    assert outputs[0] == outputs[1]
    assert [code for code, _ in outputs[0][0]] == [0, 2, 0, 0]
