import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quasifix.spaces import (QuasiMetricError, QuasiMetricSpace, SampleGrid, ball_contains,
                             check_axioms, estimate_delta, eval_q, probe_convergence_equivalence)

E3 = QuasiMetricSpace.example3()


def q_e3(x, y):
    return 2 * x if x > y else (y if x < y else 0.0)


def q_e4(x, y):
    return 8 * x if x > y else (4 * y if x < y else 0.0)


def q_sorg(x, y):
    return y - x if y >= x else 1.0


def q_wabs(lam):
    return lambda x, y: x - y if x >= y else lam * (y - x)


PRESET_ORACLES = [
    (QuasiMetricSpace.example3(), q_e3),
    (QuasiMetricSpace.example4(), q_e4),
    (QuasiMetricSpace.sorgenfrey(), q_sorg),
    (QuasiMetricSpace.weighted_abs(2.0), q_wabs(2.0)),
    (QuasiMetricSpace.weighted_abs(0.5), q_wabs(0.5)),
]


def test_eval_q_examples():
    assert eval_q(E3, 0.5, 0.25) == 1.0
    assert eval_q(E3, 0.25, 0.5) == 0.5
    for space, _ in PRESET_ORACLES:
        for x in (0.0, 0.3, 1.0):
            assert eval_q(space, x, x) == 0.0


def test_eval_q_domain():
    with pytest.raises(QuasiMetricError):
        eval_q(E3, 1.5, 0.0)
    neg = QuasiMetricSpace.piecewise("x-2*y", "y-x")
    with pytest.raises(QuasiMetricError):
        eval_q(neg, 0.5, 0.4)


@pytest.mark.parametrize("space,oracle", PRESET_ORACLES)
def test_raw_matches_oracle(space, oracle):
    rng = np.random.default_rng(3)
    pts = np.concatenate([rng.uniform(0, 1, 40), [0.0, 0.5, 1.0]])
    M = space.matrix(pts, pts)
    for i, j in itertools.product(range(pts.size), repeat=2):
        assert M[i, j] == oracle(float(pts[i]), float(pts[j]))


def test_sorgenfrey_axioms():
    grid = SampleGrid(np.round(np.linspace(0, 1, 11), 10))
    rep = check_axioms(QuasiMetricSpace.sorgenfrey(), grid)
    assert rep.passed
    assert {c.name for c in rep.checks} >= {"non-negativity", "identity", "separation", "triangle"}


def test_symmetric_piecewise_passes():
    rep = check_axioms(QuasiMetricSpace.piecewise("x-y", "y-x"), SampleGrid.uniform(0, 1, 21))
    assert rep.passed


def test_nonnegativity_failure():
    rep = check_axioms(QuasiMetricSpace.piecewise("x-2*y", "y-x"), SampleGrid.uniform(0, 1, 11))
    c = rep["non-negativity"]
    assert c.failed
    x, y = c.witness
    assert x > y and x - 2 * y < 0
    # lexicographically smallest failing pair
    pts = SampleGrid.uniform(0, 1, 11).points
    first = min((a, b) for a in pts for b in pts if a > b and a - 2 * b < 0)
    assert (x, y) == first


def test_triangle_failure_witness():
    # q = (x-y)^2 symmetric: not a quasi-metric
    sp = QuasiMetricSpace.piecewise("(x-y)^2", "(y-x)^2")
    rep = check_axioms(sp, SampleGrid.uniform(0, 1, 11))
    c = rep["triangle"]
    assert c.failed
    x, y, z = c.witness
    assert sp.raw(x, y) > sp.raw(x, z) + sp.raw(z, y) + 1e-12


def test_separation_failure():
    sp = QuasiMetricSpace.piecewise("0", "y-x")
    rep = check_axioms(sp, SampleGrid.uniform(0, 1, 5))
    assert rep["separation"].failed


def test_declared_delta():
    ok = QuasiMetricSpace.example3(declared_delta=2.0)
    assert check_axioms(ok, SampleGrid.uniform(0, 1, 51)).passed
    bad = QuasiMetricSpace.example3(declared_delta=1.5)
    c = check_axioms(bad, SampleGrid.uniform(0, 1, 51))["delta-symmetry"]
    assert c.failed
    x, y = c.witness
    assert eval_q(bad, x, y) > 1.5 * eval_q(bad, y, x)


@pytest.mark.parametrize("space", [s for s, _ in PRESET_ORACLES])
def test_presets_pass_default_grid(space):
    assert check_axioms(space, SampleGrid.for_space(space)).passed


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0, 1, allow_subnormal=False), min_size=2, max_size=25, unique=True))
def test_presets_pass_any_grid(pts):
    grid = SampleGrid(np.sort(np.array(pts)))
    for space, _ in PRESET_ORACLES:
        assert check_axioms(space, grid).passed


def test_delta_examples():
    grid = SampleGrid.uniform(0, 1, 101)
    est = estimate_delta(E3, grid)
    assert est.value == 2.0 and not est.unbounded
    assert estimate_delta(QuasiMetricSpace.weighted_abs(2.0), grid).value == 2.0
    sorg = estimate_delta(QuasiMetricSpace.sorgenfrey(), grid)
    assert sorg.value >= 100 and sorg.warning


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(1e-6, 1), min_size=2, max_size=20, unique=True))
def test_example4_delta_exact(pts):
    est = estimate_delta(QuasiMetricSpace.example4(), SampleGrid(np.sort(np.array(pts))))
    assert est.value == 2.0


def test_delta_unbounded_flag():
    # q(x,0) = 0 for x>0 breaks separation, and gives a zero reverse distance
    sp = QuasiMetricSpace.piecewise("x*y", "y")
    est = estimate_delta(sp, SampleGrid.uniform(0, 1, 5))
    assert est.unbounded and math.isinf(est.value)


def test_ball_contains():
    assert ball_contains(E3, 0, 0.3, 0.25, "forward")
    assert not ball_contains(E3, 0, 0.3, 0.25, "backward")
    for d in ("forward", "backward"):
        assert ball_contains(E3, 0.4, 1e-9, 0.4, d)
    with pytest.raises(ValueError):
        ball_contains(E3, 0, 0, 0.1)


def test_grid_invariants():
    g = SampleGrid.default(0, 1, seed=5)
    assert np.all(np.diff(g.points) > 0)
    assert g.points[0] == 0.0 and g.points[-1] == 1.0
    assert len(g) == 201
    np.testing.assert_array_equal(g.points, SampleGrid.default(0, 1, seed=5).points)
    with pytest.raises(ValueError):
        g.points[0] = 3.0
    with pytest.raises(QuasiMetricError):
        SampleGrid.uniform(0, 2, 3).check_within(E3)


def test_bad_spaces():
    with pytest.raises(QuasiMetricError):
        QuasiMetricSpace.weighted_abs(0)
    with pytest.raises(QuasiMetricError):
        QuasiMetricSpace.example3(lo=1.0, hi=0.0)
    with pytest.raises(QuasiMetricError):
        QuasiMetricSpace("nope")
    with pytest.raises(Exception):
        QuasiMetricSpace.piecewise("x-z", "y-x")


@pytest.mark.parametrize("space", [QuasiMetricSpace.example3(), QuasiMetricSpace.example4(),
                                   QuasiMetricSpace.weighted_abs(2.0)])
def test_convergence_equivalence_delta_symmetric(space):
    # a_n -> a from above with a > 0 leaves q bounded away from 0 under the
    # example spaces; the probe only needs the implication f => b
    for a, c in ((0.0, 0.5), (0.3, 0.2), (0.3, -0.2)):
        r = probe_convergence_equivalence(space, a, c, n_max=10**7)
        if r["forward"]:
            assert r["backward"]


def test_convergence_equivalence_sorgenfrey_direction():
    sorg = QuasiMetricSpace.sorgenfrey()
    from_right = probe_convergence_equivalence(sorg, 0.3, 0.2)
    assert from_right["forward"] and not from_right["backward"]
