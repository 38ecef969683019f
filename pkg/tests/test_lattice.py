import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diowave.lattice import (
    GOLDEN,
    DispersionMatrix,
    ModeIndex,
    Quadruple,
    ball_modes,
    bilinear,
    eigenvalue,
    factored_resonant_value,
    half_ball_modes,
    is_zero_momentum,
    read_admissibility_csv,
    regularity_threshold,
    resonant_value,
    scan_admissibility,
)

vec2 = st.tuples(st.integers(-50, 50), st.integers(-50, 50))
SKEW = DispersionMatrix(np.array([[1.0, 0.3], [0.3, 2.0]]))


def test_eigenvalue_examples(identity2):
    assert eigenvalue(identity2, (0, 0)) == 0
    assert eigenvalue(identity2, (1, 0)) == 1
    # n1^2 A11 + 2 n1 n2 A12 + n2^2 A22 = 1 + 0.6 + 2
    assert eigenvalue(SKEW, (1, 1)) == pytest.approx(3.6, rel=1e-15)


def test_eigenvalue_dimension_mismatch(identity2):
    with pytest.raises(ValueError):
        eigenvalue(identity2, (1, 0, 0))


def test_eigenvalue_broadcasts(golden):
    modes = ball_modes(4, 2)
    vals = eigenvalue(golden, modes)
    ref = [float(n @ golden.entries @ n) for n in modes.astype(float)]
    assert np.allclose(vals, ref, rtol=1e-15, atol=0)


def test_matrix_validation():
    with pytest.raises(ValueError):
        DispersionMatrix(np.array([[1.0, 0.2], [0.3, 1.0]]))
    with pytest.raises(ValueError):
        DispersionMatrix(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(ValueError):
        DispersionMatrix(np.eye(2), tau=0)
    with pytest.raises(ValueError):
        DispersionMatrix(np.ones(3))


def test_golden_fixture_entries(golden):
    assert golden.entries[0, 1] == GOLDEN
    assert golden.tau == 3.0
    assert golden.dim == 2


def test_resonant_value_examples(identity2):
    q = Quadruple.build(identity2, (1, 0), (0, 0), (0, 1), (1, 1))
    assert q.omega == 0
    assert q.zero_momentum
    assert factored_resonant_value(identity2, q) == 0
    qs = Quadruple.build(SKEW, (1, 0), (0, 0), (0, 1), (1, 1))
    assert resonant_value(SKEW, qs) == pytest.approx(factored_resonant_value(SKEW, qs), abs=1e-14)


def test_factored_rejects_nonzero_momentum(golden):
    q = Quadruple.build(golden, (1, 0), (0, 0), (0, 1), (2, 2))
    assert not q.zero_momentum
    assert not is_zero_momentum(q)
    with pytest.raises(ValueError):
        factored_resonant_value(golden, q)


@given(vec2, vec2)
def test_pairings_cancel(n1, n3):
    q = Quadruple.build(SKEW, n1, n1, n3)
    assert q.n == n3
    assert q.omega == 0
    assert factored_resonant_value(SKEW, q) == 0


@settings(max_examples=300, deadline=None)
@given(vec2, vec2, vec2, st.integers(0, 4))
def test_factorization_property(n1, n2, n3, seed):
    A = DispersionMatrix.random(2, seed)
    q = Quadruple.build(A, n1, n2, n3)
    f = factored_resonant_value(A, q)
    scale = sum(eigenvalue(A, v) for v in (q.n1, q.n2, q.n3, q.n)) + 1.0
    assert abs(q.omega - f) <= 1e-12 * scale


@given(vec2, vec2, vec2)
def test_resonant_value_symmetries(n1, n2, n3):
    q = np.array([n1, n2, n3, np.add(np.subtract(n1, n2), n3)])
    base = resonant_value(SKEW, q)
    assert resonant_value(SKEW, q[[2, 1, 0, 3]]) == pytest.approx(base, abs=1e-9)
    assert resonant_value(SKEW, q[[1, 0, 3, 2]]) == pytest.approx(-base, abs=1e-9)


@settings(deadline=None)
@given(st.integers(0, 20), st.lists(st.integers(-30, 30), min_size=3, max_size=3))
def test_coercivity(seed, n):
    A = DispersionMatrix.random(3, seed)
    lo, hi = A.coercivity
    n2 = sum(k * k for k in n)
    lam = eigenvalue(A, n)
    assert lo * n2 * (1 - 1e-12) <= lam <= hi * n2 * (1 + 1e-12)


def test_random_matrix_is_deterministic():
    a = DispersionMatrix.random(3, 7)
    b = DispersionMatrix.random(3, 7)
    assert np.array_equal(a.entries, b.entries)
    assert a.coercivity[0] > 0


def test_regularity_threshold():
    assert regularity_threshold(3, 2, 2) == 7
    assert regularity_threshold(3, 1, 2) == 13
    assert regularity_threshold(6, 0.5, 3) == 49.5
    for bad in ((0, 1, 2), (3, 0, 2), (3, 2.5, 2), (3, 1, 0)):
        with pytest.raises(ValueError):
            regularity_threshold(*bad)


def test_ball_modes_order_and_count():
    m = ball_modes(3, 2)
    assert len(m) == 29
    assert tuple(m[0]) == (0, 0)
    n2 = np.sum(m * m, axis=1)
    assert np.all(np.diff(n2) >= 0)
    assert len({tuple(v) for v in m.tolist()}) == len(m)


def test_half_ball_modes():
    h = half_ball_modes(3, 2)
    full = {tuple(v) for v in ball_modes(3, 2).tolist()} - {(0, 0)}
    got = {tuple(v) for v in h.tolist()}
    assert len(got) * 2 == len(full)
    assert got | {tuple(-np.array(v)) for v in got} == full


def test_mode_index_lookup():
    m = ball_modes(5, 2)
    idx = ModeIndex(m)
    assert np.array_equal(idx.lookup(m), np.arange(len(m)))
    assert idx.lookup(np.array([6, 0])) == -1
    assert idx.lookup(np.array([4, 4])) == -1


def test_bilinear_symmetric(golden):
    a, b = np.array([3, -1]), np.array([2, 5])
    assert bilinear(golden, a, b) == pytest.approx(bilinear(golden, b, a), rel=1e-15)


@pytest.mark.parametrize(
    "A",
    [DispersionMatrix.identity(2), DispersionMatrix(np.diag([1.0, math.sqrt(2.0)]))],
    ids=["square", "rectangular"],
)
def test_scan_rejects_square_and_rectangular(A):
    rep = scan_admissibility(A, 5)
    assert rep.best_constant == 0
    assert not rep.admissible
    a, b = rep.witness
    assert bilinear(A, np.array(a), np.array(b)) == 0
    assert {tuple(np.abs(a)), tuple(np.abs(b))} == {(1, 0), (0, 1)}


def test_scan_golden_fixture(golden):
    rep = scan_admissibility(golden, 32)
    hist = dict(rep.history)
    for r in (8, 16, 32):
        assert hist[r] == 0.6180339887498949
    vals = [c for _, c in rep.history]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    assert rep.admissible


def test_scan_matches_brute_force():
    A = DispersionMatrix.random(2, 3)
    rep = scan_admissibility(A, 4)
    pts = [v for v in ball_modes(4, 2) if np.any(v)]
    best = min(
        abs(bilinear(A, a, b)) * np.linalg.norm(a) ** A.tau * np.linalg.norm(b) ** A.tau for a in pts for b in pts
    )
    assert rep.best_constant == pytest.approx(best, rel=1e-12)


def test_admissibility_csv_roundtrip(tmp_path, golden):
    rep = scan_admissibility(golden, 6)
    rep.to_csv(tmp_path / "a.csv")
    rows = read_admissibility_csv(tmp_path / "a.csv")
    assert [r[0] for r in rows] == list(range(1, 7))
    assert rows[-1][1] == rep.best_constant
    assert tuple(rows[-1][2]) == tuple(rep.witness[0])
