import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diowave.clusters import (
    BEYOND_TRUNCATION,
    ClusterPartition,
    DyadicityError,
    build_partition,
    certify,
    cluster_norm_hs,
    high_frequency_mask,
    high_frequency_threshold,
    near_resonance_edges,
    standard_norm_hs,
    super_actions,
)
from diowave.lattice import DispersionMatrix, ball_modes, eigenvalue


@pytest.mark.parametrize("R", [4, 8, 12])
def test_partition_axioms_golden(golden, R):
    p = build_partition(golden, R)
    cert = certify(p)
    assert cert.ok, cert
    assert cert.n_interior > 0
    assert cert.worst_margin > 0


def test_labels_cover_ball_and_origin_first(golden_partition_8):
    p = golden_partition_8
    assert len(p.modes) == len(ball_modes(8, 2))
    assert tuple(p.modes[0]) == (0, 0)
    assert p.labels[0] == 0
    assert p.weights[0] == 1.0
    assert sorted(set(p.labels.tolist())) == list(range(p.n_clusters))
    sizes = sum(len(c) for c in p.clusters())
    assert sizes == len(p.modes)


def test_weights_nondecreasing_and_dyadic(golden_partition_8):
    p = golden_partition_8
    w = p.weights[1:]
    assert np.all(np.diff(w) >= -1e-12)
    for a in np.nonzero(p.interior)[0]:
        if a == 0:
            continue
        nn = p.norms[p.members(a)]
        assert nn.max() <= 2 * nn.min() + 1e-12
        assert p.weights[a] == pytest.approx(nn.min())


def test_edges_are_symmetric_near_resonances(golden):
    modes = ball_modes(5, 2)
    lo, hi = near_resonance_edges(golden, modes, 0.5)
    lam = eigenvalue(golden, modes)
    nrm = np.linalg.norm(modes, axis=1)
    gap = np.linalg.norm(modes[lo] - modes[hi], axis=1) + np.abs(lam[lo] - lam[hi])
    assert np.all(gap <= (nrm[lo] + nrm[hi]) ** 0.5 + 1e-12)
    # brute force agrees
    m = len(modes)
    count = 0
    for i in range(m):
        for j in range(i + 1, m):
            g = np.linalg.norm(modes[i] - modes[j]) + abs(lam[i] - lam[j])
            count += g <= (nrm[i] + nrm[j]) ** 0.5
    assert count == len(lo)


def test_dyadicity_error_on_wide_coupling(golden):
    with pytest.raises(DyadicityError) as exc:
        build_partition(golden, 10, c_d=0.8)
    assert "c_d" in str(exc.value)
    p = build_partition(golden, 10, c_d=0.8, strict=False)
    assert any(p.interior[a] for a in p.dyadic_violations)


def test_invalid_arguments(golden):
    with pytest.raises(ValueError):
        build_partition(golden, 0)
    with pytest.raises(ValueError):
        build_partition(golden, 4, c_d=0)


def test_csv_roundtrip(tmp_path, golden_partition_8):
    p = golden_partition_8
    path = tmp_path / "p.csv"
    p.to_csv(path)
    q = ClusterPartition.from_csv(path)
    assert np.array_equal(q.modes, p.modes)
    assert np.array_equal(q.labels, p.labels)
    assert np.array_equal(q.interior, p.interior)
    assert np.array_equal(q.weights, p.weights)
    assert np.array_equal(q.A.entries, p.A.entries)
    path.write_text("no header\n")
    with pytest.raises(ValueError):
        ClusterPartition.from_csv(path)


def test_high_frequency_threshold(golden_partition_8):
    p = golden_partition_8
    assert high_frequency_threshold(p, 1.0) == 1
    assert high_frequency_threshold(p, 1e10) == BEYOND_TRUNCATION
    scan = next(a for a in range(1, p.n_clusters) if p.weights[a] >= 8)
    assert high_frequency_threshold(p, 8.0) == scan
    mask = high_frequency_mask(p, 8.0)
    assert not mask[0]
    assert np.array_equal(np.nonzero(mask)[0], np.arange(scan, p.n_clusters))
    with pytest.raises(ValueError):
        high_frequency_threshold(p, 0)


def test_super_actions_sum_to_mass(golden_partition_8, rng):
    p = golden_partition_8
    a = rng.normal(size=(3, len(p.modes))) + 1j * rng.normal(size=(3, len(p.modes)))
    sa = super_actions(p, a)
    assert sa.shape == (3, p.n_clusters)
    assert np.allclose(sa.sum(axis=-1), np.sum(np.abs(a) ** 2, axis=-1), rtol=1e-13)
    ref = np.array([[np.sum(np.abs(row[p.labels == k]) ** 2) for k in range(p.n_clusters)] for row in a])
    assert np.allclose(sa, ref, rtol=1e-13, atol=0)
    with pytest.raises(ValueError):
        super_actions(p, a[:, :-1])


def test_cluster_norm_examples(golden_partition_8):
    p = golden_partition_8
    a = np.zeros(len(p.modes), dtype=complex)
    a[0] = 1.0
    assert cluster_norm_hs(p, a, 2.0) == 1.0
    assert standard_norm_hs(p.modes, a, 2.0) == 1.0
    i = int(np.nonzero(np.all(p.modes == [3, 0], axis=1))[0][0])
    a[:] = 0
    a[i] = 2.0
    assert standard_norm_hs(p.modes, a, 1.0) == pytest.approx(6.0)
    assert cluster_norm_hs(p, a, 1.0) == pytest.approx(2.0 * p.weights[p.labels[i]])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.floats(1.1, 4.0))
def test_cluster_norm_equivalent_on_interior(golden_partition_8, seed, s):
    p = golden_partition_8
    rng = np.random.default_rng(seed)
    mask = p.interior_modes_mask() & (p.labels > 0)
    a = np.where(mask, rng.normal(size=len(p.modes)) + 1j * rng.normal(size=len(p.modes)), 0)
    ratio = standard_norm_hs(p.modes, a, s) / cluster_norm_hs(p, a, s)
    assert 1 - 1e-12 <= ratio <= 2**s * (1 + 1e-12)


def test_interior_signature_stable_under_truncation(golden):
    small = build_partition(golden, 8).interior_signature()
    big = build_partition(golden, 16)
    inside = {c for c in big.interior_signature() if max(np.hypot(*zip(*c))) <= 4}
    # clusters well inside the smaller ball are unchanged
    assert inside <= small
