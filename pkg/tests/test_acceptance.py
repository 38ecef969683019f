"""Acceptance criteria, one test each; every test prints an ACCEPTANCE line.

Heavy scenarios run once per session at their default configuration and are
shared between criteria.
"""

import math
import time

import numpy as np
import pytest
import scipy.fft as sfft

from conftest import record_acceptance
from diowave.config import SCENARIOS, load_config
from diowave.lattice import DispersionMatrix, ModeIndex, eigenvalue, resonant_value, scan_admissibility
from diowave.resonance import build_quasi_resonant_index, enumerate_resonant_set, resonant_sum_identity_check
from diowave.scenarios import one_mode_phase, run_scenario
from diowave.clusters import build_partition
from diowave.waveguide import (
    WaveguideField,
    WaveguideGrid,
    nonresonant_part,
    space_resonant_part,
    trilinear_kernel,
)

_RUNS: dict = {}


@pytest.fixture(scope="session")
def scenario(tmp_path_factory):
    def run(name, *overrides):
        key = (name,) + overrides
        if key not in _RUNS:
            out = tmp_path_factory.mktemp(name)
            cfg = load_config(name, overrides=list(overrides))
            t = time.perf_counter()
            checks, _ = run_scenario(cfg, out)
            _RUNS[key] = ({c.id: c for c in checks}, time.perf_counter() - t, out)
        return _RUNS[key]

    return run


def _fmt(c):
    return f"{c.id}={c.measured:.6g} ({c.bound})"


def test_01_factorization_identity():
    rng = np.random.default_rng(2024)
    t = time.perf_counter()
    worst = 0.0
    count = 0
    for d in (2, 3):
        for seed in range(5):
            A = DispersionMatrix.random(d, 100 * d + seed)
            n = 1000
            v = rng.integers(-50, 51, size=(8 * n, 3, d))
            v = v[np.all(np.sum(v * v, axis=-1) <= 2500, axis=1)][:n]
            q = np.concatenate([v, (v[:, 0] - v[:, 1] + v[:, 2])[:, None, :]], axis=1)
            om = resonant_value(A, q)
            f = 2.0 * np.einsum("ki,ij,kj->k", (q[:, 0] - q[:, 1]).astype(float), A.entries, (q[:, 1] - q[:, 2]).astype(float))
            scale = np.maximum(np.abs(f), 1.0)
            worst = max(worst, float(np.max(np.abs(om - f) / scale)))
            count += len(q)
    elapsed = time.perf_counter() - t
    ok = count == 10_000 and worst <= 1e-12 and elapsed < 1.0
    record_acceptance(1, ok, f"{count} quadruples, max rel err {worst:.3g} (<= 1e-12), {elapsed:.2f}s (< 1s)")
    assert ok


def test_02_square_torus_control():
    t = time.perf_counter()
    sq = enumerate_resonant_set(DispersionMatrix.identity(2), 20)
    witness = sq.contains((1, 0), (0, 1), (-1, 0), (0, -1))
    golden = DispersionMatrix.golden()
    # every non-trivial quadruple in the ball has |Omega| = 2 |a.Ab| with |a|, |b| <= 2R
    certified = 2 * scan_admissibility(golden, 40).form_bound(40)
    gs = enumerate_resonant_set(golden, 20, tol_res=0.5 * certified)
    elapsed = time.perf_counter() - t
    ok = witness and not sq.trivial_only and gs.trivial_only and elapsed < 30
    record_acceptance(
        2,
        ok,
        f"identity: witness={witness}, non-trivial={sq.n_nontrivial}; golden: trivial_only={gs.trivial_only} "
        f"at tol {0.5 * certified:.3g}; {elapsed:.1f}s (< 30s)",
    )
    assert ok


def test_03_resonant_sum_identity():
    t = time.perf_counter()
    rs = enumerate_resonant_set(DispersionMatrix.golden(), 10)
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        a = rng.normal(size=len(rs.modes)) + 1j * rng.normal(size=len(rs.modes))
        lhs, rhs = resonant_sum_identity_check(a, rs)
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    elapsed = time.perf_counter() - t
    ok = worst <= 1e-12 and elapsed < 10
    record_acceptance(3, ok, f"max rel err {worst:.3g} over 100 states at R=10 (<= 1e-12), {elapsed:.1f}s (< 10s)")
    assert ok


@pytest.mark.slow
def test_04_cluster_certificates(scenario):
    checks, elapsed, _ = scenario("cluster-report")
    keys = ["partition", "origin-cluster", "dyadicity", "separation", "weights", "interior-stable-R128"]
    ok = all(checks[k].passed for k in keys) and elapsed < 120
    record_acceptance(
        4,
        ok,
        f"{checks['dyadicity'].note}, separation margin {checks['separation'].measured:.3g} over "
        f"{checks['separation'].note}, R=128 changed {checks['interior-stable-R128'].measured:g}; {elapsed:.0f}s (< 120s)",
    )
    assert ok


@pytest.mark.slow
def test_05_super_action_conservation(scenario):
    eff, _, _ = scenario("effective-run")
    full, _, _ = scenario("full-vs-effective")
    keys = [f"{k}-{m}" for k in ("super_action", "Z", "Hs") for m in ("order", "finest")]
    neg = ["identity-full-drift", "identity-drift-over-error"]
    ok = all(eff[k].passed for k in keys) and all(full[k].passed for k in neg)
    detail = ", ".join(_fmt(eff[k]) for k in keys) + "; " + ", ".join(_fmt(full[k]) for k in neg)
    record_acceptance(5, ok, detail)
    assert ok


def test_06_one_mode_closed_form():
    p = build_partition(DispersionMatrix.golden(), 8)
    idx = build_quasi_resonant_index(p, theta=0.3, alpha0_constant=4.0)
    steps = [1e-2, 5e-3, 2.5e-3]
    errs = [one_mode_phase(idx, 1.0, 10.0, h, mode=mode) for mode in (0, len(p.modes) - 1) for h in steps]
    orders = [math.log2(errs[i] / errs[i + 1]) for i in (0, 1, 3, 4)]
    ok = all(abs(o - 4) <= 0.5 for o in orders)
    record_acceptance(6, ok, f"observed orders {', '.join(f'{o:.3f}' for o in orders)} (4 +/- 0.5), finest err {errs[2]:.3g}")
    assert ok


@pytest.mark.slow
def test_07_dispersive_estimate(scenario):
    checks, _, _ = scenario("dispersive-check")
    ratio, cross = checks["normalized-ratio"], checks["gaussian-closed-form"]
    ok = ratio.passed and cross.passed
    record_acceptance(
        7, ok, f"normalized max {checks['normalized-max'].measured:.4g}, max/min ratio {ratio.measured:.4g} (< 10), "
        f"closed form {cross.measured:.3g} (<= 1e-8)"
    )
    assert ok


@pytest.mark.slow
def test_08_decay_rate(scenario):
    checks, elapsed, _ = scenario("nls-run")
    keys = ["decay-slope", "window-within-horizon", "Hs-ratio-min", "Hs-ratio-max"]
    ok = all(checks[k].passed for k in keys) and elapsed < 600
    record_acceptance(8, ok, ", ".join(_fmt(checks[k]) for k in keys) + f"; {elapsed:.0f}s (< 600s)")
    assert ok


@pytest.mark.slow
def test_09_modified_scattering(scenario):
    checks, _, _ = scenario("scattering-compare")
    keys = ["difference-bound", "difference-trend-slope", "difference-largest-rise"]
    ok = all(checks[k].passed for k in keys)
    record_acceptance(9, ok, ", ".join(_fmt(checks[k]) for k in keys) + f", {_fmt(checks['gain-over-free-profile'])}")
    assert ok


@pytest.mark.slow
def test_10_small_divisor_ledger(scenario, tmp_path):
    fx = str(tmp_path / "fixtures")
    rec, _, _ = scenario("divisor-ledger", "fixture=record", f"fixture_dir={fx}")
    cmp_, _, _ = scenario("divisor-ledger", "fixture=compare", f"fixture_dir={fx}")
    ok = rec["no-blow-up"].passed and cmp_["fixture-compare"].passed
    record_acceptance(
        10,
        ok,
        f"max_ratio R=32 {rec['max-ratio-R32'].measured:.10g}, R=64 {rec['max-ratio-R64'].measured:.10g}, "
        f"factor {rec['no-blow-up'].measured:.4g} (< 4), rerun mismatches {cmp_['fixture-compare'].measured:g}",
    )
    assert ok


def _direct_kernel(F, G, H, A, t):
    """Trilinear kernel by explicit DFT sums and mode convolution (no FFTs)."""
    grid = F.grid
    x, xi = grid.x, grid.xi
    fwd = (grid.dx / (2 * math.pi)) * np.exp(-1j * np.outer(xi, x))
    inv = grid.dxi * np.exp(1j * np.outer(x, xi))
    modes = grid.modes
    lam = eigenvalue(A, modes)
    prop = np.exp(-1j * t * (xi[:, None] ** 2 + lam[None, :]))
    phys = [inv @ (prop * (fwd @ f.to_x().values)) for f in (F, G, H)]
    idx = ModeIndex(modes)
    out = np.zeros_like(phys[0])
    m = len(modes)
    for i1 in range(m):
        for i2 in range(m):
            for i3 in range(m):
                j = int(idx.lookup(modes[i1] - modes[i2] + modes[i3]))
                if j >= 0:
                    out[:, j] += phys[0][:, i1] * np.conj(phys[1][:, i2]) * phys[2][:, i3]
    return np.conj(prop) * (fwd @ out)


def test_11_decomposition_and_oracle():
    rng = np.random.default_rng(11)
    A = DispersionMatrix.golden()
    g = WaveguideGrid(6.0, 16, 2)
    env = np.exp(-(g.x**2) / 4)[:, None]
    F, G, H = (
        WaveguideField(env * (rng.normal(size=(16, g.n_modes)) + 1j * rng.normal(size=(16, g.n_modes))), g) for _ in range(3)
    )
    t = 1.7
    total = trilinear_kernel(F, G, H, A, t).values
    parts = space_resonant_part(F, G, H, A, t).values + nonresonant_part(F, G, H, A, t).values
    scale = np.max(np.abs(total))
    dec = float(np.max(np.abs(total - parts)) / scale)
    oracle = float(np.max(np.abs(total - _direct_kernel(F, G, H, A, t))) / scale)
    ok = dec <= 1e-13 and oracle <= 1e-8
    record_acceptance(11, ok, f"decomposition {dec:.3g} (<= 1e-13), direct quadrature {oracle:.3g} (<= 1e-8), relative to max {scale:.3g}")
    assert ok


QUICK = {
    "admissibility-scan": ["R=8", "radii=[4,8]"],
    "cluster-report": ["R=8", "radii=[8,16]"],
    "resonance-census": ["R=6"],
    "divisor-ledger": ["R=4", "radii=[4,6]", "samples=100", "alpha0_constant=2", "theta=0.5"],
    "effective-run": ["R=4", "t1=2", "steps=[0.05,0.025,0.0125]"],
    "full-vs-effective": ["R=4", "t1=2", "h=0.05", "steps=[0.05,0.025]"],
    "nls-run": ["L=40", "Nx=512", "R=2", "t1=2", "h=0.05", "record_times=[0,1,2]", "fit_window=[1,2]"],
    "scattering-compare": ["L=40", "Nx=512", "R=2", "t1=3", "h=0.05", "record_times=[1,2,3]", "fit_window=[1,3]"],
    "dispersive-check": ["L=400", "Nx=8192", "times=[1,2,5]"],
}


@pytest.mark.slow
def test_12_determinism(tmp_path):
    assert set(QUICK) == set(SCENARIOS)
    differing = []
    n_files = 0
    for name, over in QUICK.items():
        outs = []
        for k in range(2):
            out = tmp_path / f"{name}-{k}"
            run_scenario(load_config(name, overrides=over), out)
            outs.append(out)
        files = sorted(p.name for p in outs[0].glob("*.csv"))
        assert files, name
        for f in files:
            n_files += 1
            if (outs[0] / f).read_bytes() != (outs[1] / f).read_bytes():
                differing.append(f"{name}/{f}")
    ok = not differing
    record_acceptance(12, ok, f"{n_files} CSVs across {len(QUICK)} scenarios, differing: {differing or 'none'}")
    assert ok
