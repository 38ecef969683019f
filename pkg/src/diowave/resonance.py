"""Exact resonances, effective quasi-resonant triples and small-divisor bookkeeping."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .clusters import ClusterPartition, high_frequency_mask
from .lattice import DispersionMatrix, ModeIndex, Quadruple, ball_modes, bilinear, join_vec

log = logging.getLogger(__name__)

DEFAULT_TOL_RES = 1e-9


# ------------------------------------------------------------ resonant set


@dataclass
class ResonantSet:
    """Zero-momentum quadruples with |Omega| <= tol inside the ball |n| <= R.

    Pairings ({n1, n3} = {n, n2}) are always members and are kept implicit;
    non-trivial members are stored explicitly up to ``max_store``.
    """

    A: DispersionMatrix
    radius: int
    tol_res: float
    modes: np.ndarray
    nontrivial: np.ndarray  # (K, 4, d), first max_store members
    nontrivial_omega: np.ndarray
    n_nontrivial: int
    n_trivial: int
    n_near_zero: int  # non-trivial members with 0 < |Omega| <= tol (floating ambiguity)

    @property
    def trivial_only(self) -> bool:
        return self.n_nontrivial == 0

    @property
    def complete(self) -> bool:
        return len(self.nontrivial) == self.n_nontrivial

    def __len__(self):
        return self.n_trivial + self.n_nontrivial

    def contains(self, n1, n2, n3, n) -> bool:
        """Membership by the defining predicate."""
        q = np.array([n1, n2, n3, n], dtype=np.int64)
        if np.any(q[0] - q[1] + q[2] != q[3]):
            return False
        if np.any(np.sum(q * q, axis=1) > self.radius**2):
            return False
        return abs(2.0 * bilinear(self.A, q[0] - q[1], q[1] - q[2])) <= self.tol_res

    def was_enumerated(self, n1, n2, n3, n) -> bool:
        """True when the quadruple is a pairing or among the stored non-trivial members."""
        q = np.array([n1, n2, n3, n], dtype=np.int64)
        if np.any(q[0] - q[1] + q[2] != q[3]) or np.any(np.sum(q * q, axis=1) > self.radius**2):
            return False
        if np.array_equal(q[0], q[1]) or np.array_equal(q[1], q[2]):
            return True
        return bool(np.any(np.all(self.nontrivial == q[None], axis=(1, 2))))

    def member_indices(self) -> np.ndarray:
        """All members as rows (i1, i2, i3, i) of positions in ``modes``."""
        if not self.complete:
            raise RuntimeError("non-trivial members were truncated; enlarge max_store")
        m = len(self.modes)
        p, q = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
        p, q = p.ravel(), q.ravel()
        first = np.stack([p, p, q, q], axis=1)  # n1 = n2, n3 = n
        off = p != q
        second = np.stack([p[off], q[off], q[off], p[off]], axis=1)  # n1 = n, n2 = n3
        parts = [first, second]
        if len(self.nontrivial):
            idx = ModeIndex(self.modes)
            parts.append(idx.lookup(self.nontrivial))
        return np.concatenate(parts).astype(np.int64)

    def to_csv(self, path: str | Path, include_trivial: bool = False):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n1", "n2", "n3", "n", "omega", "trivial"])
            if include_trivial:
                for i1, i2, i3, i in self.member_indices()[: self.n_trivial]:
                    vs = [join_vec(self.modes[k]) for k in (i1, i2, i3, i)]
                    w.writerow(vs + ["0.0", 1])
            for q, om in zip(self.nontrivial, self.nontrivial_omega):
                w.writerow([join_vec(v) for v in q] + [repr(float(om)), 0])


def _nonzero_ball(R: float, d: int) -> np.ndarray:
    b = ball_modes(R, d)
    return b[np.any(b != 0, axis=1)]


def enumerate_resonant_set(
    A: DispersionMatrix,
    R: int,
    tol_res: float = DEFAULT_TOL_RES,
    max_store: int = 200_000,
    chunk: int = 1024,
) -> ResonantSet:
    """Brute-force census of zero-momentum quadruples with |Omega| <= tol_res.

    Every zero-momentum quadruple in the ball is (n2 + a, n2, n2 - b, n2 + a - b)
    with Omega = 2 a^T A b, so the scan runs over difference pairs (a, b) and
    then over the base mode n2. Pairs with a = 0 or b = 0 are the pairings.
    """
    if R < 1:
        raise ValueError("radius must be >= 1")
    d = A.dim
    modes = ball_modes(R, d)
    m = len(modes)
    diffs = _nonzero_ball(2 * R, d)
    df = diffs.astype(float)
    Ad = df @ A.entries

    pairs_a, pairs_b, pairs_om = [], [], []
    for start in range(0, len(diffs), chunk):
        om = 2.0 * (Ad[start : start + chunk] @ df.T)
        ia, ib = np.nonzero(np.abs(om) <= tol_res)
        pairs_a.append(ia + start)
        pairs_b.append(ib)
        pairs_om.append(om[ia, ib])
    pa = np.concatenate(pairs_a)
    pb = np.concatenate(pairs_b)
    pom = np.concatenate(pairs_om)
    # shortest difference pairs first, so stored witnesses are the simplest ones
    size = np.sum(diffs[pa] ** 2, axis=1) + np.sum(diffs[pb] ** 2, axis=1)
    order = np.argsort(size, kind="stable")
    pa, pb, pom = pa[order], pb[order], pom[order]

    r2 = R * R
    stored, stored_om = [], []
    n_stored = 0
    n_nontrivial = 0
    n_near = 0
    base = modes[None, :, :]
    step = max(1, 4_000_000 // max(m, 1))
    for start in range(0, len(pa), step):
        a = diffs[pa[start : start + step]][:, None, :]
        b = diffs[pb[start : start + step]][:, None, :]
        n1 = base + a
        n3 = base - b
        n = base + a - b
        ok = (
            (np.sum(n1 * n1, axis=-1) <= r2)
            & (np.sum(n3 * n3, axis=-1) <= r2)
            & (np.sum(n * n, axis=-1) <= r2)
        )
        counts = ok.sum(axis=1)
        n_nontrivial += int(counts.sum())
        n_near += int(counts[pom[start : start + step] != 0].sum())
        if n_stored < max_store and counts.sum():
            ip, iq = np.nonzero(ok)
            take = min(len(ip), max_store - n_stored)
            ip, iq = ip[:take], iq[:take]
            quad = np.stack([n1[ip, iq], np.broadcast_to(base, n1.shape)[ip, iq], n3[ip, iq], n[ip, iq]], axis=1)
            stored.append(quad)
            stored_om.append(pom[start : start + step][ip])
            n_stored += take
    nontrivial = np.concatenate(stored) if stored else np.zeros((0, 4, d), dtype=np.int64)
    nontrivial_om = np.concatenate(stored_om) if stored_om else np.zeros(0)
    return ResonantSet(
        A=A,
        radius=R,
        tol_res=tol_res,
        modes=modes,
        nontrivial=nontrivial.astype(np.int64),
        nontrivial_omega=nontrivial_om,
        n_nontrivial=n_nontrivial,
        n_trivial=2 * m * m - m,
        n_near_zero=n_near,
    )


def resonant_sum_identity_check(a: np.ndarray, rset: ResonantSet) -> tuple[complex, float]:
    """(lhs, rhs) of the pairing identity on a trivial resonant set.

    lhs sums a_{n1} conj(a_{n2}) a_{n3} conj(a_n) over the enumerated members;
    rhs = 2 (sum |a_n|^2)^2 - sum |a_n|^4.
    """
    if not rset.trivial_only:
        raise ValueError("the pairing identity only holds on a trivial resonant set")
    a = np.asarray(a, dtype=complex)
    if a.shape != (len(rset.modes),):
        raise ValueError(f"state must have {len(rset.modes)} amplitudes")
    q = rset.member_indices()
    lhs = np.sum(a[q[:, 0]] * np.conj(a[q[:, 1]]) * a[q[:, 2]] * np.conj(a[q[:, 3]]))
    w = np.abs(a) ** 2
    rhs = 2.0 * np.sum(w) ** 2 - np.sum(w * w)
    return complex(lhs), float(rhs)


# ------------------------------------------------------ quasi-resonant index


@dataclass
class QuasiResonantIndex:
    """Effective quasi-resonant triples for every high-frequency outgoing mode.

    Each Lambda set is stored flat: ``out[k]`` is the position of n and
    ``(i1[k], i2[k], i3[k])`` the positions of (n1, n2, n3) in the partition's
    mode array, with ``omega[k]`` the resonant value.
    """

    partition: ClusterPartition
    theta: float
    alpha0_constant: float
    high: np.ndarray  # per-mode flag: n lies in a cluster with alpha >= alpha0
    lam1: dict[str, np.ndarray]
    lam3: dict[str, np.ndarray]

    @property
    def n_triples(self) -> int:
        return len(self.lam1["out"])

    @property
    def empty(self) -> bool:
        return self.n_triples == 0

    def triples(self, which: int = 1) -> np.ndarray:
        """(K, 4) array of (i1, i2, i3, out) for Lambda^(1) or Lambda^(3)."""
        lam = self.lam1 if which == 1 else self.lam3
        return np.stack([lam["i1"], lam["i2"], lam["i3"], lam["out"]], axis=1)

    def for_mode(self, i: int, which: int = 1) -> np.ndarray:
        t = self.triples(which)
        return t[t[:, 3] == i, :3]

    def contains(self, i1: np.ndarray, i2: np.ndarray, i3: np.ndarray, out: np.ndarray) -> np.ndarray:
        """Vectorized membership test in Lambda^(1)(n) or Lambda^(3)(n) by the defining predicate."""
        return in_lambda(self.partition, self.theta, self.high, i1, i2, i3, out, which=1) | in_lambda(
            self.partition, self.theta, self.high, i1, i2, i3, out, which=3
        )

    def to_csv(self, path: str | Path):
        modes = self.partition.modes
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["set", "n", "n1", "n2", "n3", "omega"])
            for name, lam in (("1", self.lam1), ("3", self.lam3)):
                for k in range(len(lam["out"])):
                    w.writerow(
                        [name]
                        + [join_vec(modes[lam[key][k]]) for key in ("out", "i1", "i2", "i3")]
                        + [repr(float(lam["omega"][k]))]
                    )


def triple_omega(A: DispersionMatrix, modes: np.ndarray, i1, i2, i3) -> np.ndarray:
    """Omega for (n1, n2, n3, n1 - n2 + n3) via the zero-momentum factorization."""
    n1, n2, n3 = modes[i1], modes[i2], modes[i3]
    return 2.0 * bilinear(A, n1 - n2, n2 - n3)


def in_lambda(p: ClusterPartition, theta: float, high: np.ndarray, i1, i2, i3, out, which: int = 1) -> np.ndarray:
    """Defining predicate of Lambda^(1) (which=1) or Lambda^(3) (which=3)."""
    i1, i2, i3, out = (np.asarray(v) for v in (i1, i2, i3, out))
    modes = p.modes
    norms = p.norms
    hi_slot, lo_slot = (i1, i3) if which == 1 else (i3, i1)
    K = p.weights[p.labels[out]]
    zm = np.all(modes[i1] - modes[i2] + modes[i3] == modes[out], axis=-1)
    om = triple_omega(p.A, modes, i1, i2, i3)
    return (
        high[out]
        & zm
        & (np.abs(om) < 1.0)
        & (p.labels[hi_slot] == p.labels[out])
        & (norms[i2] < theta * K)
        & (norms[lo_slot] < theta * K)
    )


def build_quasi_resonant_index(
    p: ClusterPartition,
    A: DispersionMatrix | None = None,
    theta: float = 0.2,
    alpha0_constant: float | None = None,
) -> QuasiResonantIndex:
    """Enumerate Lambda^(1)(n) and Lambda^(3)(n) for all high-frequency n.

    For each high cluster, n and the high incoming mode run over the cluster
    and the middle mode over the small ball |m| < theta K_alpha; the last mode
    is fixed by zero momentum and kept when it is small as well.
    """
    if A is None:
        A = p.A
    if not np.array_equal(A.entries, p.A.entries):
        raise ValueError("partition was built for a different dispersion matrix")
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    if alpha0_constant is None:
        alpha0_constant = p.default_alpha0_constant()
    cl_high = high_frequency_mask(p, alpha0_constant)
    high = cl_high[p.labels]
    modes = p.modes
    norms = p.norms
    idx = p.index

    lam1 = {k: [] for k in ("out", "i1", "i2", "i3", "omega")}
    lam3 = {k: [] for k in ("out", "i1", "i2", "i3", "omega")}
    any_small = False
    clusters = p.clusters()
    for alpha in np.nonzero(cl_high)[0]:
        K = p.weights[alpha]
        small = np.nonzero(norms < theta * K)[0]
        any_small |= theta * K >= 1
        members = clusters[alpha]
        nn, hh, ss = np.meshgrid(members, members, small, indexing="ij")
        nn, hh, ss = nn.ravel(), hh.ravel(), ss.ravel()
        # Lambda^(1): n3 = n - n1 + n2 ; Lambda^(3): n1 = n - n3 + n2
        other = idx.lookup(modes[nn] - modes[hh] + modes[ss])
        ok = other >= 0
        ok[ok] = norms[other[ok]] < theta * K
        nn, hh, ss, other = nn[ok], hh[ok], ss[ok], other[ok]
        om = triple_omega(A, modes, hh, ss, other)
        keep = np.abs(om) < 1.0
        for lam, (i1, i3) in ((lam1, (hh, other)), (lam3, (other, hh))):
            lam["out"].append(nn[keep])
            lam["i1"].append(i1[keep])
            lam["i2"].append(ss[keep])
            lam["i3"].append(i3[keep])
            lam["omega"].append(om[keep])
    if not any_small:
        log.warning("theta * K_alpha < 1 on every high-frequency cluster: all quasi-resonant sets are empty")

    def pack(lam):
        out = {}
        for k, v in lam.items():
            dt = float if k == "omega" else np.int64
            out[k] = np.concatenate(v).astype(dt) if v else np.zeros(0, dtype=dt)
        order = np.lexsort((out["i3"], out["i2"], out["i1"], out["out"]))
        return {k: v[order] for k, v in out.items()}

    return QuasiResonantIndex(
        partition=p,
        theta=theta,
        alpha0_constant=float(alpha0_constant),
        high=high,
        lam1=pack(lam1),
        lam3=pack(lam3),
    )


# ----------------------------------------------------------- divisor ledger


@dataclass
class DivisorLedger:
    s: float
    tau: float
    c_d: float
    radius: int
    max_ratio: float
    n_admitted: int
    n_rejected_lambda: int
    n_rejected_resonant: int
    samples: list[tuple[Quadruple, float]] = field(default_factory=list)
    mode: str = "exhaustive"

    def to_csv(self, path: str | Path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n1", "n2", "n3", "n", "omega", "ratio"])
            for q, r in self.samples:
                w.writerow([join_vec(v) for v in (q.n1, q.n2, q.n3, q.n)] + [repr(q.omega), repr(float(r))])


def divisor_log_ratio(K, omega, n_star1, n_star2, s, tau, c_d) -> np.ndarray:
    """log of (K^s / |Omega|) / (<n1*>^s <n2*>^{4 tau / c_d}), <x> = max(1, x)."""
    e = 4.0 * tau / c_d
    return (
        s * np.log(K)
        - np.log(np.abs(omega))
        - s * np.log(np.maximum(1.0, n_star1))
        - e * np.log(np.maximum(1.0, n_star2))
    )


def divisor_ledger(
    p: ClusterPartition,
    idx: QuasiResonantIndex,
    A: DispersionMatrix | None = None,
    s: float | None = None,
    samples: int = 200_000,
    seed: int = 0,
    exhaustive_below: int = 32,
    stratum: int = 2,
    keep: int = 200,
    tol_res: float = DEFAULT_TOL_RES,
) -> DivisorLedger:
    """Sweep admissible non-effective quadruples and record the small-divisor ratio.

    Below ``exhaustive_below`` every zero-momentum quadruple with a
    high-frequency outgoing mode is visited. Above it the sweep is the
    exhaustive stratum n2* <= ``stratum`` (where the ratio is largest, since
    the denominator carries <n2*>^{4 tau / c_d}) plus ``samples`` uniform random
    quadruples drawn with a fixed seed.
    """
    if A is None:
        A = p.A
    if s is None:
        from .lattice import regularity_threshold

        s = regularity_threshold(A.tau, p.c_d, A.dim)
    if s <= 0:
        raise ValueError("s must be positive")
    modes = p.modes
    m = len(modes)
    high_pos = np.nonzero(idx.high)[0]
    # each batch lists (out, i2, i3); n1 = n + n2 - n3 is resolved below
    batches = []
    if len(high_pos) == 0:
        mode = "empty"
    elif p.radius < exhaustive_below:
        mode = "exhaustive"
        i2, i3 = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
        i2, i3 = i2.ravel(), i3.ravel()
        for out in high_pos:
            batches.append((np.full(len(i2), out), i2, i3))
    else:
        mode = f"stratum n2*<={stratum} + {samples} samples (seed {seed})"
        small = np.nonzero(p.norms <= stratum)[0]
        sa, sb = np.meshgrid(small, small, indexing="ij")
        outs = np.repeat(high_pos, sa.size)
        sa = np.tile(sa.ravel(), len(high_pos))
        sb = np.tile(sb.ravel(), len(high_pos))
        # large n1: (n2, n3) = (sa, sb) small
        batches.append((outs, sa, sb))
        # large n2: (n1, n3) = (sa, sb) small, n2 = n1 + n3 - n
        big = p.index.lookup(modes[sa] + modes[sb] - modes[outs])
        ok = big >= 0
        batches.append((outs[ok], big[ok], sb[ok]))
        # large n3: (n1, n2) = (sa, sb) small, n3 = n - n1 + n2
        big = p.index.lookup(modes[outs] - modes[sa] + modes[sb])
        ok = big >= 0
        batches.append((outs[ok], sb[ok], big[ok]))
        if samples:
            rng = np.random.default_rng(seed)
            batches.append(
                (rng.choice(high_pos, size=samples), rng.integers(0, m, size=samples), rng.integers(0, m, size=samples))
            )

    best_log = -np.inf
    top: list[tuple[float, tuple]] = []
    n_adm = n_lam = n_res = 0
    norms = p.norms
    for out, i2, i3 in batches:
        # n1 = n + n2 - n3
        i1 = p.index.lookup(modes[out] + modes[i2] - modes[i3])
        ok = i1 >= 0
        out, i1, i2, i3 = out[ok], i1[ok], i2[ok], i3[ok]
        if len(out) == 0:
            continue
        om = triple_omega(A, modes, i1, i2, i3)
        res = np.abs(om) <= tol_res
        lam = idx.contains(i1, i2, i3, out)
        n_res += int(res.sum())
        n_lam += int((lam & ~res).sum())
        adm = ~res & ~lam
        n_adm += int(adm.sum())
        if not adm.any():
            continue
        out, i1, i2, i3, om = out[adm], i1[adm], i2[adm], i3[adm], om[adm]
        star = np.sort(np.stack([norms[i1], norms[i2], norms[i3]], axis=1), axis=1)[:, ::-1]
        K = p.weights[p.labels[out]]
        lr = divisor_log_ratio(K, om, star[:, 0], star[:, 1], s, A.tau, p.c_d)
        best_log = max(best_log, float(lr.max()))
        k = min(keep, len(lr))
        sel = np.argpartition(-lr, k - 1)[:k]
        for j in sel:
            top.append((float(lr[j]), (int(i1[j]), int(i2[j]), int(i3[j]), int(out[j]), float(om[j]))))
        top.sort(key=lambda e: (-e[0], e[1]))
        top = top[:keep]
    samples_out = []
    for lr, (a, b, c, o, om) in top:
        q = Quadruple(
            tuple(int(v) for v in modes[a]),
            tuple(int(v) for v in modes[b]),
            tuple(int(v) for v in modes[c]),
            tuple(int(v) for v in modes[o]),
            om,
            True,
        )
        samples_out.append((q, math.exp(lr)))
    return DivisorLedger(
        s=float(s),
        tau=A.tau,
        c_d=p.c_d,
        radius=p.radius,
        max_ratio=math.exp(best_log) if np.isfinite(best_log) else 0.0,
        n_admitted=n_adm,
        n_rejected_lambda=n_lam,
        n_rejected_resonant=n_res,
        samples=samples_out,
        mode=mode,
    )


# ------------------------------------------------------------- normal form


def normal_form_weight(idx: QuasiResonantIndex | None, q: Quadruple, tol_res: float = DEFAULT_TOL_RES) -> float:
    """1 / Omega for a quadruple outside the effective sets."""
    if not q.zero_momentum:
        raise ValueError("normal-form weights need zero momentum")
    if abs(q.omega) <= tol_res:
        raise ZeroDivisionError("resonant quadruple: Omega = 0")
    if idx is not None:
        pos = idx.partition.index.lookup(q.stacked())
        if np.all(pos >= 0) and bool(idx.contains(pos[0:1], pos[1:2], pos[2:3], pos[3:4])[0]):
            raise ValueError("quadruple belongs to an effective quasi-resonant set")
    return 1.0 / q.omega
