"""Dyadic cluster decomposition of the truncated lattice and cluster Sobolev norms.

Clusters are the connected components of the near-resonance graph on modes,
with an edge (m, n) whenever

    |m - n| + |lam2(m) - lam2(n)| <= (|m| + |n|) ** c_d.

No cross-component edge means the separation property holds by construction;
dyadicity is checked afterwards and reported.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import connected_components

from .lattice import DispersionMatrix, ModeIndex, ball_modes, eigenvalue

BEYOND_TRUNCATION = -1

PARTITION_FORMAT = "diowave-partition/1"


class DyadicityError(ValueError):
    """An interior cluster violates max|n| <= 2 min|n|."""


@dataclass
class ClusterPartition:
    A: DispersionMatrix
    radius: int
    c_d: float
    modes: np.ndarray  # (M, d), canonical ball order
    labels: np.ndarray  # (M,) cluster index alpha
    interior: np.ndarray  # (n_clusters,) bool
    weights: np.ndarray  # (n_clusters,) K_alpha
    max_norms: np.ndarray  # (n_clusters,)
    origin_bound: float
    interior_radius: int
    dyadic_violations: list[int] = field(default_factory=list)
    _index: ModeIndex | None = field(default=None, repr=False)

    @property
    def n_clusters(self) -> int:
        return len(self.weights)

    @property
    def index(self) -> ModeIndex:
        if self._index is None:
            self._index = ModeIndex(self.modes)
        return self._index

    @property
    def norms(self) -> np.ndarray:
        return np.sqrt(np.sum(self.modes.astype(float) ** 2, axis=1))

    def members(self, alpha: int) -> np.ndarray:
        return np.nonzero(self.labels == alpha)[0]

    def clusters(self) -> list[np.ndarray]:
        order = np.argsort(self.labels, kind="stable")
        bounds = np.searchsorted(self.labels[order], np.arange(self.n_clusters + 1))
        return [order[bounds[a] : bounds[a + 1]] for a in range(self.n_clusters)]

    def mode_weights(self) -> np.ndarray:
        """K_alpha of the cluster containing each mode."""
        return self.weights[self.labels]

    def default_alpha0_constant(self) -> float:
        return max(2.0 * self.origin_bound, 16.0)

    def interior_modes_mask(self) -> np.ndarray:
        return self.interior[self.labels]

    def interior_signature(self) -> set[frozenset[tuple[int, ...]]]:
        """Interior clusters as sets of mode tuples (for truncation comparisons)."""
        out = set()
        for a, idx in enumerate(self.clusters()):
            if self.interior[a]:
                out.add(frozenset(tuple(int(k) for k in self.modes[i]) for i in idx))
        return out

    # ------------------------------------------------------------ persistence

    def to_csv(self, path: str | Path):
        header = {
            "format": PARTITION_FORMAT,
            "A": self.A.entries.tolist(),
            "tau": self.A.tau,
            "R": self.radius,
            "c_d": self.c_d,
        }
        with open(path, "w", newline="") as fh:
            fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
            w = csv.writer(fh)
            w.writerow([f"n{k}" for k in range(self.modes.shape[1])] + ["cluster", "interior"])
            for n, lab in zip(self.modes, self.labels):
                w.writerow([int(k) for k in n] + [int(lab), int(self.interior[lab])])

    @classmethod
    def from_csv(cls, path: str | Path) -> "ClusterPartition":
        with open(path, newline="") as fh:
            first = fh.readline()
            if not first.startswith("# "):
                raise ValueError(f"{path}: missing partition header")
            header = json.loads(first[2:])
            if header.get("format") != PARTITION_FORMAT:
                raise ValueError(f"{path}: unsupported partition format {header.get('format')!r}")
            rows = list(csv.reader(fh))
        d = len(header["A"])
        data = np.array([[int(x) for x in r] for r in rows[1:]], dtype=np.int64)
        A = DispersionMatrix(np.array(header["A"]), tau=header["tau"])
        modes, labels, interior_flag = data[:, :d], data[:, d], data[:, d + 1]
        n_cl = int(labels.max()) + 1
        interior = np.zeros(n_cl, dtype=bool)
        interior[labels] = interior_flag.astype(bool)
        return _assemble(A, int(header["R"]), float(header["c_d"]), modes, labels, interior)


def _assemble(A, R, c_d, modes, labels, interior) -> ClusterPartition:
    norms = np.sqrt(np.sum(modes.astype(float) ** 2, axis=1))
    n_cl = int(labels.max()) + 1
    mins = np.full(n_cl, np.inf)
    maxs = np.zeros(n_cl)
    np.minimum.at(mins, labels, norms)
    np.maximum.at(maxs, labels, norms)
    weights = mins.copy()
    weights[0] = 1.0
    violations = [a for a in range(1, n_cl) if maxs[a] > 2.0 * mins[a] + 1e-12]
    interior_norms = maxs[interior] if interior.any() else np.zeros(1)
    return ClusterPartition(
        A=A,
        radius=R,
        c_d=c_d,
        modes=modes,
        labels=labels,
        interior=interior,
        weights=weights,
        max_norms=maxs,
        origin_bound=float(maxs[0]),
        interior_radius=int(math.floor(interior_norms.max())) if interior.any() else 0,
        dyadic_violations=violations,
    )


def near_resonance_edges(A: DispersionMatrix, modes: np.ndarray, c_d: float) -> tuple[np.ndarray, np.ndarray]:
    """All edges (i, j), i < j, of the near-resonance graph on ``modes``.

    Candidate neighbours are scanned offset by offset; an offset v can only
    carry an edge when |v| <= (2 max|n| + |v|) ** c_d.
    """
    d = modes.shape[1]
    idx = ModeIndex(modes)
    norms = np.sqrt(np.sum(modes.astype(float) ** 2, axis=1))
    lam = eigenvalue(A, modes)
    top = 2.0 * norms.max() + 1.0
    if c_d < 1:
        reach = top**c_d
        while reach < (top + reach) ** c_d:
            reach = (top + reach) ** c_d
        reach = min(reach, top)
    else:
        reach = top
    offsets = ball_modes(reach, d)
    offsets = offsets[np.any(offsets != 0, axis=1)]
    # keep one representative per +/- pair
    first = offsets[np.arange(len(offsets)), np.argmax(offsets != 0, axis=1)]
    offsets = offsets[first > 0]
    src, dst = [], []
    for v in offsets:
        vlen = math.sqrt(float(v @ v))
        j = idx.lookup(modes + v)
        ok = j >= 0
        i = np.nonzero(ok)[0]
        j = j[ok]
        gap = vlen + np.abs(lam[j] - lam[i])
        keep = gap <= (norms[i] + norms[j]) ** c_d
        src.append(i[keep])
        dst.append(j[keep])
    src = np.concatenate(src) if src else np.zeros(0, dtype=np.int64)
    dst = np.concatenate(dst) if dst else np.zeros(0, dtype=np.int64)
    lo, hi = np.minimum(src, dst), np.maximum(src, dst)
    return lo, hi


def build_partition(A: DispersionMatrix, R: int, c_d: float = 0.5, strict: bool = True) -> ClusterPartition:
    """Cluster the ball |n| <= R using the graph built on the ball of radius 2R.

    A component is interior when it lies inside radius R and none of its
    modes has a graph neighbour outside radius 2R (always true for c_d <= 1,
    checked explicitly otherwise). With ``strict`` an interior component
    violating dyadicity raises :class:`DyadicityError`; violations are always
    listed on the result.
    """
    if R < 1:
        raise ValueError("radius must be >= 1")
    if not 0 < c_d <= 2:
        raise ValueError("c_d must lie in (0, 2]")
    d = A.dim
    big = ball_modes(2 * R, d)
    lo, hi = near_resonance_edges(A, big, c_d)
    m = len(big)
    graph = coo_matrix((np.ones(len(lo), dtype=np.int8), (lo, hi)), shape=(m, m))
    n_comp, comp = connected_components(graph, directed=False)

    big_norms = np.sqrt(np.sum(big.astype(float) ** 2, axis=1))
    comp_max = np.zeros(n_comp)
    np.maximum.at(comp_max, comp, big_norms)
    # a mode n can reach partners up to |n| + (|n| + |m|)^c_d; make sure that stays inside 2R
    reach_ok = _reach_inside(big_norms, c_d, 2 * R)
    comp_reach = np.ones(n_comp, dtype=bool)
    np.logical_and.at(comp_reach, comp, reach_ok)

    inner = big_norms <= R + 1e-9
    modes = big[inner]
    comp_in = comp[inner]
    # relabel: origin cluster first, then clusters ordered by min norm of their first mode
    uniq, first_pos = np.unique(comp_in, return_index=True)
    origin_comp = comp_in[0]  # ball order starts at 0
    order = sorted(uniq, key=lambda c: (c != origin_comp, first_pos[np.searchsorted(uniq, c)]))
    relabel = {c: a for a, c in enumerate(order)}
    labels = np.array([relabel[c] for c in comp_in], dtype=np.int64)
    interior = np.array([comp_max[c] <= R + 1e-9 and comp_reach[c] for c in order], dtype=bool)
    part = _assemble(A, R, c_d, modes, labels, interior)
    bad = [a for a in part.dyadic_violations if part.interior[a]]
    if strict and bad:
        a = bad[0]
        members = [tuple(int(k) for k in part.modes[i]) for i in part.members(a)][:20]
        raise DyadicityError(
            f"interior cluster {a} is not dyadic: min|n|={part.weights[a]:.4g}, "
            f"max|n|={part.max_norms[a]:.4g}; members (first 20): {members}; "
            f"{len(bad)} offending cluster(s) in total -- c_d={c_d} is too large for this matrix"
        )
    return part


def _reach_inside(norms: np.ndarray, c_d: float, limit: float) -> np.ndarray:
    # largest |m - n| for an edge: solve r = (|n| + |n| + r)^c_d by fixed point
    if c_d >= 1:
        # no finite reach; interior status then rests on the radius test alone
        return np.ones_like(norms, dtype=bool)
    r = (2 * norms + 1.0) ** c_d
    for _ in range(50):
        r = (2 * norms + r) ** c_d
    return norms + r <= limit + 1e-9


def high_frequency_threshold(p: ClusterPartition, constant: float) -> int:
    """Smallest alpha >= 1 with K_alpha >= constant, or BEYOND_TRUNCATION."""
    if constant <= 0:
        raise ValueError("constant must be positive")
    hits = np.nonzero(p.weights[1:] >= constant)[0]
    return int(hits[0]) + 1 if len(hits) else BEYOND_TRUNCATION


def high_frequency_mask(p: ClusterPartition, constant: float) -> np.ndarray:
    """Per-cluster flag: alpha >= 1 and K_alpha >= constant.

    Clusters are labelled in increasing order of K_alpha, so this is the set
    alpha >= alpha0.
    """
    flag = p.weights >= constant
    flag[0] = False
    return flag


def super_actions(p: ClusterPartition, a: np.ndarray) -> np.ndarray:
    """Per-cluster l2 masses ||pi_alpha a||^2 over the last axis of ``a``."""
    a = np.asarray(a)
    if a.shape[-1] != len(p.modes):
        raise ValueError(f"state has {a.shape[-1]} modes, partition has {len(p.modes)}")
    w = np.abs(a) ** 2
    onehot = csr_matrix((np.ones(len(p.labels)), (np.arange(len(p.labels)), p.labels)), shape=(len(p.labels), p.n_clusters))
    flat = w.reshape(-1, w.shape[-1])
    out = np.asarray((onehot.T @ flat.T).T)
    return out.reshape(w.shape[:-1] + (p.n_clusters,))


def cluster_norm_hs(p: ClusterPartition, a: np.ndarray, s: float) -> np.ndarray | float:
    """(sum_alpha K_alpha^{2s} ||pi_alpha a||^2)^{1/2} over the last axis."""
    a = np.asarray(a)
    if a.shape[-1] != len(p.modes):
        raise ValueError(f"state has {a.shape[-1]} modes, partition has {len(p.modes)}")
    w = p.mode_weights() ** (2 * s)
    val = np.sqrt(np.sum(w * np.abs(a) ** 2, axis=-1))
    return float(val) if np.ndim(val) == 0 else val


def standard_norm_hs(modes: np.ndarray, a: np.ndarray, s: float) -> np.ndarray | float:
    """(sum max(1, |n|)^{2s} |a_n|^2)^{1/2}."""
    norms = np.maximum(1.0, np.sqrt(np.sum(np.asarray(modes, dtype=float) ** 2, axis=1)))
    val = np.sqrt(np.sum(norms ** (2 * s) * np.abs(a) ** 2, axis=-1))
    return float(val) if np.ndim(val) == 0 else val


# -------------------------------------------------------------- certificates


@dataclass
class PartitionCertificate:
    partition_ok: bool
    origin_ok: bool
    dyadic_ok: bool
    separation_ok: bool
    weights_ok: bool
    n_interior: int
    n_pairs_checked: int
    worst_margin: float

    @property
    def ok(self) -> bool:
        return self.partition_ok and self.origin_ok and self.dyadic_ok and self.separation_ok and self.weights_ok


def certify(p: ClusterPartition, chunk: int = 256) -> PartitionCertificate:
    """Exhaustive check of the partition properties on interior clusters.

    Separation is checked over every pair of modes in distinct clusters with
    at least one of them interior (O(M^2) brute force, chunked).
    """
    modes = p.modes
    expected = ball_modes(p.radius, modes.shape[1])
    partition_ok = (
        len(modes) == len(expected)
        and len({tuple(n) for n in modes.tolist()}) == len(modes)
        and {tuple(n) for n in modes.tolist()} == {tuple(n) for n in expected.tolist()}
        and p.labels.min() == 0
    )
    zero = np.nonzero(np.all(modes == 0, axis=1))[0]
    origin_ok = len(zero) == 1 and p.labels[zero[0]] == 0

    norms = p.norms
    dyadic_ok = True
    weights_ok = True
    for a in range(1, p.n_clusters):
        if not p.interior[a]:
            continue
        nn = norms[p.labels == a]
        dyadic_ok &= bool(nn.max() <= 2 * nn.min() + 1e-12)
        weights_ok &= bool(np.all((p.weights[a] <= nn + 1e-12) & (nn <= 2 * p.weights[a] + 1e-12)))

    lam = eigenvalue(p.A, modes)
    mf = modes.astype(float)
    inter = p.interior_modes_mask()
    worst = np.inf
    pairs = 0
    sep_ok = True
    m = len(modes)
    for start in range(0, m, chunk):
        stop = min(start + chunk, m)
        diff = mf[start:stop, None, :] - mf[None, :, :]
        gap = np.sqrt(np.sum(diff * diff, axis=-1)) + np.abs(lam[start:stop, None] - lam[None, :])
        bound = (norms[start:stop, None] + norms[None, :]) ** p.c_d
        cross = p.labels[start:stop, None] != p.labels[None, :]
        cross &= inter[start:stop, None] | inter[None, :]
        if np.any(cross):
            margin = (gap - bound)[cross]
            pairs += int(cross.sum())
            worst = min(worst, float(margin.min()))
            sep_ok &= bool(margin.min() > 0)
    return PartitionCertificate(
        partition_ok=bool(partition_ok),
        origin_ok=bool(origin_ok),
        dyadic_ok=bool(dyadic_ok),
        separation_ok=bool(sep_ok),
        weights_ok=bool(weights_ok),
        n_interior=int(p.interior.sum()),
        n_pairs_checked=pairs // 1,
        worst_margin=worst,
    )
