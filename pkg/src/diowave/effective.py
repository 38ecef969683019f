"""Effective dynamics: quasi-resonant toroidal system, waveguide effective system,
the full toroidal interaction system, RK4 integration and conservation monitors.

Phases: with U = e^{it Delta} F and the free flow e^{-it(xi^2 + lam2(n))} on
Fourier modes, the profile nonlinearity carries e^{-it Omega} for the
quadruple (n1, n2, n3, n). All systems below use that sign (``PHASE_SIGN``) so
that they agree with the split-step solver in :mod:`diowave.waveguide`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.fft as sfft
from scipy.sparse import csr_matrix

from .clusters import ClusterPartition, cluster_norm_hs, super_actions
from .lattice import DispersionMatrix, eigenvalue
from .resonance import QuasiResonantIndex

PHASE_SIGN = -1.0


class StepSizeError(RuntimeError):
    """The mass guard tripped: the step is too large for the dynamics."""


@dataclass
class ToroidalState:
    amplitudes: np.ndarray
    partition: ClusterPartition
    time: float = 0.0

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape[-1] != len(self.partition.modes):
            raise ValueError("amplitude vector does not match the partition's modes")


@dataclass
class EffectiveWaveguideState:
    """Values G_n(t, xi) on a uniform xi grid; shape (n_xi, n_modes)."""

    slices: np.ndarray
    xi_grid: np.ndarray
    partition: ClusterPartition
    time: float = 1.0

    def __post_init__(self):
        self.slices = np.asarray(self.slices, dtype=complex)
        self.xi_grid = np.asarray(self.xi_grid, dtype=float)
        if self.slices.shape != (len(self.xi_grid), len(self.partition.modes)):
            raise ValueError(
                f"slices shape {self.slices.shape} does not match "
                f"({len(self.xi_grid)}, {len(self.partition.modes)})"
            )

    @property
    def dxi(self) -> float:
        if len(self.xi_grid) < 2:
            return 1.0
        return float(np.min(np.diff(np.sort(self.xi_grid))))


# -------------------------------------------------------------- interactions


@dataclass
class Interactions:
    """Flat Lambda^(1) list with a sparse scatter matrix onto outgoing modes."""

    out: np.ndarray
    i1: np.ndarray
    i2: np.ndarray
    i3: np.ndarray
    omega: np.ndarray
    n_modes: int
    scatter: csr_matrix = field(init=False, repr=False)

    def __post_init__(self):
        k = len(self.out)
        self.scatter = csr_matrix((np.ones(k), (self.out, np.arange(k))), shape=(self.n_modes, k))

    @classmethod
    def from_index(cls, idx: QuasiResonantIndex) -> "Interactions":
        lam = idx.lam1
        return cls(lam["out"], lam["i1"], lam["i2"], lam["i3"], lam["omega"], len(idx.partition.modes))

    def sum(self, a: np.ndarray, t: float) -> np.ndarray:
        """sum over Lambda^(1)(n) of e^{-it Omega} a_{n1} conj(a_{n2}) a_{n3}."""
        if len(self.out) == 0:
            return np.zeros_like(a)
        terms = np.exp(1j * PHASE_SIGN * t * self.omega) * a[..., self.i1] * np.conj(a[..., self.i2]) * a[..., self.i3]
        flat = terms.reshape(-1, terms.shape[-1])
        res = (self.scatter @ flat.T).T
        return np.asarray(res).reshape(a.shape)


def _interactions(idx) -> Interactions:
    if isinstance(idx, Interactions):
        return idx
    if isinstance(idx, QuasiResonantIndex):
        cached = getattr(idx, "_interactions", None)
        if cached is None:
            cached = Interactions.from_index(idx)
            idx._interactions = cached
        return cached
    raise TypeError("expected a QuasiResonantIndex")


def toroidal_rhs(a, idx: QuasiResonantIndex, t: float) -> np.ndarray:
    """d a / dt for the quasi-resonant toroidal system (zero off high frequencies)."""
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    if isinstance(a, ToroidalState):
        if a.partition is not idx.partition:
            raise ValueError("state and index use different partitions")
        a = a.amplitudes
    a = np.asarray(a, dtype=complex)
    inter = _interactions(idx)
    if a.shape[-1] != inter.n_modes:
        raise ValueError("state does not match the index's partition")
    return -2j * inter.sum(a, t)


def effective_rhs(G, idx: QuasiResonantIndex, t: float, quasi: bool = True) -> np.ndarray:
    """d G / dt = -i (R^t + Q^t) slice by slice in xi.

    R^t(n) = (2 pi / t) sum_m |G_m|^2 G_n - (pi / t) |G_n|^2 G_n
    Q^t(n) = (2 pi / t) sum_{Lambda^(1)(n)} e^{-it Omega} G_{n1} conj(G_{n2}) G_{n3}
    """
    if t < 1:
        raise ValueError("the effective system is defined for t >= 1")
    if isinstance(G, EffectiveWaveguideState):
        G = G.slices
    G = np.asarray(G, dtype=complex)
    w = np.abs(G) ** 2
    res = (2 * np.pi / t) * np.sum(w, axis=-1, keepdims=True) * G - (np.pi / t) * w * G
    if quasi:
        res = res + (2 * np.pi / t) * _interactions(idx).sum(G, t)
    return -1j * res


# -------------------------------------------------------- full toroidal system


class GalerkinCubic:
    """Exact Galerkin evaluation of sum_{n1-n2+n3=n} u_{n1} conj(u_{n2}) u_{n3} on a ball.

    The ball |n| <= R is embedded in a periodic box with side >= 4R + 1, so the
    cubic product (support radius 3R) never aliases back into the ball.
    """

    def __init__(self, modes: np.ndarray):
        self.modes = np.asarray(modes, dtype=np.int64)
        self.d = self.modes.shape[1]
        reach = int(np.max(np.abs(self.modes))) if len(self.modes) else 0
        self.side = sfft.next_fast_len(max(4 * reach + 1, 4))
        self.pos = tuple((self.modes % self.side).T)
        self.axes = tuple(range(-self.d, 0))

    def to_box(self, c: np.ndarray) -> np.ndarray:
        box = np.zeros(c.shape[:-1] + (self.side,) * self.d, dtype=complex)
        box[(Ellipsis,) + self.pos] = c
        return box

    def from_box(self, box: np.ndarray) -> np.ndarray:
        return box[(Ellipsis,) + self.pos]

    def box_modes(self) -> np.ndarray:
        """Integer representatives of every box position, in C order of the box."""
        k = np.fft.fftfreq(self.side, 1.0 / self.side).astype(np.int64)
        grids = np.meshgrid(*([k] * self.d), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def box_to_physical(self, box: np.ndarray) -> np.ndarray:
        return sfft.ifftn(box, axes=self.axes, norm="forward", workers=-1)

    def box_from_physical(self, u: np.ndarray) -> np.ndarray:
        return sfft.fftn(u, axes=self.axes, norm="forward", workers=-1)

    def to_physical(self, c: np.ndarray) -> np.ndarray:
        return self.box_to_physical(self.to_box(c))

    def from_physical(self, u: np.ndarray) -> np.ndarray:
        return self.from_box(self.box_from_physical(u))

    def cubic(self, u: np.ndarray) -> np.ndarray:
        phys = self.to_physical(u)
        return self.from_physical(np.abs(phys) ** 2 * phys)

    def trilinear(self, u: np.ndarray, v: np.ndarray, w: np.ndarray) -> np.ndarray:
        """sum_{n1-n2+n3=n} u_{n1} conj(v_{n2}) w_{n3}, restricted to the ball."""
        return self.from_physical(self.to_physical(u) * np.conj(self.to_physical(v)) * self.to_physical(w))


def full_toroidal_rhs(a, A: DispersionMatrix, t: float, modes: np.ndarray | None = None, galerkin=None) -> np.ndarray:
    """d a / dt = -i sum_{n1-n2+n3=n} e^{-it Omega} a_{n1} conj(a_{n2}) a_{n3} over the ball."""
    if isinstance(a, ToroidalState):
        modes = a.partition.modes
        a = a.amplitudes
    if modes is None:
        raise ValueError("modes are required for raw amplitude arrays")
    a = np.asarray(a, dtype=complex)
    if galerkin is None:
        galerkin = GalerkinCubic(modes)
    lam = eigenvalue(A, modes)
    rot = np.exp(1j * PHASE_SIGN * t * lam)
    return -1j * np.conj(rot) * galerkin.cubic(rot * a)


def naive_full_toroidal_rhs(a: np.ndarray, A: DispersionMatrix, t: float, modes: np.ndarray) -> np.ndarray:
    """O(M^3) reference for :func:`full_toroidal_rhs`."""
    from .lattice import ModeIndex

    idx = ModeIndex(modes)
    lam = eigenvalue(A, modes)
    out = np.zeros(len(modes), dtype=complex)
    m = len(modes)
    for i1 in range(m):
        for i2 in range(m):
            tgt = idx.lookup(modes[i1] - modes[i2] + modes)
            ok = tgt >= 0
            i3 = np.nonzero(ok)[0]
            n = tgt[ok]
            om = lam[i1] - lam[i2] + lam[i3] - lam[n]
            np.add.at(out, n, np.exp(1j * PHASE_SIGN * t * om) * a[i1] * np.conj(a[i2]) * a[i3])
    return -1j * out


# ------------------------------------------------------------- integration


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n_samples, ...) complex
    steps: int
    h: float


def rk4(
    rhs: Callable[[np.ndarray, float], np.ndarray],
    y0: np.ndarray,
    t0: float,
    t1: float,
    h: float,
    stride: int = 1,
    guard: float | None = None,
    mass_axis: int | tuple = -1,
) -> Trajectory:
    """Classical fixed-step RK4 from t0 to t1 (t1 - t0 must be a multiple of h).

    With ``guard`` the l2 mass along ``mass_axis`` is checked after every step
    and a relative drift above the guard raises :class:`StepSizeError`.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    if t1 <= t0:
        raise ValueError("need t0 < t1")
    n = int(round((t1 - t0) / h))
    if n < 1 or abs(n * h - (t1 - t0)) > 1e-9 * max(1.0, abs(t1 - t0)):
        raise ValueError(f"(t1 - t0) / h = {(t1 - t0) / h} is not an integer")
    y = np.array(y0, dtype=complex)
    mass0 = np.sum(np.abs(y) ** 2, axis=mass_axis) if guard is not None else None
    times, states = [t0], [y.copy()]
    for k in range(n):
        t = t0 + k * h
        k1 = rhs(y, t)
        k2 = rhs(y + 0.5 * h * k1, t + 0.5 * h)
        k3 = rhs(y + 0.5 * h * k2, t + 0.5 * h)
        k4 = rhs(y + h * k3, t + h)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if guard is not None:
            with np.errstate(over="ignore", invalid="ignore"):
                mass = np.sum(np.abs(y) ** 2, axis=mass_axis)
                scale = np.where(mass0 > 0, mass0, 1.0)
                drift = np.max(np.abs(mass - mass0) / scale)
            if not np.isfinite(drift) or drift > guard:
                raise StepSizeError(f"mass drift {drift:.3g} exceeds guard {guard:g} at t={t + h:.6g}; reduce h")
        if (k + 1) % stride == 0 or k + 1 == n:
            times.append(t0 + (k + 1) * h)
            states.append(y.copy())
    return Trajectory(np.array(times), np.array(states), n, h)


@dataclass
class EffectiveRun:
    trajectory: Trajectory
    xi_grid: np.ndarray
    partition: ClusterPartition
    report: "ConservationReport"


def integrate_effective(
    G0: EffectiveWaveguideState,
    idx: QuasiResonantIndex,
    t0: float,
    t1: float,
    h: float,
    s: float = 2.0,
    stride: int = 1,
    guard: float = 1e-3,
    quasi: bool = True,
) -> EffectiveRun:
    """RK4 integration of the effective system with a conservation report."""
    if t0 < 1:
        raise ValueError("the effective system is defined for t >= 1")
    traj = rk4(lambda y, t: effective_rhs(y, idx, t, quasi=quasi), G0.slices, t0, t1, h, stride=stride, guard=guard)
    report = conservation_report(traj, G0.partition, s=s, xi_grid=G0.xi_grid)
    return EffectiveRun(traj, G0.xi_grid, G0.partition, report)


def integrate_toroidal(a0, idx: QuasiResonantIndex, t0: float, t1: float, h: float, stride: int = 1, guard=1e-3):
    a0 = a0.amplitudes if isinstance(a0, ToroidalState) else a0
    return rk4(lambda y, t: toroidal_rhs(y, idx, t), a0, t0, t1, h, stride=stride, guard=guard)


def integrate_full_toroidal(a0, A: DispersionMatrix, modes, t0: float, t1: float, h: float, stride: int = 1, guard=None):
    gal = GalerkinCubic(modes)
    return rk4(lambda y, t: full_toroidal_rhs(y, A, t, modes, gal), a0, t0, t1, h, stride=stride, guard=guard)


# ------------------------------------------------------------ conservation


@dataclass
class ConservationReport:
    times: np.ndarray
    super_actions: np.ndarray  # (n_t, ..., n_clusters)
    z_trace: np.ndarray
    hs_trace: np.ndarray
    super_action_drift: float
    z_drift: float
    hs_drift: float

    def drifts(self) -> dict[str, float]:
        return {"super_action": self.super_action_drift, "Z": self.z_drift, "Hs": self.hs_drift}

    def to_csv(self, path: str | Path, norms_path: str | Path | None = None):
        """Super-action trace (t, xi_index, cluster_index, super_action) and norm trace."""
        sa = self.super_actions
        sa = sa.reshape(sa.shape[0], -1, sa.shape[-1])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "xi_index", "cluster_index", "super_action"])
            for ti, t in enumerate(self.times):
                for xi in range(sa.shape[1]):
                    for a in range(sa.shape[2]):
                        w.writerow([repr(float(t)), xi, a, repr(float(sa[ti, xi, a]))])
        if norms_path is not None:
            with open(norms_path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["t", "Z", "Hs", "hs_max_slice"])
                for t, z, hs in zip(self.times, self.z_trace, self.hs_trace):
                    w.writerow([repr(float(t)), repr(float(z)), repr(float(hs)), repr(float(z))])


def _rel_drift(trace: np.ndarray) -> float:
    ref = trace[0]
    dev = np.max(np.abs(trace - ref))
    if dev == 0:
        return 0.0
    return float(dev / abs(ref)) if ref != 0 else float("inf")


def conservation_report(
    traj: Trajectory,
    partition: ClusterPartition,
    s: float = 2.0,
    xi_grid: np.ndarray | None = None,
) -> ConservationReport:
    """Per-cluster super-actions, Z and H^s traces, and their maximal drifts.

    Super-action drift is measured relative to the t0 mass of the slice it
    belongs to, so that empty clusters do not produce spurious infinities.
    Without ``xi_grid`` the states are toroidal: Z is the h^s norm and H^s the
    l2-weighted h^s norm of the single slice.
    """
    states = np.asarray(traj.states)
    sa = super_actions(partition, states)
    mass0 = np.sum(sa[0], axis=-1, keepdims=True)
    scale = np.where(mass0 > 0, mass0, 1.0)
    sa_drift = float(np.max(np.abs(sa - sa[0][None]) / scale[None])) if states.size else 0.0
    hs = cluster_norm_hs(partition, states, s)
    if xi_grid is None:
        z = np.asarray(hs).reshape(len(traj.times), -1).max(axis=1)
        hs_total = z
    else:
        xi_grid = np.asarray(xi_grid)
        dxi = float(np.min(np.diff(np.sort(xi_grid)))) if len(xi_grid) > 1 else 1.0
        z = np.max(hs, axis=1)
        l2hs = 2 * np.pi * dxi * np.sum(hs**2, axis=1)
        jb = (1.0 + xi_grid**2) ** s
        hsx = 2 * np.pi * dxi * np.sum(jb[None, :] * np.sum(np.abs(states) ** 2, axis=-1), axis=1)
        hs_total = np.sqrt(l2hs + hsx)
    return ConservationReport(
        times=np.asarray(traj.times),
        super_actions=sa,
        z_trace=np.asarray(z),
        hs_trace=np.asarray(hs_total),
        super_action_drift=sa_drift,
        z_drift=_rel_drift(np.asarray(z)),
        hs_drift=_rel_drift(np.asarray(hs_total)),
    )
