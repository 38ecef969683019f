"""Waveguide side: split-step solver on [-L, L) x T^d, profiles, the trilinear
kernel and its space-resonant split, the dispersive check and the norm family.

x-transform convention: F^(xi) = (2 pi)^{-1} int e^{-i x xi} F(x) dx, discretised
on x_j = -L + j dx with frequencies xi_k = pi k / L (FFT ordering). The free
propagator e^{it Delta} multiplies F^_n(xi) by e^{-it (xi^2 + lam_n^2)}.
"""

from __future__ import annotations

import csv
import json
import math
import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from .clusters import ClusterPartition
from .effective import PHASE_SIGN, GalerkinCubic
from .lattice import DispersionMatrix, ModeIndex, ball_modes, eigenvalue
from .resonance import DEFAULT_TOL_RES, QuasiResonantIndex

X_REP = "x"
XI_REP = "xi"


class GridMismatchError(ValueError):
    pass


class RepresentationError(ValueError):
    pass


class BlowUpError(RuntimeError):
    pass


class WindowError(ValueError):
    """Data is not negligible at the edge of the periodic window."""


@dataclass(frozen=True)
class WaveguideGrid:
    L: float
    Nx: int
    R: int
    d: int = 2

    def __post_init__(self):
        if self.Nx < 2 or self.Nx & (self.Nx - 1):
            raise ValueError(f"Nx must be a power of two, got {self.Nx}")
        if self.L <= 0:
            raise ValueError("L must be positive")
        if self.R < 0 or self.d < 1:
            raise ValueError("need R >= 0 and d >= 1")

    @property
    def dx(self) -> float:
        return 2 * self.L / self.Nx

    @property
    def dxi(self) -> float:
        return math.pi / self.L

    @cached_property
    def x(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.Nx)

    @cached_property
    def k(self) -> np.ndarray:
        return np.fft.fftfreq(self.Nx, 1.0 / self.Nx).astype(np.int64)

    @cached_property
    def xi(self) -> np.ndarray:
        return self.dxi * self.k

    @cached_property
    def sign(self) -> np.ndarray:
        return np.where(self.k % 2 == 0, 1.0, -1.0)

    @cached_property
    def modes(self) -> np.ndarray:
        return ball_modes(self.R, self.d)

    @cached_property
    def galerkin(self) -> GalerkinCubic:
        return GalerkinCubic(self.modes)

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    def to_xi(self, values: np.ndarray) -> np.ndarray:
        """Physical x -> xi along axis 0."""
        f = sfft.fft(values, axis=0, workers=-1)
        return (self.dx / (2 * math.pi)) * self.sign.reshape((-1,) + (1,) * (values.ndim - 1)) * f

    def to_x(self, values: np.ndarray) -> np.ndarray:
        s = self.sign.reshape((-1,) + (1,) * (values.ndim - 1))
        return self.dxi * self.Nx * sfft.ifft(s * values, axis=0, workers=-1)

    def to_dict(self) -> dict:
        return {"L": self.L, "Nx": self.Nx, "R": self.R, "d": self.d}


@dataclass
class WaveguideField:
    values: np.ndarray  # (Nx, n_modes)
    grid: WaveguideGrid
    rep: str = X_REP
    time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.rep not in (X_REP, XI_REP):
            raise RepresentationError(f"unknown representation {self.rep!r}")
        if self.values.shape != (self.grid.Nx, self.grid.n_modes):
            raise GridMismatchError(f"values shape {self.values.shape} != ({self.grid.Nx}, {self.grid.n_modes})")

    def to_xi(self) -> "WaveguideField":
        if self.rep == XI_REP:
            return self
        return WaveguideField(self.grid.to_xi(self.values), self.grid, XI_REP, self.time)

    def to_x(self) -> "WaveguideField":
        if self.rep == X_REP:
            return self
        return WaveguideField(self.grid.to_x(self.values), self.grid, X_REP, self.time)

    def copy(self) -> "WaveguideField":
        return WaveguideField(self.values.copy(), self.grid, self.rep, self.time)

    def like(self, values: np.ndarray, rep: str | None = None, time: float | None = None) -> "WaveguideField":
        return WaveguideField(values, self.grid, rep or self.rep, self.time if time is None else time)

    @classmethod
    def zeros(cls, grid: WaveguideGrid, rep: str = X_REP) -> "WaveguideField":
        return cls(np.zeros((grid.Nx, grid.n_modes), dtype=complex), grid, rep)

    @classmethod
    def separable(cls, grid: WaveguideGrid, profile: np.ndarray, coefficients: dict) -> "WaveguideField":
        """f(x) times sum_n c_n e^{i n.y}; ``coefficients`` maps mode tuples to c_n."""
        idx = ModeIndex(grid.modes)
        vals = np.zeros((grid.Nx, grid.n_modes), dtype=complex)
        for n, c in coefficients.items():
            j = int(idx.lookup(np.asarray(n)))
            if j < 0:
                raise ValueError(f"mode {n} is outside the ball of radius {grid.R}")
            vals[:, j] += c * np.asarray(profile)
        return cls(vals, grid, X_REP)

    def mass(self) -> float:
        """int sum_n |U_n(x)|^2 dx (physical side)."""
        u = self.to_x().values
        return float(self.grid.dx * np.sum(np.abs(u) ** 2))


def _check_same_grid(*fields: WaveguideField):
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise GridMismatchError("fields live on different grids")


# ------------------------------------------------------------------ dump / load

_MAGIC = b"DIOWAVE1"


def dump_field(f: WaveguideField, A: DispersionMatrix, path: str | Path):
    """Binary snapshot: magic, header length, JSON header, raw complex128 (C order)."""
    header = dict(f.grid.to_dict(), A=A.entries.tolist(), t=f.time, rep=f.rep, shape=list(f.values.shape))
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(np.ascontiguousarray(f.values, dtype="<c16").tobytes())


def load_field(path: str | Path) -> tuple[WaveguideField, DispersionMatrix]:
    with open(path, "rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise ValueError(f"{path} is not a field snapshot")
        (n,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(n))
        raw = np.frombuffer(fh.read(), dtype="<c16")
    grid = WaveguideGrid(header["L"], header["Nx"], header["R"], header["d"])
    vals = raw.reshape(header["shape"]).astype(complex)
    return WaveguideField(vals, grid, header["rep"], header["t"]), DispersionMatrix(np.array(header["A"]))


# ------------------------------------------------------------------ free flow


def free_phase(grid: WaveguideGrid, A: DispersionMatrix, t: float) -> np.ndarray:
    """e^{-it (xi^2 + lam_n^2)} on the (xi, n) grid."""
    lam = eigenvalue(A, grid.modes)
    return np.exp(-1j * t * (grid.xi[:, None] ** 2 + lam[None, :]))


def free_flow(f: WaveguideField, A: DispersionMatrix, t: float) -> WaveguideField:
    """e^{it Delta} f, returned in xi representation."""
    g = f.to_xi()
    return g.like(free_phase(f.grid, A, t) * g.values, XI_REP)


def extract_profile(U: WaveguideField, A: DispersionMatrix, t: float | None = None) -> WaveguideField:
    """F = e^{-it Delta} U, i.e. F^_n(xi) = e^{it(xi^2 + lam_n^2)} U^_n(xi)."""
    if U.rep != XI_REP:
        raise RepresentationError("extract_profile expects a field in xi representation")
    t = U.time if t is None else t
    return U.like(np.conj(free_phase(U.grid, A, t)) * U.values, XI_REP, time=t)


# ------------------------------------------------------------------ solver


@dataclass
class NLSTrajectory:
    times: np.ndarray
    fields: list[WaveguideField]
    mass: np.ndarray
    steps: int
    h: float


def evolve_nls(
    U0: WaveguideField,
    A: DispersionMatrix,
    grid: WaveguideGrid | None,
    t1: float,
    h: float,
    record_times=None,
    nonlinear: bool = True,
    dealias: bool = False,
    blowup: float = 1e3,
) -> NLSTrajectory:
    """Strang split-step for i U_t + U_xx + div(A grad_y) U = |U|^2 U.

    During the run the transverse variable lives on the whole periodic box of
    the grid's Galerkin transform (side >= 4R + 1), so the pseudo-spectral
    scheme is closed: linear half steps are exact in (xi, n), the nonlinear
    step U -> U e^{-i|U|^2 h} is exact pointwise on the (x, y) grid, and mass
    is conserved to round-off. Snapshots are projected onto the ball |n| <= R
    and returned in xi representation at the requested record times (rounded
    to the step grid); the mass trace is that of the full box state.
    """
    grid = U0.grid if grid is None else grid
    if U0.grid != grid:
        raise GridMismatchError("initial field does not live on the given grid")
    if h <= 0:
        raise ValueError("h must be positive")
    t0 = U0.time
    n = int(round((t1 - t0) / h))
    if n < 0 or abs(n * h - (t1 - t0)) > 1e-9 * max(1.0, abs(t1)):
        raise ValueError(f"(t1 - t0) / h = {(t1 - t0) / h} is not an integer")
    if record_times is None:
        record_steps = {n}
    else:
        record_steps = {int(round((tr - t0) / h)) for tr in record_times}
    gal = grid.galerkin
    lam_box = eigenvalue(A, gal.box_modes()).reshape((1,) + (gal.side,) * grid.d)
    xi2 = (grid.xi**2).reshape((-1,) + (1,) * grid.d)
    half = np.exp(-0.5j * h * (xi2 + lam_box))
    keep = np.ones(grid.Nx, dtype=bool)
    if dealias:
        keep = np.abs(grid.k) <= grid.Nx // 3

    W = gal.to_box(U0.to_xi().values)
    # x and y transforms fused into one n-dimensional FFT; see WaveguideGrid.to_x / to_xi
    sign = grid.sign.reshape((-1,) + (1,) * grid.d)
    axes = tuple(range(grid.d + 1))
    back = grid.Nx * grid.dx / (2 * math.pi)
    times, fields, mass = [], [], []

    def record(step):
        times.append(t0 + step * h)
        fields.append(WaveguideField(gal.from_box(W), grid, XI_REP, t0 + step * h))
        mass.append(2 * math.pi * grid.dxi * float(np.sum(np.abs(W) ** 2)))

    if 0 in record_steps:
        record(0)
    for step in range(1, n + 1):
        W *= half
        if nonlinear:
            u = sfft.ifftn(sign * W, axes=axes, norm="forward", workers=-1)
            u *= grid.dxi
            peak = float(np.max(np.abs(u)))
            if not np.isfinite(peak) or peak > blowup:
                raise BlowUpError(f"sup|U| = {peak:.3g} at t = {t0 + step * h:.6g}")
            u *= np.exp(-1j * h * (u.real**2 + u.imag**2))
            W = (back * sign) * sfft.fftn(u, axes=axes, norm="forward", workers=-1)
            if dealias:
                W[~keep] = 0
        W *= half
        if step in record_steps:
            record(step)
    return NLSTrajectory(np.array(times), fields, np.array(mass), n, h)


# ------------------------------------------------------------------ trilinear forms


def trilinear_kernel(F: WaveguideField, G: WaveguideField, H: WaveguideField, A: DispersionMatrix, t: float) -> WaveguideField:
    """N^t[F, G, H] = e^{-it Delta}(e^{it Delta}F . conj(e^{it Delta}G) . e^{it Delta}H)."""
    _check_same_grid(F, G, H)
    grid = F.grid
    gal = grid.galerkin
    phys = [gal.to_physical(grid.to_x(free_flow(f, A, t).values)) for f in (F, G, H)]
    prod = gal.from_physical(phys[0] * np.conj(phys[1]) * phys[2])
    out = np.conj(free_phase(grid, A, t)) * grid.to_xi(prod)
    return WaveguideField(out, grid, XI_REP, t)


def _require_t(t):
    if t < 1:
        raise ValueError("defined for t >= 1")


def transverse_resonant_sum(F, G, H, A: DispersionMatrix, t: float) -> np.ndarray:
    """sum_{n1-n2+n3=n} e^{-it Omega} F^_{n1} conj(G^_{n2}) H^_{n3}, pointwise in xi."""
    grid = F.grid
    lam = eigenvalue(A, grid.modes)
    rot = np.exp(1j * PHASE_SIGN * t * lam)
    f, g, h = (x.to_xi().values for x in (F, G, H))
    return np.conj(rot) * grid.galerkin.trilinear(rot * f, rot * g, rot * h)


def space_resonant_part(F, G, H, A: DispersionMatrix, t: float) -> WaveguideField:
    """(pi / t) sum_{n1-n2+n3=n} e^{-it Omega} F^_{n1}(xi) conj(G^_{n2}(xi)) H^_{n3}(xi)."""
    _require_t(t)
    _check_same_grid(F, G, H)
    return WaveguideField((math.pi / t) * transverse_resonant_sum(F, G, H, A, t), F.grid, XI_REP, t)


def nonresonant_part(F, G, H, A: DispersionMatrix, t: float) -> WaveguideField:
    _require_t(t)
    total = trilinear_kernel(F, G, H, A, t)
    res = space_resonant_part(F, G, H, A, t)
    return total.like(total.values - res.values, XI_REP)


@dataclass
class NormalFormTriples:
    """All (n1, n2, n3) -> n in the ball outside Lambda^(1) u Lambda^(3) with Omega != 0."""

    out: np.ndarray
    i1: np.ndarray
    i2: np.ndarray
    i3: np.ndarray
    omega: np.ndarray

    def __len__(self):
        return len(self.out)


def normal_form_triples(idx: QuasiResonantIndex, tol_res: float = DEFAULT_TOL_RES) -> NormalFormTriples:
    p = idx.partition
    modes = p.modes
    m = len(modes)
    lam = eigenvalue(p.A, modes)
    pieces = []
    for i1 in range(m):
        i2, i3 = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
        i2, i3 = i2.ravel(), i3.ravel()
        out = p.index.lookup(modes[i1] - modes[i2] + modes[i3])
        ok = out >= 0
        i2, i3, out = i2[ok], i3[ok], out[ok]
        i1v = np.full(len(out), i1)
        om = lam[i1v] - lam[i2] + lam[i3] - lam[out]
        ok = np.abs(om) > tol_res
        ok &= ~idx.contains(i1v, i2, i3, out)
        pieces.append((out[ok], i1v[ok], i2[ok], i3[ok], om[ok]))
    cols = [np.concatenate([pc[j] for pc in pieces]) for j in range(5)]
    return NormalFormTriples(*cols)


def normal_form_kernel(F, G, H, t: float, idx: QuasiResonantIndex | None, triples: NormalFormTriples | None = None) -> WaveguideField:
    """sum over admissible triples of (e^{-it Omega} / Omega) F^_{n1} conj(G^_{n2}) H^_{n3}."""
    if idx is None:
        raise ValueError("normal_form_kernel needs a quasi-resonant index")
    _require_t(t)
    _check_same_grid(F, G, H)
    if triples is None:
        triples = normal_form_triples(idx)
    f, g, h = (x.to_xi().values for x in (F, G, H))
    out = np.zeros_like(f)
    if len(triples):
        w = np.exp(1j * PHASE_SIGN * t * triples.omega) / triples.omega
        terms = w * f[:, triples.i1] * np.conj(g[:, triples.i2]) * h[:, triples.i3]
        for row, trow in zip(out, terms):
            row += np.bincount(triples.out, weights=trow.real, minlength=out.shape[1])
            row += 1j * np.bincount(triples.out, weights=trow.imag, minlength=out.shape[1])
    return WaveguideField(out, F.grid, XI_REP, t)


# ------------------------------------------------------------------ dispersive check


def gaussian_free_evolution(x: np.ndarray, t: float) -> np.ndarray:
    """e^{it d_x^2} e^{-x^2} in closed form."""
    z = 1 + 4j * t
    return np.exp(-(x**2) / z) / np.sqrt(z)


def gaussian_stationary_phase(x: np.ndarray, t: float) -> np.ndarray:
    """e^{i x^2/4t} (4 i pi t)^{-1/2} times sqrt(pi) e^{-(x/2t)^2/4}."""
    return np.exp(1j * x**2 / (4 * t)) / np.sqrt(4j * math.pi * t) * math.sqrt(math.pi) * np.exp(-((x / (2 * t)) ** 2) / 4)


@dataclass
class DispersiveResult:
    t: float
    sup_error: float
    normalized: float
    weight: float


def dispersive_check(f: np.ndarray, L: float, t: float, edge_tol: float = 1e-12) -> DispersiveResult:
    """Spectral e^{it d_x^2} f against the stationary-phase profile.

    The profile is e^{i x^2 / 4t} (4 i pi t)^{-1/2} g(x / 2t), where g is the
    transform without the (2 pi)^{-1} factor (2 pi times the convention above),
    which is the normalisation under which the leading term is exact for
    Gaussians. Returns the sup error and error t^{3/4} / ||x f||_{L^2}.
    """
    if t < 1:
        raise ValueError("dispersive_check needs t >= 1")
    f = np.asarray(f, dtype=complex)
    Nx = len(f)
    grid = WaveguideGrid(L, Nx, 0, 1)
    x = grid.x
    peak = np.max(np.abs(f))
    edge = max(abs(f[0]), abs(f[-1]))
    if peak == 0:
        return DispersiveResult(t, 0.0, 0.0, 0.0)
    if edge > edge_tol * peak:
        raise WindowError(f"|f| at the window edge is {edge / peak:.2e} of its peak")
    fh = grid.to_xi(f)
    u = grid.to_x(np.exp(-1j * t * grid.xi**2) * fh)
    # wrap-around of the evolved data invalidates the comparison
    if max(abs(u[0]), abs(u[-1])) > 1e3 * edge_tol * np.max(np.abs(u)):
        raise WindowError("evolved data reaches the window edge; enlarge L")
    # 2 pi f^ evaluated at x / 2t by band-limited interpolation (exact trig sum)
    target = x / (2 * t)
    ghat = _trig_eval(f, grid, target) * 2 * math.pi
    approx = np.exp(1j * x**2 / (4 * t)) / np.sqrt(4j * math.pi * t) * ghat
    err = float(np.max(np.abs(u - approx)))
    weight = float(math.sqrt(grid.dx * np.sum(np.abs(x * f) ** 2)))
    return DispersiveResult(t, err, err * t**0.75 / weight, weight)


def _trig_eval(f: np.ndarray, grid: WaveguideGrid, xi: np.ndarray) -> np.ndarray:
    """Evaluate the transform of the sampled f at arbitrary xi (direct sum).

    The samples stand for a band-limited function, so the transform is zero
    beyond the Nyquist frequency. Only samples above 1e-17 of the peak enter
    the sum, which keeps the cost proportional to the support of f.
    """
    live = np.abs(f) > 1e-17 * np.max(np.abs(f))
    xs, fs = grid.x[live], f[live]
    out = np.zeros(len(xi), dtype=complex)
    band = np.abs(xi) <= math.pi / grid.dx
    sel = np.nonzero(band)[0]
    step = max(1, 2**22 // max(1, len(xs)))
    for s0 in range(0, len(sel), step):
        sl = sel[s0 : s0 + step]
        out[sl] = (grid.dx / (2 * math.pi)) * (np.exp(-1j * np.outer(xi[sl], xs)) @ fs)
    return out


# ------------------------------------------------------------------ norms


@dataclass
class NormReport:
    t: float
    hs_Linf: float
    Hs: float
    S: float
    Z: float
    weighted: float
    xt_z: float
    xt_s: float
    xt_dt: float
    z_le_cs: bool
    z_constant: float

    def row(self) -> list[float]:
        return [self.t, self.hs_Linf, self.Hs, self.S, self.Z, self.xt_z, self.xt_s, self.xt_dt]


NORM_COLUMNS = ["t", "hs_Linf", "Hs", "S", "Z", "xt_z", "xt_s", "xt_dt"]


def _hs_weights(partition: ClusterPartition | None, grid: WaveguideGrid, s: float) -> np.ndarray:
    if partition is None:
        raise ValueError("norms need a cluster partition for the h^s weights")
    if not np.array_equal(partition.modes, grid.modes):
        raise GridMismatchError("partition modes do not match the grid's transverse ball")
    return partition.mode_weights() ** (2 * s)


def sobolev_Hs(Fxi: np.ndarray, grid: WaveguideGrid, w: np.ndarray, s: float) -> float:
    """(||F||^2_{L^2 h^s} + ||F||^2_{H^s_x l^2})^{1/2} from the xi side."""
    a2 = np.abs(Fxi) ** 2
    l2hs = 2 * math.pi * grid.dxi * float(np.sum(a2 * w[None, :]))
    hsx = 2 * math.pi * grid.dxi * float(np.sum((1 + grid.xi**2) ** s * np.sum(a2, axis=1)))
    return math.sqrt(l2hs + hsx)


def z_constant(grid: WaveguideGrid) -> float:
    """C with ||F||_Z <= C ||F||_S: (2 pi)^{-1} (sum dx / <x>^2)^{1/2} <= sqrt(pi + dx) / 2 pi."""
    return math.sqrt(math.pi + grid.dx) / (2 * math.pi)


def norms(
    F: WaveguideField,
    partition: ClusterPartition,
    s: float,
    sigma: float = 0.1,
    delta: float = 0.01,
    t: float | None = None,
    A: DispersionMatrix | None = None,
    with_dt: bool = True,
    solution: WaveguideField | None = None,
) -> NormReport:
    """h^s (cluster weights), H^s, S, Z and the X_T contributions of a profile F.

    ``hs_Linf`` is taken from ``solution`` (the field U = e^{it Delta} F) when
    given, otherwise from F itself.
    """
    grid = F.grid
    if s <= grid.d / 2:
        raise ValueError(f"need s > d/2 = {grid.d / 2}")
    t = F.time if t is None else t
    w = _hs_weights(partition, grid, s)
    Fxi = F.to_xi().values
    Fx = F.to_x().values
    hs_x = np.sqrt(np.sum(np.abs(Fx) ** 2 * w[None, :], axis=1))
    if solution is not None:
        _check_same_grid(F, solution)
        Ux = solution.to_x().values
        hs_Linf = float(np.max(np.sqrt(np.sum(np.abs(Ux) ** 2 * w[None, :], axis=1))))
    else:
        hs_Linf = float(np.max(hs_x))
    Hs = sobolev_Hs(Fxi, grid, w, s)
    Hs_sigma = sobolev_Hs(Fxi * ((1 + grid.xi**2) ** (sigma / 2))[:, None], grid, w, s)
    mass_x = np.sum(np.abs(Fx) ** 2, axis=1)
    total = float(np.sum(mass_x))
    xc = float(np.sum(grid.x * mass_x) / total) if total > 0 else 0.0
    weighted = math.sqrt(grid.dx * float(np.sum((grid.x - xc) ** 2 * hs_x**2)))
    S = Hs_sigma + weighted
    Z = float(np.max(np.sqrt(np.sum(np.abs(Fxi) ** 2 * w[None, :], axis=1))))
    C = z_constant(grid)
    xt_dt = 0.0
    if with_dt and total > 0:
        if A is None:
            raise ValueError("the X_T time-derivative term needs the dispersion matrix")
        dF = trilinear_kernel(F, F, F, A, t)
        dnorm = sobolev_Hs(dF.values * ((1 + grid.xi**2) ** (sigma / 2))[:, None], grid, w, s)
        dFx = dF.to_x().values
        dhs = np.sqrt(np.sum(np.abs(dFx) ** 2 * w[None, :], axis=1))
        dnorm += math.sqrt(grid.dx * float(np.sum((grid.x - xc) ** 2 * dhs**2)))
        xt_dt = max(t, 1.0) ** (1 - delta) * dnorm
    tt = max(t, 1.0)
    return NormReport(
        t=float(t),
        hs_Linf=hs_Linf,
        Hs=Hs,
        S=S,
        Z=Z,
        weighted=weighted,
        xt_z=Z,
        xt_s=tt ** (-delta) * S,
        xt_dt=xt_dt,
        z_le_cs=bool(Z <= C * S * (1 + 1e-12)),
        z_constant=C,
    )


def write_norm_trace(reports: list[NormReport], path: str | Path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(NORM_COLUMNS)
        for r in reports:
            w.writerow([repr(float(v)) for v in r.row()])


# ------------------------------------------------------------------ helpers for runs


def group_speed_horizon(F: WaveguideField) -> float:
    """L / (2 v) with v = 2 (<xi^2>)^{1/2} the rms group speed of the data."""
    Fxi = F.to_xi().values
    wts = np.sum(np.abs(Fxi) ** 2, axis=1)
    tot = float(np.sum(wts))
    if tot == 0:
        return math.inf
    v = 2 * math.sqrt(float(np.sum(F.grid.xi**2 * wts)) / tot)
    return math.inf if v == 0 else F.grid.L / (2 * v)


def loglog_slope(t: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares slope and intercept of log y against log t."""
    lt, ly = np.log(np.asarray(t, float)), np.log(np.asarray(y, float))
    slope, icept = np.polyfit(lt, ly, 1)
    return float(slope), float(icept)
