"""Transverse lattice: modes, eigenvalues, resonant function, admissibility scan.

Modes are integer vectors stored as rows of int64 arrays. Every function that
takes modes accepts either a single vector of shape ``(d,)`` or a stack of
shape ``(..., d)`` and broadcasts over the leading axes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class DispersionMatrix:
    """Symmetric positive-definite matrix A giving lambda_n^2 = n^T A n."""

    entries: np.ndarray
    tau: float = 3.0
    name: str = ""
    coercivity: tuple[float, float] = field(init=False)

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"dispersion matrix must be square, got shape {a.shape}")
        if not np.array_equal(a, a.T):
            raise ValueError("dispersion matrix must be exactly symmetric")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        eig = np.linalg.eigvalsh(a)
        if eig[0] <= 0:
            raise ValueError(f"dispersion matrix is not positive definite (min eigenvalue {eig[0]:.3g})")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)
        object.__setattr__(self, "coercivity", (float(eig[0]), float(eig[-1])))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def identity(cls, d: int, tau: float = 3.0) -> "DispersionMatrix":
        return cls(np.eye(d), tau=tau, name="identity")

    @classmethod
    def golden(cls, tau: float = 3.0) -> "DispersionMatrix":
        """The d=2 fixture [[1, a], [a, 2]] with a the inverse golden ratio."""
        return cls(np.array([[1.0, GOLDEN], [GOLDEN, 2.0]]), tau=tau, name="golden")

    @classmethod
    def random(cls, d: int, seed: int, tau: float | None = None) -> "DispersionMatrix":
        """Symmetrized uniform matrix, shifted by mu*Id when not positive definite.

        Admissibility of the sample is not claimed; certify it with
        :func:`scan_admissibility`.
        """
        rng = np.random.default_rng(seed)
        b = rng.uniform(-1.0, 1.0, size=(d, d))
        a = 0.5 * (b + b.T)
        lo = np.linalg.eigvalsh(a)[0]
        if lo < 0.25:
            a = a + (0.25 - lo + rng.uniform(0.0, 1.0)) * np.eye(d)
        a = 0.5 * (a + a.T)
        if tau is None:
            tau = d * (d + 1) / 2 + 1.0
        return cls(a, tau=tau, name=f"random-{d}-{seed}")

    def to_dict(self) -> dict:
        return {"entries": self.entries.tolist(), "tau": self.tau, "name": self.name}


@dataclass(frozen=True)
class Mode:
    n: tuple[int, ...]

    @property
    def norm(self) -> float:
        return math.sqrt(sum(k * k for k in self.n))

    @property
    def norm2(self) -> int:
        return sum(k * k for k in self.n)


@dataclass(frozen=True)
class Quadruple:
    """Four interacting modes (n1, n2, n3, n) and their resonant value."""

    n1: tuple[int, ...]
    n2: tuple[int, ...]
    n3: tuple[int, ...]
    n: tuple[int, ...]
    omega: float
    zero_momentum: bool

    @classmethod
    def build(cls, A: DispersionMatrix, n1, n2, n3, n=None) -> "Quadruple":
        n1, n2, n3 = (tuple(int(k) for k in v) for v in (n1, n2, n3))
        if n is None:
            n = tuple(a - b + c for a, b, c in zip(n1, n2, n3))
        n = tuple(int(k) for k in n)
        zm = all(a - b + c == m for a, b, c, m in zip(n1, n2, n3, n))
        om = float(resonant_value(A, np.array([n1, n2, n3, n])))
        return cls(n1, n2, n3, n, om, zm)

    def stacked(self) -> np.ndarray:
        return np.array([self.n1, self.n2, self.n3, self.n], dtype=np.int64)


def _check_dim(A: DispersionMatrix, n: np.ndarray):
    if n.shape[-1] != A.dim:
        raise ValueError(f"mode dimension {n.shape[-1]} does not match matrix dimension {A.dim}")


def eigenvalue(A: DispersionMatrix, n) -> np.ndarray | float:
    """lambda_n^2 = n^T A n (vectorized over leading axes)."""
    n = np.asarray(n)
    _check_dim(A, n)
    nf = n.astype(float)
    val = np.einsum("...i,ij,...j->...", nf, A.entries, nf)
    return float(val) if val.ndim == 0 else val


def bilinear(A: DispersionMatrix, a, b) -> np.ndarray | float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    val = np.einsum("...i,ij,...j->...", a, A.entries, b)
    return float(val) if val.ndim == 0 else val


def resonant_value(A: DispersionMatrix, q) -> np.ndarray | float:
    """Omega = lam2(n1) - lam2(n2) + lam2(n3) - lam2(n).

    ``q`` is a :class:`Quadruple` or an array of shape ``(..., 4, d)``.
    """
    if isinstance(q, Quadruple):
        q = q.stacked()
    q = np.asarray(q)
    _check_dim(A, q)
    lam = eigenvalue(A, q)
    lam = np.asarray(lam)
    val = lam[..., 0] - lam[..., 1] + lam[..., 2] - lam[..., 3]
    return float(val) if val.ndim == 0 else val


def is_zero_momentum(q) -> np.ndarray | bool:
    if isinstance(q, Quadruple):
        return q.zero_momentum
    q = np.asarray(q)
    ok = np.all(q[..., 0, :] - q[..., 1, :] + q[..., 2, :] == q[..., 3, :], axis=-1)
    return bool(ok) if ok.ndim == 0 else ok


def factored_resonant_value(A: DispersionMatrix, q) -> np.ndarray | float:
    """2 (n1 - n2)^T A (n2 - n3), valid under zero momentum only."""
    if isinstance(q, Quadruple):
        q = q.stacked()
    q = np.asarray(q)
    _check_dim(A, q)
    if not np.all(is_zero_momentum(q)):
        raise ValueError("factored form requires n1 - n2 + n3 = n")
    return 2.0 * bilinear(A, q[..., 0, :] - q[..., 1, :], q[..., 1, :] - q[..., 2, :])


def regularity_threshold(tau: float, c_d: float, d: int) -> float:
    """s0 = d/2 + 4 tau / c_d."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    if not 0 < c_d <= 2:
        raise ValueError("c_d must lie in (0, 2]")
    if d < 1:
        raise ValueError("d must be a positive integer")
    return d / 2 + 4 * tau / c_d


# ---------------------------------------------------------------- mode sets


def ball_modes(R: float, d: int) -> np.ndarray:
    """Integer vectors with |n| <= R, ordered by |n|^2 then reverse-lexicographic.

    The order is deterministic and is the canonical mode order for states.
    """
    r = int(math.floor(R))
    axes = [np.arange(-r, r + 1)] * d
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    n2 = np.sum(grid * grid, axis=1)
    grid = grid[n2 <= R * R + 1e-9]
    n2 = np.sum(grid * grid, axis=1)
    keys = [-grid[:, k] for k in range(d - 1, -1, -1)] + [n2]
    order = np.lexsort(keys)
    return grid[order].astype(np.int64)


def half_ball_modes(R: float, d: int) -> np.ndarray:
    """Non-zero modes of the ball whose first non-zero coordinate is positive."""
    m = ball_modes(R, d)
    m = m[np.any(m != 0, axis=1)]
    first = m[np.arange(len(m)), np.argmax(m != 0, axis=1)]
    return m[first > 0]


class ModeIndex:
    """Dense lookup from integer vectors to positions in a mode array."""

    def __init__(self, modes: np.ndarray):
        self.modes = np.asarray(modes, dtype=np.int64)
        self.d = self.modes.shape[1]
        self.reach = int(np.max(np.abs(self.modes))) if len(self.modes) else 0
        side = 2 * self.reach + 1
        self._table = np.full((side,) * self.d, -1, dtype=np.int64)
        self._table[tuple((self.modes + self.reach).T)] = np.arange(len(self.modes))

    def __len__(self):
        return len(self.modes)

    def lookup(self, n) -> np.ndarray:
        """Positions of ``n`` (shape ``(..., d)``); -1 where absent."""
        n = np.asarray(n, dtype=np.int64)
        inside = np.all(np.abs(n) <= self.reach, axis=-1)
        out = np.full(n.shape[:-1], -1, dtype=np.int64)
        if np.any(inside):
            idx = tuple(np.moveaxis(n[inside] + self.reach, -1, 0))
            out[inside] = self._table[idx]
        return out


# ---------------------------------------------------------- admissibility


@dataclass
class AdmissibilityReport:
    radius: int
    tau: float
    best_constant: float
    witness: tuple[tuple[int, ...], tuple[int, ...]]
    min_form: float
    history: list[tuple[int, float]]
    form_history: list[tuple[int, float]]
    witness_history: list[tuple[tuple[int, ...], tuple[int, ...]]]

    @property
    def admissible(self) -> bool:
        return self.best_constant > 0

    def form_bound(self, radius: int) -> float:
        """min |a^T A b| over non-zero a, b with |a|, |b| <= radius (scanned)."""
        for r, v in self.form_history:
            if r == radius:
                return v
        raise KeyError(f"radius {radius} not scanned (max {self.radius})")

    def to_csv(self, path: str | Path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["radius", "best_constant", "witness_a", "witness_b"])
            for (r, c), (a, b) in zip(self.history, self.witness_history):
                w.writerow([r, repr(float(c)), join_vec(a), join_vec(b)])


def join_vec(v) -> str:
    return ";".join(str(int(k)) for k in v)


def split_vec(s: str) -> tuple[int, ...]:
    return tuple(int(k) for k in s.split(";"))


def read_admissibility_csv(path: str | Path) -> list[tuple[int, float, tuple, tuple]]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        (int(r["radius"]), float(r["best_constant"]), split_vec(r["witness_a"]), split_vec(r["witness_b"]))
        for r in rows
    ]


def scan_admissibility(A: DispersionMatrix, R: int, chunk: int = 512) -> AdmissibilityReport:
    """Exhaustive minimum of |a^T A b| |a|^tau |b|^tau over 0 < |a|, |b| <= R.

    Signs of a and b are irrelevant and the form is symmetric, so both vectors
    range over a half ball and only pairs with b not before a are visited.
    The reported history gives the constant for every integer radius 1..R.
    """
    if R < 1:
        raise ValueError("radius must be >= 1")
    pts = half_ball_modes(R, A.dim)
    # order by norm so that the pair radius is the norm of the later vector
    pts = pts[np.argsort(np.sum(pts * pts, axis=1), kind="stable")]
    pf = pts.astype(float)
    norms = np.sqrt(np.sum(pf * pf, axis=1))
    weights = norms**A.tau
    AP = pf @ A.entries
    m = len(pts)

    col_c = np.full(m, np.inf)
    col_c_row = np.zeros(m, dtype=np.int64)
    col_f = np.full(m, np.inf)
    for start in range(0, m, chunk):
        stop = min(start + chunk, m)
        form = np.abs(AP[start:stop] @ pf[start:].T)
        rows = np.arange(start, stop)[:, None]
        cols = np.arange(start, m)[None, :]
        form[cols < rows] = np.inf
        val = form * weights[start:stop, None] * weights[None, start:]
        arg = np.argmin(val, axis=0)
        best = val[arg, np.arange(val.shape[1])]
        better = best < col_c[start:]
        col_c[start:][better] = best[better]
        col_c_row[start:][better] = arg[better] + start
        col_f[start:] = np.minimum(col_f[start:], form.min(axis=0))

    keys = np.ceil(norms - 1e-12).astype(int)
    history, form_history, witnesses = [], [], []
    best_c, best_f, best_col = np.inf, np.inf, -1
    for r in range(1, R + 1):
        sel = np.nonzero(keys == r)[0]
        if len(sel):
            j = sel[np.argmin(col_c[sel])]
            if col_c[j] < best_c:
                best_c, best_col = col_c[j], j
            best_f = min(best_f, float(col_f[sel].min()))
        a = tuple(int(k) for k in pts[col_c_row[best_col]])
        b = tuple(int(k) for k in pts[best_col])
        history.append((r, float(best_c)))
        form_history.append((r, float(best_f)))
        witnesses.append((a, b))
    return AdmissibilityReport(
        radius=R,
        tau=A.tau,
        best_constant=history[-1][1],
        witness=witnesses[-1],
        min_form=form_history[-1][1],
        history=history,
        form_history=form_history,
        witness_history=witnesses,
    )
