"""
Calderón-Zygmund kernels and their truncated discrete operators.

An operator is the dense matrix ``M[i, j] = K(x_i, x_j) / n`` restricted to
pairs whose periodic distance exceeds the truncation radius (one cell by
default). The adjoint is the literal transpose. The antipodal pair, whose
difference has two nearest representatives, gets the average of the two
kernel values; for odd kernels this is zero, which keeps ``T 1 = 0`` exact.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .dyadic import maximal
from .errors import (
    ConfigurationError,
    GeometryError,
    ParameterError,
    SingularityError,
    TruncationError,
)
from .grid import Interval, cell_dist, check_grid, periodic_rep

log = logging.getLogger(__name__)

__all__ = [
    "KernelSpec",
    "OperatorHandle",
    "hilbert",
    "kernel_eval",
    "verify_kernel",
    "load_kernel_table",
    "apply",
    "maximal_truncation",
    "cotlar_check",
    "reflected_cube",
    "fractional_matrix",
    "fractional_integral",
    "t1_test",
]


@dataclass(frozen=True)
class KernelSpec:
    """A kernel ``K(x, y)`` on the torus with its standard constants.

    ``name`` is ``"hilbert"``, ``"riesz"`` (component ``j``), ``"custom"``
    (table of ``(x - y, value)`` pairs, linearly interpolated) or ``"zero"``.
    """

    name: str = "hilbert"
    dim: int = 1
    size_const: float = 1.0
    alpha: float = 1.0
    c0: float = 0.5
    symmetric_nondegenerate: bool = True
    j: int = 0
    table: Optional[tuple] = field(default=None, compare=False, hash=False, repr=False)

    def __post_init__(self):
        if self.name not in ("hilbert", "riesz", "custom", "zero"):
            raise ConfigurationError(f"unknown kernel {self.name!r}")
        if self.name == "custom" and self.table is None:
            raise ConfigurationError("custom kernel needs a table")
        if not (0 < self.alpha <= 1):
            raise ParameterError("kernel Hölder exponent must lie in (0, 1]")

    def of_difference(self, d):
        """Kernel as a function of a periodic representative ``d = x - y``."""
        d = np.asarray(d, dtype=float)
        if self.name == "zero":
            return np.zeros(d.shape[:-1] if self.dim > 1 else d.shape)
        if self.name == "custom":
            xs, vs = self.table
            return np.interp(d, xs, vs)
        if self.dim == 1:
            with np.errstate(divide="ignore"):
                return 1.0 / d
        r = np.sqrt(np.sum(d * d, axis=-1))
        return d[..., self.j] / r ** (self.dim + 1)

    def to_dict(self):
        return {"name": self.name, "dim": self.dim, "size_const": self.size_const,
                "alpha": self.alpha, "c0": self.c0,
                "symmetric_nondegenerate": self.symmetric_nondegenerate}


def hilbert() -> KernelSpec:
    return KernelSpec("hilbert")


def load_kernel_table(path, **kw) -> KernelSpec:
    """Custom kernel from a CSV file of ``x - y, value`` rows."""
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    order = np.argsort(data[:, 0])
    return KernelSpec("custom", table=(data[order, 0], data[order, 1]), **kw)


def kernel_eval(K: KernelSpec, x, y):
    """Evaluate ``K(x, y)`` on the nearest periodic representative of ``x - y``."""
    d = periodic_rep(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    zero = (d == 0) if K.dim == 1 else np.all(d == 0, axis=-1)
    if np.any(zero):
        raise SingularityError("kernel evaluated on the diagonal")
    out = K.of_difference(d)
    return float(out) if np.ndim(out) == 0 else out


def verify_kernel(K: KernelSpec, sample_budget: int = 10_000, seed: int = 0) -> dict:
    """Worst sampled size and Hölder ratios of a one-dimensional kernel.

    Size ratio: ``|K(x,y)| |x-y| / C_K``. Hölder ratio:
    ``|K(x,y) - K(x',y)| |x-y|^{1+alpha} / (|x-x'|^alpha C_K)`` and the same
    in the second variable, over triples with ``|x - x'| <= |x - y|/2``
    whose segment from ``x`` to ``x'`` does not cross the antipode of ``y``
    (where the nearest representative jumps). Samples are a prefix of one
    seeded stream, so the reported suprema grow with the budget.
    """
    if K.dim != 1:
        raise ConfigurationError("verify_kernel samples one-dimensional kernels")
    rng = np.random.default_rng(seed)
    u = rng.random((sample_budget, 3))
    y = u[:, 0]
    d = (u[:, 1] - 0.5) * 0.999  # representative of x - y in (-1/2, 1/2)
    d = np.where(np.abs(d) < 1e-6, 1e-6, d)
    x = (y + d) % 1.0
    size = np.abs(K.of_difference(d)) * np.abs(d) / K.size_const
    # x' = x + t with |t| <= |d|/2 and |d + t| <= 1/2
    t = (u[:, 2] - 0.5) * np.abs(d)
    t = np.clip(d + t, -0.5, 0.5) - d
    t = np.where(np.abs(t) < 1e-12, 1e-12, t)
    dp = d + t
    lhs1 = np.abs(K.of_difference(d) - K.of_difference(dp))
    lhs2 = np.abs(K.of_difference(-d) - K.of_difference(-dp))
    scale = np.abs(d) ** (1 + K.alpha) / (np.abs(t) ** K.alpha * K.size_const)
    holder = np.maximum(lhs1, lhs2) * scale
    return {
        "kernel": K.name,
        "samples": int(sample_budget),
        "size_ratio": float(np.max(size)),
        "holder_ratio": float(np.max(holder)),
        "alpha": K.alpha,
        "points_checked": int(x.size),
    }


def _kernel_matrix(K: KernelSpec, n: int, min_cells: int) -> np.ndarray:
    """Untruncated-beyond-``min_cells`` matrix ``K(x_i, x_j) / n``."""
    k = np.arange(n)
    dcells = cell_dist(n)
    diff = k[:, None] - k[None, :]
    d = periodic_rep(diff / n)
    with np.errstate(divide="ignore", invalid="ignore"):
        M = K.of_difference(d)
        if n % 2 == 0:
            anti = dcells == n // 2
            # both representatives +-1/2 are nearest: average them
            M = np.where(anti, 0.5 * (K.of_difference(np.full_like(d, 0.5)) + K.of_difference(np.full_like(d, -0.5))), M)
    return np.where(dcells > min_cells, M, 0.0) / n


@dataclass
class OperatorHandle:
    """Truncated operator of ``kernel`` on a grid of ``n`` cells.

    ``eps`` is the truncation radius in torus units; the discrete sum runs
    over cells at periodic distance strictly greater than ``eps``.
    """

    kernel: KernelSpec
    n: int
    eps: Optional[float] = None

    def __post_init__(self):
        if self.eps is None:
            self.eps = 1.0 / self.n
        if self.eps < 1.0 / self.n - 1e-15:
            raise TruncationError(f"truncation {self.eps} below one grid cell 1/{self.n}")

    @property
    def min_cells(self) -> int:
        return int(np.floor(self.eps * self.n + 1e-9))

    @cached_property
    def matrix(self) -> np.ndarray:
        M = _kernel_matrix(self.kernel, self.n, self.min_cells)
        M.setflags(write=False)
        return M

    @cached_property
    def adjoint_matrix(self) -> np.ndarray:
        M = np.ascontiguousarray(self.matrix.T)
        M.setflags(write=False)
        return M

    def adjoint(self) -> "OperatorHandle":
        return _AdjointHandle(self)

    def to_dict(self):
        return {"kernel": self.kernel.to_dict(), "n": self.n, "eps": self.eps}


class _AdjointHandle(OperatorHandle):
    def __init__(self, base: OperatorHandle):
        self.kernel = base.kernel
        self.n = base.n
        self.eps = base.eps
        self._base = base

    @property
    def matrix(self):
        return self._base.adjoint_matrix

    @property
    def adjoint_matrix(self):
        return self._base.matrix

    def adjoint(self):
        return self._base


def apply(T: OperatorHandle, f, adjoint: bool = False, axis: int = 1) -> np.ndarray:
    """Apply ``T`` (or ``T*``) along ``axis`` (1 or 2) of ``f``."""
    f = np.asarray(f, dtype=float)
    M = T.adjoint_matrix if adjoint else T.matrix
    if f.ndim == 1:
        if f.size != T.n:
            raise ConfigurationError("operator and function live on different grids")
        return M @ f
    if axis == 1:
        if f.shape[0] != T.n:
            raise ConfigurationError("operator and function live on different grids")
        return M @ f if f.ndim == 2 else np.tensordot(M, f, axes=([1], [0]))
    if axis == 2:
        if f.shape[1] != T.n:
            raise ConfigurationError("operator and function live on different grids")
        return f @ M.T if f.ndim == 2 else np.moveaxis(np.tensordot(M, f, axes=([1], [1])), 0, 1)
    raise ConfigurationError(f"axis must be 1 or 2, got {axis}")


def _shell_sums(T: OperatorHandle, f):
    """``S[i, m] = sum_{dist(i, j) = m} K(x_i, x_j) f_j / n`` for ``m = 0..n/2``."""
    n = T.n
    full = _kernel_matrix(T.kernel, n, 0)
    i = np.arange(n)
    S = np.zeros((n, n // 2 + 1))
    for s in range(1, n):
        j = (i - s) % n
        m = min(s, n - s)
        S[:, m] += full[i, j] * f[j]
    return S


def maximal_truncation(T: OperatorHandle, f) -> np.ndarray:
    """``T_* f(x) = max_eps |T_eps f(x)|`` over grid radii ``eps >= T.eps``."""
    f = check_grid(f, ndim=1)
    S = _shell_sums(T, f)
    # tail[:, m] = sum over distances > m
    tail = np.cumsum(S[:, ::-1], axis=1)[:, ::-1]
    tail = np.concatenate([tail[:, 1:], np.zeros((T.n, 1))], axis=1)
    m0 = T.min_cells
    return np.max(np.abs(tail[:, m0: T.n // 2]), axis=1) if m0 < T.n // 2 else np.zeros(T.n)


def cotlar_check(T: OperatorHandle, f, r: float = 0.5) -> dict:
    """Fitted constant in ``T_* f <= C (M_r(T f) + M f)`` pointwise.

    ``M`` is the dyadic maximal function over the base and translated
    lattices.
    """
    if not (0 < r < 1):
        raise ParameterError("Cotlar exponent must lie in (0, 1)")
    f = check_grid(f, ndim=1)
    star = maximal_truncation(T, f)
    Tf = apply(T, f)
    rhs = maximal(Tf, r=r, shifted=True) + maximal(f, shifted=True)
    mask = rhs > 0
    C = float(np.max(star[mask] / rhs[mask])) if np.any(mask) else 0.0
    return {"constant": C, "r": r, "n": T.n, "argmax": int(np.argmax(np.where(mask, star / np.where(mask, rhs, 1), 0)))}


def reflected_cube(K: KernelSpec, I: Interval, A: float) -> Interval:
    """Equal-size interval at distance about ``A * |I|`` where the kernel is large.

    Candidate displacements of ``t`` cells, ``A|I| <= |t| <= 2A|I|`` and
    ``|t| + |I| <= 1/2``, are scored by ``min(|K(c~, c)|, |K(c, c~)|)``
    (only ``|K(c~, c)|`` when the kernel is not flagged symmetric). Among
    maximizers the smallest ``|t|`` wins; a remaining ``+-`` tie is broken
    by the parity of the block of ``A|I|`` cells containing ``I``: even
    blocks step right, odd blocks step left. The parity rule makes
    reflecting twice return ``I`` whenever ``2 A |I|`` divides the torus.
    """
    if A < 3:
        raise ParameterError("reflection parameter A must be at least 3")
    n, w = I.n, I.size
    tmin = int(np.ceil(A * w - 1e-9))
    # every cell pair of I and its reflection must stay short of the antipode
    tmax = min(int(np.floor(2 * A * w + 1e-9)), n // 2 - w)
    if tmin > tmax:
        raise GeometryError(f"reflection of {w} cells at A={A} does not fit a torus of {n} cells")
    ts = np.arange(tmin, tmax + 1)
    ts = np.concatenate([ts, -ts])
    c = I.center
    ct = (c + ts / n) % 1.0
    k1 = np.abs(K.of_difference(periodic_rep(ct - c)))
    if K.symmetric_nondegenerate:
        score = np.minimum(k1, np.abs(K.of_difference(periodic_rep(c - ct))))
    else:
        score = k1
    best = score.max()
    tied = ts[score >= best * (1 - 1e-12)]
    tied = tied[np.abs(tied) == np.abs(tied).min()]
    if tied.size == 1:
        t = int(tied[0])
    else:
        parity = (I.start // tmin) % 2
        t = int(abs(tied[0])) if parity == 0 else -int(abs(tied[0]))
    return I.shift(t)


def fractional_matrix(n: int, beta: float) -> np.ndarray:
    """Matrix of ``I_beta`` with the exact singular-cell integral on the diagonal."""
    if not (0 < beta < 1):
        raise ParameterError("fractional order must lie in (0, 1) for one-dimensional axes")
    d = cell_dist(n) / n
    with np.errstate(divide="ignore"):
        M = np.where(d > 0, d ** (beta - 1.0), 0.0) / n
    h = 1.0 / n
    # int over |t| < h/2 of |t|^{beta-1} dt
    np.fill_diagonal(M, 2.0 * (h / 2.0) ** beta / beta)
    return M


def fractional_integral(f, beta: float, axis: int = 1) -> np.ndarray:
    """Periodic fractional integral ``I_beta`` along ``axis`` (1 or 2)."""
    f = check_grid(f)
    n = f.shape[0] if (f.ndim == 1 or axis == 1) else f.shape[1]
    M = fractional_matrix(n, beta)
    if f.ndim == 1 or axis == 1:
        return M @ f
    return f @ M.T


def t1_test(T: OperatorHandle, I: Interval) -> dict:
    """``(int_I |T 1_I| + int_I |T* 1_I|) / |I|``."""
    ind = I.indicator()
    a = np.abs(apply(T, ind))[I.cells()].sum() / T.n
    b = np.abs(apply(T, ind, adjoint=True))[I.cells()].sum() / T.n
    return {"ratio": float((a + b) / I.length), "forward": float(a / I.length),
            "adjoint": float(b / I.length), "interval": I.to_dict()}
