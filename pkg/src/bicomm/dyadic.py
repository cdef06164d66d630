"""
Finite dyadic lattices and Haar calculus on the periodic grid.

The Haar system on a grid of ``n = 2^L`` cells is stored as an ``n x n``
matrix in heap order: row 0 is the non-cancellative function ``1`` of the
top cube, row ``2^j + k`` is the cancellative Haar function of the cube of
level ``j`` and index ``k``. Rows are orthonormal for the midpoint inner
product, so ``coeffs = H @ f / n`` and ``f = H.T @ coeffs``.

Suprema over arbitrary cubes use the base lattice together with the
lattice translated by ``round(n/3)`` cells.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Sequence

import numpy as np

from .errors import AlignmentError, BudgetError, ConfigurationError, ResolutionError
from .grid import Interval, Rectangle, check_grid, log2_int, lp_norm

log = logging.getLogger(__name__)

__all__ = [
    "DyadicCube",
    "DyadicRectangle",
    "HaarIndex",
    "SparseCollection",
    "haar_matrix",
    "haar",
    "haar_coeff",
    "haar_transform",
    "inverse_haar_transform",
    "level_slice",
    "expand_levels",
    "martingale",
    "square_function",
    "maximal",
    "sharp_maximal",
    "lattice_shifts",
    "block_view",
    "lerner_sparse",
    "verify_sparse",
]


def lattice_shifts(n: int, shifted: bool = True) -> tuple:
    """Cell offsets of the lattices scanned for 'all cubes' suprema."""
    if not shifted or n < 3:
        return (0,)
    return (0, int(round(n / 3)))


@dataclass(frozen=True)
class DyadicCube:
    """Dyadic interval of a single axis: level ``j``, index ``k`` in ``[0, 2^j)``."""

    level: int
    index: int
    axis: int = 1

    def __post_init__(self):
        if self.level < 0 or not (0 <= self.index < (1 << self.level)):
            raise ConfigurationError(f"invalid dyadic address ({self.level}, {self.index})")

    @property
    def side(self) -> float:
        return 2.0 ** -self.level

    def fits(self, n: int) -> bool:
        return (1 << self.level) <= n

    def size(self, n: int) -> int:
        if not self.fits(n):
            raise ResolutionError(f"cube of level {self.level} is finer than a grid of {n}")
        return n >> self.level

    def cells(self, n: int) -> slice:
        w = self.size(n)
        return slice(self.index * w, (self.index + 1) * w)

    def interval(self, n: int) -> Interval:
        return Interval.dyadic(self.level, self.index, n)

    def children(self):
        return (
            DyadicCube(self.level + 1, 2 * self.index, self.axis),
            DyadicCube(self.level + 1, 2 * self.index + 1, self.axis),
        )

    def ancestor(self, k: int = 1) -> "DyadicCube":
        if k > self.level:
            raise ConfigurationError("ancestor above the top cube")
        return DyadicCube(self.level - k, self.index >> k, self.axis)

    def contains(self, other: "DyadicCube") -> bool:
        return other.level >= self.level and (other.index >> (other.level - self.level)) == self.index

    def descendants(self, k: int):
        """Cubes ``S`` with ``S^{(k)} = self``."""
        base = self.index << k
        return [DyadicCube(self.level + k, base + i, self.axis) for i in range(1 << k)]

    def to_dict(self):
        return {"axis": self.axis, "level": self.level, "index": self.index}


@dataclass(frozen=True)
class DyadicRectangle:
    cube1: DyadicCube
    cube2: DyadicCube

    def rectangle(self, shape) -> Rectangle:
        return Rectangle(self.cube1.interval(shape[0]), self.cube2.interval(shape[1]))

    def to_dict(self):
        return {"cube1": self.cube1.to_dict(), "cube2": self.cube2.to_dict()}


@dataclass(frozen=True)
class HaarIndex:
    """A cube or rectangle with a signature per factor (1 cancellative, 0 not)."""

    cube: object
    signature: tuple = (1,)

    def __post_init__(self):
        sig = tuple(int(s) for s in np.atleast_1d(self.signature))
        nfac = 2 if isinstance(self.cube, DyadicRectangle) else 1
        if len(sig) == 1 and nfac == 2:
            sig = sig * 2
        if len(sig) != nfac or any(s not in (0, 1) for s in sig):
            raise ConfigurationError(f"bad Haar signature {self.signature}")
        object.__setattr__(self, "signature", sig)


@lru_cache(maxsize=32)
def _haar_matrix_cached(n: int) -> np.ndarray:
    L = log2_int(n)
    H = np.zeros((n, n))
    H[0] = 1.0
    for j in range(L):
        w = n >> j
        amp = 2.0 ** (j / 2.0)
        for k in range(1 << j):
            H[(1 << j) + k, k * w: k * w + w // 2] = amp
            H[(1 << j) + k, k * w + w // 2: (k + 1) * w] = -amp
    H.setflags(write=False)
    return H


def haar_matrix(n: int) -> np.ndarray:
    """Sampled Haar system in heap order (read-only, cached)."""
    return _haar_matrix_cached(int(n))


def level_slice(j: int) -> slice:
    """Heap rows holding the cancellative Haar functions of level ``j``."""
    return slice(1 << j, 2 << j)


def _along(M, f, axis):
    """Apply the matrix ``M`` along ``axis`` of ``f``."""
    return np.moveaxis(np.tensordot(M, f, axes=([1], [axis])), 0, axis)


def haar_transform(f, axis=None) -> np.ndarray:
    """Haar coefficients of ``f`` along one axis, or along all grid axes when ``axis is None``."""
    f = np.asarray(f, dtype=float)
    axes = range(min(f.ndim, 2)) if axis is None else [axis]
    out = f
    for a in axes:
        n = f.shape[a]
        out = _along(haar_matrix(n), out, a) / n
    return out


def inverse_haar_transform(c, axis=None) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    axes = range(min(c.ndim, 2)) if axis is None else [axis]
    out = c
    for a in axes:
        out = _along(haar_matrix(c.shape[a]).T, out, a)
    return out


def _cube_function(cube: DyadicCube, n: int, cancellative: bool) -> np.ndarray:
    w = cube.size(n)
    v = np.zeros(n)
    amp = np.sqrt(n / w)
    lo = cube.index * w
    if cancellative:
        if w < 2:
            raise ResolutionError("cancellative Haar function needs at least two cells")
        v[lo: lo + w // 2] = amp
        v[lo + w // 2: lo + w] = -amp
    else:
        v[lo: lo + w] = amp
    return v


def haar(index: HaarIndex, shape) -> np.ndarray:
    """L^2-normalized Haar function of ``index`` on a grid of the given shape."""
    if isinstance(index.cube, DyadicRectangle):
        u = _cube_function(index.cube.cube1, shape[0], index.signature[0] == 1)
        v = _cube_function(index.cube.cube2, shape[1], index.signature[1] == 1)
        return np.outer(u, v)
    n = shape if np.isscalar(shape) else shape[0]
    return _cube_function(index.cube, int(n), index.signature[0] == 1)


def haar_coeff(f, index: HaarIndex) -> float:
    f = check_grid(f)
    h = haar(index, f.shape if f.ndim == 2 else f.size)
    if h.shape != f.shape:
        raise AlignmentError("Haar index does not match the grid")
    return float(np.sum(f * h) / f.size)


def expand_levels(c, n, axis=0, weight_power=1.0):
    """Spread per-cube values of one level onto cells.

    ``c`` has length ``2^j`` along ``axis``; each value is repeated over the
    ``n / 2^j`` cells of its cube.
    """
    c = np.asarray(c)
    return np.repeat(c, n // c.shape[axis], axis=axis)


def block_view(a, w, axis, shift=0):
    """Reshape ``a`` so that axis ``axis`` splits into ``(n/w, w)`` blocks.

    Blocks start at ``shift`` cells (the lattice translated by ``shift``).
    """
    if shift:
        a = np.roll(a, -shift, axis=axis)
    shp = list(a.shape)
    n = shp[axis]
    shp[axis: axis + 1] = [n // w, w]
    return a.reshape(shp)


def unblock(a, axis, shift=0):
    """Inverse of :func:`block_view` for arrays expanded to cell resolution."""
    shp = list(a.shape)
    shp[axis: axis + 2] = [shp[axis] * shp[axis + 1]]
    out = a.reshape(shp)
    if shift:
        out = np.roll(out, shift, axis=axis)
    return out


# ---------------------------------------------------------------------------
# martingale operators
# ---------------------------------------------------------------------------


def _expect_cube(f, cube: DyadicCube, axis: int):
    n = f.shape[axis]
    sl = [slice(None)] * f.ndim
    sl[axis] = cube.cells(n)
    out = np.zeros_like(f)
    out[tuple(sl)] = f[tuple(sl)].mean(axis=axis, keepdims=True)
    return out


def _delta_cube(f, cube: DyadicCube, axis: int):
    n = f.shape[axis]
    if cube.size(n) < 2:
        raise ResolutionError(f"martingale difference of level {cube.level} is finer than the grid")
    a, b = cube.children()
    return _expect_cube(f, a, axis) + _expect_cube(f, b, axis) - _expect_cube(f, cube, axis)


def _delta_block(f, cube: DyadicCube, k: int, axis: int):
    # sum of the differences of all descendants k generations down equals the
    # difference of the conditional expectations at the two levels, on the cube
    n = f.shape[axis]
    if (n >> (cube.level + k)) < 2:
        raise ResolutionError(f"block of depth {k} below cube level {cube.level} is finer than the grid")
    out = np.zeros_like(f)
    for s in cube.descendants(k):
        out += _delta_cube(f, s, axis)
    return out


def martingale(f, op: str, addr, k=None):
    """Martingale operators on the finite lattice.

    Parameters
    ----------
    f : ndarray
    op : {"E", "D", "Dk", "DR", "DRk"}
        Average ``E_Q``, difference ``Delta_Q``, block ``Delta_{Q,k}``,
        rectangular difference ``Delta_R`` or block ``Delta_R^{k1,k2}``.
    addr : DyadicCube or DyadicRectangle
        For one-axis operators on a two-parameter ``f`` the cube's ``axis``
        field selects the axis.
    k : int or tuple
        Depth of the block operators.
    """
    f = check_grid(f)
    if op in ("E", "D", "Dk"):
        if not isinstance(addr, DyadicCube):
            raise ConfigurationError(f"operator {op} needs a cube")
        axis = addr.axis - 1 if f.ndim == 2 else 0
        if op == "E":
            return _expect_cube(f, addr, axis)
        if op == "D":
            return _delta_cube(f, addr, axis)
        return _delta_block(f, addr, int(k), axis)
    if op in ("DR", "DRk"):
        if not isinstance(addr, DyadicRectangle) or f.ndim != 2:
            raise ConfigurationError(f"operator {op} needs a rectangle and a two-parameter function")
        if op == "DR":
            return _delta_cube(_delta_cube(f, addr.cube2, 1), addr.cube1, 0)
        k1, k2 = k
        return _delta_block(_delta_block(f, addr.cube2, int(k2), 1), addr.cube1, int(k1), 0)
    raise ConfigurationError(f"unknown martingale operator {op!r}")


# ---------------------------------------------------------------------------
# square and maximal functions
# ---------------------------------------------------------------------------


def _energy_1d(c, n, axis):
    """``sum_I c_I^2 1_I / |I|`` along ``axis`` from heap-ordered coefficients ``c``."""
    L = log2_int(n)
    out = 0.0
    for j in range(L):
        blk = np.take(c, np.arange(1 << j, 2 << j), axis=axis)
        out = out + expand_levels(np.square(blk) * (1 << j), n, axis=axis)
    return out


def square_function(f, variant: str = "S_D") -> np.ndarray:
    """Dyadic square functions.

    ``"S_D"`` uses all cancellative cubes (one-parameter) or rectangles
    (two-parameter); ``"S1"``/``"S2"`` use one axis; ``"S_D1_M2"`` is
    ``(sum_I 1_I/|I| (M_D <f, h_I>_1)^2)^(1/2)`` and ``"S_D2_M1"`` is its mirror.
    """
    f = check_grid(f)
    if f.ndim == 1:
        if variant != "S_D":
            raise ConfigurationError(f"variant {variant} needs a two-parameter function")
        return np.sqrt(_energy_1d(haar_transform(f), f.size, 0))
    n1, n2 = f.shape
    if variant == "S_D":
        c = haar_transform(f)
        out = np.zeros(f.shape)
        for j1 in range(log2_int(n1)):
            for j2 in range(log2_int(n2)):
                blk = c[level_slice(j1), level_slice(j2)]
                e = np.square(blk) * float((1 << j1) * (1 << j2))
                out += np.repeat(np.repeat(e, n1 >> j1, axis=0), n2 >> j2, axis=1)
        return np.sqrt(out)
    if variant == "S1":
        return np.sqrt(_energy_1d(haar_transform(f, axis=0), n1, 0))
    if variant == "S2":
        return np.sqrt(_energy_1d(haar_transform(f, axis=1), n2, 1))
    if variant == "S_D1_M2":
        c = haar_transform(f, axis=0)
        c = maximal(c, "M2")
        return np.sqrt(_energy_1d(c, n1, 0))
    if variant == "S_D2_M1":
        c = haar_transform(f, axis=1)
        c = maximal(c, "M1")
        return np.sqrt(_energy_1d(c, n2, 1))
    raise ConfigurationError(f"unknown square function {variant!r}")


def _max_along(a, axis, shifted):
    """Dyadic maximal average of ``a`` (already non-negative) along one axis."""
    n = a.shape[axis]
    out = np.array(a, copy=True)
    for s in lattice_shifts(n, shifted):
        for j in range(log2_int(n) + 1):
            w = n >> j
            if w == 1:
                continue
            blk = block_view(a, w, axis, s)
            m = np.repeat(blk.mean(axis=axis + 1, keepdims=True), w, axis=axis + 1)
            out = np.maximum(out, unblock(m, axis, s))
    return out


def maximal(f, variant: str = "M_D", r: float = 1.0, shifted: bool = False) -> np.ndarray:
    """Dyadic maximal functions ``(M |f|^r)^(1/r)``.

    ``"M_D"`` takes the supremum over dyadic cubes (one-parameter) or dyadic
    rectangles (strong maximal function, two-parameter). ``"M1"``/``"M2"``
    act along one axis of a two-parameter function. ``shifted=True`` adds the
    translated lattice, which turns the dyadic operator into a
    Hardy-Littlewood surrogate.
    """
    f = np.asarray(f, dtype=float)
    if r <= 0:
        raise ConfigurationError("maximal function exponent must be positive")
    a = np.power(np.abs(f), r)
    if f.ndim == 1 or variant == "M_D_1d":
        out = _max_along(a, 0, shifted)
    elif variant == "M1":
        out = _max_along(a, 0, shifted)
    elif variant == "M2":
        out = _max_along(a, 1, shifted)
    elif variant == "M_D":
        out = _strong_max(a, shifted)
    else:
        raise ConfigurationError(f"unknown maximal function {variant!r}")
    out = np.maximum(out, 0.0)
    return out if r == 1 else np.power(out, 1.0 / r)


def _strong_max(a, shifted):
    n1, n2 = a.shape[:2]
    out = np.array(a, copy=True)
    for s1 in lattice_shifts(n1, shifted):
        for s2 in lattice_shifts(n2, shifted):
            r = np.roll(a, (-s1, -s2), axis=(0, 1))
            for j1 in range(log2_int(n1) + 1):
                w1 = n1 >> j1
                rows = r.reshape((n1 // w1, w1) + r.shape[1:]).mean(axis=1)
                for j2 in range(log2_int(n2) + 1):
                    w2 = n2 >> j2
                    m = rows.reshape((n1 // w1, n2 // w2, w2) + r.shape[2:]).mean(axis=2)
                    m = np.repeat(np.repeat(m, w1, axis=0), w2, axis=1)
                    out = np.maximum(out, np.roll(m, (s1, s2), axis=(0, 1)))
    return out


def sharp_maximal(b, variant: str = "scalar", q2: float = 2.0, shifted: bool = True) -> np.ndarray:
    """Sharp maximal functions.

    ``"scalar"``: ``M^# b(x) = sup_{Q ∋ x} fint_Q |b - <b>_Q|`` for a
    one-parameter ``b`` (applied along axis 0 for two-parameter input).
    ``"inner_norm"``: ``x1 -> sup_{I1 ∋ x1} fint_{I1} ||b - <b>_{I1,1}||_{L^{q2}_{x2}}``
    for a two-parameter ``b``.
    """
    b = check_grid(b)
    n = b.shape[0]
    out = np.zeros(b.shape if variant == "scalar" else n)
    for s in lattice_shifts(n, shifted):
        for j in range(log2_int(n)):
            w = n >> j
            blk = block_view(b, w, 0, s)
            dev = blk - blk.mean(axis=1, keepdims=True)
            if variant == "scalar":
                m = np.abs(dev).mean(axis=1, keepdims=True)
            elif variant == "inner_norm":
                if b.ndim != 2:
                    raise ConfigurationError("inner_norm sharp maximal needs a two-parameter function")
                m = lp_norm(dev, q2, axis=-1, weight=1.0 / b.shape[1]).mean(axis=1, keepdims=True)
            else:
                raise ConfigurationError(f"unknown sharp maximal variant {variant!r}")
            m = np.repeat(m, w, axis=1)
            out = np.maximum(out, unblock(m, 0, s))
    return out


# ---------------------------------------------------------------------------
# sparse collections
# ---------------------------------------------------------------------------


@dataclass
class SparseCollection:
    """Cubes with pairwise disjoint major subsets ``E(S)`` (cell index arrays)."""

    cubes: List[DyadicCube]
    major_sets: List[np.ndarray]
    gamma: float
    n: int
    oscillations: Optional[np.ndarray] = None
    c_dom: Optional[float] = None
    shift: int = 0
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.cubes)

    def sizes(self) -> np.ndarray:
        return np.array([c.size(self.n) for c in self.cubes])


def lerner_sparse(b, Q0: Optional[DyadicCube] = None, gamma: float = 0.5,
                  max_cubes: int = 1 << 20) -> SparseCollection:
    """Stopping-time sparse collection dominating the oscillation of ``b`` on ``Q0``.

    Maximal dyadic subcubes ``Q`` of a selected cube ``S`` on which the mean
    of ``|b - <b>_S|`` exceeds twice its mean over ``S`` become the next
    generation. By Chebyshev they cover less than half of ``S``, so the
    remainder ``E(S)`` gives a 1/2-sparse family, and

    ``1_{Q0}|b - <b>_{Q0}| <= C_dom * sum_S 1_S fint_S |b - <b>_S|``

    with ``C_dom <= 4``; the measured ``C_dom`` is stored on the result.
    """
    b = check_grid(b, ndim=1)
    if not (0 < gamma <= 0.5):
        raise ConfigurationError("sparseness parameter must lie in (0, 1/2]")
    n = b.size
    if Q0 is None:
        Q0 = DyadicCube(0, 0)
    cubes, majors, oscs = [], [], []
    stack = [Q0]
    while stack:
        if len(cubes) >= max_cubes:
            raise BudgetError("stopping-time recursion exceeded its budget")
        S = stack.pop()
        sl = S.cells(n)
        seg = b[sl]
        w = seg.size
        u = np.abs(seg - seg.mean())
        omega = float(u.mean())
        covered = np.zeros(w, dtype=bool)
        children = []
        if w > 1 and omega > 0:
            for m in range(1, log2_int(w) + 1):
                bw = w >> m
                means = u.reshape(1 << m, bw).mean(axis=1)
                free = ~covered.reshape(1 << m, bw)[:, 0]
                for k in np.nonzero((means > 2.0 * omega) & free)[0]:
                    children.append(DyadicCube(S.level + m, (S.index << m) + int(k), S.axis))
                    covered[k * bw:(k + 1) * bw] = True
        cubes.append(S)
        oscs.append(omega)
        majors.append(sl.start + np.nonzero(~covered)[0])
        stack.extend(reversed(children))
    order = sorted(range(len(cubes)), key=lambda i: (cubes[i].level, cubes[i].index))
    cubes = [cubes[i] for i in order]
    majors = [majors[i] for i in order]
    oscs = np.array([oscs[i] for i in order])
    out = SparseCollection(cubes, majors, gamma, n, oscillations=oscs)
    out.c_dom = _domination_constant(b, Q0, out)
    return out


def _domination_constant(b, Q0, S: SparseCollection) -> float:
    n = b.size
    sl = Q0.cells(n)
    lhs = np.zeros(n)
    lhs[sl] = np.abs(b[sl] - b[sl].mean())
    rhs = np.zeros(n)
    for c, om in zip(S.cubes, S.oscillations):
        rhs[c.cells(n)] += om
    pos = lhs > 1e-14 * max(1.0, np.abs(b).max())
    if not np.any(pos):
        return 0.0
    if np.any(rhs[pos] <= 0):
        return float("inf")
    return float(np.max(lhs[pos] / rhs[pos]))


def verify_sparse(S: SparseCollection):
    """Check ``E(S) ⊆ S``, pairwise disjointness and ``|E(S)| >= gamma |S|``.

    Returns
    -------
    ok : bool
    report : dict
        Lists of violations by kind.
    """
    n = S.n
    report = {"not_contained": [], "overlapping_cells": [], "too_small": [], "gamma": S.gamma}
    counts = np.zeros(n, dtype=int)
    for i, (c, E) in enumerate(zip(S.cubes, S.major_sets)):
        sl = c.cells(n)
        E = np.asarray(E, dtype=int)
        if E.size and (E.min() < sl.start or E.max() >= sl.stop):
            report["not_contained"].append(i)
        if len(np.unique(E)) < E.size:
            report["overlapping_cells"].extend(np.unique(E[np.unique(E, return_counts=True)[1] > 1]).tolist())
        np.add.at(counts, np.unique(E), 1)
        if np.unique(E).size < S.gamma * (sl.stop - sl.start) - 1e-12:
            report["too_small"].append(i)
    report["overlapping_cells"] = sorted(set(report["overlapping_cells"]) | set(np.nonzero(counts > 1)[0].tolist()))
    ok = not (report["not_contained"] or report["overlapping_cells"] or report["too_small"])
    report["ok"] = ok
    return ok, report
