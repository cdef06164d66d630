"""
Periodic tensor grids, mixed norms and test symbols.

Functions are plain numpy arrays sampled at cell midpoints ``(k + 1/2)/N``
of the unit torus. A 1-D array is a one-parameter function, a 2-D array of
shape ``(N1, N2)`` is a two-parameter function with axis 0 carrying ``x1``
and axis 1 carrying ``x2``. Lattice-valued functions carry one trailing
axis of length ``M``.

Every integral is the midpoint rule with weight ``1/N`` per cell and axis.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    AlignmentError,
    ConfigurationError,
    DegenerateInputError,
    InvalidInputError,
    ParameterError,
    ResolutionError,
)

log = logging.getLogger(__name__)

__all__ = [
    "is_power_of_two",
    "log2_int",
    "midpoints",
    "check_grid",
    "periodic_rep",
    "periodic_dist",
    "cell_dist",
    "conjugate",
    "Interval",
    "Rectangle",
    "ExponentProfile",
    "lp_norm",
    "mixed_norm",
    "rect_average",
    "pairing",
    "duality_map",
    "restrict",
    "symbol_library",
    "SYMBOL_NAMES",
]


def is_power_of_two(n) -> bool:
    return isinstance(n, (int, np.integer)) and n >= 1 and (int(n) & (int(n) - 1)) == 0


def log2_int(n: int) -> int:
    if not is_power_of_two(n):
        raise ResolutionError(f"resolution {n} is not a power of two")
    return int(n).bit_length() - 1


def midpoints(n: int) -> np.ndarray:
    """Cell midpoints ``(k + 1/2)/n`` for ``k = 0..n-1``."""
    log2_int(n)
    return (np.arange(n) + 0.5) / n


def check_grid(f, ndim=None, lattice=False) -> np.ndarray:
    """Validate a sampled function and return it as a float array."""
    a = np.asarray(f, dtype=float)
    spatial = a.ndim - (1 if lattice else 0)
    if spatial not in (1, 2):
        raise InvalidInputError(f"expected 1 or 2 grid axes, got array of shape {a.shape}")
    if ndim is not None and spatial != ndim:
        raise InvalidInputError(f"expected a {ndim}-parameter function, got shape {a.shape}")
    for n in a.shape[:spatial]:
        if not is_power_of_two(n):
            raise ResolutionError(f"resolution {n} is not a power of two")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("grid function has non-finite values")
    return a


def periodic_rep(d):
    """Nearest periodic representative of a difference in ``(-1, 1)``.

    Values with ``|d| <= 1/2`` are returned unchanged, so the antipodal
    difference keeps its sign and ``rep(-d) == -rep(d)``.
    """
    d = np.asarray(d, dtype=float)
    d = np.where(d > 0.5, d - 1.0, d)
    return np.where(d < -0.5, d + 1.0, d)


def periodic_dist(x, y):
    d = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)) % 1.0
    return np.minimum(d, 1.0 - d)


def cell_dist(n: int) -> np.ndarray:
    """Matrix of periodic distances between cells, in cell units."""
    k = np.arange(n)
    d = np.abs(k[:, None] - k[None, :])
    return np.minimum(d, n - d)


def conjugate(s: float) -> float:
    """Hölder conjugate exponent, with ``1' = inf`` and ``inf' = 1``."""
    if s == 1:
        return np.inf
    if np.isinf(s):
        return 1.0
    return s / (s - 1.0)


@dataclass(frozen=True)
class Interval:
    """A run of ``size`` consecutive cells starting at ``start`` on a grid of ``n`` cells.

    Runs wrap around the torus.
    """

    start: int
    size: int
    n: int

    def __post_init__(self):
        if not is_power_of_two(self.n):
            raise ResolutionError(f"resolution {self.n} is not a power of two")
        if not (1 <= self.size <= self.n):
            raise AlignmentError(f"interval of {self.size} cells does not fit a grid of {self.n}")
        object.__setattr__(self, "start", int(self.start) % self.n)

    @classmethod
    def dyadic(cls, level: int, index: int, n: int) -> "Interval":
        size = n >> level
        if size < 1 or (n % (1 << level)):
            raise ResolutionError(f"level {level} is finer than a grid of {n}")
        return cls(index * size, size, n)

    @property
    def length(self) -> float:
        return self.size / self.n

    @property
    def center(self) -> float:
        return ((self.start + 0.5 * self.size) / self.n) % 1.0

    def cells(self) -> np.ndarray:
        return (self.start + np.arange(self.size)) % self.n

    def indicator(self) -> np.ndarray:
        out = np.zeros(self.n)
        out[self.cells()] = 1.0
        return out

    def shift(self, cells: int) -> "Interval":
        return Interval(self.start + cells, self.size, self.n)

    def to_dict(self):
        return {"start": self.start, "size": self.size, "n": self.n}


@dataclass(frozen=True)
class Rectangle:
    """Product of two intervals, ``I1`` on axis 0 and ``I2`` on axis 1."""

    I1: Interval
    I2: Interval

    @classmethod
    def dyadic(cls, j1, k1, j2, k2, shape) -> "Rectangle":
        return cls(Interval.dyadic(j1, k1, shape[0]), Interval.dyadic(j2, k2, shape[1]))

    @property
    def shape(self):
        return (self.I1.n, self.I2.n)

    @property
    def area(self) -> float:
        return self.I1.length * self.I2.length

    def indicator(self) -> np.ndarray:
        return np.outer(self.I1.indicator(), self.I2.indicator())

    def block(self, f) -> np.ndarray:
        """Values of ``f`` on the rectangle as a ``(size1, size2, ...)`` array."""
        f = np.asarray(f)
        if f.shape[:2] != self.shape:
            raise AlignmentError(f"rectangle on grid {self.shape} applied to array {f.shape}")
        return f[np.ix_(self.I1.cells(), self.I2.cells())]

    def to_dict(self):
        return {"I1": self.I1.to_dict(), "I2": self.I2.to_dict()}


_REGIMES = ("LT", "EQ", "GT")


@dataclass(frozen=True)
class ExponentProfile:
    """Exponents ``(p1, p2)`` of the domain and ``(q1, q2)`` of the target."""

    p1: float
    p2: float
    q1: float
    q2: float

    def __post_init__(self):
        for name in ("p1", "p2", "q1", "q2"):
            v = getattr(self, name)
            if not (1 < v < np.inf):
                raise ParameterError(f"exponent {name}={v} must lie in (1, inf)")

    def regime(self, axis: int) -> str:
        p, q = (self.p1, self.q1) if axis == 1 else (self.p2, self.q2)
        if np.isclose(p, q, rtol=0, atol=1e-14):
            return "EQ"
        return "LT" if p < q else "GT"

    @property
    def regimes(self):
        return (self.regime(1), self.regime(2))

    @property
    def tag(self) -> str:
        return "/".join(self.regimes)

    def beta(self, axis: int) -> Optional[float]:
        p, q = (self.p1, self.q1) if axis == 1 else (self.p2, self.q2)
        return 1 / p - 1 / q if self.regime(axis) == "LT" else None

    def r(self, axis: int) -> Optional[float]:
        p, q = (self.p1, self.q1) if axis == 1 else (self.p2, self.q2)
        return 1.0 / (1 / q - 1 / p) if self.regime(axis) == "GT" else None

    def to_dict(self):
        return {"p1": self.p1, "p2": self.p2, "q1": self.q1, "q2": self.q2, "regime": self.tag}


def lp_norm(x, s, axis=-1, weight=1.0):
    """``(sum |x|^s * weight)^(1/s)`` along ``axis``; ``s = inf`` gives the max."""
    x = np.abs(np.asarray(x, dtype=float))
    if np.isinf(s):
        return x.max(axis=axis)
    if s == 1:
        return x.sum(axis=axis) * weight
    if s == 2:
        return np.sqrt(np.square(x).sum(axis=axis) * weight)
    # scale out the max so large exponents do not overflow
    m = x.max(axis=axis, keepdims=True)
    safe = np.where(m > 0, m, 1.0)
    out = np.power(np.power(x / safe, s).sum(axis=axis) * weight, 1.0 / s)
    return out * np.squeeze(safe, axis=axis)


def mixed_norm(f, s1, s2=None) -> float:
    """Midpoint approximation of the mixed norm of ``f``.

    Parameters
    ----------
    f : ndarray
        One- or two-parameter samples.
    s1, s2 : float
        Outer and inner exponents in ``[1, inf]``. The inner norm is taken
        over axis 1 (``x2``) first. ``s2`` is ignored for 1-D input.

    Returns
    -------
    float

    Examples
    --------
    >>> mixed_norm(np.ones((8, 8)), 2, 3)
    1.0
    """
    f = check_grid(f)
    _check_exponent(s1)
    if f.ndim == 1:
        return float(lp_norm(f, s1, weight=1.0 / f.size))
    if s2 is None:
        s2 = s1
    _check_exponent(s2)
    inner = lp_norm(f, s2, axis=1, weight=1.0 / f.shape[1])
    return float(lp_norm(inner, s1, weight=1.0 / f.shape[0]))


def _check_exponent(s):
    if not (s >= 1):
        raise ParameterError(f"exponent {s} must lie in [1, inf]")


def rect_average(f, R, mode="full"):
    """Average of ``f`` over a rectangle, or over one of its sides.

    ``mode="axis1"`` averages over ``I1`` and returns the function
    ``x2 -> <f>_{I1,1}(x2)`` on the full ``x2`` grid; ``"axis2"`` is symmetric.
    For 1-D ``f`` pass an :class:`Interval`.
    """
    f = check_grid(f)
    if isinstance(R, Interval):
        if f.ndim != 1 or R.n != f.size:
            raise AlignmentError("interval does not match the grid")
        return float(f[R.cells()].mean())
    if not isinstance(R, Rectangle) or f.ndim != 2 or R.shape != f.shape:
        raise AlignmentError(f"rectangle does not match grid {f.shape}")
    if mode == "full":
        return float(R.block(f).mean())
    if mode == "axis1":
        return f[R.I1.cells(), :].mean(axis=0)
    if mode == "axis2":
        return f[:, R.I2.cells()].mean(axis=1)
    raise ConfigurationError(f"unknown averaging mode {mode!r}")


def pairing(f, g, mode="full"):
    """Midpoint-rule pairing ``int f g``.

    In ``"axis1"`` mode ``g`` is a function of ``x1`` and the result is the
    function ``x2 -> int f(x1, x2) g(x1) dx1``; ``"axis2"`` is symmetric.
    """
    f = check_grid(f)
    g = check_grid(g)
    if mode == "full":
        if f.shape != g.shape:
            raise AlignmentError(f"grid mismatch {f.shape} vs {g.shape}")
        return float(np.sum(f * g) / f.size)
    if f.ndim != 2 or g.ndim != 1:
        raise AlignmentError("partial pairings need a two-parameter f and one-parameter g")
    if mode == "axis1":
        if g.size != f.shape[0]:
            raise AlignmentError("grid mismatch on axis 1")
        return g @ f / f.shape[0]
    if mode == "axis2":
        if g.size != f.shape[1]:
            raise AlignmentError("grid mismatch on axis 2")
        return f @ g / f.shape[1]
    raise ConfigurationError(f"unknown pairing mode {mode!r}")


def duality_map(f, s1, s2=None) -> np.ndarray:
    """Norming function of ``f`` for the mixed norm ``L^{s1}L^{s2}``.

    Returns ``g`` with ``mixed_norm(g, s1', s2') == 1`` and
    ``pairing(f, g) == mixed_norm(f, s1, s2)``. Each ``x2``-slice is normed
    in ``L^{s2}`` and then weighted by the outer ``L^{s1}`` profile.
    """
    f = check_grid(f)
    for s in (s1,) if f.ndim == 1 else (s1, s1 if s2 is None else s2):
        if not (1 < s < np.inf):
            raise ParameterError(f"duality map needs exponents in (1, inf), got {s}")
    total = mixed_norm(f, s1, s2)
    if total == 0:
        raise DegenerateInputError("duality map of the zero function")
    if f.ndim == 1:
        return np.sign(f) * np.power(np.abs(f) / total, s1 - 1)
    if s2 is None:
        s2 = s1
    inner = lp_norm(f, s2, axis=1, weight=1.0 / f.shape[1])
    safe = np.where(inner > 0, inner, 1.0)
    g = np.sign(f) * np.power(np.abs(f) / safe[:, None], s2 - 1)
    return g * np.power(inner / total, s1 - 1)[:, None]


def restrict(f, R) -> np.ndarray:
    """Zero ``f`` outside the rectangle or interval ``R``."""
    f = np.asarray(f, dtype=float)
    return f * (R.indicator() if f.ndim == R.indicator().ndim else R.indicator()[..., None])


# ---------------------------------------------------------------------------
# symbols
# ---------------------------------------------------------------------------

SYMBOL_NAMES = (
    "constant",
    "tensor_log",
    "tensor_holder",
    "tensor_lr",
    "haar_synthesis",
    "depends_on_x1_only",
    "depends_on_x2_only",
    "random",
    "unexpected_order",
)

# coarse depth of synthesized symbols; fixed so that a symbol is the same
# continuum function at every resolution
SYNTH_LEVELS = 6


def _tent(x, level, index):
    ell = 2.0 ** -level
    c = (index + 0.5) * ell
    return np.maximum(0.0, 1.0 - np.abs(2.0 * (x - c) / ell))


def _haar1(x, level, index):
    ell = 2.0 ** -level
    lo = index * ell
    t = (x - lo) / ell
    return np.where((t >= 0) & (t < 0.5), 1.0, 0.0) - np.where((t >= 0.5) & (t < 1), 1.0, 0.0)


def _synth_1d(rng, kind, x, expo):
    """One random continuum function of the requested regularity, sampled at ``x``."""
    out = np.zeros_like(x)
    if kind == "holder":
        a = float(expo)
        for j in range(SYNTH_LEVELS + 1):
            eps = rng.uniform(-1.0, 1.0, size=1 << j)
            for k in range(1 << j):
                out += eps[k] * 2.0 ** (-j * a) * _tent(x, j, k)
        return out
    if kind == "bmo":
        for j in range(SYNTH_LEVELS):
            eps = rng.uniform(-1.0, 1.0, size=1 << j)
            for k in range(1 << j):
                out += eps[k] * _haar1(x, j, k)
        return out / np.sqrt(SYNTH_LEVELS)
    if kind == "lr":
        r = float(expo)
        centers = rng.integers(0, 64, size=2) / 64.0
        amps = rng.uniform(0.5, 1.0, size=2) * rng.choice([-1.0, 1.0], size=2)
        for c, a in zip(centers, amps):
            out += a * periodic_dist(x, c) ** (-1.0 / (2.0 * r))
        for j in range(3):
            eps = rng.uniform(-1.0, 1.0, size=1 << j)
            for k in range(1 << j):
                out += 0.5 * eps[k] * _haar1(x, j, k)
        return out
    raise ConfigurationError(f"unknown synthesis target {kind!r}")


def _shape(n):
    if np.isscalar(n):
        return (int(n), int(n))
    return tuple(int(v) for v in n)


def symbol_library(name: str, n=128, **params) -> np.ndarray:
    """Deterministic test symbols.

    Parameters
    ----------
    name : str
        One of :data:`SYMBOL_NAMES`.
    n : int or tuple
        Resolution. A tuple gives a two-parameter symbol, an int gives a
        square two-parameter grid unless ``dim=1`` is passed.
    **params
        ``c`` for ``constant``; ``alpha``, ``beta`` for ``tensor_holder``;
        ``r1``, ``r2`` for ``tensor_lr``; ``seed`` and ``target_space`` for
        ``haar_synthesis`` and ``random``; ``beta`` and ``bumps`` for
        ``unexpected_order``.

    Notes
    -----
    ``haar_synthesis`` draws a random combination whose per-axis regularity
    is named by ``target_space``: ``"holder"``, ``"bmo"`` or ``"lr"`` for a
    one-parameter symbol, or ``"X_Y"`` for a two-parameter symbol built as a
    sum of three products of such functions. Hölder pieces are built from
    tents (antiderivatives of Haar functions) with coefficients decaying as
    ``2^{-j alpha}``; BMO pieces use Haar functions with bounded
    coefficients; L^r pieces use power singularities of integrable order.
    All pieces live on a fixed coarse depth, so the continuum function does
    not depend on the resolution.
    """
    dim = params.pop("dim", 2)
    shape = _shape(n)
    for m in shape:
        log2_int(m)
    x1 = midpoints(shape[0])
    x2 = midpoints(shape[1])
    if dim == 1:
        x = x1
    if name == "constant":
        c = float(params.get("c", 1.0))
        return np.full(shape[0] if dim == 1 else shape, c)
    if name == "tensor_log":
        u = np.log(periodic_dist(x1, 0.0) + 1.0 / shape[0])
        if dim == 1:
            return u
        return np.outer(u, np.log(periodic_dist(x2, 0.0) + 1.0 / shape[1]))
    if name == "tensor_holder":
        a = float(params.get("alpha", 0.5))
        b = float(params.get("beta", 0.5))
        u = periodic_dist(x1, 0.5) ** a
        if dim == 1:
            return u
        return np.outer(u, periodic_dist(x2, 0.5) ** b)
    if name == "tensor_lr":
        r1 = float(params.get("r1", 2.0))
        r2 = float(params.get("r2", 2.0))
        u = periodic_dist(x1, 0.0) ** (-1.0 / (2 * r1))
        if dim == 1:
            return u
        return np.outer(u, periodic_dist(x2, 0.0) ** (-1.0 / (2 * r2)))
    if name == "depends_on_x1_only":
        u = np.log(periodic_dist(x1, 0.0) + 1.0 / shape[0])
        return np.repeat(u[:, None], shape[1], axis=1)
    if name == "depends_on_x2_only":
        v = np.log(periodic_dist(x2, 0.0) + 1.0 / shape[1])
        return np.repeat(v[None, :], shape[0], axis=0)
    if name == "random":
        rng = np.random.default_rng(params.get("seed", 0))
        return rng.standard_normal(shape[0] if dim == 1 else shape)
    if name == "haar_synthesis":
        rng = np.random.default_rng(params.get("seed", 0))
        target = str(params.get("target_space", "holder"))
        alpha = params.get("alpha", 0.5)
        beta = params.get("beta", 0.5)
        r1 = params.get("r1", 2.0)
        r2 = params.get("r2", 2.0)
        parts = target.split("_")
        if len(parts) == 1:
            return _synth_1d(rng, parts[0], x1, alpha if parts[0] == "holder" else r1)
        if len(parts) != 2:
            raise ConfigurationError(f"unknown synthesis target {target!r}")
        e1 = alpha if parts[0] == "holder" else r1
        e2 = beta if parts[1] == "holder" else r2
        out = np.zeros(shape)
        for _ in range(3):
            out += np.outer(_synth_1d(rng, parts[0], x1, e1), _synth_1d(rng, parts[1], x2, e2))
        return out
    if name == "unexpected_order":
        return _unexpected_order(shape, float(params.get("beta", 0.25)), int(params.get("bumps", 16)))
    raise ConfigurationError(f"unknown symbol {name!r}")


def _unexpected_order(shape, beta, bumps):
    # slices in x2 carry disjoint beta-Hölder bumps whose amplitudes are
    # logarithms in x1 peaked at different points: every x2-difference has
    # bounded mean oscillation in x1, while the x1-average of the slice
    # Hölder norms picks up the maximum over all bumps
    x1 = midpoints(shape[0])
    x2 = midpoints(shape[1])
    width = 0.5 / bumps
    out = np.zeros(shape)
    floor = 1.0 / (8.0 * bumps)
    for k in range(bumps):
        t = (k + 0.5) / bumps
        amp = -np.log(periodic_dist(x1, t) + floor)
        bump = width ** beta * np.maximum(0.0, 1.0 - periodic_dist(x2, t) / width)
        out += np.outer(amp, bump)
    return out
