"""
Bi-commutators ``[T1, [b, T2]]`` on the torus grid.

Evaluation by operator composition and by the kernel representation,
mixed-norm operator-norm lower bounds by Boyd's fixed-point iteration, the
fractional-integral and elementary upper-bound checks, the modified sharp
function bound and the regime table of exponent patterns.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .czo import KernelSpec, OperatorHandle, fractional_integral
from .dyadic import DyadicCube, DyadicRectangle, HaarIndex, haar, maximal, sharp_maximal
from .errors import AlignmentError, ConfigurationError, ContractError, ParameterError
from .grid import ExponentProfile, Rectangle, check_grid, conjugate, lp_norm, mixed_norm
from . import spaces
from .spaces import NormReport, _norming

log = logging.getLogger(__name__)

__all__ = [
    "RegimeRow",
    "bicommutator_apply",
    "tricommutator_apply",
    "kernel_pairing",
    "one_param_pairing",
    "LinearMap",
    "bicommutator_map",
    "mixed_norm_lower_bound",
    "REGIME_CELLS",
    "regime_profiles",
    "space_estimate",
    "regime_table",
    "sharp_estimate_check",
    "upper_bound_suite",
]


def _handle(T, n):
    if isinstance(T, OperatorHandle):
        if T.n != n:
            raise AlignmentError(f"operator on {T.n} cells applied to an axis of {n} cells")
        return T
    if isinstance(T, KernelSpec):
        return OperatorHandle(T, n)
    raise ConfigurationError("expected an OperatorHandle or KernelSpec")


def _t1(M1, F):
    return M1 @ F if F.ndim == 2 else np.tensordot(M1, F, axes=([1], [0]))


def _t2(M2, F):
    return F @ M2.T if F.ndim == 2 else np.moveaxis(np.tensordot(M2, F, axes=([1], [1])), 0, 1)


def bicommutator_apply(b, T1, T2, f) -> np.ndarray:
    """``T1(b T2 f) + T2(b T1 f) - b T1 T2 f - T1 T2 (b f)``.

    ``T1`` acts along axis 0, ``T2`` along axis 1. A trailing lattice axis
    of ``f`` is carried through (``b`` is scalar).
    """
    b = check_grid(b, ndim=2)
    f = np.asarray(f, dtype=float)
    if f.shape[:2] != b.shape:
        raise AlignmentError(f"symbol {b.shape} and function {f.shape} live on different grids")
    M1 = _handle(T1, b.shape[0]).matrix
    M2 = _handle(T2, b.shape[1]).matrix
    bb = b if f.ndim == 2 else b[..., None]
    T2f = _t2(M2, f)
    T1f = _t1(M1, f)
    return _t1(M1, bb * T2f - _t2(M2, bb * f)) + _t2(M2, bb * T1f) - bb * _t2(M2, T1f)


def tricommutator_apply(b, T1, T2, T3, f) -> np.ndarray:
    """``[T1, [T2, [b, T3]]] f`` for three-parameter ``b`` and ``f``, by composition."""
    b = np.asarray(b, dtype=float)
    f = np.asarray(f, dtype=float)
    if b.ndim != 3 or b.shape != f.shape:
        raise AlignmentError("tri-commutator needs matching three-parameter arrays")
    Ms = [_handle(T, n).matrix for T, n in zip((T1, T2, T3), b.shape)]

    def axis_op(k):
        return lambda F: np.moveaxis(np.tensordot(Ms[k], F, axes=([1], [k])), 0, k)

    t1, t2, t3 = axis_op(0), axis_op(1), axis_op(2)

    def c3(F):
        return b * t3(F) - t3(b * F)

    def c23(F):
        return t2(c3(F)) - c3(t2(F))

    return t1(c23(f)) - c23(t1(f))


def _pair(u, g):
    return float(np.sum(u * g)) / (u.shape[0] * u.shape[1])


def kernel_pairing(b, f, g, K1, K2, method: str = "auto") -> float:
    """``-iint B(x,y) K1(x1,y1) K2(x2,y2) f(y) g(x) dy dx`` on the grid.

    ``B(x,y) = b(x1,x2) - b(x1,y2) - b(y1,x2) + b(y1,y2)``; cell pairs
    within the truncation radius are excluded exactly as in the operators.
    ``method="brute"`` sums the four-index tensor directly (small grids);
    ``"factored"`` splits ``B`` into its four terms.
    """
    b = check_grid(b, ndim=2)
    n1, n2 = b.shape
    M1 = _handle(K1, n1).matrix
    M2 = _handle(K2, n2).matrix
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if method == "auto":
        method = "brute" if n1 * n2 <= 1024 else "factored"
    if method == "brute":
        B = (b[:, :, None, None] - b[:, None, None, :] - b.T[None, :, :, None]
             + b[None, None, :, :])
        # B[x1, x2, y1, y2]
        val = np.einsum("abcd,ac,bd,cd,ab->", B, M1, M2, f, g)
        return float(-val) / (n1 * n2)
    if method == "factored":
        G = (b * (M1 @ f @ M2.T) - (b * (M1 @ f)) @ M2.T - M1 @ (b * (f @ M2.T)) + M1 @ (b * f) @ M2.T)
        return -_pair(G, g)
    raise ConfigurationError(f"unknown method {method!r}")


def one_param_pairing(b, f, g, K1, T2) -> float:
    """``-iint K1(x1,y1) <[b(x1,.) - b(y1,.), T2] f(y1,.), g(x1,.)> dy1 dx1``.

    Only the first variable is expanded through its kernel; the inner
    commutator is applied as an operator.
    """
    b = check_grid(b, ndim=2)
    n1, n2 = b.shape
    M1 = _handle(K1, n1).matrix
    M2 = _handle(T2, n2).matrix
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    total = 0.0
    for y1 in np.nonzero(np.any(f != 0, axis=1))[0]:
        col = M1[:, y1]
        rows = np.nonzero(col)[0]
        if rows.size == 0:
            continue
        c = b[rows] - b[y1][None, :]
        fy = f[y1][None, :]
        inner = c * (fy @ M2.T) - (c * fy) @ M2.T
        total += float(np.sum(col[rows, None] * inner * g[rows]))
    return -total / (n1 * n2)


# ---------------------------------------------------------------------------
# Boyd iteration
# ---------------------------------------------------------------------------


@dataclass
class LinearMap:
    """Black-box linear map on grid functions with its adjoint.

    The adjoint is taken with respect to the torus pairing on both sides,
    which on a uniform grid is the matrix transpose.
    """

    apply: Callable
    adjoint: Callable
    shape: tuple
    name: str = "op"

    def __call__(self, f):
        return self.apply(f)


def bicommutator_map(b, T1, T2) -> LinearMap:
    b = check_grid(b, ndim=2)
    n1, n2 = b.shape
    H1, H2 = _handle(T1, n1), _handle(T2, n2)
    return LinearMap(lambda f: bicommutator_apply(b, H1, H2, f),
                     lambda g: bicommutator_apply(b, H1.adjoint(), H2.adjoint(), g),
                     b.shape, "bicommutator")


def _mnorm(F, s1, s2):
    n1, n2 = F.shape
    return float(lp_norm(lp_norm(F, s2, axis=1, weight=1.0 / n2), s1, weight=1.0 / n1))


def _norming_fn(F, s1, s2):
    """Unit vector of the dual mixed norm ``(s1', s2')`` norming ``F``."""
    n1, n2 = F.shape
    tot = _mnorm(F, s1, s2)
    if tot == 0:
        return np.zeros_like(F)
    return _norming(F, s1, s2, n1, n2, tot)


def _spot_check(op: LinearMap, rng):
    f = rng.standard_normal(op.shape)
    g = rng.standard_normal(op.shape)
    Af, Ag = op(f), op(g)
    lin = op(f + 2.0 * g)
    # an operator that annihilates its inputs only does so up to roundoff, so
    # the linearity tolerance is floored by the input size
    scale = max(np.abs(Af).max() + 2 * np.abs(Ag).max(), np.abs(f).max() + 2 * np.abs(g).max())
    if np.abs(lin - Af - 2.0 * Ag).max() > 1e-9 * scale:
        raise ContractError("operator is not linear on the spot check")
    lhs = np.sum(Af * g)
    rhs = np.sum(f * op.adjoint(g))
    if abs(lhs - rhs) > 1e-9 * max(abs(lhs), abs(rhs), (np.abs(Af).max() + np.abs(f).max()) * np.abs(g).sum()):
        raise ContractError("adjoint does not match the operator")


def mixed_norm_lower_bound(op: LinearMap, exponents: ExponentProfile, starts: int = 6,
                           iters: int = 200, seed: int = 0, structured=None,
                           rtol: float = 1e-8, check: bool = True) -> NormReport:
    """Lower bound of ``||op||`` from ``L^{p1}L^{p2}`` to ``L^{q1}L^{q2}``.

    Boyd's iteration ``f <- J_{p'}(op^* J_q(op f))``, with ``J`` the
    normalized norming functions, is run from ``starts - 1`` seeded random
    starts and one structured start (``structured`` or the Haar function of
    the first cancellative rectangle). Every step records the quotient
    ``||op f||_q / ||f||_p``; the report carries the best value and all
    histories.
    """
    p = (exponents.p1, exponents.p2)
    q = (exponents.q1, exponents.q2)
    rng = np.random.default_rng(seed)
    if check:
        _spot_check(op, np.random.default_rng([seed, 99]))
    n1, n2 = op.shape
    init = [rng.standard_normal(op.shape) for _ in range(max(0, starts - 1))]
    if structured is None:
        structured = haar(HaarIndex(DyadicRectangle(DyadicCube(1, 0, 1), DyadicCube(1, 0, 2)), (1, 1)), op.shape)
    init.append(np.asarray(structured, dtype=float))
    histories, best, best_f = [], 0.0, None
    monotone = True
    for f in init:
        nf = _mnorm(f, *p)
        if nf == 0:
            histories.append([0.0])
            continue
        f = f / nf
        hist = []
        for _ in range(iters):
            u = op(f)
            val = _mnorm(u, *q)
            hist.append(val)
            if val == 0:
                break
            g = _norming_fn(u, *q)
            v = op.adjoint(g)
            fn = _norming_fn(v, conjugate(p[0]), conjugate(p[1]))
            if _mnorm(fn, *p) == 0:
                break
            f = fn
            if len(hist) > 1 and abs(hist[-1] - hist[-2]) <= rtol * max(hist[-1], 1e-300):
                break
        if p[0] <= q[0] and p[1] <= q[1] and np.any(np.diff(hist) < -1e-12 * max(hist[0], 1e-300) - 1e-300):
            monotone = False
        histories.append(hist)
        if max(hist) > best:
            best, best_f = max(hist), f
    return NormReport(best, "boyd", "operator_norm",
                      metadata={"exponents": exponents, "starts": len(init), "iters": iters, "seed": seed,
                                "histories": histories, "monotone": monotone},
                      converged=monotone, lower_bound=True)


# ---------------------------------------------------------------------------
# regime table
# ---------------------------------------------------------------------------

# (regime1, regime2) -> (space label, direction)
REGIME_CELLS = {
    ("LT", "LT"): ("C^{b1}(C^{b2})", "two_sided"),
    ("EQ", "LT"): ("C^{b2}_{x2}(BMO_{x1})", "two_sided"),
    ("GT", "LT"): ("C^{b2}_{x2}(Ldot^{r1}_{x1})", "lower_functional"),
    ("LT", "EQ"): ("C^{b1}_{x1}(BMO_{x2})", "two_sided"),
    ("EQ", "EQ"): ("product BMO", "upper_only"),
    ("GT", "EQ"): ("Ldot^{r1}_{x1}(BMO_{x2})", "upper_only"),
    ("LT", "GT"): ("C^{b1}_{x1}(Ldot^{r2}_{x2})", "two_sided"),
    ("EQ", "GT"): ("BMO_{x1}(Ldot^{r2}_{x2})", "upper_only"),
    ("GT", "GT"): ("Ldot^{r1}_{x1}(Ldot^{r2}_{x2})", "upper_only"),
}

_PQ = {"LT": (2.0, 4.0), "EQ": (2.0, 2.0), "GT": (4.0, 2.0)}


def regime_profiles():
    """The nine exponent profiles, one per sign pattern, in table order."""
    out = []
    for r2 in ("LT", "EQ", "GT"):
        for r1 in ("LT", "EQ", "GT"):
            (p1, q1), (p2, q2) = _PQ[r1], _PQ[r2]
            out.append(ExponentProfile(p1, p2, q1, q2))
    return out


def space_estimate(b, exponents: ExponentProfile) -> dict:
    """Space norm matching the regime of ``exponents``.

    Returns ``{"space", "direction", "value", "report", "secondary"}``;
    ``secondary`` holds the companion estimate of cells that carry an upper
    and a lower quantity.
    """
    r1, r2 = exponents.regimes
    label, direction = REGIME_CELLS[(r1, r2)]
    b1, b2 = exponents.beta(1), exponents.beta(2)
    s1, s2 = exponents.r(1), exponents.r(2)
    secondary = None
    if (r1, r2) == ("LT", "LT"):
        rep = spaces.biparam_holder_norm(b, b1, b2)
    elif (r1, r2) == ("EQ", "LT"):
        rep = spaces.holder_bmo_norm(b, b2, axis=2)
    elif (r1, r2) == ("GT", "LT"):
        rep = spaces.holder_lr_norm(b.T, b2, s1)
        secondary = spaces.lr_of_seminorm(b, s1, "holder", b2)
    elif (r1, r2) == ("LT", "EQ"):
        rep = spaces.holder_bmo_norm(b, b1, axis=1)
    elif (r1, r2) == ("EQ", "EQ"):
        rep = spaces.product_bmo_norm(b, "greedy_unions")
        secondary = spaces.rect_bmo_norm(b, 2, 2)
    elif (r1, r2) == ("GT", "EQ"):
        rep = spaces.lr_of_seminorm(b, s1, "bmo")
    elif (r1, r2) == ("LT", "GT"):
        rep = spaces.holder_lr_norm(b, b1, s2)
    elif (r1, r2) == ("EQ", "GT"):
        rep = spaces.bmo_lr(b, s2)
    else:
        rep = spaces.lrlr(b, s1, s2)
    return {"space": label, "direction": direction, "value": float(rep.value), "report": rep,
            "secondary": secondary}


def _structured_start(report: NormReport, shape):
    """Haar function of a witness rectangle, when the estimator reports one."""
    w = report.witness if isinstance(report.witness, dict) else {}
    R = w.get("rect")
    if not isinstance(R, Rectangle) or R.I1.size < 2 or R.I2.size < 2:
        return None
    f = np.zeros(shape)
    s1 = np.where(np.arange(R.I1.size) < R.I1.size // 2, 1.0, -1.0)
    s2 = np.where(np.arange(R.I2.size) < R.I2.size // 2, 1.0, -1.0)
    f[np.ix_(R.I1.cells(), R.I2.cells())] = np.outer(s1, s2)
    return f


@dataclass
class RegimeRow:
    """One cell of the regime table at one resolution."""

    exponents: ExponentProfile
    space: str
    op_norm: float
    space_norm: float
    ratio: float
    N: int
    direction: str
    secondary_norm: Optional[float] = None
    metadata: dict = field(default_factory=dict)

    @property
    def regime(self) -> str:
        return self.exponents.tag

    def to_dict(self):
        return {"regime": self.regime, "space": self.space, "op_norm": self.op_norm,
                "space_norm": self.space_norm, "ratio": self.ratio, "N": self.N,
                "direction": self.direction, "secondary_norm": self.secondary_norm,
                "exponents": self.exponents.to_dict()}

    def csv_row(self):
        return [self.regime, self.space, repr(self.op_norm), repr(self.space_norm), repr(self.ratio), str(self.N)]


def regime_table(b, K1, K2, profiles=None, Ns=(64, 128), starts: int = 4, iters: int = 60,
                 seed: int = 0) -> list:
    """Operator estimates against space norms over the exponent patterns.

    ``b`` is an array (used at its own resolution) or a callable ``N ->
    array``; in the latter case every ``N`` in ``Ns`` is evaluated.
    """
    profiles = regime_profiles() if profiles is None else profiles
    if callable(b):
        inputs = [(N, check_grid(b(N), ndim=2)) for N in Ns]
    else:
        arr = check_grid(b, ndim=2)
        inputs = [(arr.shape[0], arr)]
    rows = []
    for N, arr in inputs:
        op = bicommutator_map(arr, OperatorHandle(K1, arr.shape[0]), OperatorHandle(K2, arr.shape[1]))
        for ex in profiles:
            sp = space_estimate(arr, ex)
            start = _structured_start(sp["report"], arr.shape)
            est = mixed_norm_lower_bound(op, ex, starts=starts, iters=iters, seed=seed, structured=start)
            ratio = est.value / sp["value"] if sp["value"] > 0 else (0.0 if est.value <= 1e-12 else np.inf)
            sec = sp["secondary"].value if sp["secondary"] is not None else None
            rows.append(RegimeRow(ex, sp["space"], float(est.value), sp["value"], float(ratio), int(N),
                                  sp["direction"], sec, {"monotone": est.metadata["monotone"]}))
    return rows


# ---------------------------------------------------------------------------
# upper-bound checks
# ---------------------------------------------------------------------------


def sharp_estimate_check(b, T1, T2, f, q2: float, p2: float, r2: float, eps: float = 0.5) -> dict:
    """Pointwise ratio of the sharp function of ``[T1,[b,T2]]f`` to its majorant.

    Left side: ``x1 -> sup_{I1} fint_{I1} ||u - <u>_{I1,1}||_{L^{q2}_{x2}}``.
    Right side: ``||b||_{BMO_{x1}(Ldot^{r2})} (M_{1+eps}||T1 f||_{L^{p2}} + M_{1+eps}||f||_{L^{p2}})``.
    """
    if not p2 > q2:
        raise ParameterError("the sharp bound needs p2 > q2")
    if abs(1 / r2 - (1 / q2 - 1 / p2)) > 1e-12:
        raise ParameterError("exponents must satisfy 1/r2 = 1/q2 - 1/p2")
    b = check_grid(b, ndim=2)
    n1, n2 = b.shape
    H1, H2 = _handle(T1, n1), _handle(T2, n2)
    u = bicommutator_apply(b, H1, H2, f)
    lhs = sharp_maximal(u, "inner_norm", q2)
    nb = spaces.bmo_lr(b, r2).value
    T1f = H1.matrix @ f
    a = lp_norm(T1f, p2, axis=1, weight=1.0 / n2)
    c = lp_norm(f, p2, axis=1, weight=1.0 / n2)
    rhs = nb * (maximal(a, r=1 + eps, shifted=True) + maximal(c, r=1 + eps, shifted=True))
    mask = rhs > 0
    ratio = float(np.max(lhs[mask] / rhs[mask])) if np.any(mask) else 0.0
    return {"ratio": ratio, "lhs_max": float(lhs.max()), "rhs_min": float(rhs.min()), "bmo_lr": nb}


def upper_bound_suite(b, K1, K2, exponents: ExponentProfile, samples: int = 50, seed: int = 0,
                      elementary: Optional[dict] = None) -> dict:
    """Fitted constants of the fractional-integral chain and the elementary estimate.

    Chain (exponents with ``LT`` on both axes):
    ``|<[T1,[b,T2]] f, g>| <= C ||b||_{C^{b1,b2}} <I_{b1} I_{b2} |f|, |g|>``.
    Elementary (``elementary={"b2": array, "p2", "q2"}``):
    ``||[b,T2] f||_{L^{q2}} <= C ||b||_{Ldot^{r2}} ||f||_{L^{p2}}``.
    """
    b = check_grid(b, ndim=2)
    n1, n2 = b.shape
    rng = np.random.default_rng(seed)
    out = {}
    if exponents.regimes == ("LT", "LT"):
        b1, b2 = exponents.beta(1), exponents.beta(2)
        nb = spaces.biparam_holder_norm(b, b1, b2).value
        H1, H2 = OperatorHandle(K1, n1), OperatorHandle(K2, n2)
        worst = 0.0
        for _ in range(samples):
            f = rng.standard_normal((n1, n2))
            g = rng.standard_normal((n1, n2))
            lhs = abs(_pair(bicommutator_apply(b, H1, H2, f), g))
            frac = fractional_integral(fractional_integral(np.abs(f), b1, axis=1), b2, axis=2)
            rhs = nb * _pair(frac, np.abs(g))
            if rhs > 0:
                worst = max(worst, lhs / rhs)
            elif lhs > 1e-12:
                worst = np.inf
        out["fractional_chain"] = {"constant": float(worst), "space_norm": nb, "samples": samples}
    if elementary is not None:
        bb = check_grid(elementary["b2"], ndim=1)
        p2, q2 = elementary["p2"], elementary["q2"]
        r2 = 1.0 / (1 / q2 - 1 / p2)
        n = bb.size
        T = OperatorHandle(K2, n)
        nb = spaces.dotted_lr_norm(bb, r2).value
        worst = 0.0
        for _ in range(samples):
            f = rng.standard_normal(n)
            u = bb * (T.matrix @ f) - T.matrix @ (bb * f)
            lhs = mixed_norm(u, q2)
            rhs = nb * mixed_norm(f, p2)
            worst = max(worst, lhs / rhs if rhs > 0 else 0.0)
        out["elementary"] = {"constant": float(worst), "space_norm": nb, "r2": r2, "samples": samples}
    return out
