"""
Approximate weak factorization of rectangle-supported functions and the
off-support constants that bound rectangle oscillations from below.

Notation: ``phi = 1_{R~}`` with ``R~ = I1~ x I2~`` the reflected rectangle,
``T_i`` the truncated operator matrices and ``D_i = T_i^* 1_{I_i~}``. For
``f`` supported on ``R`` with vanishing partial integrals,

``f = h D1 D2 - (T2 h)(D1 ⊗ φ2) - (T1 h)(φ1 ⊗ D2) + φ T1 T2 h + f~1 + f~2 + f~3``

with ``h = f / (D1 ⊗ D2)``. The identity is pure algebra, so it holds to
rounding for every kernel.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .czo import KernelSpec, OperatorHandle, reflected_cube
from .dyadic import lerner_sparse
from .errors import (
    AlignmentError,
    ConfigurationError,
    DegenerateKernelError,
    ParameterError,
)
from .grid import ExponentProfile, Interval, Rectangle, check_grid, conjugate, lp_norm, periodic_rep
from .spaces import NormReport, _norming, _project_zero_means, osc, osc_dual

log = logging.getLogger(__name__)

__all__ = [
    "FactorizationResult",
    "weak_factorize",
    "a_sweep",
    "absorption_bound",
    "off_constant",
    "osc_lower_bound_check",
    "OFF_VARIANTS",
    "sample_geometries",
]

EPS_DEN = 10 * np.finfo(float).eps


def _ops(K1, K2, n1, n2):
    T1 = K1 if isinstance(K1, OperatorHandle) else OperatorHandle(K1, n1)
    T2 = K2 if isinstance(K2, OperatorHandle) else OperatorHandle(K2, n2)
    if T1.n != n1 or T2.n != n2:
        raise AlignmentError("operator grids do not match the function")
    return T1, T2


@dataclass
class FactorizationResult:
    """Output of :func:`weak_factorize`; all arrays live on the full grid."""

    h: np.ndarray
    main_terms: dict
    errors: tuple
    rects: tuple
    A: float
    reflected: Rectangle
    diagnostics: dict = field(default_factory=dict)

    @property
    def main(self) -> np.ndarray:
        m = self.main_terms
        return m["h_dual"] - m["T2h_dual1"] - m["T1h_dual2"] + m["phi_T1T2h"]

    def reconstruct(self) -> np.ndarray:
        return self.main + sum(self.errors)

    def zero_means(self) -> dict:
        """The six partial integrals that must vanish, as max absolute values."""
        f1, f2, f3 = self.errors
        R1, R2, R3 = self.rects
        n1, n2 = self.h.shape

        def side(F, I, axis):
            return float(np.max(np.abs(F.take(I.cells(), axis=axis).sum(axis=axis)))) / (n1 if axis == 0 else n2)

        return {
            "f1_axis1": side(f1, R1.I1, 0), "f1_axis2": side(f1, R1.I2, 1),
            "f2_axis1": side(f2, R2.I1, 0), "f2_axis2": side(f2, R2.I2, 1),
            "f3_axis1": side(f3, R3.I1, 0), "f3_axis2": side(f3, R3.I2, 1),
        }


def weak_factorize(f, R: Rectangle, K1, K2, A: float, check_means: bool = True) -> FactorizationResult:
    """Factorize ``f`` supported on ``R`` against the reflected rectangle.

    Parameters
    ----------
    f : ndarray (n1, n2)
        Supported on ``R`` with vanishing integrals over ``I1`` and ``I2``.
    R : Rectangle
    K1, K2 : KernelSpec or OperatorHandle
    A : float
        Reflection parameter, at least 3.

    Raises
    ------
    DegenerateKernelError
        If ``T_i^* 1_{I_i~}`` nearly vanishes somewhere on ``I_i``.
    """
    f = check_grid(f, ndim=2)
    n1, n2 = f.shape
    if R.shape != (n1, n2):
        raise AlignmentError("rectangle and function live on different grids")
    T1, T2 = _ops(K1, K2, n1, n2)
    mask = R.indicator() > 0
    scale = max(np.abs(f).max(), 1e-300)
    if np.any(np.abs(f[~mask]) > 1e-12 * scale):
        raise AlignmentError("f is not supported on R")
    if check_means and np.abs(f).max() > 0:
        m1 = np.abs(f.sum(axis=0)).max() / n1
        m2 = np.abs(f.sum(axis=1)).max() / n2
        if max(m1, m2) > 1e-12 * max(1.0, np.abs(f).sum() / (n1 * n2)):
            raise ParameterError("f must have vanishing integrals over I1 and I2")
    J1 = reflected_cube(T1.kernel, R.I1, A)
    J2 = reflected_cube(T2.kernel, R.I2, A)
    phi1, phi2 = J1.indicator(), J2.indicator()
    M1, M2 = T1.matrix, T2.matrix
    D1 = M1.T @ phi1
    D2 = M2.T @ phi2
    c1, c2 = R.I1.cells(), R.I2.cells()
    if np.min(np.abs(D1[c1])) < EPS_DEN or np.min(np.abs(D2[c2])) < EPS_DEN:
        raise DegenerateKernelError("reflected rectangle gives a vanishing denominator on R")
    inv1 = np.zeros(n1)
    inv1[c1] = 1.0 / D1[c1]
    inv2 = np.zeros(n2)
    inv2[c2] = 1.0 / D2[c2]
    h = f * inv1[:, None] * inv2[None, :]
    f1 = phi1[:, None] * (M1 @ (f * inv1[:, None]))
    f2 = phi2[None, :] * ((f * inv2[None, :]) @ M2.T)
    f3 = -phi1[:, None] * (M1 @ (f2 * inv1[:, None]))
    T1h = M1 @ h
    T2h = h @ M2.T
    main = {
        "h_dual": h * np.outer(D1, D2),
        "T2h_dual1": T2h * np.outer(D1, phi2),
        "T1h_dual2": T1h * np.outer(phi1, D2),
        "phi_T1T2h": np.outer(phi1, phi2) * (M1 @ T2h),
    }
    Rt = Rectangle(J1, J2)
    rects = (Rectangle(J1, R.I2), Rectangle(R.I1, J2), Rt)
    res = FactorizationResult(h, main, (f1, f2, f3), rects, A, Rt)
    res.diagnostics = _diagnostics(res, f, R, D1, D2, T1.kernel.alpha, T2.kernel.alpha)
    return res


def _diagnostics(res, f, R, D1, D2, a1, a2):
    n1, n2 = f.shape
    A = res.A
    absf = np.abs(f)
    out = {"reflected": res.reflected, "A": A}
    out["dual_min"] = [float(np.min(np.abs(D1[R.I1.cells()]))), float(np.min(np.abs(D2[R.I2.cells()])))]
    out["dual_min_scaled"] = [out["dual_min"][0] * A, out["dual_min"][1] * A]
    nz = absf > 0
    ratio = np.abs(res.h)[nz] / absf[nz] if np.any(nz) else np.zeros(1)
    out["h_over_f_max"] = float(ratio.max())
    out["C_h_A"] = float(ratio.max() / A)
    out["C_h_Ad"] = float(ratio.max() / A ** 2)
    l1 = absf.sum()
    out["l1_ratio"] = [float(np.abs(e).sum() / l1) if l1 > 0 else 0.0 for e in res.errors]
    avg1 = absf.sum(axis=0) / R.I1.size      # <|f|>_{I1,1}(x2)
    f1 = np.abs(res.errors[0])
    sel = avg1 > 0
    out["C_f1"] = float(np.max(f1[:, sel] / avg1[sel]) * A ** a1) if np.any(sel) else 0.0
    avg2 = absf.sum(axis=1) / R.I2.size
    f2 = np.abs(res.errors[1])
    sel = avg2 > 0
    out["C_f2"] = float(np.max(f2[sel, :] / avg2[sel, None]) * A ** a2) if np.any(sel) else 0.0
    avgR = absf.sum() / (R.I1.size * R.I2.size)
    out["C_f3"] = float(np.abs(res.errors[2]).max() / avgR * A ** (a1 + a2)) if avgR > 0 else 0.0
    return out


def a_sweep(f, R: Rectangle, K1, K2, As=(4, 8, 16, 32)) -> dict:
    """Error decay of the factorization as ``A`` grows.

    Returns per-``A`` rows ``(A, max_j ||f~_j||_1/||f||_1, C_h_A)`` and the
    least-squares slope of ``log2`` error ratio against ``log2 A``.
    """
    rows = []
    for A in As:
        res = weak_factorize(f, R, K1, K2, A)
        d = res.diagnostics
        rows.append({"A": float(A), "error_ratio": max(d["l1_ratio"]), "C_h_A": d["C_h_A"],
                     "C_h_Ad": d["C_h_Ad"], "residual": float(np.abs(res.reconstruct() - f).max())})
    x = np.log2([r["A"] for r in rows])
    y = np.log2([max(r["error_ratio"], 1e-300) for r in rows])
    slope = float(np.polyfit(x, y, 1)[0]) if len(rows) > 1 else float("nan")
    return {"rows": rows, "slope": slope}


# ---------------------------------------------------------------------------
# absorption
# ---------------------------------------------------------------------------


def _extremal_dual(b, R: Rectangle, v1, v2):
    """Zero-mean function ``g`` on ``R`` with ``<b, g>`` equal to the oscillation."""
    n1, n2 = b.shape
    blk = R.block(b)
    P = _project_zero_means(blk)
    if v1 == 1 and v2 == 1:
        g = _project_zero_means(np.sign(P))
    else:
        val = lp_norm(lp_norm(P, v2, axis=1, weight=1.0 / n2), v1, weight=1.0 / n1)
        if val == 0:
            g = np.zeros_like(P)
        else:
            g = _project_zero_means(_norming(P, v1, v2, n1, n2, val))
    out = np.zeros((n1, n2))
    out[np.ix_(R.I1.cells(), R.I2.cells())] = g
    return out


def _bicomm_pairing(b, h, phi, M1, M2):
    """``<[T1,[b,T2]] h, phi>`` by composition with matrices ``M1, M2``."""
    T2h = h @ M2.T
    T1h = M1 @ h
    out = M1 @ (b * T2h) + (b * T1h) @ M2.T - b * (M1 @ T2h) - M1 @ ((b * h) @ M2.T)
    return float(np.sum(out * phi)) / (b.shape[0] * b.shape[1])


def absorption_bound(b, R: Rectangle, K1, K2, v1=1.0, v2=1.0, A: float = 8.0) -> dict:
    """One absorption round of the oscillation against bi-commutator pairings.

    The extremal dual function of ``b`` on each of ``R_0 = R``,
    ``R_1 = I1~ x I2``, ``R_2 = I1 x I2~`` and ``R_3 = R~`` is factorized.
    For each ``R_j`` the pairing ``<[T1^(*),[b,T2^(*)]] h_j, 1_{R_j~}>`` is
    formed by composition, with adjoints on the axes where ``R_j`` is the
    reflected side. The measured error fraction
    ``eps = sum |<b, f~>| / osc`` on ``R`` gives the slack
    ``1/(1 - eps)``, written ``1/(1 - C A^{-alpha})`` with the fitted ``C``.
    """
    b = check_grid(b, ndim=2)
    n1, n2 = b.shape
    T1, T2 = _ops(K1, K2, n1, n2)
    alpha = min(T1.kernel.alpha, T2.kernel.alpha)
    base = osc(b, R, v1, v2)
    scale = max(np.abs(b).max(), 1e-300)
    if base <= 1e-13 * scale:
        return {"osc": base, "pairings": [0.0] * 4, "ratio": 0.0, "slack": 1.0, "eps": 0.0,
                "C_fit": 0.0, "absorbed": True, "A": A}
    J1 = reflected_cube(T1.kernel, R.I1, A)
    J2 = reflected_cube(T2.kernel, R.I2, A)
    rects = [R, Rectangle(J1, R.I2), Rectangle(R.I1, J2), Rectangle(J1, J2)]
    adj = [(False, False), (True, False), (False, True), (True, True)]
    pairings = []
    eps = 0.0
    for j, (Rj, (a1, a2)) in enumerate(zip(rects, adj)):
        g = _extremal_dual(b, Rj, v1, v2)
        S1 = T1.adjoint() if a1 else T1
        S2 = T2.adjoint() if a2 else T2
        res = weak_factorize(g, Rj, S1, S2, A, check_means=False)
        phi = res.reflected.indicator()
        pairings.append(_bicomm_pairing(b, res.h, phi, S1.matrix, S2.matrix))
        if j == 0:
            err = sum(abs(float(np.sum(b * e))) for e in res.errors) / (n1 * n2)
            gb = abs(float(np.sum(b * g))) / (n1 * n2)
            eps = err / gb if gb > 0 else 0.0
    total = sum(abs(p) for p in pairings)
    ratio = base / total if total > 0 else np.inf
    absorbed = eps < 1
    slack = 1.0 / (1.0 - eps) if absorbed else np.inf
    if not absorbed:
        log.warning("absorption fails at A=%s: error fraction %.3g", A, eps)
    return {"osc": base, "pairings": pairings, "ratio": float(ratio), "slack": float(slack),
            "eps": float(eps), "C_fit": float(eps * A ** alpha), "absorbed": bool(absorbed), "A": A}


# ---------------------------------------------------------------------------
# off-support constants
# ---------------------------------------------------------------------------

OFF_VARIANTS = ("Off", "Off_tilde", "Off_1adj", "Off_2adj", "Off_fulladj", "Off_sigma")


def _kernel_block(K: KernelSpec, rows: np.ndarray, cols: np.ndarray, n: int, adjoint=False):
    """Raw kernel values ``K(x_r, y_c)`` (``K(y_c, x_r)`` for the adjoint)."""
    d = periodic_rep((rows[:, None] - cols[None, :]) / n)
    if adjoint:
        d = -d
    return K.of_difference(d)


@dataclass(frozen=True)
class Geometry:
    """Pair of equal-size rectangles ``P1 = J1 x J2`` (for ``f1``) and ``P2 = L1 x L2``."""

    P1: Rectangle
    P2: Rectangle

    def to_dict(self):
        return {"P1": self.P1.to_dict(), "P2": self.P2.to_dict()}


def _sample_interval_pair(rng, n, max_w):
    ws = [w for w in (1 << k for k in range(12)) if w <= max_w]
    w = int(rng.choice(ws))
    gap = int(rng.integers(w, 4 * w + 1))
    sgn = 1 if rng.random() < 0.5 else -1
    start = int(rng.integers(0, n))
    J = Interval(start, w, n)
    L = Interval(start + sgn * (w + gap), w, n)
    return J, L


def sample_geometries(shape, count: int, seed: int = 0):
    """Seeded geometries with ``l(J_i) = l(L_i)`` and ``dist(J_i, L_i)`` in ``[l, 4l]``.

    Sides are at most ``n/16`` cells so that the far edges stay well
    inside half a torus. The sequence is a prefix-stable stream: a larger
    count extends a smaller one.
    """
    n1, n2 = shape
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        J1, L1 = _sample_interval_pair(rng, n1, max(1, n1 // 16))
        J2, L2 = _sample_interval_pair(rng, n2, max(1, n2 // 16))
        out.append(Geometry(Rectangle(J1, J2), Rectangle(L1, L2)))
    return out


class _Form:
    """Bilinear form ``(F1, F2) -> iint B K1 K2 f1(y) f2(x)`` for one geometry."""

    def __init__(self, b, geo: Geometry, K1, K2, adj1=False, adj2=False):
        n1, n2 = b.shape
        J1, J2 = geo.P1.I1.cells(), geo.P1.I2.cells()
        L1, L2 = geo.P2.I1.cells(), geo.P2.I2.cells()
        self.k1 = _kernel_block(K1, L1, J1, n1, adj1)
        self.k2 = _kernel_block(K2, L2, J2, n2, adj2)
        self.bxx = b[np.ix_(L1, L2)]
        self.bxy = b[np.ix_(L1, J2)]
        self.byx = b[np.ix_(J1, L2)]
        self.byy = b[np.ix_(J1, J2)]
        self.norm = 1.0 / (n1 * n2) ** 2
        self.shape1 = (J1.size, J2.size)
        self.shape2 = (L1.size, L2.size)

    def G(self, F1):
        k1, k2 = self.k1, self.k2
        out = (self.bxx * (k1 @ F1 @ k2.T) - (self.bxy * (k1 @ F1)) @ k2.T
               - k1 @ (self.byx * (F1 @ k2.T)) + k1 @ (self.byy * F1) @ k2.T)
        return out * self.norm

    def Gt(self, F2):
        k1, k2 = self.k1, self.k2
        out = (k1.T @ (F2 * self.bxx) @ k2 - k1.T @ (self.bxy * (F2 @ k2))
               - ((k1.T @ F2) * self.byx) @ k2 + self.byy * (k1.T @ F2 @ k2))
        return out * self.norm

    def value(self, F1, F2):
        return float(np.sum(F2 * self.G(F1)))


def _sign(X):
    s = np.sign(X)
    s[s == 0] = 1.0
    return s


def _ascend_sup(form: _Form, F2, iters):
    """Alternating sign ascent over ``|f_i| <= 1``; returns value, F1, F2, history."""
    hist = []
    F1 = _sign(form.Gt(F2))
    for _ in range(iters):
        F2 = _sign(form.G(F1))
        F1 = _sign(form.Gt(F2))
        v = abs(form.value(F1, F2))
        hist.append(v)
        if len(hist) > 1 and hist[-1] <= hist[-2] * (1 + 1e-14):
            break
    return hist[-1], F1, F2, hist


def _ball(H, s1, s2, n1, n2):
    """Maximizer of ``sum F H`` over ``||F||_{L^{s1}L^{s2}} <= 1`` (torus measure)."""
    d1, d2 = conjugate(s1), conjugate(s2)
    tot = lp_norm(lp_norm(H, d2, axis=1, weight=1.0 / n2), d1, weight=1.0 / n1)
    if tot == 0:
        return np.zeros_like(H)
    return _norming(H, d1, d2, n1, n2, tot)


def _mixed(F, s1, s2, n1, n2):
    return float(lp_norm(lp_norm(F, s2, axis=1, weight=1.0 / n2), s1, weight=1.0 / n1))


def _ascend_ball(form: _Form, F1, F2, s, t, shape, iters):
    """Alternating ascent over mixed-norm balls ``||f1||_s <= 1``, ``||f2||_{t'} <= 1``."""
    n1, n2 = shape
    t1d, t2d = conjugate(t[0]), conjugate(t[1])
    a = _mixed(F1, s[0], s[1], n1, n2)
    c = _mixed(F2, t1d, t2d, n1, n2)
    F1, F2 = F1 / a, F2 / c
    if form.value(F1, F2) < 0:
        F2 = -F2
    hist = [abs(form.value(F1, F2))]
    for _ in range(iters):
        F1 = _ball(form.Gt(F2), s[0], s[1], n1, n2)
        F2 = _ball(form.G(F1), t1d, t2d, n1, n2)
        hist.append(form.value(F1, F2))
        if hist[-1] <= hist[-2] * (1 + 1e-12):
            break
    return max(hist), hist


def off_constant(b, K1, K2, exponents: ExponentProfile, variant: str = "Off",
                 samples: int = 200, iters: int = 30, restarts: int = 5, seed: int = 0,
                 geometries=None) -> NormReport:
    """Sampled lower bound of an off-support constant.

    Each geometry pairs ``f1`` on ``P1 = J1 x J2`` with ``f2`` on
    ``P2 = L1 x L2``. ``Off`` maximizes over ``|f_i| <= 1`` by alternating
    sign ascent (started at ``f2 = 1`` and at ``restarts`` random signs) and
    normalizes by ``|J1|^{1+1/p1-1/q1} |J2|^{1+1/p2-1/q2}``. ``Off_tilde``
    continues the same ascent over mixed-norm unit balls, warm started from
    the ``Off`` maximizer. The ``*adj`` variants replace kernels by their
    transposes. ``Off_sigma`` combines geometries whose ``J2`` run over a
    stopping-time collection of a slice of ``b`` and normalizes by the mixed
    norms of the indicator sums.
    """
    if variant not in OFF_VARIANTS:
        raise ConfigurationError(f"unknown off-support variant {variant!r}")
    b = check_grid(b, ndim=2)
    shape = b.shape
    n1, n2 = shape
    p = (exponents.p1, exponents.p2)
    q = (exponents.q1, exponents.q2)
    if min(p + q) <= 1 or max(p + q) == np.inf:
        raise ParameterError("off-support exponents must lie in (1, inf)")
    K1 = K1.kernel if isinstance(K1, OperatorHandle) else K1
    K2 = K2.kernel if isinstance(K2, OperatorHandle) else K2
    if variant == "Off_sigma":
        return _off_sigma(b, K1, K2, p, q, samples, iters, seed)
    adj1 = variant in ("Off_1adj", "Off_fulladj")
    adj2 = variant in ("Off_2adj", "Off_fulladj")
    geos = geometries if geometries is not None else sample_geometries(shape, samples, seed)
    best, wit = 0.0, None
    monotone = True
    for g_i, geo in enumerate(geos):
        form = _Form(b, geo, K1, K2, adj1, adj2)
        rng = np.random.default_rng([seed, g_i])
        starts = [np.ones(form.shape2)] + [_sign(rng.standard_normal(form.shape2)) for _ in range(restarts)]
        local, arg = 0.0, None
        for F2 in starts:
            v, F1, F2o, hist = _ascend_sup(form, F2, iters)
            if np.any(np.diff(hist) < -1e-12 * max(1.0, hist[0])):
                monotone = False
            if arg is None or v > local:
                local, arg = v, (F1, F2o)
        J1, J2 = geo.P1.I1.length, geo.P1.I2.length
        if variant == "Off_tilde":
            val, hist = _ascend_ball(form, arg[0], arg[1], p, q, shape, iters)
        else:
            val = local / (J1 ** (1 + 1 / p[0] - 1 / q[0]) * J2 ** (1 + 1 / p[1] - 1 / q[1]))
        if val > best:
            best, wit = float(val), geo
    return NormReport(best, "sampled_ascent", variant, witness={"geometry": wit},
                      metadata={"samples": len(geos), "iters": iters, "restarts": restarts, "seed": seed,
                                "p": list(p), "q": list(q), "monotone": monotone},
                      converged=monotone, lower_bound=True)


def _off_sigma(b, K1, K2, p, q, samples, iters, seed):
    """Sampled multi-rectangle off-support constant with sparse ``J2`` families."""
    n1, n2 = b.shape
    rng = np.random.default_rng(seed)
    best, wit = 0.0, None
    for s in range(samples):
        J1, L1 = _sample_interval_pair(rng, n1, max(1, n1 // 16))
        prof = b[J1.cells()].mean(axis=0)
        S = lerner_sparse(prof)
        cubes = [c for c in S.cubes if 16 * c.size(n2) <= n2]
        if not cubes:
            continue
        forms, fvals = [], []
        for c in cubes:
            J2 = Interval(c.cells(n2).start, c.size(n2), n2)
            w = J2.size
            gap = int(rng.integers(w, 4 * w + 1))
            L2 = J2.shift(w + gap)
            geo = Geometry(Rectangle(J1, J2), Rectangle(L1, L2))
            form = _Form(b, geo, K1, K2)
            v, _, _, _ = _ascend_sup(form, np.ones(form.shape2), iters)
            forms.append(geo)
            fvals.append(v)
        fvals = np.array(fvals)
        for trial in range(3):
            lam = np.ones(len(cubes)) if trial == 0 else rng.uniform(0.1, 1.0, len(cubes))
            F1 = np.zeros((n1, n2))
            F2 = np.zeros((n1, n2))
            for lg, geo in zip(lam, forms):
                F1[np.ix_(geo.P1.I1.cells(), geo.P1.I2.cells())] += lg
                F2[np.ix_(geo.P2.I1.cells(), geo.P2.I2.cells())] += lg
            den = _mixed(F1, p[0], p[1], n1, n2) * _mixed(F2, conjugate(q[0]), conjugate(q[1]), n1, n2)
            val = float(np.sum(lam * lam * fvals) / den) if den > 0 else 0.0
            if val > best:
                best, wit = val, {"I1": J1, "cubes": len(cubes), "trial": trial}
    return NormReport(best, "sampled_sparse", "Off_sigma", witness=wit,
                      metadata={"samples": samples, "seed": seed, "p": list(p), "q": list(q)},
                      lower_bound=True)


def osc_lower_bound_check(b, R: Rectangle, K1, K2, exponents: ExponentProfile, A: float = 8.0,
                          off: Optional[float] = None, variant: str = "plain", **budget) -> dict:
    """Ratio of a rectangle oscillation to its off-support majorant.

    ``variant="plain"``: ``osc^{1,1}(b,R)/|R|`` against
    ``Off |I1|^{1/p1-1/q1} |I2|^{1/p2-1/q2}``. ``variant="dual"``: the
    ``osc^{p1',p2'}`` quantity normalized by ``|I1|^{1/p1'}|I2|^{1/p2'}``
    against ``Off_tilde`` with the same factors.
    """
    b = check_grid(b, ndim=2)
    p1, p2, q1, q2 = exponents.p1, exponents.p2, exponents.q1, exponents.q2
    fac = R.I1.length ** (1 / p1 - 1 / q1) * R.I2.length ** (1 / p2 - 1 / q2)
    if variant == "plain":
        lhs = osc(b, R) / R.area
        name = "Off"
    elif variant == "dual":
        d1, d2 = conjugate(p1), conjugate(p2)
        lhs = osc(b, R, d1, d2) / (R.I1.length ** (1 / d1) * R.I2.length ** (1 / d2))
        name = "Off_tilde"
    else:
        raise ConfigurationError(f"unknown variant {variant!r}")
    if off is None:
        off = off_constant(b, K1, K2, exponents, name, **budget).value
    rhs = off * fac
    ratio = 0.0 if lhs <= 1e-14 * max(1.0, np.abs(b).max()) else (lhs / rhs if rhs > 0 else np.inf)
    return {"lhs": float(lhs), "rhs": float(rhs), "off": float(off), "ratio": float(ratio),
            "rect": R, "A": A, "variant": variant}
