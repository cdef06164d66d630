"""
Deterministic invariant suite run by ``bicomm check``.

Every check is exact or nearly so (identities, annihilation, duality) and
runs at small resolution; the fitted-constant studies live in the test
suite. Each entry reports ``name``, ``passed``, ``value`` and ``tolerance``.
"""
from __future__ import annotations

import numpy as np

from . import spaces
from .commutator import LinearMap, bicommutator_apply, bicommutator_map, kernel_pairing, mixed_norm_lower_bound
from .czo import OperatorHandle, apply, hilbert
from .dyadic import haar_transform, inverse_haar_transform, lerner_sparse, verify_sparse
from .factorization import weak_factorize
from .grid import ExponentProfile, Interval, Rectangle, symbol_library
from .paraproducts import DyadicParaproduct, DyadicShift, expansion_terms, model_commutator, paraproduct

__all__ = ["invariant_suite"]


def _rel(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.abs(a - b).max() / max(np.abs(b).max(), 1e-300))


def _entry(name, value, tol):
    return {"name": name, "value": float(value), "tolerance": float(tol), "passed": bool(value <= tol)}


def _haar(rng):
    f = rng.standard_normal((32, 32))
    c = haar_transform(f)
    rec = _rel(inverse_haar_transform(c), f)
    planch = abs(np.mean(f ** 2) - np.sum(c ** 2)) / np.mean(f ** 2)
    return [_entry("haar_reconstruction", rec, 1e-12), _entry("haar_plancherel", planch, 1e-12)]


def _factorization(rng):
    n = 64
    R = Rectangle(Interval(16, 4, n), Interval(20, 4, n))
    g = rng.standard_normal((4, 4))
    g = g - g.mean(axis=0) - g.mean(axis=1)[:, None] + g.mean()
    f = np.zeros((n, n))
    f[16:20, 20:24] = g
    res = weak_factorize(f, R, hilbert(), hilbert(), 4.0)
    zm = max(res.zero_means().values()) / np.abs(f).max()
    return [_entry("factorization_reconstruction", _rel(res.reconstruct(), f), 1e-10),
            _entry("factorization_zero_means", zm, 1e-10)]


def _paraproducts(rng):
    n = 32
    b = rng.standard_normal((n, n))
    f = rng.standard_normal((n, n))
    out = []
    worst = 0.0
    for ax in (1, 2):
        s = sum(paraproduct(b, f, ("one_param", ax, j)) for j in (1, 2, 3))
        corr = b * f - b.mean(axis=ax - 1, keepdims=True) * f.mean(axis=ax - 1, keepdims=True)
        worst = max(worst, _rel(s, corr))
    out.append(_entry("one_param_paraproduct_identity", worst, 1e-10))
    s = sum(paraproduct(b, f, ("bi_param", j1, j2)) for j1 in (1, 2, 3) for j2 in (1, 2, 3))
    E1 = b.mean(axis=0, keepdims=True) * f.mean(axis=0, keepdims=True)
    E2 = b.mean(axis=1, keepdims=True) * f.mean(axis=1, keepdims=True)
    E12 = b.mean() * f.mean()
    out.append(_entry("bi_param_paraproduct_identity", _rel(s, b * f - E1 - E2 + E12), 1e-10))
    worst = last = 0.0
    for cx in ((0, 0), (1, 2), (2, 1)):
        S = DyadicShift.random(n, cx, seed=int(rng.integers(2 ** 31)))
        P = DyadicParaproduct.random(n, seed=int(rng.integers(2 ** 31)))
        m = model_commutator(b, S, P, f)
        e = expansion_terms(b, S, P, f)
        worst = max(worst, _rel(e.total(), m))
        # the last group vanishes for complexity (0, 0), so scale by the commutator
        scale = max(np.abs(m).max(), 1e-300)
        last = max(last, float(np.abs(e.last_formula - e.groups()["last"]).max()) / scale)
    out.append(_entry("long_expansion_identity", worst, 1e-10))
    out.append(_entry("last_group_formula", last, 1e-10))
    return out


def _operators(rng):
    n = 32
    T1, T2 = OperatorHandle(hilbert(), n), OperatorHandle(hilbert(), n)
    f = rng.standard_normal((n, n))
    g = rng.standard_normal((n, n))
    lhs = np.sum(apply(T2, f, axis=2) * g)
    rhs = np.sum(f * apply(T2, g, adjoint=True, axis=2))
    out = [_entry("transpose_identity", abs(lhs - rhs) / abs(lhs), 1e-10)]
    b = rng.standard_normal((n, n))
    op = bicommutator_map(b, T1, T2)
    lhs = np.sum(op(f) * g)
    rhs = np.sum(f * op.adjoint(g))
    out.append(_entry("bicommutator_adjoint", abs(lhs - rhs) / abs(lhs), 1e-10))
    K = hilbert()
    # separated supports in both variables
    ff16 = np.zeros((16, 16))
    gg16 = np.zeros((16, 16))
    ff16[:3, :3] = rng.standard_normal((3, 3))
    gg16[8:11, 8:11] = rng.standard_normal((3, 3))
    bb16 = rng.standard_normal((16, 16))
    comp = np.sum(bicommutator_apply(bb16, OperatorHandle(K, 16), OperatorHandle(K, 16), ff16) * gg16) / 256
    brute = kernel_pairing(bb16, ff16, gg16, K, K, "brute")
    fact = kernel_pairing(bb16, ff16, gg16, K, K, "factored")
    out.append(_entry("kernel_representation", max(abs(brute - comp), abs(fact - comp)) / abs(comp), 1e-9))
    return out


def _annihilation():
    n = 32
    T1, T2 = OperatorHandle(hilbert(), n), OperatorHandle(hilbert(), n)
    worst = 0.0
    exps = ExponentProfile(2.0, 2.0, 2.0, 2.0)
    for name in ("depends_on_x1_only", "depends_on_x2_only", "constant"):
        b = symbol_library(name, n)
        b = b / max(np.abs(b).max(), 1e-300)
        vals = [spaces.biparam_holder_norm(b, 0.5, 0.5, "oscillatory").value,
                spaces.rect_bmo_norm(b, 2, 2).value,
                spaces.product_bmo_norm(b).value,
                mixed_norm_lower_bound(bicommutator_map(b, T1, T2), exps, starts=2, iters=5).value]
        worst = max(worst, max(vals))
    return [_entry("annihilation", worst, 1e-8)]


def _boyd():
    n = 16
    ident = LinearMap(lambda f: f, lambda g: g, (n, n), "identity")
    worst = 0.0
    for p in (2.0, 3.0):
        v = mixed_norm_lower_bound(ident, ExponentProfile(p, p, p, p), starts=3, iters=20).value
        worst = max(worst, abs(v - 1.0))
    return [_entry("boyd_identity", worst, 1e-8)]


def _sparse(rng):
    b = rng.standard_normal(128)
    S = lerner_sparse(b)
    ok, _ = verify_sparse(S)
    return [_entry("lerner_sparse_verified", 0.0 if ok else 1.0, 0.0)]


def invariant_suite(seed: int = 1) -> list:
    """Run every check with a generator seeded by ``seed``."""
    rng = np.random.default_rng(seed)
    out = []
    out += _haar(rng)
    out += _factorization(rng)
    out += _paraproducts(rng)
    out += _operators(rng)
    out += _annihilation()
    out += _boyd()
    out += _sparse(rng)
    return out
