"""
Dyadic model operators and the algebra of paraproducts on the finite lattice.

Conventions follow :mod:`bicomm.dyadic`: Haar functions are stored in heap
order, only the cancellative rows ``1..n-1`` enter shifts and paraproducts,
and ``E_I f = <f>_I 1_I`` is the plain average over ``I`` (for the top cube
this is the global average). Two-parameter functions have shape
``(n1, n2)`` and may carry a trailing lattice axis of length ``M``.

A dyadic shift acts on axis 0 and a paraproduct on axis 1 unless stated
otherwise; every operation takes an ``axis`` argument.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .dyadic import haar_matrix, haar_transform, maximal
from .errors import ConfigurationError, ContractError, InvalidInputError, ResolutionError
from .grid import log2_int, mixed_norm
from .spaces import LatticeNorm, NormReport, product_bmo_norm

__all__ = [
    "DyadicShift",
    "DyadicParaproduct",
    "LatticePoint",
    "compatible_triple",
    "shift_apply",
    "pi_apply",
    "paraproduct",
    "model_commutator",
    "expansion_terms",
    "last_group_formula",
    "Expansion",
    "ExpansionTerm",
    "h1_bmo_pairing",
    "paraproduct_bound_check",
    "khintchine_ratio",
    "fefferman_stein_ratio",
    "square_function_ratio",
]

_TOL = 1e-12


def _cube_of_row(r: int):
    """Level and index of heap row ``r >= 1``."""
    j = r.bit_length() - 1
    return j, r - (1 << j)


def _row_of_cube(j: int, k: int) -> int:
    return (1 << j) + k


def _measure(j: int) -> float:
    return 2.0 ** (-j)


def _along(M, f, axis):
    return np.moveaxis(np.tensordot(M, f, axes=([1], [axis])), 0, axis)


# per-axis rows over cancellative cubes (heap rows 1..n-1)

def _coef_rows(n):
    """``<f, h_I>`` as a matrix acting on samples."""
    return haar_matrix(n)[1:] / n


def _avg_rows(n):
    """``<f>_I`` as a matrix acting on samples."""
    A = np.zeros((n - 1, n))
    for r in range(1, n):
        j, k = _cube_of_row(r)
        w = n >> j
        A[r - 1, k * w:(k + 1) * w] = 1.0 / w
    return A


def _h_rows(n):
    """Samples of ``h_I``."""
    return haar_matrix(n)[1:]


def _sq_rows(n):
    """Samples of ``1_I / |I|``."""
    S = np.zeros((n - 1, n))
    for r in range(1, n):
        j, k = _cube_of_row(r)
        w = n >> j
        S[r - 1, k * w:(k + 1) * w] = float(n) / w
    return S


# ---------------------------------------------------------------------------
# model operators
# ---------------------------------------------------------------------------


@dataclass
class DyadicShift:
    """Dyadic shift of complexity ``(i, j)`` on one axis.

    ``Sf = sum_{K} sum_{I, J} a_{K,I,J} <f, h_I> h_J`` where ``I`` and ``J``
    are the descendants of ``K`` of generation ``i`` and ``j``. The table
    maps ``(K, I, J)`` heap rows to coefficients and is checked against
    ``|a_{K,I,J}| <= |I|^{1/2} |J|^{1/2} / |K|`` at construction.
    """

    n: int
    complexity: tuple
    table: dict = field(default_factory=dict)

    def __post_init__(self):
        self.n = int(self.n)
        L = log2_int(self.n)
        i, j = (int(c) for c in self.complexity)
        if i < 0 or j < 0:
            raise InvalidInputError("shift complexity must be non-negative")
        if max(i, j) >= L:
            raise ResolutionError(f"complexity {(i, j)} does not fit a grid of depth {L}")
        self.complexity = (i, j)
        clean = {}
        for key, a in self.table.items():
            K, I, J = (int(x) for x in key)
            self._check_triple(K, I, J)
            jk = _cube_of_row(K)[0]
            bound = np.sqrt(_measure(jk + i) * _measure(jk + j)) / _measure(jk)
            if abs(a) > bound * (1 + _TOL):
                raise ContractError(f"shift coefficient {a} at {(K, I, J)} exceeds the normalization {bound}")
            clean[(K, I, J)] = float(a)
        self.table = clean

    def _check_triple(self, K, I, J):
        i, j = self.complexity
        if not (1 <= K < self.n and 1 <= I < self.n and 1 <= J < self.n):
            raise ResolutionError(f"triple {(K, I, J)} outside the grid")
        if (I >> i) != K or (J >> j) != K or I.bit_length() - K.bit_length() != i \
                or J.bit_length() - K.bit_length() != j:
            raise InvalidInputError(f"triple {(K, I, J)} is not of complexity {self.complexity}")

    @classmethod
    def random(cls, n: int, complexity=(0, 0), seed=0, saturate: bool = True) -> "DyadicShift":
        """Uniform coefficients rescaled so the largest triple meets its bound."""
        rng = np.random.default_rng(seed)
        i, j = complexity
        L = log2_int(n)
        table = {}
        for K in range(1, 1 << (L - max(i, j))):
            jk = _cube_of_row(K)[0]
            bound = np.sqrt(_measure(jk + i) * _measure(jk + j)) / _measure(jk)
            for I in range(K << i, (K + 1) << i):
                for J in range(K << j, (K + 1) << j):
                    table[(K, I, J)] = rng.uniform(-1.0, 1.0) * bound
        if saturate and table:
            ratios = [abs(a) / cls._bound(K, i, j) for (K, _, _), a in table.items()]
            scale = 1.0 / max(ratios)
            table = {k: v * scale for k, v in table.items()}
        return cls(n, (i, j), table)

    @staticmethod
    def _bound(K, i, j):
        jk = _cube_of_row(K)[0]
        return np.sqrt(_measure(jk + i) * _measure(jk + j)) / _measure(jk)

    @classmethod
    def identity(cls, n: int) -> "DyadicShift":
        """Complexity ``(0, 0)`` with ``a_{K,K,K} = 1``: ``f`` minus its top average."""
        return cls(n, (0, 0), {(K, K, K): 1.0 for K in range(1, n)})

    def matrix(self) -> np.ndarray:
        """Action on cancellative Haar coefficients: ``c_out = S @ c_in``."""
        S = np.zeros((self.n - 1, self.n - 1))
        for (K, I, J), a in self.table.items():
            S[J - 1, I - 1] += a
        return S

    def normalization(self) -> float:
        """``max |a| / bound``; at most 1 for a valid shift."""
        i, j = self.complexity
        if not self.table:
            return 0.0
        return max(abs(a) / self._bound(K, i, j) for (K, _, _), a in self.table.items())

    def to_dict(self):
        keys = sorted(self.table)
        return {"n": self.n, "complexity": list(self.complexity),
                "triples": [list(k) for k in keys], "values": [self.table[k] for k in keys]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d) -> "DyadicShift":
        trip = [tuple(t) for t in d.get("triples", [])]
        vals = d.get("values", [])
        if len(trip) != len(vals):
            raise InvalidInputError("triples and values differ in length")
        return cls(int(d["n"]), tuple(d["complexity"]), dict(zip(trip, vals)))

    @classmethod
    def from_json(cls, s: str) -> "DyadicShift":
        return cls.from_dict(json.loads(s))


def _bmo_of_sequence(a, n):
    """``sup_P (|P|^{-1} sum_{K ⊆ P} a_K^2)^{1/2}`` over dyadic ``P`` (heap-indexed ``a``)."""
    sq = np.zeros(n)
    sq[1:] = np.square(a)
    best = 0.0
    # subtree sums from the bottom of the heap
    sub = sq.copy()
    for r in range(n - 1, 0, -1):
        if 2 * r < n:
            sub[r] += sub[2 * r] + sub[2 * r + 1]
    for r in range(1, n):
        j, _ = _cube_of_row(r)
        best = max(best, np.sqrt(sub[r] / _measure(j)))
    return float(best)


@dataclass
class DyadicParaproduct:
    """``pi f = sum_K a_K <f>_K h_K`` on one axis, with BMO-normalized ``a``.

    ``coeffs`` has length ``n - 1`` indexed by heap rows ``1..n-1``.
    """

    n: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.n = int(self.n)
        log2_int(self.n)
        self.coeffs = np.asarray(self.coeffs, dtype=float).ravel()
        if self.coeffs.size != self.n - 1:
            raise ResolutionError(f"paraproduct table has {self.coeffs.size} entries, grid needs {self.n - 1}")
        if self.bmo_norm() > 1 + 1e-12:
            raise ContractError(f"paraproduct BMO norm {self.bmo_norm()} exceeds 1")

    def bmo_norm(self) -> float:
        return _bmo_of_sequence(self.coeffs, self.n)

    @classmethod
    def random(cls, n: int, seed=0) -> "DyadicParaproduct":
        """Uniform coefficients rescaled to BMO norm exactly 1."""
        rng = np.random.default_rng(seed)
        a = rng.uniform(-1.0, 1.0, n - 1)
        return cls(n, a / _bmo_of_sequence(a, n))

    @classmethod
    def single(cls, n: int, row: int) -> "DyadicParaproduct":
        """``a_{K0} = |K0|^{1/2}`` on the cube of heap row ``row``."""
        a = np.zeros(n - 1)
        a[row - 1] = np.sqrt(_measure(_cube_of_row(row)[0]))
        return cls(n, a)

    def to_dict(self):
        return {"n": self.n, "coeffs": self.coeffs.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d) -> "DyadicParaproduct":
        return cls(int(d["n"]), np.asarray(d["coeffs"], dtype=float))


@dataclass(frozen=True)
class LatticePoint:
    """A vector of ``R^M`` measured in a weighted ``l^s`` lattice."""

    values: tuple
    lattice: LatticeNorm

    def __post_init__(self):
        if len(self.values) != self.lattice.M:
            raise InvalidInputError("lattice point length does not match the lattice")

    def norm(self) -> float:
        return float(self.lattice(np.asarray(self.values, dtype=float)))


def compatible_triple(X1: LatticeNorm, X2: LatticeNorm, X3: LatticeNorm, samples: int = 0, seed=0) -> dict:
    """Check ``1/s3 = 1/s1 + 1/s2`` and, on random points, ``|e1 e2|_{X3} <= |e1|_{X1} |e2|_{X2}``.

    The triple must share dimension and weights, which makes the pointwise
    inequality Hölder's inequality for the weighted counting measure.
    """
    if not (X1.M == X2.M == X3.M):
        raise InvalidInputError("lattice triple must share the dimension")
    if not (np.allclose(X1.w, X2.w) and np.allclose(X2.w, X3.w)):
        raise InvalidInputError("lattice triple must share the weights")
    if abs(1.0 / X3.s - 1.0 / X1.s - 1.0 / X2.s) > 1e-12:
        raise InvalidInputError("lattice exponents violate 1/s3 = 1/s1 + 1/s2")
    worst = 0.0
    if samples:
        rng = np.random.default_rng(seed)
        e1 = rng.standard_normal((samples, X1.M))
        e2 = rng.standard_normal((samples, X1.M))
        lhs = X3(e1 * e2)
        rhs = X1(e1) * X2(e2)
        worst = float(np.max(lhs / rhs))
    return {"compatible": worst <= 1 + 1e-12, "worst_ratio": worst, "samples": int(samples)}


def _check_axis_length(f, axis, n):
    if f.shape[axis] != n:
        raise ResolutionError(f"operator built for {n} cells applied to an axis of length {f.shape[axis]}")


def shift_apply(S: DyadicShift, f, axis: int = 0) -> np.ndarray:
    """Apply the shift along ``axis``."""
    f = np.asarray(f, dtype=float)
    _check_axis_length(f, axis, S.n)
    c = _along(_coef_rows(S.n), f, axis)
    c = _along(S.matrix(), c, axis)
    return _along(_h_rows(S.n).T, c, axis)


def pi_apply(pi: DyadicParaproduct, f, axis: int = 1) -> np.ndarray:
    """Apply the paraproduct along ``axis``."""
    f = np.asarray(f, dtype=float)
    _check_axis_length(f, axis, pi.n)
    m = _along(_avg_rows(pi.n), f, axis)
    shape = [1] * f.ndim
    shape[axis] = pi.n - 1
    return _along(_h_rows(pi.n).T, m * pi.coeffs.reshape(shape), axis)


def _op_apply(U, f, axis):
    if isinstance(U, DyadicShift):
        return shift_apply(U, f, axis)
    if isinstance(U, DyadicParaproduct):
        return pi_apply(U, f, axis)
    raise InvalidInputError(f"not a dyadic model operator: {type(U).__name__}")


# ---------------------------------------------------------------------------
# paraproducts of a product
# ---------------------------------------------------------------------------

_KIND = {1: ("c", "c", "sq"), 2: ("c", "avg", "h"), 3: ("avg", "c", "h")}
_ROWS = {"c": _coef_rows, "avg": _avg_rows, "h": _h_rows, "sq": _sq_rows}


def _broadcast(b, f):
    b = np.asarray(b, dtype=float)
    f = np.asarray(f, dtype=float)
    while b.ndim < f.ndim:
        b = b[..., None]
    while f.ndim < b.ndim:
        f = f[..., None]
    return b, f


def _one(b, f, j, axis):
    ub, vf, psi = _KIND[j]
    n = b.shape[axis]
    u = _along(_ROWS[ub](n), b, axis)
    v = _along(_ROWS[vf](n), f, axis)
    return _along(_ROWS[psi](n).T, u * v, axis)


def _two(b, f, j1, j2):
    u1, v1, p1 = _KIND[j1]
    u2, v2, p2 = _KIND[j2]
    n1, n2 = b.shape[:2]
    u = _along(_ROWS[u2](n2), _along(_ROWS[u1](n1), b, 0), 1)
    v = _along(_ROWS[v2](n2), _along(_ROWS[v1](n1), f, 0), 1)
    return _along(_ROWS[p2](n2).T, _along(_ROWS[p1](n1).T, u * v, 0), 1)


def paraproduct(b, f, kind) -> np.ndarray:
    """One- or bi-parameter paraproducts of ``(b, f)``.

    Parameters
    ----------
    b, f : ndarray
        Grid functions of equal grid shape; either may carry a trailing
        lattice axis, products are taken componentwise.
    kind : tuple
        ``("one_param", i, j)`` gives ``A^i_j`` acting on axis ``i - 1``
        (``i = 1`` for a 1-D grid); ``("bi_param", j1, j2)`` gives
        ``A_{j1, j2} = A^1_{j1} A^2_{j2}``.

    Notes
    -----
    ``A_1 = sum Delta_I b Delta_I f``, ``A_2 = sum Delta_I b E_I f`` and
    ``A_3 = sum E_I b Delta_I f``; in one parameter
    ``A_1 + A_2 + A_3 = b f - <b><f>`` with ``<.>`` the axis average.
    """
    b, f = _broadcast(b, f)
    if b.shape != f.shape:
        raise ResolutionError("paraproduct arguments live on different grids")
    name = kind[0]
    if name == "one_param":
        i, j = int(kind[1]), int(kind[2])
        if j not in _KIND or i not in (1, 2):
            raise InvalidInputError(f"bad paraproduct kind {kind}")
        return _one(b, f, j, i - 1)
    if name == "bi_param":
        j1, j2 = int(kind[1]), int(kind[2])
        if j1 not in _KIND or j2 not in _KIND:
            raise InvalidInputError(f"bad paraproduct kind {kind}")
        return _two(b, f, j1, j2)
    raise InvalidInputError(f"unknown paraproduct kind {name!r}")


def model_commutator(b, U1, U2, f) -> np.ndarray:
    """``[U1, [b, U2]] f = U1(b U2 f) - b U2 U1 f - U1 U2 (b f) + U2 (b U1 f)``.

    ``U1`` acts on axis 0 and ``U2`` on axis 1; both may be shifts or
    paraproducts.
    """
    b, f = _broadcast(b, f)
    A1 = lambda g: _op_apply(U1, g, 0)  # noqa: E731
    A2 = lambda g: _op_apply(U2, g, 1)  # noqa: E731
    return A1(b * A2(f)) - b * A2(A1(f)) - A1(A2(b * f)) + A2(b * A1(f))


@dataclass
class ExpansionTerm:
    name: str
    group: str
    value: np.ndarray


@dataclass
class Expansion:
    """Named terms of the shift-paraproduct commutator expansion.

    Groups are ``"block12"`` (both indices in ``{1, 2}``), ``"middle"``
    (exactly one index ``3`` or a one-parameter index in ``{1, 2}``) and
    ``"last"`` (all indices ``3``). ``last_formula`` evaluates the last
    group through the combined Haar-coefficient display and is not part of
    the sum.
    """

    terms: List[ExpansionTerm]
    last_formula: np.ndarray

    def groups(self) -> dict:
        out = {}
        for t in self.terms:
            out[t.group] = out.get(t.group, 0.0) + t.value
        return out

    def total(self) -> np.ndarray:
        return sum(t.value for t in self.terms)

    def summary(self) -> dict:
        return {t.name: float(np.sqrt(np.mean(np.square(t.value)))) for t in self.terms}


def expansion_terms(b, S1: DyadicShift, pi2: DyadicParaproduct, f) -> Expansion:
    """Every term of the long expansion of ``[S1, [b, pi2]] f``."""
    b, f = _broadcast(b, f)
    S = lambda g: shift_apply(S1, g, 0)  # noqa: E731
    P = lambda g: pi_apply(pi2, g, 1)  # noqa: E731
    Pf = P(f)
    PSf = P(S(f))
    Sf = S(f)
    terms = []
    for k in itertools.product((1, 2, 3), repeat=2):
        if k == (3, 3):
            continue
        group = "block12" if 3 not in k else "middle"
        terms.append(ExpansionTerm(f"S1 A_{k[0]}{k[1]}(b, pi2 f)", group, S(_two(b, Pf, *k))))
        terms.append(ExpansionTerm(f"-A_{k[0]}{k[1]}(b, pi2 S1 f)", group, -_two(b, PSf, *k)))
    for k1 in (1, 2):
        terms.append(ExpansionTerm(f"pi2 A^1_{k1}(b, S1 f)", "middle", P(_one(b, Sf, k1, 0))))
        terms.append(ExpansionTerm(f"-S1 pi2 A^1_{k1}(b, f)", "middle", -S(P(_one(b, f, k1, 0)))))
    terms.append(ExpansionTerm("S1 A_33(b, pi2 f)", "last", S(_two(b, Pf, 3, 3))))
    terms.append(ExpansionTerm("-S1 pi2 A^1_3(b, f)", "last", -S(P(_one(b, f, 3, 0)))))
    terms.append(ExpansionTerm("pi2 A^1_3(b, S1 f)", "last", P(_one(b, Sf, 3, 0))))
    terms.append(ExpansionTerm("-A_33(b, pi2 S1 f)", "last", -_two(b, PSf, 3, 3)))
    return Expansion(terms, last_group_formula(b, S1, pi2, f))


def _containment(n):
    """``C[K, I] = 1`` when cancellative ``I ⊆ K`` (heap rows minus one)."""
    C = np.zeros((n - 1, n - 1))
    for I in range(1, n):
        K = I
        while K >= 1:
            C[K - 1, I - 1] = 1.0
            K >>= 1
    return C


def last_group_formula(b, S1: DyadicShift, pi2: DyadicParaproduct, f) -> np.ndarray:
    """All-index-3 group via the combined coefficient formula.

    ``sum_{K2} a_{K2}/|K2| sum_{K1, I1, J1} sum_{I2 ⊆ K2} a_{K1,I1,J1}
    [<<b, h_{I2}>_2>_{J1} - <<b, h_{I2}>_2>_{I1}] <f, h_{I1} ⊗ h_{I2}> h_{J1} ⊗ h_{K2}``.
    """
    b, f = _broadcast(b, f)
    n1, n2 = b.shape[:2]
    beta = _along(_avg_rows(n1), _along(_coef_rows(n2), b, 1), 0)
    F = _along(_coef_rows(n2), _along(_coef_rows(n1), f, 0), 1)
    Sm = S1.matrix()
    inner = beta * _along(Sm, F, 0) - _along(Sm, beta * F, 0)
    G = _along(_containment(n2), inner, 1)
    shape = [1] * G.ndim
    shape[1] = n2 - 1
    meas = np.array([_measure(_cube_of_row(r)[0]) for r in range(1, n2)])
    G = G * (pi2.coeffs / meas).reshape(shape)
    return _along(_h_rows(n2).T, _along(_h_rows(n1).T, G, 0), 1)


# ---------------------------------------------------------------------------
# duality and lattice bounds
# ---------------------------------------------------------------------------


def _lattice_pointwise(F, lattice: Optional[LatticeNorm]):
    F = np.asarray(F, dtype=float)
    if lattice is None:
        if F.ndim > 2:
            raise InvalidInputError("lattice-valued data needs a lattice norm")
        return np.abs(F)
    return lattice(F, axis=-1)


def _square_sd(f):
    """``S_D f`` over cancellative rectangles, componentwise on a lattice axis."""
    c = haar_transform(f)
    n1, n2 = f.shape[:2]
    sq1, sq2 = _sq_rows(n1), _sq_rows(n2)
    cc = np.square(c[1:, 1:])
    dens = _along(sq2.T, _along(sq1.T, cc, 0), 1)
    return np.sqrt(np.maximum(dens, 0.0))


def h1_bmo_pairing(b, f, lattice: Optional[LatticeNorm] = None, family: str = "rectangles") -> NormReport:
    """``|<b, f>| / (||b||_{BMO_prod} ||S_D f||_{L^1})`` over cancellative rectangles.

    For lattice-valued input ``b`` is measured in ``lattice`` and ``f`` in
    its Köthe dual; the pairing is ``sum_R sum_m w_m <b_m, h_R><f_m, h_R>``.
    ``0/0`` is reported as ``0``.
    """
    b = np.asarray(b, dtype=float)
    f = np.asarray(f, dtype=float)
    if b.shape != f.shape:
        raise ResolutionError("b and f live on different grids")
    cb = haar_transform(b)[1:, 1:]
    cf = haar_transform(f)[1:, 1:]
    if lattice is None:
        num = float(np.sum(cb * cf))
        sf = float(np.mean(np.abs(_square_sd(f))))
    else:
        num = float(np.sum(cb * cf * lattice.w))
        sf = float(np.mean(lattice.dual()(_square_sd(f))))
    bmo = float(product_bmo_norm(b, family=family, lattice=lattice).value)
    den = bmo * sf
    ratio = 0.0 if abs(num) == 0 else (np.inf if den == 0 else abs(num) / den)
    return NormReport(ratio, family, "h1_bmo", metadata={"pairing": num, "bmo": bmo, "S_D_L1": sf},
                      lower_bound=False)


def paraproduct_bound_check(b, f, j1: int, j2: int, exponents=(2.0, 2.0), lattice_triple=None,
                            family: str = "rectangles") -> NormReport:
    """``||A_{j1 j2}(b, f)||_{p1,p2,X3} / (||b||_{BMO_prod(X1)} ||f||_{p1,p2,X2})``.

    ``lattice_triple`` is ``(X1, X2, X3)`` for lattice-valued ``b`` and
    ``f``; ``None`` means scalars. ``b = 0`` gives ratio ``0``.
    """
    if j1 not in (1, 2) or j2 not in (1, 2):
        raise InvalidInputError("the paraproduct estimate concerns j1, j2 in {1, 2}")
    p1, p2 = exponents
    X1 = X2 = X3 = None
    meta = {}
    if lattice_triple is not None:
        X1, X2, X3 = lattice_triple
        meta["triple"] = compatible_triple(X1, X2, X3, samples=200)
        if not meta["triple"]["compatible"]:
            raise ContractError("lattice triple fails the pointwise Hölder inequality")
    A = paraproduct(b, f, ("bi_param", j1, j2))
    num = mixed_norm(_lattice_pointwise(A, X3), p1, p2)
    bmo = float(product_bmo_norm(b, family=family, lattice=X1).value)
    fn = mixed_norm(_lattice_pointwise(f, X2), p1, p2)
    den = bmo * fn
    ratio = 0.0 if num == 0 else (np.inf if den == 0 else num / den)
    meta.update(numerator=num, bmo=bmo, f_norm=fn, j=(j1, j2), exponents=(p1, p2))
    return NormReport(ratio, family, "paraproduct_bound", metadata=meta)


def khintchine_ratio(xs, lattice: LatticeNorm) -> dict:
    """Exhaustive Rademacher average against the square-sum lattice norm.

    ``xs`` has shape ``(n, M)`` with ``n <= 12``; returns
    ``E|sum eps_k x_k|_X / |(sum |x_k|^2)^{1/2}|_X``.
    """
    xs = np.asarray(xs, dtype=float)
    nterms = xs.shape[0]
    if nterms > 12:
        raise ConfigurationError("exhaustive sign enumeration is limited to 12 terms")
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=nterms)))
    avg = float(np.mean(lattice(signs @ xs)))
    sq = float(lattice(np.sqrt(np.sum(np.square(xs), axis=0))))
    ratio = 0.0 if avg == 0 else avg / sq
    return {"average": avg, "square": sq, "ratio": ratio, "patterns": int(signs.shape[0])}


def fefferman_stein_ratio(fs, s: float, exponents=(2.0, 2.0), variant: str = "M_D") -> dict:
    """``||(sum_j (M f_j)^s)^{1/s}||_{p1,p2} / ||(sum_j |f_j|^s)^{1/s}||_{p1,p2}``.

    ``fs`` has shape ``(n1, n2, J)``; ``variant`` is a maximal function of
    :func:`bicomm.dyadic.maximal` (``"M_D"``, ``"M1"`` or ``"M2"``).
    """
    fs = np.asarray(fs, dtype=float)
    p1, p2 = exponents
    Mf = np.stack([maximal(fs[..., k], variant) for k in range(fs.shape[-1])], axis=-1)
    X = LatticeNorm(s, fs.shape[-1])
    num = mixed_norm(X(Mf), p1, p2)
    den = mixed_norm(X(fs), p1, p2)
    return {"numerator": num, "denominator": den, "ratio": num / den if den else 0.0}


def square_function_ratio(f, exponents=(2.0, 2.0)) -> dict:
    """``||S_D f||_{p1,p2} / ||f - corrections||_{p1,p2}``.

    The corrections remove the per-axis averages so that only the
    bi-cancellative part of ``f`` is compared with its square function.
    """
    f = np.asarray(f, dtype=float)
    p1, p2 = exponents
    g = f - f.mean(axis=0, keepdims=True) - f.mean(axis=1, keepdims=True) + f.mean()
    num = mixed_norm(_square_sd(f), p1, p2)
    den = mixed_norm(g, p1, p2)
    return {"numerator": num, "denominator": den, "ratio": num / den if den else 0.0}
