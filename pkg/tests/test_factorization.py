import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bicomm import factorization as F
from bicomm.cli import _sweep_problem
from bicomm.czo import KernelSpec, hilbert
from bicomm.dyadic import DyadicCube, DyadicRectangle, HaarIndex, haar
from bicomm.errors import DegenerateKernelError, GeometryError, ParameterError
from bicomm.grid import ExponentProfile, Interval, Rectangle, symbol_library

H = hilbert()
EX = ExponentProfile(2, 2, 4, 4)


def haar_problem(N):
    """Bi-parameter Haar function on a rectangle of side ``1/32``."""
    R = Rectangle(Interval(N // 4, N // 32, N), Interval(N // 2, N // 32, N))
    h = haar(HaarIndex(DyadicRectangle(DyadicCube(5, 8, 1), DyadicCube(5, 16, 2))), (N, N))
    return h, R


def test_zero_input():
    f, R = _sweep_problem(64, (4,))
    res = F.weak_factorize(np.zeros_like(f), R, H, H, 4)
    assert np.all(res.h == 0) and all(np.all(e == 0) for e in res.errors)
    assert np.all(res.main == 0)


def test_haar_factorization_n256():
    f, R = _sweep_problem(256, (8,))
    res = F.weak_factorize(f, R, H, H, 8)
    assert np.abs(res.reconstruct() - f).max() <= 1e-10 * np.abs(f).max()
    A = 8
    # ||f~_j||_1 / ||f||_1 <= C A^{-1}
    C = max(res.diagnostics["l1_ratio"]) * A
    assert C <= 20
    assert max(res.zero_means().values()) <= 1e-10


@given(st.integers(0, 2 ** 31 - 1), st.sampled_from([4, 8]))
def test_reconstruction_and_zero_means_random(seed, A):
    rng = np.random.default_rng(seed)
    n = 128
    w1, w2 = (int(2 ** k) for k in rng.integers(1, 3, 2))
    R = Rectangle(Interval(int(rng.integers(0, n)), w1, n), Interval(int(rng.integers(0, n)), w2, n))
    blk = rng.standard_normal((w1, w2))
    blk -= blk.mean(axis=0)
    blk -= blk.mean(axis=1)[:, None]
    f = np.zeros((n, n))
    f[np.ix_(R.I1.cells(), R.I2.cells())] = blk
    res = F.weak_factorize(f, R, H, H, A)
    assert np.abs(res.reconstruct() - f).max() <= 1e-10 * np.abs(f).max()
    assert max(res.zero_means().values()) <= 1e-10 * np.abs(f).max()
    d = res.diagnostics
    assert d["dual_min"][0] > 0 and d["dual_min"][1] > 0


def test_reconstruction_independent_of_kernel():
    f, R = _sweep_problem(64, (4,))
    xs = np.linspace(-0.5, 0.5, 2001)
    xs = xs[xs != 0]
    K = KernelSpec("custom", table=(xs, 1 / xs + 3 * xs))
    res = F.weak_factorize(f, R, K, H, 4)
    assert np.abs(res.reconstruct() - f).max() <= 1e-10 * np.abs(f).max()


def test_error_decay_slope():
    f, R = _sweep_problem(256, (4, 8, 16, 32))
    sweep = F.a_sweep(f, R, H, H, (4, 8, 16, 32))
    assert sweep["slope"] <= -0.8
    assert all(r["residual"] <= 1e-10 for r in sweep["rows"])


def test_factorization_errors():
    f, R = _sweep_problem(64, (4,))
    with pytest.raises(DegenerateKernelError):
        F.weak_factorize(f, R, KernelSpec("zero"), H, 4)
    R2 = Rectangle(Interval(0, 16, 64), Interval(0, 16, 64))
    s = np.r_[np.ones(8), -np.ones(8)]
    f2 = np.zeros((64, 64))
    f2[:16, :16] = np.outer(s, s)
    with pytest.raises(GeometryError):
        F.weak_factorize(f2, R2, H, H, 8)
    with pytest.raises(ParameterError):
        F.weak_factorize((R2.indicator() > 0).astype(float), R2, H, H, 3)


def test_absorption_one_variable():
    b = symbol_library("depends_on_x1_only", 128)
    _, R = haar_problem(128)
    rep = F.absorption_bound(b, R, H, H, A=8)
    assert rep["ratio"] == 0 and rep["osc"] <= 1e-10


def test_absorption_haar_stable():
    ratios = []
    for N in (128, 256):
        h, R = haar_problem(N)
        rep = F.absorption_bound(h, R, H, H, A=8)
        assert rep["absorbed"]
        ratios.append(rep["ratio"])
    assert max(ratios) <= 50
    assert max(ratios) / min(ratios) <= 1.3


def test_absorption_slack_decreases_in_A():
    N = 256
    b = symbol_library("tensor_holder", N, alpha=0.5, beta=0.5)
    R = Rectangle(Interval(64, 4, N), Interval(128, 4, N))
    slack = [F.absorption_bound(b, R, H, H, A=A)["slack"] for A in (4, 8, 16)]
    assert 1 < slack[0] and slack[2] < slack[1] < slack[0]


def test_osc_lower_bound_constant_symbol():
    rep = F.osc_lower_bound_check(np.full((64, 64), 2.0), Rectangle(Interval(0, 8, 64), Interval(0, 8, 64)),
                                  H, H, EX, off=1.0)
    assert rep["ratio"] == 0


def test_osc_lower_bound_scale_covariance():
    # |x - 1/2|^{1/4} has oscillation exactly matching l^{1/p - 1/q} near the kink
    N = 256
    b = symbol_library("tensor_holder", N, alpha=0.25, beta=0.25)
    r = [F.osc_lower_bound_check(b, Rectangle(Interval(N // 2, N // ell, N), Interval(N // 2, N // ell, N)),
                                 H, H, EX, off=1.0)["ratio"] for ell in (8, 16, 32)]
    assert max(r) / min(r) <= 1.2


def test_osc_lower_bound_chain_stable():
    fitted = []
    for N in (64, 128):
        b = symbol_library("tensor_holder", N, alpha=0.5, beta=0.5)
        off = F.off_constant(b, H, H, EX, samples=200, iters=20, restarts=2).value
        rng = np.random.default_rng(0)
        rs = []
        for _ in range(20):
            w1, w2 = (int(N // 2 ** k) for k in rng.integers(2, 5, 2))
            R = Rectangle(Interval(int(rng.integers(0, N)), w1, N), Interval(int(rng.integers(0, N)), w2, N))
            rs.append(F.osc_lower_bound_check(b, R, H, H, EX, off=off)["ratio"])
        fitted.append(max(rs))
    assert max(fitted) <= 10
    assert max(fitted) / min(fitted) <= 1.3


def test_off_constant_vanishes():
    for b in (np.full((32, 32), 5.0), symbol_library("depends_on_x1_only", 32)):
        for v in F.OFF_VARIANTS:
            assert F.off_constant(b, H, H, EX, v, samples=20, iters=10, restarts=1).value <= 1e-10, v


def test_off_constant_monotone_and_ordering():
    b = symbol_library("tensor_holder", 64, alpha=0.5, beta=0.5)
    off = F.off_constant(b, H, H, EX, samples=40, iters=20, restarts=2)
    tilde = F.off_constant(b, H, H, EX, "Off_tilde", samples=40, iters=20, restarts=2)
    assert off.metadata["monotone"] and off.lower_bound
    assert off.value <= tilde.value * (1 + 1e-12)


def test_off_constant_budget_monotone():
    b = symbol_library("haar_synthesis", 64, seed=3, target_space="holder_holder", alpha=0.5, beta=0.5)
    geos = F.sample_geometries(b.shape, 60, seed=0)
    assert geos[:30] == F.sample_geometries(b.shape, 30, seed=0)
    vals = [F.off_constant(b, H, H, EX, geometries=geos[:k], iters=20, restarts=2).value for k in (15, 30, 60)]
    assert vals[0] <= vals[1] <= vals[2]
    more = F.off_constant(b, H, H, EX, geometries=geos[:30], iters=40, restarts=2).value
    assert more >= vals[1] * (1 - 1e-12)


def test_off_report_json():
    b = symbol_library("tensor_holder", 32, alpha=0.5, beta=0.5)
    rep = F.off_constant(b, H, H, EX, samples=5, iters=5, restarts=1)
    d = json.loads(rep.to_json())
    assert d["space"] == "Off" and d["metadata"]["lower_bound"] is True


def test_pointwise_h_bound_in_a_to_the_dimension():
    # T_i^* 1_{I_i~} >~ A^{-1} on each axis, so |h| <= C A^2 |f| on the bi-parameter grid
    f, R = _sweep_problem(256, (4, 8, 16, 32))
    rows = F.a_sweep(f, R, H, H, (4, 8, 16, 32))["rows"]
    assert max(r["C_h_Ad"] for r in rows) <= 10
    assert min(r["C_h_Ad"] for r in rows) >= 0.5
