import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bicomm.grid import midpoints, symbol_library

settings.register_profile("bicomm", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("bicomm")

LIBRARY_SIZE = 30

# criterion number -> list of (test id, passed)
_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(n): test belongs to acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _ACCEPTANCE.setdefault(mark.args[0], []).append((item.name, rep.passed))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        runs = _ACCEPTANCE[n]
        ok = all(p for _, p in runs)
        failed = [name for name, p in runs if not p]
        tail = "" if ok else "  (failing: " + ", ".join(failed) + ")"
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  [{len(runs)} tests]{tail}")


def fitted_constant(ratios):
    """Smallest ``C`` with every ratio in ``[1/C, C]``."""
    r = np.asarray(ratios, dtype=float)
    return float(max(r.max(), 1.0 / r.min()))


def holder_family(n, dim=1):
    return [symbol_library("haar_synthesis", n, dim=dim, seed=s, target_space="holder")
            for s in range(LIBRARY_SIZE)]


def mixed_family(name, n, **kw):
    return [symbol_library("haar_synthesis", n, seed=s, target_space=name, **kw) for s in range(LIBRARY_SIZE)]


def lr_targets(n):
    kinds = ("holder", "bmo", "lr")
    return [symbol_library("haar_synthesis", n, dim=1, seed=s, target_space=kinds[s % 3])
            for s in range(LIBRARY_SIZE)]


def continuum_boxes(n, seed, count=3):
    """Sum of random signed box indicators, the same continuum function at every ``n``."""
    rng = np.random.default_rng(seed)
    x = midpoints(n)
    f = np.zeros((n, n))
    for _ in range(count):
        c = rng.uniform(0, 1, 2)
        w = rng.uniform(0.05, 0.4, 2)
        a = rng.standard_normal()
        f += a * np.outer(((x - c[0]) % 1.0) < w[0], ((x - c[1]) % 1.0) < w[1])
    return f


def print_criterion(n, ok, detail):
    print(f"[acceptance {n}] {'PASS' if ok else 'FAIL'}: {detail}")
