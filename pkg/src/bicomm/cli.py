"""
Command-line front end.

``bicomm <command> --config FILE [--seed K] [--out DIR] [-N 128] [-A 8]``

Every command writes ``<command>.json`` into ``--out`` (default: the
current directory); ``factorize`` and ``table`` add CSV tables and
``factorize`` a two-column plotdata file. Each document has a ``content``
block (config, config hash, seed, results) and a separate ``metadata``
block holding timestamps and the invocation, so hashing ``content`` is
stable across runs.

Exit codes: 0 ok, 1 validation, 2 runtime, 3 check failure.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__
from .errors import BicommError, ConfigurationError

log = logging.getLogger(__name__)

COMMANDS = ("norms", "factorize", "lowerbound", "table", "check", "paraproducts")

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_CHECK = 0, 1, 2, 3


class ConfigParseError(ConfigurationError):
    """Malformed configuration file; ``line`` and ``column`` locate the error."""

    def __init__(self, msg, line=None, column=None):
        super().__init__(msg)
        self.line = line
        self.column = column


class ValidationError(ConfigurationError):
    """Configuration value violates an invariant; ``field`` names it."""

    def __init__(self, field_name, msg):
        super().__init__(f"{field_name}: {msg}")
        self.field = field_name


@dataclass
class ExperimentConfig:
    command: str = "check"
    symbol: dict = field(default_factory=lambda: {"name": "tensor_holder"})
    kernels: dict = field(default_factory=lambda: {"k1": "hilbert", "k2": "hilbert"})
    profiles: list = field(default_factory=list)
    resolution: int = 128
    resolutions: list = field(default_factory=list)
    A: float = 8.0
    As: list = field(default_factory=lambda: [4.0, 8.0, 16.0, 32.0])
    seed: int = 1
    budget: dict = field(default_factory=lambda: {"starts": 4, "iters": 60, "samples": 50})
    out: str = "."

    def to_dict(self):
        return asdict(self)

    def content_dict(self):
        d = self.to_dict()
        d.pop("out")
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.content_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def schedule(self) -> list:
        """``(profile, N)`` pairs a ``table`` run evaluates."""
        from .commutator import regime_profiles

        profs = self.profiles or [[p.p1, p.p2, p.q1, p.q2] for p in regime_profiles()]
        return [(tuple(pr), N) for N in self.resolutions for pr in profs]


_DEFAULT_BUDGET = {"starts": 4, "iters": 60, "samples": 50}


def _is_pow2(n):
    return isinstance(n, int) and not isinstance(n, bool) and n >= 2 and n & (n - 1) == 0


def _positive(name, v, integer=False):
    ok = isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0
    if integer:
        ok = ok and float(v).is_integer()
    if not ok:
        raise ValidationError(name, f"must be a positive {'integer' if integer else 'number'}, got {v!r}")


def _validate_profile(pr):
    from .grid import ExponentProfile

    if not isinstance(pr, (list, tuple)) or len(pr) != 4:
        raise ValidationError("profiles", f"each profile is [p1, p2, q1, q2], got {pr!r}")
    try:
        ExponentProfile(*[float(x) for x in pr])
    except (BicommError, TypeError, ValueError) as exc:
        raise ValidationError("profiles", str(exc)) from None
    return [float(x) for x in pr]


def parse_config(path=None, overrides: Optional[dict] = None, command: Optional[str] = None) -> ExperimentConfig:
    """Read a TOML configuration, apply flag overrides and validate.

    Recognized keys: ``N`` (or ``resolution``), ``resolutions``, ``A``,
    ``As``, ``seed``, ``profiles`` (list of ``[p1, p2, q1, q2]``), the
    tables ``[symbol]`` (``name`` plus parameters), ``[kernels]``
    (``k1``, ``k2``) and ``[budget]`` (``starts``, ``iters``,
    ``samples``), and ``out``.
    """
    raw = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ValidationError("config", f"file {path} does not exist")
        try:
            raw = tomllib.loads(p.read_text())
        except tomllib.TOMLDecodeError as exc:
            line = getattr(exc, "lineno", None)
            col = getattr(exc, "colno", None)
            raise ConfigParseError(f"malformed config {path}: {exc}", line, col) from None
    raw = dict(raw)
    for k, v in (overrides or {}).items():
        if v is not None:
            raw[k] = v
    known = {"N", "resolution", "resolutions", "A", "As", "seed", "profiles", "symbol", "kernels",
             "budget", "out", "command"}
    extra = sorted(set(raw) - known)
    if extra:
        raise ValidationError(extra[0], "unknown configuration key")
    cfg = ExperimentConfig()
    cfg.command = command or raw.get("command", cfg.command)
    if cfg.command not in COMMANDS:
        raise ValidationError("command", f"must be one of {COMMANDS}")
    N = raw.get("N", raw.get("resolution", cfg.resolution))
    if not _is_pow2(N):
        raise ValidationError("resolution", f"must be a power of two, got {N!r}")
    cfg.resolution = int(N)
    res = raw.get("resolutions", [cfg.resolution])
    if not isinstance(res, list) or not res:
        raise ValidationError("resolutions", "must be a non-empty list")
    for n in res:
        if not _is_pow2(n):
            raise ValidationError("resolution", f"must be a power of two, got {n!r}")
    cfg.resolutions = [int(n) for n in res]
    A = raw.get("A", cfg.A)
    _positive("A", A)
    if A < 3:
        raise ValidationError("A", "reflection parameter must be at least 3")
    cfg.A = float(A)
    # by default sweep every A whose two-cell reflection fits the coarsest grid
    fit = [a for a in cfg.As if 2 * (a + 1) <= min(cfg.resolutions) // 2]
    As = raw.get("As", fit)
    if "As" not in raw and not fit and cfg.command != "factorize":
        As = []     # only the sweep uses As
    elif not isinstance(As, list) or not As:
        raise ValidationError("As", "must be a non-empty list")
    for a in As:
        _positive("As", a)
        if a < 3:
            raise ValidationError("As", "reflection parameters must be at least 3")
    cfg.As = [float(a) for a in As]
    seed = raw.get("seed", cfg.seed)
    _positive("seed", seed, integer=True)
    cfg.seed = int(seed)
    cfg.profiles = [_validate_profile(p) for p in raw.get("profiles", [])]
    sym = raw.get("symbol", cfg.symbol)
    if not isinstance(sym, dict) or "name" not in sym:
        raise ValidationError("symbol", "needs a name")
    from .grid import SYMBOL_NAMES

    if sym["name"] not in SYMBOL_NAMES:
        raise ValidationError("symbol", f"unknown symbol {sym['name']!r}")
    cfg.symbol = dict(sym)
    ker = dict(cfg.kernels)
    ker.update(raw.get("kernels", {}))
    for k in ("k1", "k2"):
        if ker.get(k) not in ("hilbert",):
            raise ValidationError("kernels", f"{k} must be 'hilbert' for command-line runs")
    cfg.kernels = {"k1": ker["k1"], "k2": ker["k2"]}
    bud = dict(_DEFAULT_BUDGET)
    bud.update(raw.get("budget", {}))
    for k, v in bud.items():
        if k not in _DEFAULT_BUDGET:
            raise ValidationError("budget", f"unknown budget {k!r}")
        _positive("budget", v, integer=True)
    cfg.budget = {k: int(v) for k, v in bud.items()}
    cfg.out = str(raw.get("out", cfg.out))
    return cfg


# ---------------------------------------------------------------------------
# runs
# ---------------------------------------------------------------------------


def _threads():
    v = os.environ.get("BICOMM_THREADS")
    if v is None:
        return 1
    try:
        n = int(v)
    except ValueError:
        raise ValidationError("BICOMM_THREADS", f"must be an integer, got {v!r}") from None
    if n < 1:
        raise ValidationError("BICOMM_THREADS", "must be positive")
    return n


def _symbol(cfg: ExperimentConfig, N: int):
    from .grid import symbol_library

    params = {k: v for k, v in cfg.symbol.items() if k != "name"}
    return symbol_library(cfg.symbol["name"], N, **params)


def _kernels(cfg):
    from .czo import hilbert

    return hilbert(), hilbert()


def _jsonable(obj):
    from .spaces import _jsonable as base

    obj = base(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    if hasattr(obj, "__dataclass_fields__"):
        return _jsonable(asdict(obj))
    return obj


def run_norms(cfg: ExperimentConfig) -> dict:
    from . import spaces

    out = {}
    for N in cfg.resolutions:
        b = _symbol(cfg, N)
        reps = {
            "biparam_holder_direct": spaces.biparam_holder_norm(b, 0.5, 0.5, "direct"),
            "biparam_holder_oscillatory": spaces.biparam_holder_norm(b, 0.5, 0.5, "oscillatory"),
            "holder_bmo_x1_direct": spaces.holder_bmo_norm(b, 0.5, 1, "direct"),
            "holder_bmo_x1_oscillatory": spaces.holder_bmo_norm(b, 0.5, 1, "oscillatory"),
            "holder_bmo_x2_direct": spaces.holder_bmo_norm(b, 0.5, 2, "direct"),
            "holder_lr_direct": spaces.holder_lr_norm(b, 0.5, 2.0, "direct"),
            "holder_lr_sparse": spaces.holder_lr_norm(b, 0.5, 2.0, "oscillatory_sparse"),
            "bmo_lr_direct": spaces.bmo_lr(b, 2.0, "direct_norm"),
            "bmo_lr_functional": spaces.bmo_lr(b, 2.0, "oscillatory_functional"),
            "rect_bmo_22": spaces.rect_bmo_norm(b, 2, 2),
            "product_bmo_rectangles": spaces.product_bmo_norm(b, "rectangles"),
            "product_bmo_unions": spaces.product_bmo_norm(b, "greedy_unions"),
            "lrlr_direct": spaces.lrlr(b, 2.0, 2.0, "direct_norm"),
            "lrlr_functional": spaces.lrlr(b, 2.0, 2.0, "product_sparse_functional"),
        }
        out[str(N)] = {k: r.to_dict() for k, r in reps.items()}
    return {"norms": out}


def _sweep_problem(N, As):
    """Haar function on the smallest centred rectangle fitting every ``A``."""
    from .grid import Interval, Rectangle

    Amax = max(As)
    w = 2
    if w * (Amax + 1) > N // 2:
        raise ValidationError("As", f"the largest A does not fit a grid of {N} cells")
    while 2 * w * (Amax + 1) <= N // 2 and 2 * w <= N // 16:
        w *= 2
    lo = N // 4
    I = Interval(lo, w, N)
    R = Rectangle(I, I)
    s = np.where(np.arange(w) < w // 2, 1.0, -1.0)
    f = np.zeros((N, N))
    f[lo:lo + w, lo:lo + w] = np.outer(s, s)
    return f, R


def run_factorize(cfg: ExperimentConfig) -> dict:
    from .factorization import a_sweep

    K1, K2 = _kernels(cfg)
    out = {}
    for N in cfg.resolutions:
        f, R = _sweep_problem(N, cfg.As)
        sw = a_sweep(f, R, K1, K2, cfg.As)
        out[str(N)] = {"rect": R.to_dict(), **sw}
    return {"sweeps": out}


def run_lowerbound(cfg: ExperimentConfig) -> dict:
    from .factorization import absorption_bound, off_constant, osc_lower_bound_check
    from .grid import ExponentProfile, Interval, Rectangle

    K1, K2 = _kernels(cfg)
    ex = ExponentProfile(2.0, 2.0, 4.0, 4.0)
    samples = cfg.budget["samples"]
    out = {}
    for N in cfg.resolutions:
        b = _symbol(cfg, N)
        off = {v: off_constant(b, K1, K2, ex, v, samples=samples, seed=cfg.seed).to_dict()
               for v in ("Off", "Off_tilde", "Off_sigma")}
        rng = np.random.default_rng(cfg.seed)
        checks = []
        for _ in range(4):
            w = int(2 ** rng.integers(1, max(2, int(np.log2(N)) - 3)))
            lo1, lo2 = (int(rng.integers(0, N // w)) * w for _ in range(2))
            R = Rectangle(Interval(lo1, w, N), Interval(lo2, w, N))
            checks.append(osc_lower_bound_check(b, R, K1, K2, ex, off=off["Off"]["value"]))
        w = max(2, N // 32)
        R = Rectangle(Interval(N // 4, w, N), Interval(N // 4, w, N))
        try:
            absorb = absorption_bound(b, R, K1, K2, 1.0, 1.0, cfg.A)
        except BicommError as exc:
            absorb = {"error": type(exc).__name__, "message": str(exc)}
        out[str(N)] = {"off": off, "osc_checks": checks, "absorption": absorb}
    return {"lowerbound": out}


def run_table(cfg: ExperimentConfig) -> dict:
    from .commutator import regime_table
    from .grid import ExponentProfile

    K1, K2 = _kernels(cfg)
    profiles = [ExponentProfile(*p) for p in cfg.profiles] or None
    rows = []
    for N in cfg.resolutions:
        b = _symbol(cfg, N)
        rows += regime_table(b, K1, K2, profiles, starts=cfg.budget["starts"], iters=cfg.budget["iters"],
                             seed=cfg.seed)
    return {"rows": [r.to_dict() for r in rows], "_rows": rows}


def run_paraproducts(cfg: ExperimentConfig) -> dict:
    from .paraproducts import (DyadicParaproduct, DyadicShift, expansion_terms, model_commutator,
                               paraproduct)

    N = min(cfg.resolution, 64)
    rng = np.random.default_rng(cfg.seed)
    b = rng.standard_normal((N, N))
    f = rng.standard_normal((N, N))
    res = {}
    for cx in ((0, 0), (1, 0), (0, 2), (1, 1)):
        S = DyadicShift.random(N, cx, seed=int(rng.integers(2 ** 31)))
        P = DyadicParaproduct.random(N, seed=int(rng.integers(2 ** 31)))
        m = model_commutator(b, S, P, f)
        e = expansion_terms(b, S, P, f)
        scale = max(np.abs(m).max(), 1e-300)
        res[f"{cx[0]}{cx[1]}"] = {
            "expansion_residual": float(np.abs(m - e.total()).max() / scale),
            "last_formula_residual": float(np.abs(e.groups()["last"] - e.last_formula).max() / scale),
            "terms": len(e.terms),
            "group_rms": {k: float(np.sqrt(np.mean(v ** 2))) for k, v in e.groups().items()},
        }
    s = sum(paraproduct(b, f, ("bi_param", j1, j2)) for j1 in (1, 2, 3) for j2 in (1, 2, 3))
    E1 = lambda g: g.mean(axis=0, keepdims=True)  # noqa: E731
    E2 = lambda g: g.mean(axis=1, keepdims=True)  # noqa: E731
    corr = b * f - E2(b) * E2(f) - E1(b) * E1(f) + E1(E2(b)) * E1(E2(f))
    return {"N": N, "shifts": res, "bi_param_identity_residual": float(np.abs(s - corr).max())}


def run_check(cfg: ExperimentConfig) -> dict:
    from .checks import invariant_suite

    results = invariant_suite(seed=cfg.seed)
    return {"suites": results, "passed": all(r["passed"] for r in results)}


RUNNERS = {"norms": run_norms, "factorize": run_factorize, "lowerbound": run_lowerbound,
           "table": run_table, "check": run_check, "paraproducts": run_paraproducts}


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def _meta(argv):
    return {"timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(), "version": __version__,
            "argv": list(argv or []), "threads": _threads()}


def emit_report(results: dict, cfg: ExperimentConfig, fmt: str = "json", argv=None) -> list:
    """Write ``results`` in one format and return the written paths.

    ``json`` writes the full document; ``csv`` writes flat tables
    (regime rows or A-sweep rows); ``plotdata`` writes two-column
    whitespace-separated files.
    """
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    name = cfg.command
    written = []
    if fmt == "json":
        body = {k: v for k, v in results.items() if not k.startswith("_")}
        content = {"command": name, "config": cfg.content_dict(), "config_hash": cfg.config_hash(),
                   "seed": cfg.seed, "results": _jsonable(body)}
        doc = {"content": content, "metadata": _meta(argv)}
        p = out / f"{name}.json"
        p.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
        written.append(p)
    elif fmt == "csv":
        p = out / f"{name}.csv"
        with p.open("w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["# config_hash", cfg.config_hash(), "seed", cfg.seed])
            if name == "table":
                wr.writerow(["regime", "space", "op_norm", "space_norm", "ratio", "N"])
                for r in results.get("_rows", []):
                    wr.writerow(r.csv_row())
            elif name == "factorize":
                wr.writerow(["N", "A", "error_ratio", "C_h_A", "C_h_Ad", "residual"])
                for N, sw in results.get("sweeps", {}).items():
                    for r in sw["rows"]:
                        wr.writerow([N, repr(r["A"]), repr(r["error_ratio"]), repr(r["C_h_A"]),
                                     repr(r["C_h_Ad"]), repr(r["residual"])])
        written.append(p)
    elif fmt == "plotdata":
        if name == "factorize":
            for N, sw in results.get("sweeps", {}).items():
                p = out / f"{name}_N{N}.dat"
                lines = [f"# A error_ratio config_hash={cfg.config_hash()} seed={cfg.seed}"]
                lines += [f"{r['A']!r} {r['error_ratio']!r}" for r in sw["rows"]]
                p.write_text("\n".join(lines) + "\n")
                written.append(p)
    else:
        raise ConfigurationError(f"unknown report format {fmt!r}")
    return written


_FORMATS = {"factorize": ("json", "csv", "plotdata"), "table": ("json", "csv")}


def build_parser():
    ap = argparse.ArgumentParser(prog="bicomm", description=__doc__.split("\n\n")[0].strip())
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", default=None, help="TOML configuration file")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--out", default=None, help="output directory")
    ap.add_argument("-N", type=int, default=None, help="resolution (default 128)")
    ap.add_argument("-A", type=float, default=None, help="reflection parameter (default 8)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _fail(code, exc, out=None):
    err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    for attr in ("field", "line", "column"):
        if getattr(exc, attr, None) is not None:
            err[attr] = getattr(exc, attr)
    print(json.dumps(err, sort_keys=True), file=sys.stderr)
    if out is not None:
        try:
            Path(out).mkdir(parents=True, exist_ok=True)
            (Path(out) / "error.json").write_text(json.dumps(err, sort_keys=True) + "\n")
        except OSError:
            pass
    return code


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    overrides = {"seed": args.seed, "out": args.out}
    if args.N is not None:
        overrides["N"] = args.N
        overrides["resolutions"] = [args.N]
    if args.A is not None:
        overrides["A"] = args.A
    try:
        cfg = parse_config(args.config, overrides, command=args.command)
        _threads()
    except BicommError as exc:
        return _fail(EXIT_VALIDATION, exc, args.out)
    try:
        results = RUNNERS[cfg.command](cfg)
        for fmt in _FORMATS.get(cfg.command, ("json",)):
            emit_report(results, cfg, fmt, argv)
    except ConfigurationError as exc:
        return _fail(EXIT_VALIDATION, exc, cfg.out)
    except (BicommError, ArithmeticError, ValueError, OSError) as exc:
        return _fail(EXIT_RUNTIME, exc, cfg.out)
    if cfg.command == "check" and not results["passed"]:
        failed = [r["name"] for r in results["suites"] if not r["passed"]]
        print(json.dumps({"failed": failed}), file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
