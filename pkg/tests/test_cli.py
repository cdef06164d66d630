import csv
import json

import numpy as np
import pytest

from bicomm import cli
from bicomm.cli import ConfigParseError, ValidationError, emit_report, main, parse_config


def write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_empty_file_gives_defaults(tmp_path):
    cfg = parse_config(write(tmp_path, ""))
    assert (cfg.resolution, cfg.A, cfg.seed) == (128, 8.0, 1)
    assert cfg.resolutions == [128]
    assert cfg.kernels == {"k1": "hilbert", "k2": "hilbert"}


def test_parse_error_has_line(tmp_path):
    with pytest.raises(ConfigParseError) as e:
        parse_config(write(tmp_path, "N = 64\nA = = 3\n"))
    assert e.value.line == 2


@pytest.mark.parametrize("text, field", [("N = 100", "resolution"), ("resolutions = [64, 96]", "resolution"),
                                         ("A = 2", "A"), ("seed = -1", "seed"), ("bogus = 1", "bogus"),
                                         ("[budget]\nstarts = 0", "budget"),
                                         ("profiles = [[1, 2, 2, 2]]", "profiles"),
                                         ("[symbol]\nname = 'nope'", "symbol"),
                                         ("[kernels]\nk1 = 'riesz'", "kernels")])
def test_validation_errors_name_field(tmp_path, text, field):
    with pytest.raises(ValidationError) as e:
        parse_config(write(tmp_path, text))
    assert e.value.field == field


def test_table_schedule_round_trip(tmp_path):
    cfg = parse_config(write(tmp_path, "resolutions = [32, 64]\n[symbol]\nname = 'tensor_holder'\n"
                                       "alpha = 0.25\nbeta = 0.25\n"), command="table")
    sched = cfg.schedule()
    assert len(sched) == 18 and sum(1 for _, N in sched if N == 32) == 9
    again = parse_config(None, cfg.content_dict(), command="table")
    assert again.content_dict() == cfg.content_dict()
    assert again.config_hash() == cfg.config_hash()


def test_table_one_variable_symbol(tmp_path):
    out = tmp_path / "out"
    cfgp = write(tmp_path, "N = 16\n[symbol]\nname = 'depends_on_x1_only'\n[budget]\nstarts = 2\niters = 10\n")
    assert main(["table", "--config", str(cfgp), "--out", str(out)]) == 0
    doc = json.loads((out / "table.json").read_text())
    rows = doc["content"]["results"]["rows"]
    assert len(rows) == 9 and max(r["op_norm"] for r in rows) <= 1e-8
    with (out / "table.csv").open() as fh:
        lines = list(csv.reader(fh))
    assert lines[0][0] == "# config_hash" and lines[1] == ["regime", "space", "op_norm", "space_norm", "ratio", "N"]
    assert len(lines) - 2 == 9


def test_table_csv_rows_per_resolution(tmp_path):
    out = tmp_path / "out"
    cfgp = write(tmp_path, "resolutions = [8, 16]\n[budget]\nstarts = 1\niters = 5\n")
    assert main(["table", "--config", str(cfgp), "--out", str(out)]) == 0
    with (out / "table.csv").open() as fh:
        assert len(list(csv.reader(fh))) - 2 == 9 * 2


def test_factorize_outputs(tmp_path):
    out = tmp_path / "out"
    assert main(["factorize", "-N", "64", "--out", str(out)]) == 0
    data = np.loadtxt(out / "factorize_N64.dat")
    assert data.shape[0] >= 2 and np.all(np.diff(data[:, 1]) < 0)
    doc = json.loads((out / "factorize.json").read_text())
    assert doc["content"]["seed"] == 1 and len(doc["content"]["config_hash"]) == 64
    assert (out / "factorize.csv").exists()


def test_determinism(tmp_path):
    docs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert main(["norms", "-N", "16", "--seed", "3", "--out", str(out)]) == 0
        docs.append(json.loads((out / "norms.json").read_text()))
    assert json.dumps(docs[0]["content"], sort_keys=True) == json.dumps(docs[1]["content"], sort_keys=True)
    assert "timestamp" in docs[0]["metadata"]


def test_paraproducts_and_lowerbound_commands(tmp_path):
    out = tmp_path / "out"
    assert main(["paraproducts", "-N", "16", "--out", str(out)]) == 0
    res = json.loads((out / "paraproducts.json").read_text())["content"]["results"]
    assert all(v["expansion_residual"] <= 1e-10 for v in res["shifts"].values())
    assert res["bi_param_identity_residual"] <= 1e-12
    cfgp = write(tmp_path, "N = 32\n[budget]\nsamples = 5\n")
    assert main(["lowerbound", "--config", str(cfgp), "--out", str(out)]) == 0
    assert (out / "lowerbound.json").exists()


def test_exit_codes(tmp_path, monkeypatch):
    out = tmp_path / "out"
    assert main(["norms", "-N", "100", "--out", str(out)]) == cli.EXIT_VALIDATION
    err = json.loads((out / "error.json").read_text())
    assert err["field"] == "resolution" and err["exit_code"] == 1

    def boom(cfg):
        raise ArithmeticError("synthetic failure")

    monkeypatch.setitem(cli.RUNNERS, "norms", boom)
    assert main(["norms", "-N", "16", "--out", str(out)]) == cli.EXIT_RUNTIME
    monkeypatch.setitem(cli.RUNNERS, "check", lambda cfg: {"suites": [{"name": "x", "passed": False}],
                                                          "passed": False})
    assert main(["check", "--out", str(out)]) == cli.EXIT_CHECK
    monkeypatch.setenv("BICOMM_THREADS", "zero")
    assert main(["paraproducts", "-N", "16", "--out", str(out)]) == cli.EXIT_VALIDATION


def test_emit_empty_results(tmp_path):
    for cmd in ("table", "factorize"):
        cfg = parse_config(None, {"out": str(tmp_path)}, command=cmd)
        for fmt in ("json", "csv", "plotdata"):
            paths = emit_report({}, cfg, fmt)
            for p in paths:
                if p.suffix == ".json":
                    assert json.loads(p.read_text())["content"]["results"] == {}
                else:
                    assert p.read_text().startswith("# config_hash")


def test_emit_unwritable(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    cfg = parse_config(None, {"out": str(blocker / "sub")}, command="norms")
    with pytest.raises(OSError):
        emit_report({}, cfg, "json")
