import csv
import io

import pytest

from hartree_min.cli import (
    EXIT_DIVERGED,
    EXIT_INTERNAL,
    EXIT_OK,
    EXIT_PRECONDITION,
    SWEEP_HEADER,
    main,
)
from hartree_min.io import parse_record

GS = ["--gs-grid", "48", "--gs-box", "32"]


@pytest.fixture
def run(gs48, cache_root, tmp_path, capsys):
    def _run(*args):
        code = main([*args, *GS, "--output", str(tmp_path)])
        out = capsys.readouterr()
        return code, out.out, out.err

    return _run


def _record(out: str) -> dict:
    body = [l for l in out.splitlines() if not l.startswith("#")]
    header, items = parse_record("\n".join(body))
    assert header == "HARTREE-RECORD-1"
    return items


def test_ground_state_command(run, gs48):
    code, out, _ = run("ground-state")
    assert code == EXIT_OK
    assert float(_record(out)["a_star"]) == gs48.a_star
    assert "# gs_n = 48" in out


def test_classify_command(run):
    code, out, _ = run("classify", "--a1", "0.3", "--a2", "0.6", "--beta", "0.5")
    assert code == EXIT_OK
    rec = _record(out)
    assert rec["verdict"] == "ExistsMinimizer" and rec["rule"] == "coupling-below-beta_low"


def test_classify_with_eta(run):
    code, out, _ = run("classify", "--a1", "0.3", "--a2", "0.6", "--beta", "1.0", "--eta")
    assert code == EXIT_OK
    rec = _record(out)
    assert float(rec["eta_estimate"]) > 1
    assert rec["verdict"] in ("IndeterminateStrip", "StripExistsByContinuity")


def test_classify_precondition(run):
    code, _, err = run("classify", "--a1", "1.5", "--beta", "1.0")
    assert code == EXIT_PRECONDITION and "beta_low" in err


def test_minimize_and_diverge(run, tmp_path):
    code, out, _ = run("minimize")
    assert code == EXIT_OK and _record(out)["converged"] == "true"
    assert (tmp_path / "result.bin").read_bytes().startswith(b"HARTREE-MIN-1\n")
    code, _, err = run("minimize", "--a1", "1.5", "--beta", "0", "--beta-unit", "abs")
    assert code == EXIT_DIVERGED and "diverged" in err


def test_sweep_csv(run, tmp_path):
    code, out, _ = run("sweep")
    assert code == EXIT_OK
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == SWEEP_HEADER and len(rows) == 1 + 121
    assert (tmp_path / "sweep.csv").read_text() == out


def test_config_file(run, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("a1 = 0.2\na2 = 0.2\nbeta = 0.1\n")
    code, out, _ = run("classify", "--config", str(cfg), "--a2", "0.4")
    rec = _record(out)
    assert code == EXIT_OK
    assert float(rec["a2"]) == pytest.approx(2 * float(rec["a1"]))
    code, _, _ = run("classify", "--config", str(tmp_path / "missing.cfg"))
    assert code == EXIT_PRECONDITION


def test_verify_and_fault(run):
    code, out, _ = run("verify", "--only", "coulomb", "--only", "kinetic")
    assert code == EXIT_OK and "2/2 passed" in out
    code, out, _ = run("verify", "--only", "coulomb", "--inject", "coulomb-zero-mode")
    assert code == EXIT_INTERNAL and "FAIL coulomb.gaussian" in out
    code, _, _ = run("verify", "--only", "nothing")
    assert code == EXIT_PRECONDITION
