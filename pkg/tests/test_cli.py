import json
import math
import textwrap

import pytest

from wfq.cli import execute, main
from wfq.config import from_echo, load_config, parse_config
from wfq.errors import ValidationError

GRID = """
[grid]
x_min = -10
x_max = 10
M = 64
T = 1
N = 16
"""

CLASSICAL = textwrap.dedent("""
[experiment]
name = classical
""") + GRID + textwrap.dedent("""
[potential]
kind = harmonic
omega = 1

[sweep]
pairs = 8x64, 16x64, 32x64
""")

COMMUTATOR = textwrap.dedent("""
[experiment]
name = commutator
""") + GRID + textwrap.dedent("""
[ansatz]
functionals = 20
n_max = 4
""")


def _write(tmp_path, text, name="cfg.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_missing_section_reports_line(tmp_path, capsys):
    text = CLASSICAL.replace("[potential]\nkind = harmonic\nomega = 1\n", "")
    code = main(["run", _write(tmp_path, text)])
    err = capsys.readouterr().err
    assert code == 2
    assert "cfg.ini:3:" in err and "[potential]" in err


@pytest.mark.parametrize("broken,line,fragment", [
    (("M = 64", "M = sixty"), 8, "not a valid int"),
    (("kind = harmonic", "kind = morse"), 13, "unknown potential"),
    (("pairs = 8x64", "pairs = 8by64"), 17, "NxM"),
    (("name = classical", "name = classics"), 3, "unknown experiment"),
    (("M = 64", "M = 64\nM = 32"), 9, "duplicate key"),
])
def test_bad_values_point_at_their_line(broken, line, fragment):
    with pytest.raises(ValidationError) as info:
        parse_config(CLASSICAL.replace(*broken), source="c.ini")
    assert f"c.ini:{line}:" in str(info.value)
    assert fragment in str(info.value)


def test_spectrum_sweep_respects_oracle_cap():
    text = CLASSICAL.replace("name = classical", "name = spectrum").replace("8x64, 16x64, 32x64", "2x8, 3x9")
    with pytest.raises(ValidationError, match="oracle cap"):
        parse_config(text)


def test_validate_command(tmp_path, capsys):
    assert main(["validate", _write(tmp_path, CLASSICAL)]) == 0
    assert "ok" in capsys.readouterr().out


def test_sweep_requires_sweep_section(tmp_path):
    assert main(["sweep", _write(tmp_path, COMMUTATOR), "-q"]) == 2


def test_run_writes_versioned_report(tmp_path, monkeypatch):
    out = tmp_path / "out"
    monkeypatch.setenv("WFQ_OUTPUT_DIR", str(out))
    assert main(["run", _write(tmp_path, COMMUTATOR), "-q"]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["schema_version"] == 1 and report["code_version"]
    assert report["checks"]["commutator"]["passed"]
    assert report["points"][0]["metrics"]["max_abs_error"] < 1e-12
    assert (out / "commutator.csv").exists() and (out / "summary.txt").exists()


def test_failed_check_exits_one(tmp_path, monkeypatch):
    monkeypatch.setenv("WFQ_OUTPUT_DIR", str(tmp_path / "out"))
    text = COMMUTATOR + "\n[tolerances]\ncommutator_abs = 0\n"
    assert main(["run", _write(tmp_path, text), "-q"]) == 1


def test_numerical_failure_exits_three(tmp_path, monkeypatch):
    monkeypatch.setenv("WFQ_OUTPUT_DIR", str(tmp_path / "out"))
    focal = 2 * 16 * math.sin(math.pi / 32)
    text = CLASSICAL.replace("omega = 1", f"omega = {focal!r}").replace("[sweep]\npairs = 8x64, 16x64, 32x64\n", "")
    assert main(["run", _write(tmp_path, text), "-q"]) == 3


def test_bad_worker_env_is_config_error(tmp_path, monkeypatch):
    monkeypatch.setenv("WFQ_WORKERS", "many")
    assert main(["run", _write(tmp_path, CLASSICAL), "-q", "-o", str(tmp_path / "o")]) == 2


def test_parallel_sweep_is_bit_identical(tmp_path):
    cfg = load_config(_write(tmp_path, CLASSICAL))
    a = execute(cfg, "sweep", str(tmp_path / "a"), workers=1)
    b = execute(cfg, "sweep", str(tmp_path / "b"), workers=3)
    for name in ("points.csv", "convergence.csv", "N16_M64/path.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert [p["N"] for p in a["points"]] == [8, 16, 32]
    assert a["checks"] == b["checks"]


def test_report_echo_reruns_to_same_verdicts(tmp_path):
    cfg = load_config(_write(tmp_path, CLASSICAL))
    first = execute(cfg, "run", str(tmp_path / "a"))
    again = execute(from_echo(first["config"]), "run", str(tmp_path / "b"))
    verdicts = lambda r: {k: v["passed"] for k, v in r["checks"].items()}
    assert verdicts(first) == verdicts(again)
    assert "path_order" in first["convergence"] or "path_order" in first["checks"]
