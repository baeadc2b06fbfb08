import textwrap

import pytest

from wfq.config import parse_config
from wfq.experiments import POINTS


def _config(name, potential="harmonic", M=64, N=8, boundary="dirichlet", extra=""):
    return parse_config(textwrap.dedent(f"""
        [experiment]
        name = {name}
        [grid]
        x_min = -8
        x_max = 8
        M = {M}
        boundary = {boundary}
        T = 1
        N = {N}
        [potential]
        kind = {potential}
        [ansatz]
        kind = {'coherent' if potential == 'harmonic' else 'gaussian'}
        q0 = 1
        p0 = 0.5
        {extra}
    """))


def test_evolve_point_metrics():
    res = POINTS["evolve"](_config("evolve"), 8, 64)
    m = res["metrics"]
    assert m["norm_drift_step"] < 1e-12 and m["energy_drift"] < 1e-12
    assert set(res["tables"]) == {"observables.csv", "history.csv"}
    assert len(res["tables"]["history.csv"][1]) == 9 * 64


def test_evolve_time_dependent_skips_energy():
    cfg = _config("evolve", potential="time_linear")
    m = POINTS["evolve"](cfg, 8, 64)["metrics"]
    assert "energy_drift" not in m and "center_error" not in m


def test_equivalence_point_reports_phase_corrected_gap():
    m = POINTS["action_equivalence"](_config("action_equivalence", M=128, N=16), 16, 128)["metrics"]
    assert abs(m["lambda_sym_imag"]) < 1e-12
    assert m["corrected_gap"] < 0.1 * m["abs_gap"]


def test_backshift_point_uses_line_file(tmp_path):
    line = tmp_path / "line.csv"
    line.write_text("n,x\n" + "".join(f"{n},{0.1 * n}\n" for n in range(9)))
    cfg = _config("backshift", extra=f"line_file = {line}")
    m = POINTS["backshift"](cfg, 8, 64)["metrics"]
    assert m["abs_diff"] >= 0 and m["functional_abs"] > 0
    with pytest.raises(Exception):
        POINTS["backshift"](cfg, 16, 64)


def test_spectrum_point_small():
    cfg = _config("spectrum", M=5, N=2, boundary="periodic")
    res = POINTS["spectrum"](cfg, 2, 5)
    assert res["metrics"]["apply_max_error"] < 1e-12
    assert res["metrics"]["dimension"] == 125
    assert len(res["tables"]["spectrum_N2_M5.csv"][1]) == 125


def test_variational_point_free_particle():
    m = POINTS["variational"](_config("variational", potential="free", M=96), 8, 96)["metrics"]
    assert m["converged"] and m["center_error"] < 1e-6


def test_coherent_ansatz_needs_harmonic_potential():
    cfg = _config("evolve", potential="free", extra="")
    cfg.ansatz["kind"] = "coherent"
    with pytest.raises(ValueError):
        POINTS["evolve"](cfg, 8, 64)
