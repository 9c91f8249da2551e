import json
import math

import pytest

import maxperiodic as mp


def elliptic_k(m):
    a, b = 1.0, math.sqrt(1.0 - m)
    while abs(a - b) > 1e-16 * a:
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return math.pi / (2 * a)


def test_validate_branch():
    assert mp.validate_branch([-2, -1, 0.5, 2]) == ""
    assert "slit" in mp.validate_branch([-2, -1, 1.5, 2])


def test_period_matrix_matches_agm():
    e = [-2.0, -1.0, 0.5, 2.0]
    pi, a = mp.period_matrix(e)
    m = (e[1] - e[0]) * (e[3] - e[2]) / ((e[3] - e[1]) * (e[2] - e[0]))
    assert abs(pi[0][0] - 1j * elliptic_k(1 - m) / elliptic_k(m)) < 1e-10
    assert abs(a[0][0] - 1) < 1e-10


def test_spinor_sections():
    secs = mp.spinor_sections([-2, -1, 0.5, 2])
    assert len(secs) == 4
    assert all(s["mirror_defect"] < 1e-7 for s in secs)
    assert any(s["admissible"] for s in secs)


def test_s2_point_has_3n_plus_4_coordinates():
    s2 = mp.s2_point([-2, -1, 0.5, 2])
    assert len(s2) == 7
    assert -1 < s2[-1] < 1


def test_run_and_errors(tmp_path):
    cfg = {"version": 1, "branch_points": [-2, -1, 0.5, 2], "output": {"directory": str(tmp_path)}}
    rep = mp.run("periods", cfg)
    assert rep["exit_code"] == 0
    assert rep["config_hash"] == mp.config_hash(json.dumps(cfg))
    with pytest.raises(mp.ValidationError):
        mp.run("validate", dict(cfg, typo=1))
    bad = dict(cfg, divisor={"source": "explicit", "points": [[0.3, 0.7]]})
    with pytest.raises(mp.ObstructionError) as info:
        mp.run("build", bad)
    assert info.value.args[1] > 1e-3


def test_main_exit_codes(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"version": 1, "branch_points": [-2, -1, 1.5, 2]}))
    rc, log = mp.main("validate", str(p), out=str(tmp_path / "o"))
    assert rc == 2
    assert "slit" in log
