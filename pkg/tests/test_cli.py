import csv
import io
import json
import math
import subprocess
import sys

import pytest

from polteleport.cli import UsageError, main, parse_list, parse_squeezing
from polteleport.stokes import LinearizationWarning


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_parse_squeezing():
    assert parse_squeezing("0.5") == 0.5
    assert parse_squeezing("3dB") == pytest.approx(0.501187, rel=1e-5)
    assert parse_squeezing("0dB") == 1.0
    with pytest.raises(UsageError):
        parse_squeezing("1.5")
    with pytest.raises(UsageError):
        parse_squeezing("-3dB")


def test_parse_lists():
    assert parse_list("1,0.5") == [1.0, 0.5]
    assert parse_list("0:1:3") == [0.0, 0.5, 1.0]
    assert parse_list("log:1:0.01:3") == pytest.approx([1.0, 0.1, 0.01])
    with pytest.raises(UsageError):
        parse_list("1:2")


def test_sweep_twin(capsys):
    code, out, _ = run(["sweep-fidelity", "--scheme", "twin", "--vsq", "1,0.5"], capsys)
    assert code == 0
    r = rows(out)
    assert list(r[0]) == ["scheme", "V_SQ", "V_SQ3", "eps1", "eps2", "fidelity", "fidelity_closed_form", "abs_diff"]
    assert [float(x["fidelity"]) for x in r] == pytest.approx([0.25, 4 / 9], abs=1e-11)
    assert r[1]["fidelity"] == "0.444444444444"


def test_sweep_sqd_row(capsys):
    _, out, _ = run(["sweep-fidelity", "--scheme", "sqd", "--vsq", "1"], capsys)
    assert float(rows(out)[0]["fidelity"]) == pytest.approx(0.40825, abs=1e-5)


def test_sweep_bet_json(capsys):
    code, out, _ = run(["sweep-fidelity", "--scheme", "bet", "--vsq", "1e-4", "--format", "json", "--strict"], capsys)
    assert code == 0
    data = json.loads(out)
    assert data[0]["fidelity"] == pytest.approx(0.943, abs=0.005)
    assert data[0]["abs_diff"] < 1e-9


def test_fixed_eps_skips_optimization(capsys):
    _, out, _ = run(["sweep-fidelity", "--scheme", "bet", "--vsq", "0.5", "--eps1", "1", "--eps2", "0", "--vsq3", "1"], capsys)
    r = rows(out)[0]
    assert float(r["eps1"]) == 1.0 and float(r["eps2"]) == 0.0


def test_tv_twin_anchors(capsys):
    _, out, _ = run(["tv", "--scheme", "twin", "--vsq", "1,0.1", "--gain", "1", "--locus", "1"], capsys)
    r = rows(out)
    traj = [x for x in r if x["block"] == "trajectory"]
    assert float(traj[0]["T_q"]) == pytest.approx(4 / 3) and float(traj[0]["V_cv"]) == pytest.approx(2.0)
    assert float(traj[1]["T_q"]) == pytest.approx(10 / 3) and float(traj[1]["V_cv"]) == pytest.approx(0.2)
    assert [x["block"] for x in r].count("locus") == 1


def test_tv_sqd_large_gain_endpoint(capsys):
    code, out, _ = run(
        ["tv", "--scheme", "sqd", "--vsq", "1e-6", "--vsq3", "1e-6", "--gain", "1000", "--which", "v_plus", "--strict"],
        capsys,
    )
    assert code == 0
    traj = rows(out)[0]
    assert float(traj["T_q"]) >= 2.99 and float(traj["V_cv"]) <= 0.01


def test_tv_rejects_decreasing_gain(capsys):
    code, _, err = run(["tv", "--gain", "2,1"], capsys)
    assert code == 2 and "non-decreasing" in err


def test_optimize_regimes(capsys):
    code, out, _ = run(["optimize", "--scheme", "bet", "--vsq", "0.01", "--regimes", "--grid", "17"], capsys)
    assert code == 0
    r = rows(out)
    assert len(r) == 4
    best = max(r, key=lambda x: float(x["best_value"]))
    assert (best["sq3_quadrature"], best["polarity"]) == ("phase", "1")


def test_optimize_tq(capsys):
    code, out, _ = run(["optimize", "--scheme", "twin", "--vsq", "0.5", "--objective", "tq", "--vcv-max", "1"], capsys)
    assert code == 0
    assert float(rows(out)[0]["best_value"]) > 0


def test_stokes_examples(capsys):
    _, out, _ = run(["stokes", "--aV", "10"], capsys)
    vals = {x["quantity"]: float(x["value"]) for x in rows(out)}
    assert vals["V(S1)"] == vals["V(S2)"] == vals["V(S3)"] == pytest.approx(100.0)
    assert vals["poincare_radius"] == pytest.approx(math.sqrt(10200))
    _, out, _ = run(["stokes", "--aV", "10", "--h-squeeze", "minus:0.5", "--theta", "0"], capsys)
    assert {x["quantity"]: float(x["value"]) for x in rows(out)}["V(S3)"] == pytest.approx(50.0)
    with pytest.warns(LinearizationWarning):
        _, out, _ = run(["stokes", "--aH", "1", "--aV", "1", "--theta", "1.5708", "--format", "json"], capsys)
    data = {x["quantity"]: x["value"] for x in json.loads(out)}
    assert data["<S3>"] == pytest.approx(2.0, abs=1e-6)


def test_stokes_rejects_bad_spec(capsys):
    code, _, err = run(["stokes", "--aV", "10", "--h-squeeze", "sideways:0.5"], capsys)
    assert code == 2 and "plus:V" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["sweep-fidelity", "--scheme", "quantum"],
        ["sweep-fidelity", "--vsq", "2"],
        ["sweep-fidelity", "--grid", "1"],
        ["sweep-fidelity", "--eps1", "abc"],
        ["frobnicate"],
        ["sweep-fidelity", "--format", "xml"],
        ["sweep-fidelity", "--config", "/nonexistent/file"],
    ],
)
def test_bad_arguments_exit_2(argv, capsys):
    assert main(argv) == 2


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# twin sweep\nscheme = twin\nvsq = 1, 0.5   # two points\nformat = json\n", encoding="utf-8")
    _, out, _ = run(["sweep-fidelity", "--config", str(cfg)], capsys)
    assert [r["V_SQ"] for r in json.loads(out)] == [1.0, 0.5]
    _, out, _ = run(["sweep-fidelity", "--config", str(cfg), "--vsq", "0.1"], capsys)
    assert [r["V_SQ"] for r in json.loads(out)] == [0.1]


def test_config_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n", encoding="utf-8")
    code, _, err = run(["sweep-fidelity", "--config", str(cfg)], capsys)
    assert code == 2 and "colour" in err


def test_dumped_config_reproduces_run(tmp_path, capsys):
    argv = ["sweep-fidelity", "--scheme", "bet", "--vsq", "log:1:0.01:3", "--grid", "9"]
    _, dumped, _ = run(argv + ["--dump-config"], capsys)
    cfg = tmp_path / "dumped.cfg"
    cfg.write_text(dumped, encoding="utf-8")
    _, direct, _ = run(argv, capsys)
    _, replay, _ = run(["sweep-fidelity", "--config", str(cfg)], capsys)
    assert direct == replay


def test_output_file_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["sweep-fidelity", "--scheme", "bet", "--vsq", "1,0.1", "--grid", "9"]
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b), "--parallel", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_validate_subset_and_negative_control(capsys):
    code, out, _ = run(["validate", "--only", "1,5", "--no-report"], capsys)
    assert code == 0 and out.count("[PASS]") == 2
    code, out, _ = run(["validate", "--only", "12", "--no-report", "--negative-control", "beamsplitter-sign"], capsys)
    assert code == 1 and "symplectic invariant failure" in out


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "polteleport.cli", "sweep-fidelity", "--vsq", "1"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[1].startswith("twin,1,1,,,0.25")
