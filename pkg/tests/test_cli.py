import json
import subprocess
import sys

import pytest

from picard_sdc.cli import build_parser, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_quadrature_uniform3(capsys):
    code, out, _ = run(capsys, "quadrature", "--family", "uniform", "-M", "3", "--format", "json")
    assert code == 0
    rule = json.loads(out)["rules"][0]
    assert rule["nodes"] == [0.0, 0.5, 1.0]
    assert rule["weights"][0] == pytest.approx([5 / 24, 1 / 3, -1 / 24])
    assert rule["weights"][1] == pytest.approx([-1 / 24, 1 / 3, 5 / 24])


def test_quadrature_wn_lobatto(capsys):
    code, out, _ = run(capsys, "quadrature", "--family", "lobatto", "-M", "3", "--wn",
                       "--format", "json")
    wn = json.loads(out)["rules"][0]["wn"]
    assert code == 0 and wn[0] == pytest.approx(wn[1])


def test_table1_csv(capsys):
    code, out, _ = run(capsys, "quadrature", "--table1", "-M", "2..20")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "M,uniform,chebyshev,legendre,radau,lobatto"
    assert lines[8].split(",")[1] == "2.550"
    assert lines[9].split(",")[3] == "1.588"


def test_coeffs(capsys):
    code, out, _ = run(capsys, "coeffs", "--family", "uniform", "-M", "3", "--base", "trapezoid")
    rows = out.splitlines()[1:]
    assert code == 0 and all("1/24 -1/12 1/24" in r for r in rows)
    code, out, _ = run(capsys, "coeffs", "--nodes", "0,1/3,1/2,1", "--base", "trapezoid",
                       "--format", "json")
    doc = json.loads(out)
    assert doc["fractions"][0] == ["4/81", "-1/6", "10/81", "-1/162"]
    assert doc["order"] == [3, 3, 3]


def test_stability_picard_equals_explicit(capsys):
    args = ["-M", "2", "--corrections", "1", "--nx", "21", "--ny", "21"]
    _, a, _ = run(capsys, "stability", "--scheme", "picard", *args)
    _, b, _ = run(capsys, "stability", "--scheme", "explicit-sdc", *args)
    assert a == b and a.startswith("re,im,abs_rho\n")


def test_solve_and_presets(capsys):
    code, out, _ = run(capsys, "solve", "--problem", "pendulum", "--scheme", "explicit-sdc",
                       "--order", "3", "--steps", "4", "--format", "json")
    doc = json.loads(out)
    assert code == 0
    assert doc["config"]["M"] == 3 and doc["config"]["scheme"]["corrections"] == 2
    assert len(doc["t"]) == 5


def test_complex_linear_solve(capsys):
    code, out, _ = run(capsys, "solve", "--lam=-1+2j", "--scheme", "implicit-sdc", "-M", "3",
                       "--corrections", "2", "--steps", "2")
    assert code == 0 and out.splitlines()[0] == "t,y1_re,y1_im"


def test_converge_and_rerun(capsys, tmp_path):
    first = tmp_path / "a.json"
    code, _, _ = run(capsys, "converge", "--problem", "linear", "--lam", "-2", "--scheme",
                     "picard", "--order", "3", "--meshes", "8:32", "--format", "json",
                     "--output", str(first))
    assert code == 0
    second = tmp_path / "b.json"
    assert main(["rerun", str(first), "--output", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    report = json.loads(first.read_text())["report"]
    assert report["steps"] == [8, 16, 32]


@pytest.mark.parametrize("command", ["quadrature", "coeffs", "solve", "converge", "stability"])
def test_rerun_every_command(capsys, tmp_path, command):
    extra = {
        "quadrature": ["--family", "radau", "-M", "3", "--wn"],
        "coeffs": ["-M", "4", "--base", "forward-euler"],
        "solve": ["--problem", "vdp", "--scheme", "sisdc", "-M", "3", "--corrections", "2",
                  "--steps", "4"],
        "converge": ["--problem", "pendulum", "--scheme", "trapezoid-sdc", "-M", "3",
                     "--corrections", "1", "--meshes", "4:16", "-T", "2"],
        "stability": ["--scheme", "implicit-sdc", "--theta", "0.5", "-M", "3",
                      "--corrections", "2", "--nx", "5", "--ny", "4"],
    }[command]
    out = tmp_path / "out.json"
    assert main([command, *extra, "--format", "json", "--output", str(out)]) == 0
    again = tmp_path / "again.json"
    assert main(["rerun", str(out), "--output", str(again)]) == 0
    assert out.read_bytes() == again.read_bytes()


@pytest.mark.parametrize("argv", [
    ["solve", "--scheme", "rk4"],
    ["quadrature", "--family", "hermite"],
    ["coeffs", "--base", "simpson"],
    ["solve", "--provisional", "heun"],
    ["converge", "--meshes", "4,8,12"],
    ["solve", "--problem", "pendulum", "--scheme", "sisdc", "--corrections", "1"],
    ["solve", "--format", "xml"],
    ["solve", "--newton-max-iter", "0"],
    ["solve", "--problem", "vdp", "--y0", "a,b"],
])
def test_config_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "error" in err


def test_divergence_exit_1(capsys):
    code, _, err = run(capsys, "solve", "--problem", "vdp", "--scheme", "implicit-sdc", "-M", "3",
                       "--corrections", "1", "--steps", "1", "--newton-max-iter", "1")
    assert code == 1 and "solver failure" in err


def test_rerun_bad_file(capsys, tmp_path):
    bad = tmp_path / "x.json"
    bad.write_text("{}")
    assert run(capsys, "rerun", str(bad))[0] == 2


def test_help_lists_enumerants():
    text = build_parser().format_help()
    for word in ["picard", "explicit-sdc", "implicit-sdc", "sisdc", "modified-sisdc",
                 "trapezoid-sdc", "uniform", "chebyshev", "legendre", "radau", "lobatto",
                 "imex-euler", "implicit-part-euler", "--order"]:
        assert word in text


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "picard_sdc", "coeffs", "-M", "2"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("n,left,right")
