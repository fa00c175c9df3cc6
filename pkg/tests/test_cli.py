"""End-to-end tests of the gevrey-lab command line."""

import csv

import pytest

from gevreylab.cli import (EXIT_CHECK, EXIT_OK, EXIT_PARSE, EXIT_SOLVER, main)

DOC = """\
dim 2; unknowns 1; order 2
P = x1*x2
L 2 : (2,0) -> x1^2; (0,2) -> x2^2; (1,1) -> 2
F 1 = 2*y1 + 2*x1*x2
option degree = 16
option order = 12
"""

NEITHER = """\
dim 1; unknowns 1; order 1
P = x1
L 1 : (1,) -> 1
F 1 = y1 + x1
"""

CONVERGENT = """\
dim 1; unknowns 1; order 1
P = x1
L 1 : (1,) -> 1
F 1 = -1*y1 + x1
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_check_divergent_route(tmp_path, capsys):
    path = write(tmp_path, "p.gl", DOC)
    assert main(["check", path]) == EXIT_OK
    out = capsys.readouterr().out
    assert "divergent route applies" in out
    assert "P-2-Gevrey" in out
    assert "L_2*(P) = P * (2 + 2*x1*x2)" in out


def test_check_convergent_route(tmp_path, capsys):
    path = write(tmp_path, "p.gl", CONVERGENT)
    assert main(["check", path]) == EXIT_OK
    out = capsys.readouterr().out
    assert "convergent route applies" in out
    assert "n* =" in out


def test_check_neither(tmp_path, capsys):
    path = write(tmp_path, "p.gl", NEITHER)
    assert main(["check", path]) == EXIT_CHECK
    out = capsys.readouterr().out
    assert "Poincare condition fails at n = [1]" in out
    assert "neither route applies" in out


def test_check_reports_witness(tmp_path, capsys):
    text = "dim 1; unknowns 1; order 1\nP = x1\nL 1 : (1,) -> 1\n" \
           "F 1 = -1*y1 + x1\n"
    path = write(tmp_path, "p.gl", text)
    main(["check", path])
    out = capsys.readouterr().out
    assert "not divisible by P (witness monomial (0,))" in out


def test_solve_outputs(tmp_path, capsys):
    path = write(tmp_path, "p.gl", DOC)
    out_dir = tmp_path / "out"
    assert main(["solve", path, "--out-dir", str(out_dir)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "residual vanishes" in out
    for name in ("solution.json", "solution_x.json", "norms.csv"):
        assert (out_dir / name).exists()
    with (out_dir / "norms.csv").open(newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["n", "norm", "certified_degree"]
    assert [r[0] for r in rows[1:]] == [str(n) for n in range(len(rows) - 1)]
    for _, norm, cdeg in rows[1:]:
        assert "/" in norm or norm.lstrip("-").isdigit()
        int(cdeg)


def test_solve_deterministic(tmp_path, capsys):
    path = write(tmp_path, "p.gl", DOC)
    blobs = []
    for sub in ("a", "b"):
        out_dir = tmp_path / sub
        assert main(["solve", path, "--out-dir", str(out_dir)]) == EXIT_OK
        blobs.append({name: (out_dir / name).read_bytes()
                      for name in ("solution.json", "solution_x.json",
                                   "norms.csv")})
    capsys.readouterr()
    assert blobs[0] == blobs[1]


EULER = """\
dim 1; unknowns 1; order 1
P = x1
L 1 : (1,) -> x1
F 1 = -1*y1 + x1
"""


def test_solve_degree_flag(tmp_path, capsys):
    path = write(tmp_path, "p.gl", EULER)
    out_dir = tmp_path / "out"
    code = main(["solve", path, "--degree", "6", "--order", "6",
                 "--out-dir", str(out_dir)])
    capsys.readouterr()
    assert code == EXIT_OK
    data = (out_dir / "solution_x.json").read_text()
    assert '"degree": 6' in data


def test_estimate_from_file(tmp_path, capsys):
    path = write(tmp_path, "p.gl", DOC)
    assert main(["estimate", path, "--degree", "40", "--order", "20"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "theoretical order: 2" in out
    assert "fitted order:" in out
    assert "difference:" in out


def test_estimate_from_norms_csv(tmp_path, capsys):
    import math
    rows = ["n,norm,certified_degree"]
    rows += [f"{n},{math.factorial(n)},99" for n in range(1, 25)]
    path = tmp_path / "norms.csv"
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    assert main(["estimate", "--norms", str(path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "fitted order:" in out


def test_estimate_insufficient_data_exit(tmp_path, capsys):
    path = write(tmp_path, "p.gl", DOC)
    code = main(["estimate", path, "--order", "4"])
    capsys.readouterr()
    assert code == EXIT_SOLVER


def test_parse_error_exit(tmp_path, capsys):
    path = write(tmp_path, "bad.gl", "dim 1; unknowns 1; order 1\nP = 1 + x1\n"
                 "L 1 : (1,) -> 1\nF 1 = y1 + x1\n")
    assert main(["check", path]) == EXIT_PARSE
    err = capsys.readouterr().err
    assert "error[P-constant]" in err
    assert "line 2" in err


def test_syntax_error_exit(tmp_path, capsys):
    path = write(tmp_path, "bad.gl", "dim 1 ?\n")
    assert main(["check", path]) == EXIT_PARSE
    assert "error[parse]" in capsys.readouterr().err


def test_examples_list(capsys):
    assert main(["examples", "list"]) == EXIT_OK
    out = capsys.readouterr().out
    for name in ("eje1", "eje3", "eje4", "ejeLast"):
        assert name in out


def test_examples_run(capsys):
    assert main(["examples", "run", "ejeLast"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("PASS ejeLast")


def test_examples_run_with_param(capsys):
    assert main(["examples", "run", "eje1",
                 "--param", "degree=20", "--param", "order=8"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "PASS eje1" in out and "'degree': 20" in out
