"""End-to-end checks of the command line front end.

Every test drives `main` directly with an argv list, so argument parsing,
fraction handling, and artifact writing are exercised exactly as a shell
invocation would, minus the subprocess overhead.
"""

import argparse

import numpy as np
import pytest

from vemwave.cli import _parse_float, _parse_float_list, main
from vemwave.mesh import read_mesh


def test_fraction_parsing():
    assert _parse_float("1/160") == pytest.approx(1.0 / 160.0)
    assert _parse_float(" 0.25 ") == 0.25
    assert _parse_float_list("1/5, 1/10,0.025") == pytest.approx((0.2, 0.1, 0.025))
    with pytest.raises(argparse.ArgumentTypeError):
        _parse_float_list(" , ")


def test_mesh_gen_and_check_grid(tmp_path, capsys):
    path = str(tmp_path / "grid.mesh")
    assert main(["mesh", "gen", "--kind", "grid", "--n", "4", "--out", path]) == 0
    out = capsys.readouterr().out
    assert "wrote 25 vertices, 16 cells" in out

    assert main(["mesh", "check", path]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out
    assert "h=" in out


def test_mesh_gen_voronoi(tmp_path):
    path = str(tmp_path / "vor.mesh")
    assert main([
        "mesh", "gen", "--kind", "voronoi", "--n", "12",
        "--seed", "3", "--lloyd", "5", "--out", path,
    ]) == 0
    mesh = read_mesh(path)
    assert mesh.n_cells == 12


def test_mesh_check_rejects_corrupt(tmp_path, capsys):
    path = tmp_path / "bad.mesh"
    path.write_text("this is not a mesh\n")
    assert main(["mesh", "check", str(path)]) == 1
    assert "INVALID" in capsys.readouterr().out


def test_mesh_check_strict_thresholds(tmp_path, capsys):
    # A perfectly regular grid sits at star ratio ~0.354; an impossible
    # threshold of 0.9 must flag every cell and flip the exit code.
    path = str(tmp_path / "grid.mesh")
    main(["mesh", "gen", "--kind", "grid", "--n", "3", "--out", path])
    capsys.readouterr()
    with pytest.warns(UserWarning, match="quality below thresholds"):
        assert main(["mesh", "check", path, "--gamma-min", "0.9"]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_study_test1_smoke(tmp_path, capsys):
    out_dir = str(tmp_path / "t1")
    rc = main([
        "study", "test1", "--k", "1", "--family", "grid",
        "--h-list", "1/2,1/4", "--tau-list", "1/4", "--out", out_dir,
    ])
    assert rc == 0
    printed = capsys.readouterr().out
    assert printed.count("E1=") == 2
    assert (tmp_path / "t1" / "errors.csv").exists()
    assert (tmp_path / "t1" / "rates.csv").exists()
    assert (tmp_path / "t1" / "meta.txt").exists()
    lines = (tmp_path / "t1" / "errors.csv").read_text().strip().splitlines()
    assert len(lines) == 3  # header + one row per refinement


def test_study_test1_dump_options(tmp_path):
    out_dir = str(tmp_path / "t1d")
    rc = main([
        "study", "test1", "--k", "1", "--family", "grid",
        "--h-list", "1/2,1/4", "--tau-list", "1/4", "--out", out_dir,
        "--dump-matrices", "--dump-eigs",
    ])
    assert rc == 0
    header = (tmp_path / "t1d" / "stiffness.txt").read_text().splitlines()[0]
    n_rows, n_cols, nnz = (int(tok) for tok in header.split())
    assert n_rows == n_cols == 25  # 4x4 grid, k=1: one dof per vertex
    assert nnz > 0
    assert (tmp_path / "t1d" / "mass.txt").exists()
    eig_lines = (tmp_path / "t1d" / "eigenvalues.csv").read_text().splitlines()
    assert eig_lines[0] == "index,lambda,mu"
    assert len(eig_lines) == 1 + 9  # 9 interior dofs


def test_study_test2_smoke(tmp_path, capsys):
    out_dir = str(tmp_path / "t2")
    rc = main(["study", "test2", "--h", "1/8", "--tau-list", "1/5", "--out", out_dir])
    assert rc == 0
    printed = capsys.readouterr().out
    assert printed.count("velocity TV") == 2
    for name in ("slice_newmark_0.2.csv", "slice_bathe_0.2.csv",
                 "snapshot_newmark_1.2.csv", "snapshot_bathe_1.2.csv", "meta.txt"):
        assert (tmp_path / "t2" / name).exists(), name
    slice_lines = (tmp_path / "t2" / "slice_newmark_0.2.csv").read_text().splitlines()
    assert slice_lines[0] == "s,u,z"
    assert len(slice_lines) > 5


def test_dump_elements_golden(tmp_path):
    mesh_path = str(tmp_path / "grid2.mesh")
    main(["mesh", "gen", "--kind", "grid", "--n", "2", "--out", mesh_path])
    dump_path = tmp_path / "cell0.txt"
    rc = main(["dump", "--mesh", mesh_path, "--k", "2",
               "--cell", "0", "--out", str(dump_path)])
    assert rc == 0
    lines = dump_path.read_text().splitlines()
    assert lines[0] == "cell 0 ndof 9"  # square, k=2: 4 vertex + 4 edge + 1 moment

    # walk the sections and confirm every matrix has its declared shape
    expected = {"D": (9, 6), "pi_nabla": (6, 9), "pi_zero": (6, 9),
                "K": (9, 9), "M": (9, 9)}
    i = 1
    seen = {}
    while i < len(lines):
        name, rows, cols = lines[i].split()
        rows, cols = int(rows), int(cols)
        block = lines[i + 1:i + 1 + rows]
        mat = np.array([[float(v) for v in row.split()] for row in block])
        assert mat.shape == (rows, cols)
        seen[name] = (rows, cols)
        i += 1 + rows
    assert seen == expected
