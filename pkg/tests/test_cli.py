import json
import subprocess
import sys

import numpy as np
import pytest

from omv.bitmatrix import BitMatrix, read_matrix, write_matrix
from omv.cli import main


def write(path, text):
    path.write_text(text)
    return str(path)


def identity(tmp_path):
    return write(tmp_path / "id.txt", "%%OMV bitmatrix 3 3\ndense\n100\n010\n001\n")


def test_mv_identity(tmp_path, capsys):
    vec = write(tmp_path / "v.txt", "1\n2\n3\n")
    for algo in ("auto", "row", "col", "naive"):
        assert main(["mv", "--matrix", identity(tmp_path), "--vector", vec, "--algo", algo]) == 0
        assert capsys.readouterr().out.split() == ["1", "2", "3"]


def test_mv_numeric_matrix(tmp_path, capsys):
    mat = write(tmp_path / "n.txt", "%%OMV numeric 2 2\n7 7\n0 3\n")
    vec = write(tmp_path / "v.txt", "1\n2\n")
    assert main(["mv", "--matrix", mat, "--vector", vec]) == 0
    assert capsys.readouterr().out.split() == ["21", "6"]


def test_mv_dimension_error_single_line(tmp_path, capsys):
    vec = write(tmp_path / "v.txt", "1\n2\n")
    assert main(["mv", "--matrix", identity(tmp_path), "--vector", vec]) != 0
    err = capsys.readouterr().err
    assert err.count("\n") == 1 and "length" in err


def test_parse_error_reports_line(tmp_path, capsys):
    bad = write(tmp_path / "bad.txt", "%%OMV bitmatrix 2 2\ndense\n10\n2x\n")
    vec = write(tmp_path / "v.txt", "1\n2\n")
    assert main(["mv", "--matrix", bad, "--vector", vec]) == 1
    assert "line 4" in capsys.readouterr().err


def test_build_reports_and_dumps(tmp_path, capsys):
    out = tmp_path / "tree.txt"
    assert main(["build", "--matrix", identity(tmp_path), "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "col_weight 5" in text and "row_weight 5" in text
    assert out.read_text().startswith("%%OMV dtree 4 5")


def make_trace(tmp_path, ops: int, seed: int):
    rng = np.random.default_rng(seed)
    m, n = 10, 12
    dense = rng.random((m, n)) < 0.5
    with open(tmp_path / "m.txt", "w") as fh:
        write_matrix(BitMatrix.from_dense(dense), fh)
    rows, cols = list(range(m)), list(range(n))
    next_row, next_col = m, n
    lines = ["# random trace"]
    shape = [m, n]
    q = 0
    for _ in range(ops):
        r = rng.random()
        if r < 0.25:
            (tmp_path / f"q{q}.txt").write_text("".join(f"{x}\n" for x in rng.integers(-9, 10, shape[1])))
            lines.append(f"QUERY q{q}.txt")
            q += 1
        elif r < 0.45 and shape[1] < 40:
            idx = np.flatnonzero(rng.random(shape[0]) < 0.5)
            lines.append("INSCOL coo " + ",".join(map(str, idx)))
            cols.append(next_col)
            next_col += 1
            shape[1] += 1
        elif r < 0.6 and cols:
            lines.append(f"DELCOL {cols.pop(int(rng.integers(len(cols))))}")
            shape[1] -= 1
        elif r < 0.8 and shape[0] < 40:
            idx = np.flatnonzero(rng.random(shape[1]) < 0.5)
            lines.append("INSROW coo " + ",".join(map(str, idx)))
            rows.append(next_row)
            next_row += 1
            shape[0] += 1
        elif rows:
            lines.append(f"DELROW {rows.pop(int(rng.integers(len(rows))))}")
            shape[0] -= 1
    (tmp_path / "t.txt").write_text("\n".join(lines) + "\n")
    return str(tmp_path / "m.txt"), str(tmp_path / "t.txt"), q


def test_replay_audit_500_ops(tmp_path, capsys):
    mat, trace, q = make_trace(tmp_path, 500, seed=1)
    assert main(["replay", "--matrix", mat, "--trace", trace, "--audit"]) == 0
    out = capsys.readouterr()
    assert len(out.out.splitlines()) == q
    assert "mismatch" not in out.err


def test_replay_small_known_output(tmp_path, capsys):
    mat = write(tmp_path / "m.txt", "%%OMV bitmatrix 2 2\ndense\n10\n01\n")
    write(tmp_path / "v.txt", "5\n7\n")
    write(tmp_path / "w.txt", "5\n7\n1\n")
    trace = write(tmp_path / "t.txt", "QUERY v.txt\nINSCOL coo 0,1\nQUERY w.txt  # comment\nDELCOL 0\nDELROW 1\nQUERY v.txt\n")
    assert main(["replay", "--matrix", mat, "--trace", trace]) == 0
    assert capsys.readouterr().out.splitlines() == ["5 7", "6 8", "7"]


def test_replay_bad_id(tmp_path, capsys):
    mat = write(tmp_path / "m.txt", "%%OMV bitmatrix 2 2\ndense\n10\n01\n")
    trace = write(tmp_path / "t.txt", "DELCOL 0\nDELCOL 0\n")
    assert main(["replay", "--matrix", mat, "--trace", trace]) == 1
    assert "line 2" in capsys.readouterr().err


def test_graph_commands(tmp_path, capsys):
    g = write(tmp_path / "g.txt", "%%OMV graph 4 4\n0 1\n1 2\n0 2\n2 3\n")
    assert main(["graph", "triangle", "--graph", g]) == 0
    assert capsys.readouterr().out.split() == ["has_triangle", "true", "triangles", "1", "trace", "6"]
    assert main(["graph", "sssp", "--graph", g, "--source", "3"]) == 0
    assert capsys.readouterr().out.split() == ["2", "2", "1", "0"]
    assert main(["graph", "sssp", "--graph", g, "--source", "3", "--dmax", "1"]) == 0
    assert capsys.readouterr().out.split() == ["inf", "inf", "1", "0"]
    p = write(tmp_path / "p.txt", "%%OMV graph 3 2\n0 1\n1 2\n")
    assert main(["graph", "resist", "--graph", p, "--pair", "0", "2"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(2.0, rel=1e-8)
    b = write(tmp_path / "b.txt", "1\n0\n-1\n")
    assert main(["graph", "solve", "--graph", p, "--vector", b]) == 0
    x = np.array([float(t) for t in capsys.readouterr().out.split()])
    assert np.allclose(x - x.mean(), [1, 0, -1])


def test_gen_deterministic(tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    for path in (a, b):
        assert main(["gen", "--family", "interval", "--n", "20", "--corruption", "2", "--seed", "5", "--out", str(path)]) == 0
    assert a.read_text() == b.read_text()
    with open(a) as fh:
        assert read_matrix(fh).shape == (20, 20)


def test_gen_grid_needs_square(capsys):
    assert main(["gen", "--family", "grid", "--n", "10"]) == 1
    assert "square" in capsys.readouterr().err


def test_bench_fit_slope(tmp_path, capsys):
    out = tmp_path / "bench.json"
    assert main(["bench", "--family", "interval", "--sizes", "64..1024", "--fit", "--seed", "1", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["schema"] == 1
    assert data["sizes"] == [64, 128, 256, 512, 1024]
    assert len(data["records"]) == 25
    assert data["fit"]["slope"] <= 1.6
    for rec in data["records"]:
        used = rec["row_weight"] if rec["algo"] == "row" else rec["col_weight"]
        assert all(0 <= t <= used for t in rec["touched_nonzeros"])
        assert rec["naive_ops"] == rec["n"] * rec["m"]


def test_bench_deterministic_and_parallel(tmp_path, monkeypatch):
    args = ["bench", "--family", "random", "--sizes", "16,32", "--reps", "2", "--seed", "4"]
    monkeypatch.setenv("OMV_THREADS", "1")
    main(args + ["--out", str(tmp_path / "a.json")])
    monkeypatch.setenv("OMV_THREADS", "2")
    main(args + ["--out", str(tmp_path / "b.json"), "--linearize"])
    a = json.loads((tmp_path / "a.json").read_text())["records"]
    b = json.loads((tmp_path / "b.json").read_text())["records"]
    assert [r["col_weight"] for r in a] == [r["col_weight"] for r in b]
    assert all(r["linearized_weight"] <= 2 * r["col_weight"] + r["m"] for r in b)


def test_module_entry_point(tmp_path):
    vec = write(tmp_path / "v.txt", "1\n2\n3\n")
    res = subprocess.run([sys.executable, "-m", "omv.cli", "mv", "--matrix", identity(tmp_path), "--vector", vec],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.split() == ["1", "2", "3"]
