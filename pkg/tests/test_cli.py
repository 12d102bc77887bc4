import csv
import io
import json

import pytest

from helmpert.cli import COMPARE_COLUMNS, SPECTRUM_COLUMNS, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_spectrum_json_values(capsys):
    code, out, _ = run(capsys, "spectrum", "--shape", "supercircle", "--t", "3", "--lmax", "2", "--jmax", "1")
    assert code == 0
    doc = json.loads(out)
    assert doc["schema"] == 1 and doc["command"] == "spectrum"
    first = doc["rows"][0]
    assert (first["l"], first["j"]) == (0, 1)
    assert first["total"] == pytest.approx(5.217, abs=6e-4)
    assert list(first) == list(SPECTRUM_COLUMNS)


def test_spectrum_circle_csv(capsys):
    code, out, _ = run(capsys, "spectrum", "--shape", "circle", "--lmax", "2", "--jmax", "1", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == list(SPECTRUM_COLUMNS)
    assert [float(r["total"]) for r in rows] == pytest.approx([5.78319, 14.682, 14.682, 26.3746, 26.3746], rel=1e-5)
    assert "-0.0" not in out


def test_output_is_deterministic(capsys, tmp_path):
    args = ["spectrum", "--shape", "ellipse", "--eps", "0.5", "--bc", "neumann", "--lmax", "4", "--jmax", "2"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_fourier_file_round_trip(capsys, tmp_path):
    code, out, _ = run(capsys, "spectrum", "--shape", "ellipse", "--eps", "0.5", "--lmax", "1", "--jmax", "1")
    f = tmp_path / "b.json"
    f.write_text(json.dumps(json.loads(out)["boundary"]))
    code2, out2, _ = run(capsys, "spectrum", "--fourier", str(f), "--lmax", "1", "--jmax", "1")
    assert code == code2 == 0
    assert json.loads(out2)["rows"] == json.loads(out)["rows"]


def test_malformed_boundary_exits_2(capsys, tmp_path):
    f = tmp_path / "bad.json"
    f.write_text(json.dumps({"shape": "supercircle", "a": 1.0}))
    code, out, err = run(capsys, "spectrum", "--fourier", str(f))
    assert code == 2 and out == ""
    assert "'t'" in err
    f.write_text("{not json")
    assert run(capsys, "spectrum", "--fourier", str(f))[0] == 2
    assert run(capsys, "spectrum", "--shape", "ellipse", "--eps", "1.2")[0] == 2
    assert run(capsys, "spectrum")[0] == 2


def test_unsupported_scope_exits_3(capsys):
    code, _, err = run(capsys, "field", "--shape", "ellipse", "--eps", "0.5", "--l", "2", "--order", "2")
    assert code == 3 and "l = 0" in err


def test_nmax_environment(capsys, monkeypatch):
    monkeypatch.setenv("HELMHOLTZ_NMAX", "4")
    _, coarse, _ = run(capsys, "spectrum", "--shape", "supercircle", "--t", "3", "--lmax", "0", "--jmax", "1")
    monkeypatch.setenv("HELMHOLTZ_NMAX", "64")
    _, fine, _ = run(capsys, "spectrum", "--shape", "supercircle", "--t", "3", "--lmax", "0", "--jmax", "1")
    assert json.loads(coarse)["rows"][0]["total"] != json.loads(fine)["rows"][0]["total"]
    monkeypatch.setenv("HELMHOLTZ_NMAX", "lots")
    code, _, err = run(capsys, "spectrum", "--shape", "circle")
    assert code == 2 and "HELMHOLTZ_NMAX" in err


def test_field_nodal_set_circle(capsys):
    code, out, _ = run(capsys, "field", "--shape", "circle", "--l", "1", "--j", "2", "--nr", "41", "--na", "72")
    assert code == 0
    doc = json.loads(out)
    assert doc["order"] == 1 and doc["shape"] == [41, 72]
    cells = {tuple(c) for c in doc["nodal_cells"]}
    # cos(theta) vanishes at theta = pi/2, 3pi/2; J_1 vanishes at r = 3.8317 / 7.0156
    ring = round(40 * 3.8317 / 7.0156)
    assert any(i == ring or i == ring - 1 for i, _ in cells)
    assert (20, 17) in cells or (20, 18) in cells
    samples = doc["samples"]
    assert max(abs(s["psi"]) for s in samples if s["i"] == 40) < 1e-8


def test_field_dirichlet_boundary_zero(capsys):
    code, out, _ = run(
        capsys, "field", "--shape", "ellipse", "--eps", "0.3", "--nr", "11", "--na", "24", "--format", "csv"
    )
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    rim = [float(r["psi"]) for r in rows if r["i"] == "10"]
    assert len(rim) == 24 and max(map(abs, rim)) < 1e-3


def test_oracle_circle(capsys):
    code, out, _ = run(capsys, "oracle", "--shape", "circle", "--kmax", "4", "--basis-order", "12")
    assert code == 0
    ks = [r["k"] for r in json.loads(out)["rows"]]
    assert ks == pytest.approx([2.404826, 3.831706, 3.831706], rel=2e-6)


def test_compare_circle_exact(capsys):
    code, out, _ = run(capsys, "compare", "--shape", "circle", "--rows", "6", "--kmax", "6", "--basis-order", "16")
    assert code == 0
    rows = json.loads(out)["rows"]
    assert len(rows) == 6 and list(rows[0]) == list(COMPARE_COLUMNS)
    assert all(abs(r["pct_error"]) < 1e-4 for r in rows)


def test_compare_square_neumann(capsys):
    code, out, _ = run(capsys, "compare", "--shape", "supercircle", "--t", "1", "--bc", "neumann", "--rows", "7")
    assert code == 0
    rows = json.loads(out)["rows"]
    assert [r["pct_error"] for r in rows[5:7]] == pytest.approx([13.61, 13.61], abs=0.3)
    assert rows[0]["reference"] == pytest.approx(4.935, abs=1e-3)


def test_bad_counts(capsys):
    assert run(capsys, "spectrum", "--shape", "circle", "--jmax", "0")[0] == 2
    assert run(capsys, "compare", "--shape", "circle", "--rows", "0")[0] == 2
    assert run(capsys, "field", "--shape", "circle", "--nr", "1")[0] == 2


def _field(capsys, *extra):
    code, out, _ = run(capsys, "field", "--nr", "31", "--na", "48", *extra)
    assert code == 0
    return json.loads(out)


def test_field_order0_rim_exact(capsys):
    doc = _field(capsys, "--shape", "supercircle", "--t", "3", "--l", "2", "--order", "0")
    assert max(abs(s["psi"]) for s in doc["samples"] if s["i"] == 30) < 1e-12


def test_field_nodal_lines_move_slightly(capsys):
    circ = {tuple(c) for c in _field(capsys, "--shape", "circle", "--l", "1", "--j", "2")["nodal_cells"]}
    sc = {tuple(c) for c in _field(capsys, "--shape", "supercircle", "--t", "3", "--l", "1", "--j", "2")["nodal_cells"]}
    assert sc != circ
    assert len(sc & circ) > 0.8 * len(circ)
