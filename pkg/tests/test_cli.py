import csv
import io
import json
import math

import pytest

from mazecap import cli
from mazecap.fem import SolverError
from mazecap.geometry import CondenserSpec, annulus_spec
from mazecap.mesh import MeshError


def run(tmp_path, *argv):
    return cli.main(["--outdir", str(tmp_path), *argv])


def read_csv(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def slit_count(spec):
    n = 0
    for loop in spec.outer:
        segs = loop.segments
        n += sum(
            a.kind == b.kind == "segment" and a.p0 == b.p1 and a.p1 == b.p0 for a, b in zip(segs, segs[1:] + segs[:1])
        )
    return n


def test_generate_square_maze(tmp_path, capsys):
    assert run(tmp_path, "generate", "square-maze", "--m", "7") == 0
    spec = CondenserSpec.from_json((tmp_path / "square_maze_m7.json").read_text())
    assert slit_count(spec) == 6
    out = json.loads(capsys.readouterr().out)
    assert out["valid"] and out["clearance"] == pytest.approx(1 / 14)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["outputs"] == ["square_maze_m7.json"] and manifest["deterministic"]


def test_generate_spiked_annulus(tmp_path):
    assert run(tmp_path, "generate", "spiked-annulus", "--M", "16") == 0
    spec = CondenserSpec.from_json((tmp_path / "spiked_annulus_M16.json").read_text())
    assert slit_count(spec) == 16


def test_generate_round_trip(tmp_path):
    assert run(tmp_path, "generate", "circular-maze", "--m", "5") == 0
    text = (tmp_path / "circular_maze_m5.json").read_text()
    assert CondenserSpec.from_json(text).to_json() == text


def test_generate_rejects_small_m(tmp_path, capsys):
    assert run(tmp_path, "generate", "square-maze", "--m", "2") == cli.EXIT_INPUT
    assert "m must be >= 3" in capsys.readouterr().err


def test_unknown_family_and_bad_flags(tmp_path):
    assert run(tmp_path, "generate", "hexagon-maze", "--m", "5") == cli.EXIT_INPUT
    assert run(tmp_path, "generate", "square-maze") == cli.EXIT_INPUT
    assert cli.main(["capacity"]) == cli.EXIT_INPUT


def test_outdir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTDIR_ENV, str(tmp_path / "env"))
    assert cli.main(["generate", "square-maze", "--m", "3"]) == 0
    assert (tmp_path / "env" / "square_maze_m3.json").exists()


def test_qh_square_table(tmp_path):
    assert run(tmp_path, "qh", "square-maze", "--params", "7..14", "--no-numeric") == 0
    rows = read_csv(tmp_path / "qh_square_maze.csv")
    got = {int(r["param"]): (float(r["length"]), float(r["perimeter"])) for r in rows}
    assert got[7] == (96, 192) and got[9] == (160, 320) and got[11] == (240, 480) and got[14] == (390, 780)


def test_qh_circular_with_oracle(tmp_path):
    assert run(tmp_path, "qh", "circular-maze", "--params", "5") == 0
    (row,) = read_csv(tmp_path / "qh_circular_maze.csv")
    assert abs(float(row["length"]) - 144) <= 1 and abs(float(row["perimeter"]) - 289) <= 1
    assert float(row["numeric_length"]) > 0


def test_qh_empty_range(tmp_path):
    assert run(tmp_path, "qh", "square-maze", "--params", "") == cli.EXIT_INPUT
    assert run(tmp_path, "qh", "square-maze", "--params", "9..7") == cli.EXIT_INPUT


def test_capacity_annulus_and_determinism(tmp_path):
    spec = tmp_path / "ring.json"
    spec.write_text(annulus_spec().to_json())
    outputs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        assert cli.main(["--outdir", str(d), "capacity", str(spec)]) == 0
        outputs.append({n: (d / n).read_bytes() for n in ("ring_capacity.json", "ring_capacity.csv")})
    assert outputs[0] == outputs[1]
    res = json.loads(outputs[0]["ring_capacity.json"])
    exact = 2 * math.pi / math.log(4)
    assert abs(res["value"] - exact) / exact <= 1e-4
    assert "timings" not in res
    man = json.loads((tmp_path / "run0" / "manifest.json").read_text())
    assert set(man["timings"]["phases"]) >= {"assembly", "solve"}


def test_capacity_corrupt_spec(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    assert run(tmp_path, "capacity", str(bad)) == cli.EXIT_INPUT
    assert run(tmp_path, "capacity", str(tmp_path / "missing.json")) == cli.EXIT_INPUT


def test_capacity_tolerance_not_reached(tmp_path):
    spec = tmp_path / "ring.json"
    spec.write_text(annulus_spec().to_json())
    assert run(tmp_path, "capacity", str(spec), "--levels", "1") == cli.EXIT_TOLERANCE


@pytest.mark.parametrize("exc,code", [(SolverError("x"), cli.EXIT_NUMERIC), (MeshError("x"), cli.EXIT_NUMERIC)])
def test_numerical_failures_map_to_exit_code(tmp_path, monkeypatch, exc, code):
    spec = tmp_path / "ring.json"
    spec.write_text(annulus_spec().to_json())

    def boom(*a, **k):
        raise exc

    monkeypatch.setattr(cli, "capacity", boom)
    assert run(tmp_path, "capacity", str(spec)) == code


def test_map_triangle(tmp_path):
    assert run(tmp_path, "map-triangle", "--theta", str(math.pi / 12), "--samples", "20") == 0
    diag = json.loads((tmp_path / "triangle_map_diagnostics.json").read_text())
    assert diag["max_deviation"] <= 1e-10
    assert len((tmp_path / "triangle_map.csv").read_text().splitlines()) == 61
    assert run(tmp_path, "map-triangle", "--theta", "2.0") == cli.EXIT_INPUT


def test_study_rates_small(tmp_path):
    argv = ["study", "rates", "square-maze", "--params", "3,4,5", "--levels", "2", "--target", "1e-2"]
    assert run(tmp_path / "a", *argv) == 0
    assert run(tmp_path / "b", *argv, "--jobs", "2") == 0
    for name in ("rates_square_maze.csv", "rates_square_maze_fit.json", "rates_square_maze.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    fit = json.loads((tmp_path / "a" / "rates_square_maze_fit.json").read_text())
    assert fit["slope"] < 0
    assert (tmp_path / "a" / "rates_square_maze.svg").read_text().startswith("<svg")


def test_study_refuses_underdetermined_rate_fit(tmp_path):
    assert run(tmp_path, "study", "rates", "square-maze", "--params", "3,4") == cli.EXIT_INPUT


def test_defeature_single_cut_refuses_fit(tmp_path, capsys):
    code = run(tmp_path, "study", "defeature", "--n", "6", "--rho", "0.6", "--cuts", "0.25", "--levels", "1")
    assert code == 0
    rows = read_csv(tmp_path / "defeature.csv")
    assert [float(r["s"]) for r in rows] == [0.0, 0.25]
    fit = json.loads((tmp_path / "defeature_fit.json").read_text())
    assert fit["slope"] is None and "refused" in fit["reason"]
