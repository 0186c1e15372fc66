import json
import math

import numpy as np
import pytest

from smallinc.cli import RunManifest, main, parse_region, run
from smallinc.errors import ConfigError
from smallinc.fileio import (
    format_float,
    parse_config,
    read_lattice,
    read_points,
    read_voxels,
    write_csv,
    write_voxels,
)
from smallinc.scene import VoxelShape

BASE = {
    "wave": {"eps0": 1.0, "mu0": 2.0, "omega": 0.1 / math.sqrt(2.0)},
    "alpha": 0.2,
    "inclusions": [{"center": [0, 0, 0], "shape": {"ball": {"radius": 0.5}}, "eps": 2.0, "mu": 2.0}],
    "source": {"position": [0, 0, 30], "moment_re": [1, 0, 0.3], "moment_im": [0, 0.5, 0]},
    "c0": 0.5,
}


def write_config(tmp_path, **changes):
    cfg = json.loads(json.dumps(BASE))
    cfg.update(changes)
    p = tmp_path / "scene.json"
    p.write_text(json.dumps(cfg, indent=1))
    return p


def test_parse_config_roundtrip(tmp_path):
    scene, opts = parse_config(json.dumps(BASE))
    assert scene.wave.k == pytest.approx(0.1)
    assert scene.source.moment[1] == 0.5j
    assert opts == {}


@pytest.mark.parametrize("mutate,needle", [
    (lambda c: c.update(extra=1), "unknown key(s) extra"),
    (lambda c: c["wave"].update(c=3e8), "wave: unknown key(s) c"),
    (lambda c: c["inclusions"][0]["shape"].update(ball={"radius": 1, "r": 2}), "inclusions[0].shape.ball"),
    (lambda c: c.pop("c0"), "missing key(s) c0"),
    (lambda c: c["source"].update(position=[0, 1]), "source.position"),
    (lambda c: c.update(alpha="big"), "alpha"),
    (lambda c: c.update(energy_weight="other"), "energy_weight"),
])
def test_config_key_diagnostics(mutate, needle):
    cfg = json.loads(json.dumps(BASE))
    mutate(cfg)
    with pytest.raises(ConfigError) as info:
        parse_config(json.dumps(cfg))
    assert needle in str(info.value)


def test_config_syntax_error_has_line():
    with pytest.raises(ConfigError, match=r"<config>:3:"):
        parse_config('{\n "alpha": 0.1,\n "c0": ,\n}')


def test_voxel_file_roundtrip(tmp_path):
    mask = VoxelShape.cube(1.0).mask.copy()
    mask[0, 0, 0] = False
    write_voxels(tmp_path / "v.vox", mask, 0.125)
    back, cell = read_voxels(tmp_path / "v.vox")
    assert cell == 0.125 and np.array_equal(back, mask)
    cfg = json.loads(json.dumps(BASE))
    cfg["inclusions"][0]["shape"] = {"voxels": {"path": "v.vox", "cell": 0.125}}
    scene, _ = parse_config(json.dumps(cfg), base=tmp_path)
    assert np.array_equal(scene.inclusions[0].shape.mask, mask)
    cfg["inclusions"][0]["shape"]["voxels"]["cell"] = 0.5
    with pytest.raises(ConfigError, match="header"):
        parse_config(json.dumps(cfg), base=tmp_path)


def test_voxel_file_corrupt(tmp_path):
    (tmp_path / "bad.vox").write_bytes(b"SMALLINC-VOXELS 2 2 2 0.5\n\x00\x01")
    with pytest.raises(ConfigError, match="expected 8"):
        read_voxels(tmp_path / "bad.vox")


def test_float_format():
    assert format_float(0.1) == "0.1"
    assert float(format_float(1 / 3)) == 1 / 3
    with pytest.raises(ValueError):
        format_float(float("nan"))


def test_points_file(tmp_path):
    (tmp_path / "p.csv").write_text("x,y,z\n1,2,3\n4,5,6\n")
    np.testing.assert_array_equal(read_points(tmp_path / "p.csv"), [[1, 2, 3], [4, 5, 6]])


def test_region_parse():
    r = parse_region(["c=1,2,3", "r=0.5"])
    assert r.center == (1.0, 2.0, 3.0) and r.radius == 0.5
    with pytest.raises(ConfigError):
        parse_region("c=1,2 r=1")


def test_fields_csv_shape(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["fields", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    lines = (tmp_path / "o" / "fields.csv").read_text().splitlines()
    assert len(lines) == 1 + 8
    header = lines[0].split(",")
    assert header[:3] == ["x", "y", "z"] and len(header) == 3 + 2 * 12
    vals = np.array([[float(c) for c in ln.split(",")] for ln in lines[1:]])
    assert np.all(np.isfinite(vals))
    manifest = json.loads((tmp_path / "o" / "run.json").read_text())
    assert manifest["subcommand"] == "fields" and manifest["resolved"]["source_clearance"] == pytest.approx(0.9)


def test_fields_with_points(tmp_path):
    cfg = write_config(tmp_path)
    (tmp_path / "pts.csv").write_text("1,0,0\n0,2,0\n0,0,-3\n")
    assert main(["fields", "--config", str(cfg), "--out", str(tmp_path / "o"),
                 "--points", str(tmp_path / "pts.csv")]) == 0
    assert len((tmp_path / "o" / "fields.csv").read_text().splitlines()) == 4


def test_separation_violation_exit_code(tmp_path, capsys):
    inc = dict(BASE["inclusions"][0])
    cfg = write_config(tmp_path, inclusions=[inc, dict(inc, center=[0.1, 0, 0])])
    assert main(["fields", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "|z_j - z_l|" in err and "c0" in err


def test_malformed_config_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"alpha": 0.1,\n "wave": }')
    assert main(["ptensor", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    assert "bad.json:2:" in capsys.readouterr().err


def test_solver_failure_exit_code(tmp_path):
    cfg = write_config(tmp_path, tol=1e-300, voxels_per_diameter=8)
    out = tmp_path / "o"
    code = run(RunManifest(str(cfg), "oracle", str(out)))
    assert code == 3
    rows = (out / "residual_history.csv").read_text().splitlines()
    assert rows[0] == "step,relative_residual" and len(rows) > 2


def test_ptensor_json(tmp_path):
    cfg = write_config(tmp_path, resolution=12)
    assert main(["ptensor", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    data = json.loads((tmp_path / "o" / "ptensor.json").read_text())
    M = np.array(data[0]["eps"]["entries"])
    np.testing.assert_allclose(M, 3 / 4 * (4 * np.pi / 3 * 0.125) * np.eye(3))
    assert data[0]["mu"]["contrast"] == 1.0
    assert main(["ptensor", "--config", str(cfg), "--out", str(tmp_path / "n"), "--numeric"]) == 0
    data = json.loads((tmp_path / "n" / "ptensor.json").read_text())
    assert data[0]["eps"]["method"] == "numeric"


def test_oracle_lattice_output(tmp_path):
    cfg = write_config(tmp_path, voxels_per_diameter=8)
    assert main(["oracle", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    meta = json.loads((tmp_path / "o" / "oracle.json").read_text())
    inc = meta["inclusions"][0]
    grid = read_lattice(tmp_path / "o" / inc["file"], inc["dims"])
    nonzero = np.any(grid != 0, axis=-1)
    assert nonzero.sum() == inc["voxels"]
    assert meta["final_residual"] <= meta["tol"]


def test_convergence_and_replay(tmp_path):
    cfg = write_config(tmp_path, voxels_per_diameter=8)
    out = tmp_path / "a"
    assert main(["convergence", "--config", str(cfg), "--out", str(out), "--alphas", "0.2,0.1,0.05"]) == 0
    rows = (out / "convergence.csv").read_text().splitlines()
    assert len(rows) == 4 and rows[0].startswith("alpha,leading_max,remainder_max")
    assert main(["replay", str(out / "run.json"), "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "b" / "convergence.csv").read_bytes() == (out / "convergence.csv").read_bytes()


def test_convergence_rejects_short_sweep(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["convergence", "--config", str(cfg), "--out", str(tmp_path / "o"), "--alphas", "0.1"]) == 2


def test_energy_outputs(tmp_path):
    cfg = write_config(tmp_path, voxels_per_diameter=8, energy_weight="conventional")
    out = tmp_path / "e"
    assert main(["energy", "--config", str(cfg), "--out", str(out), "--region", "c=0,0,0", "r=1",
                 "--t", "1.5", "--alphas", "0.2,0.1,0.05"]) == 0
    fit = json.loads((out / "energy.json").read_text())
    assert fit["weight"] == "conventional" and abs(fit["slope"] - 3) < 0.3
    assert len((out / "energy.csv").read_text().splitlines()) == 4
    assert main(["energy", "--config", str(cfg), "--out", str(out)]) == 2


def test_seed_changes_probes(tmp_path):
    cfg = write_config(tmp_path)
    main(["fields", "--config", str(cfg), "--out", str(tmp_path / "s0")])
    main(["fields", "--config", str(cfg), "--out", str(tmp_path / "s1"), "--seed", "1"])
    assert (tmp_path / "s0" / "fields.csv").read_bytes() != (tmp_path / "s1" / "fields.csv").read_bytes()


def test_write_csv_rejects_nonfinite(tmp_path):
    with pytest.raises(ValueError):
        write_csv(tmp_path / "x.csv", ["a"], [[float("inf")]])
