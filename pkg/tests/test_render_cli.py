import hashlib
import json

import numpy as np
import pytest

from pwtrans.cli import main
from pwtrans.errors import ValidationError
from pwtrans.grid import GridGeometry, GridSet
from pwtrans.render import (
    BLUE, RenderLayers, montage, read_pgm, read_ppm, render_ppm, write_pgm, write_ppm,
)


def test_pgm_golden_bytes():
    g = GridGeometry(3, 2, 1.0)
    bits = np.array([[1, 0, 0], [0, 1, 1]], bool)  # row j=0 is the bottom
    data = write_pgm(GridSet(g, bits))
    assert data == b"P5\n3 2\n255\n" + bytes([0, 255, 255, 255, 0, 0])


def test_pgm_round_trip():
    g = GridGeometry(37, 23, 0.1)
    K = GridSet(g, np.random.default_rng(0).random(g.shape) < 0.5)
    assert read_pgm(write_pgm(K), g) == K


def test_pgm_reader_errors():
    with pytest.raises(ValidationError):
        read_pgm(b"P6\n1 1\n255\n\x00\x00\x00")
    with pytest.raises(ValidationError):
        read_pgm(b"P5\n2 2\n255\n\x00")
    assert read_pgm(b"P5\n# comment\n1 1\n255\n\xff").count == 1


def test_render_single_blue_layer():
    g = GridGeometry(4, 3, 1.0)
    data = render_ppm(RenderLayers().add(GridSet.full(g), BLUE))
    assert data == b"P6\n4 3\n255\n" + bytes([0, 0, 255]) * 12


def test_render_empty_layer_white():
    g = GridGeometry(2, 2, 1.0)
    data = render_ppm(RenderLayers().add(GridSet.empty(g), BLUE))
    assert read_ppm(data).tolist() == [[[255, 255, 255]] * 2] * 2


def test_render_later_layers_overdraw():
    g = GridGeometry(2, 1, 1.0)
    a = GridSet.full(g)
    b = GridSet(g, np.array([[True, False]]))
    rgb = RenderLayers().add(a, (1, 2, 3)).add(b, (9, 9, 9)).to_rgb()
    assert rgb.tolist() == [[[9, 9, 9], [1, 2, 3]]]


def test_render_rejects_mixed_geometry():
    with pytest.raises(ValidationError):
        RenderLayers().add(GridSet.full(GridGeometry(2, 2, 1.0)), BLUE).add(
            GridSet.full(GridGeometry(3, 3, 1.0)), BLUE).to_rgb()
    with pytest.raises(ValidationError):
        RenderLayers().to_rgb()


def test_montage_layout():
    a = np.zeros((2, 3, 3), np.uint8)
    out = montage([a, a], gap=1)
    assert out.shape == (2, 7, 3) and (out[:, 3] == 200).all()
    assert read_ppm(write_ppm(out)).shape == (2, 7, 3)


# -- CLI -------------------------------------------------------------------

def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_itm_run_halfswap(capsys, specs_dir):
    code, out = run(capsys, "itm", "run", "--spec", str(specs_dir / "halfswap.json"))
    assert code == 0 and out.out.strip() == "finite N=0 A=[0/1,1/1]"


def test_itm_run_derived(capsys, specs_dir, tmp_path):
    code, out = run(capsys, "itm", "run", "--spec", str(specs_dir / "derived.json"), "--out", str(tmp_path))
    assert code == 0 and out.out.strip() == "finite N=1 A=[0/1,3/4]"
    result = json.loads((tmp_path / "result.json").read_text())
    assert result["attractor"] == [["0/1", "3/4"]]
    assert json.loads((tmp_path / "manifest.json").read_text())["outputs"]["result.json"]


def test_grid_run_cap_exit_code(capsys, specs_dir):
    code, _ = run(capsys, "grid", "run", "--spec", str(specs_dir / "disk3.json"), "--cap", "10", "--require-finite")
    assert code == 2
    code, out = run(capsys, "grid", "run", "--spec", str(specs_dir / "disk3.json"), "--cap", "100", "--require-finite")
    assert code == 0 and out.out.startswith("stabilized")


def test_unknown_flag_exit_one(capsys):
    code, out = run(capsys, "grid", "run", "--bogus")
    assert code == 1 and "usage" in out.err


def test_missing_spec_and_bad_spec(capsys, tmp_path):
    assert run(capsys, "itm", "run")[0] == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"omega": ["0", "1"], "branches": [{"region": ["0", "1/2"], "vector": "1"}]}))
    assert run(capsys, "itm", "run", "--spec", str(bad))[0] == 1
    bad.write_text("{not json")
    assert run(capsys, "itm", "run", "--spec", str(bad))[0] == 1


def test_io_error_exit_three(capsys, tmp_path):
    assert run(capsys, "itm", "run", "--spec", str(tmp_path / "missing.json"))[0] == 3


def digests(path):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(path.iterdir())}


def test_torus_run_seeded_is_deterministic(capsys, tmp_path):
    args = ["torus", "run", "--seed", "17", "--n", "64", "--cap", "3000"]
    assert run(capsys, *args, "--out", str(tmp_path / "a"))[0] == 0
    assert run(capsys, *args, "--out", str(tmp_path / "b"))[0] == 0
    assert digests(tmp_path / "a") == digests(tmp_path / "b")


def test_render_round_trip(capsys, tmp_path):
    g = GridGeometry(16, 8, 1 / 16)
    rng = np.random.default_rng(9)
    masks = [GridSet(g, rng.random(g.shape) < 0.3) for _ in range(2)]
    paths = []
    for k, m in enumerate(masks):
        p = tmp_path / f"m{k}.pgm"
        p.write_bytes(write_pgm(m))
        paths.append(p)
    out = tmp_path / "out"
    code, _ = run(capsys, "render", "--layer", f"{paths[0]}:0000ff", "--layer", f"{paths[1]}:dc0000", "--out", str(out))
    assert code == 0
    for k, m in enumerate(masks):
        assert read_pgm((out / f"layer_{k}.pgm").read_bytes(), g) == m
    rgb = read_ppm((out / "render.ppm").read_bytes())[::-1]
    assert (rgb[masks[1].bits] == [220, 0, 0]).all()
    assert (rgb[masks[0].bits & ~masks[1].bits] == [0, 0, 255]).all()


def test_hausdorff_command(capsys, tmp_path):
    g = GridGeometry(8, 8, 1 / 8)
    a = np.zeros(g.shape, bool)
    a[0, 0] = True
    b = a.copy()
    b[0, 3] = True
    (tmp_path / "a.pgm").write_bytes(write_pgm(GridSet(g, a)))
    (tmp_path / "b.pgm").write_bytes(write_pgm(GridSet(g, b)))
    code, out = run(capsys, "hausdorff", str(tmp_path / "a.pgm"), str(tmp_path / "b.pgm"))
    assert code == 0 and out.out.strip() == "d_H=0.375 d(A,B)=0.0 d(B,A)=0.375"
    code, out = run(capsys, "hausdorff", str(tmp_path / "a.pgm"), str(tmp_path / "b.pgm"), "--wrap", "torus", "--h", "1")
    assert out.out.strip() == "d_H=3.0 d(A,B)=0.0 d(B,A)=3.0"


def test_curve_scale_probe_sweep_commands(capsys, specs_dir, tmp_path):
    code, out = run(capsys, "curve", "--spec", str(specs_dir / "derived.json"), "--h", "1/256")
    assert code == 0 and out.out.splitlines()[-1] == "1,0.0"
    code, out = run(capsys, "scale", "--spec", str(specs_dir / "derived.json"), "--resolutions", "1/8,1/16,1/32", "--cap", "50")
    assert code == 0 and [line.split(",")[4] for line in out.out.splitlines()[1:4]] == ["1", "1", "1"]
    code, out = run(capsys, "probe", "semicontinuity", "--spec", str(specs_dir / "disk3.json"),
                    "--radius", "0.001", "--samples", "5", "--epsilon", "0.01", "--out", str(tmp_path / "p"))
    assert code == 0 and "max_directed=0.0" in out.out
    cfg = json.loads((specs_dir / "sweep_torus.json").read_text())
    cfg.update(samples=3, cap=100, resolutions=[32])
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    code, out = run(capsys, "sweep", "--config", str(tmp_path / "cfg.json"), "--out", str(tmp_path / "s"))
    assert code == 0
    assert (tmp_path / "s" / "sweep.csv").read_text().startswith("sample_id,")
