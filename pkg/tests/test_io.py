import subprocess
import sys

import numpy as np
import pytest

from mmflow import io as mio
from mmflow.errors import ScenarioError
from mmflow.levelset import GridGeometry, LevelSetField
from mmflow.sim import build_scenario

HELIUM_TOML = """\
[domain]
a = 0.0
b = 0.55
c = 0.0
d = 0.0445

[grid]
nx = 550
ny = 45

[medium.1]
gamma = 1.648
p_inf = 0.0
rho = 0.2163
ux = 0.0
uy = 0.0
p = 1.0e5

[medium.2]
gamma = 1.4
p_inf = 0.0
rho = 1.189
ux = 0.0
uy = 0.0
p = 1.0e5

[interface]
shape = "circle"
center = [0.425, 0.0]
radius = 0.025

[shock]
medium = 2
mach = 1.25
position = 0.45
direction = -1.0

[boundaries]
left = "wall"
right = "piston"
bottom = "axis"
top = "wall"
piston_speed = "auto"

[numerics]
cfl = 0.45
flux = "grp"
gfm = "grp"
geometry = "axisymmetric"

[output]
name = "shock-helium-bubble"
t_end = 1.594e-3
snapshots = [2.23e-4, 3.5e-4, 6.0e-4, 1.594e-3]
"""


def write_scenario(tmp_path, text=HELIUM_TOML, name="scn.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_parse_scenario_matches_builtin(tmp_path):
    sc_file = mio.parse_scenario(write_scenario(tmp_path))
    sc_ref = build_scenario("shock-helium-bubble")
    assert sc_file.domain == sc_ref.domain
    assert sc_file.grid == sc_ref.grid
    assert sc_file.eos1 == sc_ref.eos1
    assert sc_file.eos2 == sc_ref.eos2
    assert sc_file.bc.piston_speed == pytest.approx(sc_ref.bc.piston_speed)
    assert sc_file.bc == sc_ref.bc or (
        sc_file.bc.left == sc_ref.bc.left
        and sc_file.bc.right == sc_ref.bc.right)
    assert sc_file.snapshot_times == sc_ref.snapshot_times
    assert sc_file.flux_mode == sc_ref.flux_mode
    assert sc_file.geometry == sc_ref.geometry
    g = sc_ref.geometry_grid()
    X, Y = g.mesh()
    Wf, phif = sc_file.initial(X, Y)
    Wr, phir = sc_ref.initial(X, Y)
    assert np.allclose(Wf, Wr, rtol=1e-12)
    assert np.allclose(phif, phir, atol=1e-12)


def test_parse_scenario_bad_gamma(tmp_path):
    bad = HELIUM_TOML.replace("gamma = 1.648", "gamma = 0.9")
    with pytest.raises(ScenarioError, match="gamma must exceed 1"):
        mio.parse_scenario(write_scenario(tmp_path, bad))


def test_parse_scenario_duplicate_key(tmp_path):
    bad = HELIUM_TOML.replace("nx = 550", "nx = 550\nnx = 549")
    with pytest.raises(ScenarioError, match="nx"):
        mio.parse_scenario(write_scenario(tmp_path, bad))


def test_parse_scenario_unknown_key(tmp_path):
    bad = HELIUM_TOML.replace("cfl = 0.45", "cfl = 0.45\nwibble = 1")
    with pytest.raises(ScenarioError, match="wibble"):
        mio.parse_scenario(write_scenario(tmp_path, bad))


def test_parse_scenario_missing_section(tmp_path):
    bad = HELIUM_TOML.replace("[grid]\nnx = 550\nny = 45\n", "")
    with pytest.raises(ScenarioError, match=r"\[grid\]"):
        mio.parse_scenario(write_scenario(tmp_path, bad))


def test_render_parse_round_trip(tmp_path):
    sc = build_scenario("shock-helium-bubble")
    text = mio.render_scenario_toml(
        sc,
        interface={"shape": "circle", "center": [0.425, 0.0], "radius": 0.025},
        media_states={"1": (0.2163, 0.0, 0.0, 1e5),
                      "2": (1.189, 0.0, 0.0, 1e5)},
        shock={"medium": 2, "mach": 1.25, "position": 0.45,
               "direction": -1.0})
    p = tmp_path / "round.toml"
    p.write_text(text)
    sc2 = mio.parse_scenario(p)
    assert sc2.domain == sc.domain
    assert sc2.grid == sc.grid
    assert sc2.snapshot_times == sc.snapshot_times
    assert sc2.cfl == sc.cfl
    # canonical form is a fixed point of parse -> render
    text2 = mio.render_scenario_toml(
        sc2,
        interface={"shape": "circle", "center": [0.425, 0.0], "radius": 0.025},
        media_states={"1": (0.2163, 0.0, 0.0, 1e5),
                      "2": (1.189, 0.0, 0.0, 1e5)},
        shock={"medium": 2, "mach": 1.25, "position": 0.45,
               "direction": -1.0})
    assert text2 == text


def random_snapshot(nx=7, ny=5, seed=0):
    rng = np.random.default_rng(seed)
    g = GridGeometry(nx, ny, 0.1, 0.2, -0.3, 0.1)
    W = rng.uniform(0.1, 1e5, (4, nx, ny))
    phi = rng.normal(size=(nx, ny))
    return W, LevelSetField(phi, g)


def test_snapshot_round_trip_exact(tmp_path):
    W, ls = random_snapshot()
    path = tmp_path / "t.snap"
    mio.write_snapshot(path, 2.23e-4, W, ls,
                       {"scenario": "x", "flux_mode": "GRP"})
    t, W2, phi2, grid2, meta = mio.read_snapshot(path)
    assert t == 2.23e-4
    assert np.array_equal(W2, W)
    assert np.array_equal(phi2, ls.phi)
    assert grid2 == ls.grid
    assert meta["flux_mode"] == "GRP"


def test_snapshot_golden_bytes(tmp_path):
    g = GridGeometry(2, 2, 0.5, 0.5, 0.0, 0.0)
    W = np.arange(16, dtype=float).reshape(4, 2, 2) + 0.125
    ls = LevelSetField(np.array([[-1.0, 1.0], [2.0, -0.5]]), g)
    path = tmp_path / "g.snap"
    mio.write_snapshot(path, 0.5, W, ls)
    expected = (
        "# mmflow-snapshot 1.0\n"
        "# time = 0.5\n"
        "# nx = 2\n"
        "# ny = 2\n"
        "# dx = 0.5\n"
        "# dy = 0.5\n"
        "# x0 = 0\n"
        "# y0 = 0\n"
        "# columns: i j x y phi medium rho ux uy p\n"
        "0 0 0.25 0.25 -1 1 0.125 4.125 8.125 12.125\n"
        "0 1 0.25 0.75 1 2 1.125 5.125 9.125 13.125\n"
        "1 0 0.75 0.25 2 2 2.125 6.125 10.125 14.125\n"
        "1 1 0.75 0.75 -0.5 1 3.125 7.125 11.125 15.125\n"
    )
    assert path.read_text() == expected


def test_snapshot_rejects_bad_version(tmp_path):
    W, ls = random_snapshot()
    path = tmp_path / "t.snap"
    mio.write_snapshot(path, 1.0, W, ls)
    text = path.read_text().replace("mmflow-snapshot 1.0",
                                    "mmflow-snapshot 2.0")
    path.write_text(text)
    with pytest.raises(ScenarioError, match="version"):
        mio.read_snapshot(path)


def test_snapshot_shape_mismatch(tmp_path):
    W, ls = random_snapshot()
    with pytest.raises(ScenarioError, match="shapes"):
        mio.write_snapshot(tmp_path / "x.snap", 0.0, W[:, :3, :], ls)


def test_schlieren():
    rho = np.ones((8, 8))
    s = mio.schlieren(rho)
    assert np.array_equal(s, np.ones((8, 8)))
    rho2 = np.ones((8, 8))
    rho2[4:, :] = 2.0
    s2 = mio.schlieren(rho2)
    assert s2.min() == pytest.approx(np.exp(-15.0))
    assert np.argmin(s2[:, 4]) in (3, 4)
    # linear field: constant gradient -> constant interior value
    X = np.arange(10)[:, None] * np.ones((10, 10))
    s3 = mio.schlieren(X)
    assert np.allclose(s3[1:-1, 1:-1], s3[1, 1])
    with pytest.raises(ScenarioError):
        mio.schlieren(np.ones((2, 5)))


def run_cli(*args):
    return subprocess.run([sys.executable, "-m", "mmflow.cli", *args],
                          capture_output=True, text=True)


def test_cli_version():
    out = run_cli("--version")
    assert out.returncode == 0
    assert "mmflow" in out.stdout


def test_cli_oracle_rh():
    out = run_cli("oracle", "rh", "--gamma", "1.4", "--rho", "1.189",
                  "--p", "1e5", "--mach", "1.25")
    assert out.returncode == 0
    assert "-128.678" in out.stdout


def test_cli_oracle_riemann():
    out = run_cli("oracle", "riemann", "--left", "1,0,1",
                  "--right", "0.125,0,0.1", "--gamma-left", "1.4",
                  "--gamma-right", "1.4")
    assert out.returncode == 0
    assert "0.30313" in out.stdout


def test_cli_scenario_error_exit_code(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[domain]\na = 0\n")
    out = run_cli("run", str(bad))
    assert out.returncode == 2


def test_cli_io_error_exit_code(tmp_path):
    out = run_cli("run", str(tmp_path / "missing.toml"))
    assert out.returncode == 2  # unreadable scenario is a scenario error


def test_cli_run_static(tmp_path):
    out = run_cli("run", "static-bubble", "--grid", "16x16",
                  "--snapshots", "2e-5", "--out", str(tmp_path))
    assert out.returncode == 0, out.stderr
    snaps = list(tmp_path.glob("*.snap"))
    assert len(snaps) == 1
    t, W, phi, grid, meta = mio.read_snapshot(snaps[0])
    assert t == 2e-5
    assert meta["scenario"] == "static-bubble"


def test_shipped_scenario_files_match_builders():
    import pathlib

    import mmflow
    root = pathlib.Path(mmflow.__file__).resolve().parents[2] / "scenarios"
    for name in ("shock-helium-bubble", "bubble-collapse-water"):
        sc_f = mio.parse_scenario(root / f"{name}.toml")
        sc_r = build_scenario(name)
        assert sc_f.domain == sc_r.domain and sc_f.grid == sc_r.grid
        assert sc_f.eos1 == sc_r.eos1 and sc_f.eos2 == sc_r.eos2
        assert sc_f.snapshot_times == sc_r.snapshot_times
        g = sc_r.geometry_grid()
        X, Y = g.mesh()
        Wf, pf = sc_f.initial(X, Y)
        Wr, pr = sc_r.initial(X, Y)
        assert np.allclose(Wf, Wr, rtol=1e-12)
        assert np.allclose(pf, pr, atol=1e-12)
