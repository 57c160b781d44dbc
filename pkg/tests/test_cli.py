import csv
import subprocess
import sys
import numpy as np
import pytest

from layerflow.cli import main
from layerflow.config import ConfigError, load_config
from layerflow.layers import LayerConfig, State
from layerflow.output import GaugeWriter, read_vtk_state, write_vtk


@pytest.fixture()
def basin_dir(tmp_path):
    assert main(["case-gen", "basin", "--nodes", "150", "--layers", "2", "-o", str(tmp_path)]) == 0
    return tmp_path


def test_case_gen_and_run_lake_at_rest(basin_dir, capsys):
    cfg = basin_dir / "basin.cfg"
    text = cfg.read_text().replace("t_end = 1.0", "t_end = 0.05")
    cfg.write_text(text)
    assert main(["run", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert "finished" in out
    summary = basin_dir / "out_basin" / "summary.csv"
    rows = list(csv.DictReader(open(summary)))
    drift = abs(float(rows[-1]["mass"]) / float(rows[0]["mass"]) - 1.0)
    assert drift <= 1e-12
    assert (basin_dir / "out_basin" / "figures" / "summary.png").exists()


def test_missing_boundary_tag_diagnostic(basin_dir, capsys):
    cfg = basin_dir / "basin.cfg"
    text = cfg.read_text().replace("[boundary.left]\nkind = wall\n", "")
    cfg.write_text(text)
    rc = main(["run", str(cfg)])
    assert rc != 0
    err = capsys.readouterr().err
    assert "left" in err


def test_config_validation(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("[run]\nmesh = missing.mesh\n")
    with pytest.raises(ConfigError):
        load_config(p)


def test_vtk_roundtrip(tmp_path, small_mesh):
    lc = LayerConfig(np.array([0.4, 0.6]))
    rng = np.random.default_rng(3)
    st = State.zeros(small_mesh, lc, t=1.25)
    st.h[:] = rng.uniform(0.0, 2.0, small_mesh.n_nodes)
    st.h[st.h < 0.05] = 0.0
    hl = st.layer_heights()
    st.qx[:] = hl * rng.uniform(-1, 1, hl.shape)
    st.qy[:] = hl * rng.uniform(-1, 1, hl.shape)
    dry = st.h <= st.h_dry
    st.qx[:, dry] = 0.0
    st.qy[:, dry] = 0.0
    path = tmp_path / "snap.vtk"
    write_vtk(path, st)
    back = read_vtk_state(path, small_mesh, lc)
    assert back.t == st.t
    assert np.allclose(back.h, st.h, rtol=1e-12, atol=1e-15)
    assert np.allclose(back.qx, st.qx, rtol=1e-12, atol=1e-15)
    assert np.allclose(back.qy, st.qy, rtol=1e-12, atol=1e-15)
    # eta column is constant for a still state
    st2 = State.zeros(small_mesh, lc)
    st2.h[:] = np.maximum(1.0 - st2.zb, 0.0)
    write_vtk(tmp_path / "still.vtk", st2)
    lines = (tmp_path / "still.vtk").read_text().splitlines()
    k = lines.index("SCALARS eta double")
    vals = {lines[k + 2 + i] for i in range(small_mesh.n_nodes)}
    assert len(vals) == 1


def test_vtk_single_layer_field_count(tmp_path, small_mesh):
    lc = LayerConfig.uniform(1)
    st = State.zeros(small_mesh, lc)
    st.h[:] = 1.0
    write_vtk(tmp_path / "one.vtk", st)
    txt = (tmp_path / "one.vtk").read_text()
    assert "u_1" in txt and "u_2" not in txt


def test_gauge_writer(tmp_path, small_mesh):
    lc = LayerConfig.uniform(2)
    st = State.zeros(small_mesh, lc)
    st.h[:] = 1.0
    gw = GaugeWriter(tmp_path, small_mesh, lc, np.array([[0.5, 0.5]]))
    gw.record(st, force=True)
    st.t = 0.1
    gw.record(st)
    gw.close()
    rows = list(csv.reader(open(tmp_path / "gauge_0.csv")))
    assert rows[0] == ["t", "h", "eta", "u_1", "u_2", "v_1", "v_2"]
    assert len(rows) == 3
    with pytest.raises(ValueError, match="outside"):
        GaugeWriter(tmp_path, small_mesh, lc, np.array([[9.0, 9.0]]))


def test_cli_entrypoint_subprocess(tmp_path):
    # exercise the installed console path end to end on a tiny thacker run
    rc = subprocess.run([sys.executable, "-m", "layerflow.cli", "case-gen", "thacker",
                         "--nodes", "200", "--layers", "1", "-o", str(tmp_path)],
                        capture_output=True, text=True)
    assert rc.returncode == 0, rc.stderr
    cfg = tmp_path / "thacker.cfg"
    text = cfg.read_text().replace(f"t_end = {0.7092516767214436:.12g}", "t_end = 0.02")
    cfg.write_text(text)
    rc = subprocess.run([sys.executable, "-m", "layerflow.cli", "run", str(cfg)],
                        capture_output=True, text=True)
    assert rc.returncode == 0, rc.stderr
    gauges = tmp_path / "out_thacker" / "gauges" / "gauge_0.csv"
    assert gauges.exists()
    rows = list(csv.reader(open(gauges)))
    assert float(rows[1][1]) == pytest.approx(0.072812, abs=5e-3)


def test_convergence_command_manufactured(tmp_path, capsys):
    # three draining meshes, very short horizon: the command completes and
    # writes a machine-readable table plus the figure
    assert main(["case-gen", "draining", "--nodes", "200", "--layers", "2", "-o", str(tmp_path)]) == 0
    cfg = tmp_path / "draining.cfg"
    cfg.write_text(cfg.read_text().replace("t_end = 1.0", "t_end = 0.05"))
    rc = main(["convergence", str(cfg), "--meshes", "150,300,500",
               "--layers", "1,2,3", "--orders", "1", "--out", str(tmp_path / "conv")])
    assert rc == 0
    table = tmp_path / "conv" / "convergence.csv"
    rows = list(csv.DictReader(open(table)))
    assert len(rows) == 3
    errs = [float(r["l2_error"]) for r in rows]
    assert all(e > 0 for e in errs)
    assert (tmp_path / "conv" / "convergence.png").exists()
