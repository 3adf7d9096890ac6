import numpy as np
import pytest

from nwkit import io
from nwkit.cli import RunConfig, main, run
from nwkit.fitting import MagnetoTrace
from nwkit.gpa import LatticeRegion, synthesize_lattice
from nwkit.tlm import TlmDataset


def listing(root):
    return sorted(p.relative_to(root).as_posix() for p in root.rglob("*"))


def simulate(out, *extra, seed=0):
    args = ["simulate-wl", "--out", str(out), "--seed", str(seed), "--set", "noise_sigma=0.05e-6"]
    for item in extra:
        args += ["--set", item]
    return main(args)


def test_simulate_then_fit_recovers_l_phi(tmp_path, capsys):
    assert simulate(tmp_path / "sim", "l_phi=130e-9", "background_G=2e-6") == 0
    assert main(["fit-wl", str(tmp_path / "sim" / "trace.csv"), "--out", str(tmp_path / "fit")]) == 0
    fit = io.parse_kv_file(tmp_path / "fit" / "fit.txt")
    l_phi, err = float(fit["l_phi"]), float(fit["l_phi_stderr"])
    assert abs(l_phi - 130e-9) < 4 * err
    assert fit["converged"] == "true"
    names, data = io.read_table(tmp_path / "fit" / "model_vs_B.txt")
    assert names == ["B_T", "G_model_S"] and data.shape == (201, 2)
    assert "l_phi" in (tmp_path / "fit" / "report.txt").read_text()
    assert capsys.readouterr().err == ""


def test_fit_with_lso_bound(tmp_path):
    simulate(tmp_path / "sim")
    out = tmp_path / "fit"
    args = ["fit-wl", str(tmp_path / "sim" / "trace.csv"), "--out", str(out),
            "--set", "lso_bound=true", "--set", "lso_grid_min=100e-9", "--set", "lso_per_decade=20"]
    assert main(args) == 0
    bound = float(io.parse_kv_file(out / "fit.txt")["lso_lower_bound"])
    assert 100e-9 < bound < 10e-6
    names, prof = io.read_table(out / "lso_profile.txt")
    assert names == ["l_so_m", "chi2"] and prof.shape[0] == 41


def test_unknown_command(capsys):
    assert main(["frobnicate"]) == 1
    err = capsys.readouterr().err
    assert "error[domain]" in err and "usage:" in err
    assert main([]) == 1
    assert main(["--help"]) == 0


def test_flat_trace_is_fit_error(tmp_path, capsys):
    p = tmp_path / "flat.csv"
    io.write_trace_csv(p, MagnetoTrace(np.linspace(-8, 8, 21), np.full(21, 1e-4)))
    assert main(["fit-wl", str(p), "--out", str(tmp_path / "o")]) == 1
    assert capsys.readouterr().err.startswith("error[fit] degenerate")


def test_parse_error_exit_2(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("B_T,G_S\n0,1\n1,abc\n")
    assert main(["fit-wl", str(p), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert err.startswith("error[parse]") and "line 3" in err
    assert main(["fit-wl", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "o")]) == 2


def test_domain_errors(tmp_path, capsys):
    assert simulate(tmp_path / "a", "l_phi=-1") == 1
    assert capsys.readouterr().err.startswith("error[domain]")
    assert simulate(tmp_path / "b", "bogus=1") == 1
    assert "bogus" in capsys.readouterr().err
    assert main(["tlm", "--out", str(tmp_path / "c")]) == 1


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig("nope")
    assert run(RunConfig("shape-minimize", params={"gamma_side": "-1"}, output_dir="/nonexistent/x")) == 1


def test_determinism_byte_identical(tmp_path):
    for tag in ("a", "b"):
        assert simulate(tmp_path / tag / "sim", seed=42) == 0
        trace = tmp_path / tag / "sim" / "trace.csv"
        assert main(["fit-wl", str(trace), "--out", str(tmp_path / tag / "fit")]) == 0
    for rel in ("sim/trace.csv", "sim/trace_vs_B.txt", "fit/model_vs_B.txt", "fit/data_vs_B.txt", "fit/fit.txt"):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()
    simulate(tmp_path / "c" / "sim", seed=43)
    assert (tmp_path / "c" / "sim" / "trace.csv").read_bytes() != (tmp_path / "a" / "sim" / "trace.csv").read_bytes()


def test_config_precedence(tmp_path):
    cfg = tmp_path / "sim.cfg"
    cfg.write_text("l_phi=200e-9\nn_points=51\n")
    assert main(["simulate-wl", "--config", str(cfg), "--set", "n_points=31", "--out", str(tmp_path / "o")]) == 0
    tr = io.parse_trace_csv(tmp_path / "o" / "trace.csv")
    assert len(tr) == 31
    assert tr.conductance_S.min() == pytest.approx(-2 * 7.748091729e-5 / 2 * 200e-9 / 1.25e-6, rel=1e-6)


def test_gpa_and_line_scan_commands(tmp_path):
    px, a = 0.05, 0.8
    img = synthesize_lattice(
        [LatticeRegion(a, (0.0, 90.0)), LatticeRegion(a, (0.0, 90.0), strain=-0.02, bounds=(0, 128, 64, 128))],
        (128, 128),
        px,
    )
    raster = tmp_path / "img.gpa"
    io.write_raster(raster, img.pixels, px)
    out = tmp_path / "gpa"
    args = ["gpa", str(raster), "--out", str(out), "--set", f"gx={1 / a}", "--set", "ref_region=40,90,46,54",
            "--set", "scan=64,30,64,100", "--set", "scan_width=3"]
    assert main(args) == 0
    strain = io.parse_raster(out / "strain.gpa")
    assert strain.pixels.shape == (128, 128)
    names, prof = io.read_table(out / "profile.txt")
    assert names == ["distance_nm", "strain"] and prof.shape == (71, 2)
    scan_out = tmp_path / "scan"
    assert main(["line-scan", str(out / "strain.gpa"), "--out", str(scan_out),
                 "--set", "p0=64,30", "--set", "p1=64,100", "--set", "width=3"]) == 0
    _, prof2 = io.read_table(scan_out / "profile.txt")
    # the raster stores float32, so the rescan agrees to single precision
    assert np.allclose(prof2, prof, atol=1e-6)
    assert main(["gpa", str(raster), "--out", str(out), "--set", f"gx={1 / a}"]) == 1


def test_shape_command(tmp_path):
    out = tmp_path / "shape"
    assert main(["shape-minimize", "--out", str(out), "--set", "misfit_eps0=0", "--set", "gamma_interface=0",
                 "--set", "gamma_top=1", "--set", "gamma_side=1"]) == 0
    opt = io.parse_kv_file(out / "optimum.txt")
    assert float(opt["aspect_ratio"]) == pytest.approx(0.5, rel=1e-7)
    assert opt["edge_minimum"] == "false"
    names, tab = io.read_table(out / "energy_vs_r.txt")
    assert names == ["r", "E_J_per_m"] and tab.shape == (201, 2)


def test_tlm_command(tmp_path):
    p = tmp_path / "tlm.csv"
    io.write_tlm_csv(p, TlmDataset([1e-6, 2e-6, 3e-6], [300 / 34, 400 / 34, 500 / 34], n_parallel=34))
    out = tmp_path / "t"
    assert main(["tlm", str(p), "--out", str(out), "--set", "control_R=2e6"]) == 0
    fit = io.parse_kv_file(out / "tlm_fit.txt")
    assert float(fit["contact_resistance_ohm"]) == pytest.approx(100.0, rel=1e-9)
    assert float(fit["resistance_per_length_ohm_per_m"]) == pytest.approx(1e8, rel=1e-9)
    assert fit["conduction_attributed"] == "true"
    names, rl = io.read_table(out / "r_vs_l.txt")
    assert names == ["L_m", "R_per_wire_ohm"]
    assert np.allclose(rl[:, 1], [300, 400, 500])


def test_nothing_written_outside_output_dir(tmp_path, monkeypatch):
    work = tmp_path / "cwd"
    work.mkdir()
    monkeypatch.chdir(work)
    out = tmp_path / "out"
    simulate(out / "sim")
    main(["fit-wl", str(out / "sim" / "trace.csv"), "--out", str(out / "fit")])
    main(["shape-minimize", "--out", str(out / "shape")])
    assert listing(work) == []
    assert set(listing(tmp_path)) == {"cwd", "out", *(f"out/{p}" for p in listing(out))}


def test_all_tables_reparse(tmp_path):
    simulate(tmp_path / "sim")
    main(["fit-wl", str(tmp_path / "sim" / "trace.csv"), "--out", str(tmp_path / "fit")])
    main(["shape-minimize", "--out", str(tmp_path / "shape")])
    for path in tmp_path.rglob("*.txt"):
        if path.name == "report.txt":
            continue
        if path.name in ("fit.txt", "optimum.txt"):
            assert io.parse_kv_file(path)
            continue
        names, data = io.read_table(path)
        assert data.shape[1] == len(names) and np.all(np.isfinite(data))
