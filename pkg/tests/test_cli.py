import numpy as np
import pytest

from jholo import cli
from jholo import structures as st
from jholo.discgrid import DiscGrid


@pytest.fixture()
def standard_acs(tmp_path):
    path = tmp_path / "standard.acs"
    st.save_structure_family(str(path), "standard", 1, 1.0)
    return str(path)


@pytest.fixture()
def lam_acs(tmp_path):
    path = tmp_path / "lam.acs"
    st.save_structure_family(str(path), "radial_lambda", 1, 1.0, (1.0, 0.4))
    return str(path)


def run(argv):
    return cli.main(argv)


def test_solve_disc_standard(standard_acs, tmp_path, capsys):
    out = tmp_path / "run"
    code = run(
        ["solve-disc", standard_acs, "--a", "0,0", "--b", "0.1,0", "--out", str(out)]
    )
    assert code == 0
    text = capsys.readouterr().out
    assert "converged true" in text
    u = DiscGrid.load(str(out / "disc.grid"))
    expect = DiscGrid.from_function(lambda z: 0.2 * z, 64, 128)
    assert np.max(np.abs(u.values[:, :, 0] - expect.values)) < 1e-10


def test_solve_disc_missing_file(tmp_path):
    assert run(["solve-disc", str(tmp_path / "nope.acs"), "--a", "0,0", "--b", "0.1,0"]) == 1


def test_solve_disc_malformed_structure(tmp_path, capsys):
    bad = tmp_path / "bad.acs"
    bad.write_text("acs v1 n=1 radius=1.0\nfamily radial_lambda 1.0\n")
    code = run(["solve-disc", str(bad), "--a", "0,0", "--b", "0.1,0", "--out", str(tmp_path)])
    assert code == 1
    assert ":2:" in capsys.readouterr().err


def test_solve_disc_nonconvergence_budget(lam_acs, tmp_path, capsys):
    cfg = tmp_path / "tight.cfg"
    cfg.write_text("[solver]\nmax_outer = 1\n")
    out = tmp_path / "run"
    code = run(
        ["solve-disc", lam_acs, "--a", "0,0", "--b", "0.05,0",
         "--config", str(cfg), "--out", str(out)]
    )
    assert code == 2
    text = capsys.readouterr().out
    assert "converged false" in text
    assert "outer_gap 0" in text


def test_unknown_config_key(lam_acs, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[solver]\nfancy_knob = 3\n")
    assert (
        run(["solve-disc", lam_acs, "--a", "0,0", "--b", "0.05,0", "--config", str(cfg)])
        == 1
    )


def test_validate_structure(standard_acs, tmp_path, capsys):
    assert run(["validate-structure", standard_acs, "--out", str(tmp_path)]) == 0
    assert "valid true" in capsys.readouterr().out


def test_estimate_cp_deterministic(tmp_path, capsys):
    assert run(["estimate-cp", "--out", str(tmp_path / "a")]) == 0
    first = capsys.readouterr().out
    assert run(["estimate-cp", "--out", str(tmp_path / "b")]) == 0
    assert capsys.readouterr().out == first
    assert (tmp_path / "a" / "cp_report.txt").read_bytes() == (
        tmp_path / "b" / "cp_report.txt"
    ).read_bytes()


def test_boundary_blaschke_mode(tmp_path, capsys):
    grid_path = tmp_path / "bl.grid"
    DiscGrid.from_function(lambda z: z * (z - 0.5) / (1 - z / 2), 64, 128).save(
        str(grid_path)
    )
    code = run(
        ["boundary", str(grid_path), "--mode", "blaschke", "--out", str(tmp_path / "o")]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "zeros 2" in out
    total = float(out.split("blaschke_sum ")[1].split()[0])
    assert total == pytest.approx(1.5, abs=1e-6)


def test_boundary_riesz_mode(tmp_path, capsys):
    g = DiscGrid.zeros(64, 128)
    rho = g.like((np.abs(g.nodes) ** 2).astype(float))
    grid_path = tmp_path / "rho.grid"
    rho.save(str(grid_path))
    code = run(
        ["boundary", str(grid_path), "--mode", "riesz", "--out", str(tmp_path / "o")]
    )
    assert code == 0
    assert "representation_residual" in capsys.readouterr().out
    assert (tmp_path / "o" / "boundary_riesz_cells.csv").exists()


def test_check_psh_exit_codes(standard_acs, tmp_path, capsys):
    discs = tmp_path / "discs"
    discs.mkdir()
    DiscGrid.from_function(lambda z: np.stack([0.2 * z], axis=-1), 64, 128).save(
        str(discs / "d0.grid")
    )
    assert run(["check-psh", "--discs", str(discs), "--function", "quadratic",
                "--out", str(tmp_path / "o1")]) == 0
    capsys.readouterr()
    assert run(["check-psh", "--discs", str(discs), "--function", "neg-quadratic",
                "--out", str(tmp_path / "o2")]) == 2
    capsys.readouterr()
    empty = tmp_path / "empty"
    empty.mkdir()
    assert run(["check-psh", "--discs", str(empty), "--function", "quadratic",
                "--out", str(tmp_path / "o3")]) == 1


def test_boundary_trace_determinism(tmp_path):
    grid_path = tmp_path / "id.grid"
    DiscGrid.from_function(lambda z: z, 64, 128).save(str(grid_path))
    for sub in ("a", "b"):
        assert run(["boundary", str(grid_path), "--mode", "trace", "--theta", "0.3",
                    "--out", str(tmp_path / sub)]) == 0
    assert (tmp_path / "a" / "boundary_trace.csv").read_bytes() == (
        tmp_path / "b" / "boundary_trace.csv"
    ).read_bytes()
