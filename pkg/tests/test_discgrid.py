import numpy as np
import pytest

from jholo.discgrid import DiscGrid


def test_grid_geometry():
    g = DiscGrid.zeros(16, 32)
    assert g.radii[0] == pytest.approx(0.5 / 16)
    assert g.radii[-1] == pytest.approx(15.5 / 16)
    assert g.angles[1] == pytest.approx(2 * np.pi / 32)
    assert g.nodes.shape == (16, 32)
    # cell areas tile the sampled annulus
    total = float((g.cell_area * np.ones((16, 32))).sum())
    assert total == pytest.approx(np.pi, rel=1e-12)


def test_resolution_constraints():
    with pytest.raises(ValueError):
        DiscGrid.zeros(4, 32)  # too few radial layers
    with pytest.raises(ValueError):
        DiscGrid.zeros(16, 48)  # angular count not a power of two
    with pytest.raises(ValueError):
        DiscGrid.zeros(16, 8)


def test_interpolation_exact_on_affine_along_grid_angles():
    g = DiscGrid.from_function(lambda z: 0.3 + 2.0 * z, 32, 64)
    # exactness holds on grid-angle columns (radial continuation is linear);
    # off-column points only see second-order angular error
    pts = np.array([0.0, 0.5, 0.25 * np.exp(2j * np.pi * 5 / 64), 0.003])
    vals = g.interpolate(pts)
    assert np.allclose(vals, 0.3 + 2.0 * pts, atol=1e-13)
    off = np.array([0.25 + 0.1j, -0.3 + 0.2j])
    assert np.max(np.abs(g.interpolate(off) - (0.3 + 2.0 * off))) < 5e-3


def test_interpolation_outside_annulus():
    g = DiscGrid.from_function(lambda z: z, 32, 64)
    with pytest.raises(ValueError):
        g.interpolate(np.array([0.999]))
    # the flag clamps instead of raising
    g.interpolate(np.array([0.999]), extrapolate_boundary=True)


def test_vector_values_and_sup_norm():
    g = DiscGrid.from_function(lambda z: np.stack([z, 2 * z], axis=-1), 16, 32)
    assert g.n_components == 2
    assert g.sup_norm() == pytest.approx(np.sqrt(5) * 15.5 / 16)


def test_save_load_round_trip(tmp_path):
    g = DiscGrid.from_function(lambda z: np.stack([z ** 2, np.conj(z)], axis=-1), 16, 32)
    path = tmp_path / "disc.grid"
    g.save(str(path))
    h = DiscGrid.load(str(path))
    assert h.n_r == 16 and h.n_theta == 32 and h.n_components == 2
    assert np.array_equal(g.values, h.values)


def test_load_rejects_malformed(tmp_path):
    path = tmp_path / "bad.grid"
    path.write_text("something else\n")
    with pytest.raises(ValueError):
        DiscGrid.load(str(path))
