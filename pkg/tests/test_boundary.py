import numpy as np
import pytest

from jholo import boundary as bd
from jholo.discgrid import DiscGrid


def blaschke(zeros):
    def f(z):
        out = np.ones_like(z)
        for a in zeros:
            out = out * (z if a == 0 else (z - a) / (1 - np.conj(a) * z))
        return out

    return f


# ----------------------------------------------------------------------
# cones


def test_cone_reduces_and_unions():
    cone = bd.ConeSpec(theta=0.0, alpha=0.5)
    assert bd.cone_contains(cone, 0.9)  # radius always inside
    assert not bd.cone_contains(cone, 0.9j)
    pred = bd.truncated_cone_region([0.0], 0.5, 0.1)
    assert bool(pred(0.9)) == bool(bd.cone_contains(bd.ConeSpec(0.0, 0.5, 0.1), 0.9))
    # union with a second angle only adds points
    pred2 = bd.truncated_cone_region([0.0, np.pi], 0.5, 0.1)
    assert pred2(0.9) and pred2(-0.9)
    assert not pred2(0.95j)


def test_cone_monotone_in_aperture():
    rng = np.random.default_rng(7)
    pts = 0.97 * rng.standard_normal((200, 2)).view(complex).ravel() / 3
    pts = pts[np.abs(pts) < 1]
    narrow = bd.cone_contains(bd.ConeSpec(0.4, 0.25), pts)
    wide = bd.cone_contains(bd.ConeSpec(0.4, 0.75), pts)
    assert np.all(wide[narrow])


def test_radius_inside_every_cone():
    for alpha in (0.1, 0.5, 0.9):
        cone = bd.ConeSpec(theta=1.1, alpha=alpha)
        t = np.linspace(0.0, 0.999, 50)
        assert np.all(bd.cone_contains(cone, t * np.exp(1.1j)))


def test_cone_parameter_validation():
    with pytest.raises(ValueError):
        bd.ConeSpec(theta=0.0, alpha=1.5)
    with pytest.raises(ValueError):
        bd.truncated_cone_region([], 0.5, 0.1)


# ----------------------------------------------------------------------
# rays and non-tangential limits


def test_ray_trace_identity():
    g = DiscGrid.from_function(lambda z: z, 64, 128)
    trace = bd.ray_trace(g, 0.3, 0.0)
    assert trace.limit_estimate is not None
    assert abs(trace.limit_estimate[0] - np.exp(0.3j)) < 1e-3
    assert not trace.truncated


def test_ray_trace_constant_and_truncation():
    g = DiscGrid.from_function(lambda z: np.full_like(z, 2.0 - 1.0j), 64, 128)
    trace = bd.ray_trace(g, 1.0, 0.4)
    assert trace.limit_estimate is not None
    assert trace.limit_estimate[0] == pytest.approx(2.0 - 1.0j)
    # a schedule finer than the grid triggers the truncation flag
    t = bd.default_t_schedule(g)
    trace2 = bd.ray_trace(g, 1.0, 0.0, t_schedule=np.append(t, 1e-6))
    assert trace2.truncated


def test_ray_trace_singular_inner_function_radially():
    g = DiscGrid.from_function(lambda z: np.exp((z + 1) / (z - 1)), 64, 128)
    trace = bd.ray_trace(g, 0.0, 0.0)
    assert trace.limit_estimate is not None
    assert abs(trace.limit_estimate[0]) < 1e-8


def test_nontangential_limit_identity():
    g = DiscGrid.from_function(lambda z: z, 256, 1024)
    for theta in (0.0, 0.3, 2.0):
        limit = bd.nontangential_limit(g, theta)
        assert limit is not None
        assert abs(limit[0] - np.exp(1j * theta)) < 1e-4


def test_nontangential_limit_absent_for_oscillation():
    def osc(z):
        r = np.clip(np.abs(z), 0, 1 - 1e-12)
        return np.sin(1.0 / (1.0 - r)) * np.exp(1j * np.angle(z))

    g = DiscGrid.from_function(osc, 64, 128)
    assert bd.nontangential_limit(g, 0.7) is None


def test_restricted_single_aperture_variant():
    g = DiscGrid.from_function(lambda z: z, 256, 1024)
    limit = bd.nontangential_limit(g, 0.5, alphas=(0.25,))
    assert limit is not None


# ----------------------------------------------------------------------
# Schwarz / Poincare


def test_schwarz_pick_for_moebius():
    a = 0.4 + 0.1j
    g = DiscGrid.from_function(lambda z: (z - a) / (1 - np.conj(a) * z), 64, 128)
    report = bd.schwarz_bound_check(g, 1.0)
    assert report.passes
    assert report.minimal_constant <= 1.0 + 1e-6


def test_schwarz_half_radius_extends_with_slack():
    g = DiscGrid.from_function(lambda z: z ** 2 / (1.1 - z), 64, 128)
    half = bd.schwarz_bound_check(g, 1.0, r_limit=0.5)
    full = bd.schwarz_bound_check(g, half.minimal_constant * 3.0)
    assert full.passes


def test_poincare_distance_matches_euclid_at_origin():
    assert bd.poincare_distance(0.0, 0.3) == pytest.approx(2 * np.arctanh(0.3))


# ----------------------------------------------------------------------
# zeros and Blaschke sums


def test_extract_zeros_blaschke_pair():
    g = DiscGrid.from_function(blaschke([0, 0.5]), 64, 128)
    zeros = sorted(bd.extract_zeros(g), key=lambda w: abs(w.location))
    assert len(zeros) == 2
    assert abs(zeros[0].location) < 1e-7
    assert abs(zeros[1].location - 0.5) < 1e-7
    assert all(z.multiplicity == 1 and z.certified for z in zeros)
    assert bd.blaschke_sum(zeros) == pytest.approx(1.5, abs=1e-6)


def test_extract_zeros_double_zero():
    g = DiscGrid.from_function(lambda z: z ** 2, 64, 128)
    zeros = bd.extract_zeros(g)
    assert len(zeros) == 1
    assert zeros[0].multiplicity == 2
    assert abs(zeros[0].location) < 1e-7


def test_extract_zeros_nonzero_target():
    g = DiscGrid.from_function(lambda z: z, 64, 128)
    zeros = bd.extract_zeros(g, p=0.3 + 0.2j)
    assert len(zeros) == 1
    assert abs(zeros[0].location - (0.3 + 0.2j)) < 1e-7


def test_extract_zeros_higher_dimension_flagged():
    g = DiscGrid.from_function(lambda z: np.stack([z, z], axis=-1), 64, 128)
    zeros = bd.extract_zeros(g, p=np.array([0.0, 0.0]))
    assert zeros and not zeros[0].certified


def test_blaschke_sum_partial_zeta_two():
    zeros = [(1 - 1.0 / k ** 2, 1) for k in range(1, 101)]
    total = bd.blaschke_sum(zeros)
    assert total == pytest.approx(sum(1.0 / k ** 2 for k in range(1, 101)), rel=1e-12)
    assert bd.blaschke_sum([]) == 0.0
    with pytest.raises(ValueError):
        bd.blaschke_sum([(1.0, 1)])


# ----------------------------------------------------------------------
# Riesz diagnostics


def scalar_grid(fn, n_r=64, n_theta=128):
    g = DiscGrid.zeros(n_r, n_theta)
    return g.like(fn(g.nodes).astype(float))


def test_riesz_quadratic():
    rep = bd.riesz_diagnostics(scalar_grid(lambda z: np.abs(z) ** 2))
    assert rep.cell_masses.sum() == pytest.approx(4 * np.pi, rel=1e-9)
    assert rep.representation_residual < 1e-3
    assert rep.weighted_integral == pytest.approx(4 * np.pi / 3, rel=1e-3)


def test_riesz_harmonic():
    rep = bd.riesz_diagnostics(scalar_grid(lambda z: z.real))
    assert np.max(np.abs(rep.cell_masses)) < 1e-6
    assert rep.representation_residual < 1e-12


def test_riesz_log_point_mass():
    for z0 in (0.0, 0.3, 0.3 + 0.2j):
        rho = scalar_grid(lambda z: np.log(np.maximum(np.abs(z - z0), 1e-300)))
        rep = bd.riesz_diagnostics(rho, pole_candidates=[z0])
        _, mass, certified = rep.point_masses[0]
        assert abs(mass - 2 * np.pi) < 0.01 * 2 * np.pi
        assert certified
        assert rep.blaschke_sum == pytest.approx(1.0 - abs(z0))


def test_riesz_rejects_wide_polar_locus():
    vals = np.full((64, 128), -np.inf)
    with pytest.raises(ValueError):
        bd.riesz_diagnostics(DiscGrid(64, 128, vals))
