"""Acceptance suite: one test (and one printed pass line) per criterion.

Each criterion is exercised end to end against an independent oracle;
tolerances are stated inline next to the assertions they govern.
"""

import time

import numpy as np
import pytest

from jholo import boundary as bd
from jholo import cli
from jholo import psh
from jholo import structures as st
from jholo.cauchy import apply_cauchy_green, default_setting, wirtinger_derivatives
from jholo.discgrid import DiscGrid
from jholo.solver import (
    SolveConfig,
    affine_disc,
    outer_solve,
    phi_ab,
    set_default_grid_shape,
    solve_disc_through,
)

SETTING = default_setting(4.0, 64, 128)
A0 = np.array([0.0 + 0j])


def say(n, label):
    print("criterion %d (%s): PASS" % (n, label))


@pytest.fixture(autouse=True)
def default_resolution():
    set_default_grid_shape(64, 128)
    yield
    set_default_grid_shape(64, 128)


def test_criterion_01_integrable_case_exactness():
    s = st.standard_structure()
    b = np.array([0.1 + 0j])
    start = time.perf_counter()
    report = solve_disc_through(s, A0, b, SETTING)
    elapsed = time.perf_counter() - start
    expect = affine_disc(64, 128, A0, b)
    err = report.u.like(report.u.values - expect.values).sup_norm()
    assert err <= 1e-10
    assert report.residual_lp <= 5e-3  # tol_cg
    assert elapsed <= 1.0
    say(1, "integrable-case exactness")


def test_criterion_02_contraction_certificate():
    b = np.array([0.05 + 0j])
    for q in (0.015, 0.03, 0.05):
        s = st.constant_deficiency_structure(np.array([[q, 0.0], [0.0, -q]]))
        start = time.perf_counter()
        report = outer_solve(s, A0, b, SETTING, SolveConfig())
        elapsed = time.perf_counter() - start
        bound = 4.0 * report.q_used * report.cp_used
        assert 0.1 <= bound <= 0.5
        # gap ratios after the second inner step stay under the certificate
        assert report.contraction_rate_observed <= bound + 0.1
        # a-priori norm bound, checked as an inequality
        assert report.final_sobolev_norm <= report.affine_sobolev_norm / (1.0 - bound)
        assert elapsed <= 10.0
    say(2, "contraction certificate")


def test_criterion_03_pde_residual_convergence():
    s = st.radial_lambda_structure(1.0, 0.4)
    b = np.array([0.05 + 0j])
    results = {}
    for n_r, n_theta in ((64, 128), (128, 256)):
        set_default_grid_shape(n_r, n_theta)
        setting = default_setting(4.0, n_r, n_theta)
        results[n_r] = solve_disc_through(s, A0, b, setting)
    coarse, fine = results[64], results[128]
    assert fine.residual_lp <= 0.75 * coarse.residual_lp
    on_coarse = fine.u.interpolate(coarse.u.nodes.ravel()).reshape(
        64, 128, -1
    )
    assert np.max(np.abs(on_coarse - coarse.u.values)) <= 1e-3
    say(3, "pde residual convergence")


def test_criterion_04_cauchy_green_identity():
    errs = {}
    for n_r, n_theta in ((64, 128), (128, 256)):
        g = DiscGrid.from_function(lambda z: np.ones_like(z), n_r, n_theta)
        out = apply_cauchy_green(g)
        errs[n_r] = float(np.max(np.abs(out.values - np.conj(out.nodes))))
    assert errs[64] <= 5e-3
    # halving under doubling, floored where the identity is already exact
    assert errs[128] <= max(0.5 * errs[64], 1e-12)

    corpus = [
        lambda z: np.ones_like(z),
        lambda z: z,
        lambda z: np.conj(z),
        lambda z: z ** 2,
        lambda z: np.conj(z) ** 2,
        lambda z: z * np.conj(z),
        lambda z: np.exp(z),
        lambda z: np.exp(np.conj(z)) / 2,
        lambda z: np.sin(z),
        lambda z: z * np.conj(z) ** 2 + 0.5 * z,
    ]
    for fn in corpus:
        g = DiscGrid.from_function(fn, 64, 128)
        _, dzbar = wirtinger_derivatives(apply_cauchy_green(g))
        assert np.max(np.abs(dzbar.values - g.values)) <= 5e-3
    say(4, "cauchy-green identity")


def test_criterion_05_interpolation_identity():
    zero_half = np.array([0.0, 0.5])
    # every normalized fixed-point map evaluation is pinned
    for q in (0.0, 0.02, 0.05):
        s = (
            st.standard_structure()
            if q == 0.0
            else st.constant_deficiency_structure(np.array([[q, 0.0], [0.0, -q]]))
        )
        a, b = np.array([0.01 + 0j]), np.array([0.05 - 0.02j])
        u = affine_disc(64, 128, a, b)
        out = phi_ab(u, s, a, b)
        vals = out.interpolate(zero_half)
        assert abs(vals[0] - a[0]) <= 1e-6
        assert abs(vals[1] - b[0]) <= 1e-6
    # and every converged disc
    s = st.radial_lambda_structure(1.0, 0.4)
    report = solve_disc_through(s, A0, np.array([0.05 + 0j]), SETTING)
    vals = report.u.interpolate(zero_half)
    assert abs(vals[0] - 0.0) <= 1e-6
    assert abs(vals[1] - 0.05) <= 1e-6
    say(5, "interpolation identity")


def _scalar_grid(fn, n_r=64, n_theta=128):
    g = DiscGrid.zeros(n_r, n_theta)
    return g.like(fn(g.nodes).astype(float))


def test_criterion_06_riesz_representation():
    kink = 9.0 / 64  # regularized log: kink on a cell interface
    candidates = [
        lambda z: np.abs(z) ** 2,
        lambda z: z.real,
        lambda z: np.maximum(np.log(np.maximum(np.abs(z), 1e-300)), np.log(kink)),
    ]
    for fn in candidates:
        rep = bd.riesz_diagnostics(_scalar_grid(fn))
        assert rep.representation_residual <= 1e-3
    for z0 in (0.0, 0.3, 0.3 + 0.2j):
        rho = _scalar_grid(lambda z: np.log(np.maximum(np.abs(z - z0), 1e-300)))
        rep = bd.riesz_diagnostics(rho, pole_candidates=[z0])
        _, mass, certified = rep.point_masses[0]
        assert abs(mass - 2 * np.pi) <= 0.01 * 2 * np.pi
        assert certified
    say(6, "riesz representation")


def test_criterion_07_blaschke_pipeline():
    zeros_true = [0.0, 0.5, 1 - 1.0 / 9, 1 - 1.0 / 16]

    def product(z):
        out = np.ones_like(z)
        for a in zeros_true:
            out = out * (z if a == 0 else (z - a) / (1 - a * z))
        return out

    g = DiscGrid.from_function(product, 192, 512)
    found = sorted(bd.extract_zeros(g), key=lambda w: abs(w.location))
    assert len(found) == 4
    for a, z in zip(sorted(zeros_true), found):
        assert abs(z.location - a) <= 1e-4
    total = bd.blaschke_sum(found)
    assert abs(total - (1.5 + 1.0 / 9 + 1.0 / 16)) <= 1e-6

    # barrier point mass at the preimage of a marked point, per converged disc
    weighted = {}
    for n_r, n_theta in ((64, 128), (128, 256)):
        set_default_grid_shape(n_r, n_theta)
        setting = default_setting(4.0, n_r, n_theta)
        for s in (
            st.radial_lambda_structure(1.0, 0.4),
            st.constant_deficiency_structure(np.array([[0.03, 0.0], [0.0, -0.03]])),
        ):
            report = solve_disc_through(s, A0, np.array([0.05 + 0j]), setting)
            assert report.converged
            dist = np.abs(report.u.values[:, :, 0])
            rho = report.u.like(np.log(np.maximum(dist, 1e-300)) + 1.0 * dist)
            diag = bd.riesz_diagnostics(rho, pole_candidates=[0.0])
            _, mass, _ = diag.point_masses[0]
            assert mass >= 2 * np.pi * 0.95
            weighted.setdefault(s.name, {})[n_r] = diag.weighted_integral
    for by_res in weighted.values():
        drift = abs(by_res[128] - by_res[64]) / abs(by_res[64])
        assert drift <= 0.05
    say(7, "blaschke pipeline")


def test_criterion_08_fatou_at_desk_scale():
    # converged bounded discs pass with their own reported minimal constant
    for s in (
        st.radial_lambda_structure(1.0, 0.4),
        st.constant_deficiency_structure(np.array([[0.03, 0.0], [0.0, -0.03]])),
    ):
        report = solve_disc_through(s, A0, np.array([0.05 + 0j]), SETTING)
        check = bd.schwarz_bound_check(report.u, 1.0)
        assert bd.schwarz_bound_check(report.u, check.minimal_constant).passes

    # cauchy-certified cone limits for maps with known boundary behavior
    thetas = 2 * np.pi * np.arange(360) / 360.0
    a = 0.3
    for fn, boundary_value in (
        (lambda z: z, lambda t: np.exp(1j * t)),
        (
            lambda z: (z - a) / (1 - a * z),
            lambda t: (np.exp(1j * t) - a) / (1 - a * np.exp(1j * t)),
        ),
    ):
        g = DiscGrid.from_function(fn, 256, 1024)
        certified = 0
        for theta in thetas:
            limit = bd.nontangential_limit(g, theta)
            if limit is not None:
                assert abs(limit[0] - boundary_value(theta)) <= 1e-3
                certified += 1
        assert certified >= 0.99 * 360

    # singular inner function: limit 0 at theta = 0, limits at sampled angles
    g = DiscGrid.from_function(lambda z: np.exp((z + 1) / (z - 1)), 256, 1024)
    at_zero = bd.nontangential_limit(g, 0.0)
    assert at_zero is not None and abs(at_zero[0]) <= 1e-6
    sampled = np.concatenate([np.arange(1.3, 3.15, 0.1), -np.arange(1.3, 3.15, 0.1)])
    for theta in sampled:
        assert bd.nontangential_limit(g, theta) is not None
    say(8, "fatou at desk scale")


def _solver_corpus(setting):
    discs = []
    for lam1 in (0.2, 0.3, 0.4, 0.5):
        s = st.radial_lambda_structure(1.0, lam1)
        for b in (0.04 + 0j, 0.05 * np.exp(1j * np.pi / 6), 0.03 + 0.02j):
            discs.append(solve_disc_through(s, A0, np.array([b]), setting).u)
    for q in (0.01, 0.02, 0.03, 0.04, 0.05):
        s = st.constant_deficiency_structure(np.array([[q, 0.0], [0.0, -q]]))
        discs.append(solve_disc_through(s, A0, np.array([0.04 + 0j]), setting).u)
    for q in (0.02, 0.03, 0.04):
        s = st.constant_deficiency_structure(np.array([[0.0, q], [q, 0.0]]))
        discs.append(solve_disc_through(s, A0, np.array([0.04 + 0j]), setting).u)
    return discs


def test_criterion_09_chirka_lipschitz_psh():
    discs = _solver_corpus(SETTING)
    assert len(discs) >= 20
    poles = [[0.0]] * len(discs)
    a_star = psh.find_psh_threshold(
        lambda A: psh.chirka_scalar_function(np.array([0j]), A),
        discs,
        tol=5e-3,
        pole_points_per_disc=poles,
        pole_clearance=3.0 / 64,
    )
    assert a_star is not None  # finite threshold found below the cap

    # mollification ladder and the defect bound with a fitted constant
    s = st.radial_lambda_structure(1.0, 0.5)
    data = {}
    for k in (8, 16):
        moll = psh.mollify_structure(s, k)
        report = solve_disc_through(moll.structure, A0, np.array([0.04 + 0j]), SETTING)
        rho = report.u.like(
            np.log(np.maximum(np.abs(report.u.values[:, :, 0]), 1e-300))
        )
        sub = psh.is_subharmonic_on_disc(
            rho, tol=5e-3, pole_points=[0.0], pole_clearance=3.0 / 64
        )
        data[k] = (moll.sup_distance, max(sub.worst_violation, 0.0), sub.worst_radius)
    eps8, v8, r8 = data[8]
    eps16, v16, r16 = data[16]
    assert eps16 <= eps8  # ladder decreases
    assert v16 <= v8  # defects shrink with the ladder
    fitted_k = v16 / (eps16 * r16 ** 2)  # fitted on the finer level
    assert np.isfinite(fitted_k)
    assert v8 <= fitted_k * eps8 * r8 ** 2  # bound transfers to the coarser level
    say(9, "chirka/lipschitz plurisubharmonicity")


def test_criterion_10_determinism(tmp_path):
    acs = tmp_path / "lam.acs"
    st.save_structure_family(str(acs), "radial_lambda", 1, 1.0, (1.0, 0.4))
    payloads = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        assert (
            cli.main(
                ["solve-disc", str(acs), "--a", "0,0", "--b", "0.05,0",
                 "--seed", "3", "--out", str(out)]
            )
            == 0
        )
        payloads.append(
            (out / "solve_report.txt").read_bytes() + (out / "disc.grid").read_bytes()
        )
    assert payloads[0] == payloads[1]

    grid_path = tmp_path / "id.grid"
    DiscGrid.from_function(lambda z: z, 64, 128).save(str(grid_path))
    csvs = []
    for sub in ("c", "d"):
        out = tmp_path / sub
        assert (
            cli.main(
                ["boundary", str(grid_path), "--mode", "zeros", "--out", str(out)]
            )
            == 0
        )
        csvs.append((out / "boundary_zeros.csv").read_bytes())
    assert csvs[0] == csvs[1]
    say(10, "determinism")
