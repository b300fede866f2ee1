"""Barrier functions and plurisubharmonicity tests.

Plurisubharmonicity relative to a structure is defined by restriction:
the composition with every compatible disc must be subharmonic.  That
reduction is what the module tests, necessarily on finitely many discs,
so a pass is evidence and a failure is a certificate.  Also provided:
the log + A|z| barrier with a logarithmic pole, the log-log barrier with
a weaker pole along a zero set, a weak-Laplacian pairing for C^1 data,
and kernel mollification of Lipschitz structures with re-projection onto
genuine complex structures.
"""

from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from . import structures as st
from .discgrid import DiscGrid
from .solver import residual_lp_norm

NEG_INF_FLOOR = -1e6


@dataclass(frozen=True)
class ScalarFunction:
    """Real-valued function of R^{2n} points, possibly -inf on a polar locus.

    ``evaluator`` maps (..., 2n) point arrays to real values; ``gradient``
    (required for smoothness >= C1) maps them to (..., 2n) gradients.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    smoothness: str = "C0"
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.smoothness not in ("C0", "C1", "C2"):
            raise ValueError("smoothness must be C0, C1 or C2")
        if self.smoothness != "C0" and self.gradient is None:
            raise ValueError("gradient evaluator required for %s data" % self.smoothness)

    def __call__(self, x):
        return np.asarray(self.evaluator(np.asarray(x, dtype=float)), dtype=float)


# ----------------------------------------------------------------------
# barriers


def log_pole_barrier(z, p, strength):
    """log|z - p| + strength * |z - p|; -inf exactly at the marked point.

    Subharmonic along holomorphic discs for any strength >= 0; along discs
    of a Lipschitz structure standard at p it becomes plurisubharmonic
    once the linear strength is large enough.
    """
    z = np.asarray(z, dtype=complex)
    p = np.asarray(p, dtype=complex)
    if p.ndim == 0:
        dist = np.abs(z - p)
    else:
        dist = np.linalg.norm(z - p, axis=-1)
    with np.errstate(divide="ignore"):
        return np.where(
            dist > 0, np.log(np.where(dist > 0, dist, 1.0)) + strength * dist, -np.inf
        )


def chirka_scalar_function(p, strength):
    """The log-pole barrier centered at p (a C^n point) as a ScalarFunction."""
    p = np.atleast_1d(np.asarray(p, dtype=complex))

    def evaluator(x):
        z = st.real_to_complex(x)
        return log_pole_barrier(z, p, strength)

    return ScalarFunction(evaluator=evaluator, smoothness="C0")


def cutoff_barrier(p, strength, domain_radius=1.0, backbone_weight=None, offset=None):
    """Localized log-pole barrier glued to a quadratic backbone.

    chi(z) (log|z-p| + strength |z-p|) + B |z|^2 - C with a smoothstep
    cutoff chi supported in |z-p| < domain_radius/3 (identically 1 inside
    half that distance).  The backbone weight B defaults to a value large
    enough to absorb the curvature the cutoff transition introduces; the
    constant C just normalizes the barrier to be <= 0 on the domain.
    """
    p = np.atleast_1d(np.asarray(p, dtype=complex))
    rho = domain_radius
    d_in, d_out = rho / 6.0, rho / 3.0
    if backbone_weight is None:
        # crude curvature budget of the transition annulus
        peak = abs(np.log(d_in)) + strength * d_out
        backbone_weight = 64.0 * peak / (d_out - d_in) ** 2
    if offset is None:
        offset = backbone_weight * rho ** 2
    base = chirka_scalar_function(p, strength)

    def evaluator(x):
        z = st.real_to_complex(x)
        dist = np.linalg.norm(z - p, axis=-1)
        t = np.clip((dist - d_in) / (d_out - d_in), 0.0, 1.0)
        chi = 1.0 - t * t * (3.0 - 2.0 * t)
        radial = np.sum(np.abs(z) ** 2, axis=-1)
        core = base.evaluator(x)
        # chi * (-inf) at the pole must stay -inf, while beyond the
        # support the local term must vanish exactly
        with np.errstate(invalid="ignore"):
            local = np.where(chi > 0.0, chi * core, 0.0)
        return local + backbone_weight * radial - offset

    return ScalarFunction(evaluator=evaluator, smoothness="C0")


def loglog_barrier(z, f_values, strength):
    """-log(-log |f|^2) + strength * |z|^2 for |f|^2 < 1; -inf where f = 0.

    ``z`` is a scalar point (or an array of scalar points, matching the
    shape of each f_j); ``f_values`` stacks the defining functions f_j
    along the LAST axis, or is a bare array for a single f.
    """
    z = np.asarray(z, dtype=complex)
    fv = np.asarray(f_values, dtype=complex)
    sq = np.sum(np.abs(fv) ** 2, axis=-1) if fv.ndim > z.ndim else np.abs(fv) ** 2
    if np.any(sq >= 1.0):
        raise ValueError("|f|^2 must stay below 1 (shrink the neighborhood)")
    with np.errstate(divide="ignore"):
        inner = np.where(sq > 0, -np.log(np.where(sq > 0, sq, 1.0)), np.inf)
        out = np.where(np.isinf(inner), -np.inf, -np.log(inner) + strength * np.abs(z) ** 2)
    return out


# ----------------------------------------------------------------------
# sub-mean-value testing


def _sample_bicubic(vals, n_r, n_theta, z):
    """Separable cubic Lagrange sampling of scalar grid values.

    Bilinear reads carry a one-sided O(mesh^2) bias that a sign test at
    tight tolerance cannot tolerate; cubic stencils push the quadrature
    bias below the default tolerance for smooth data.  Periodic in the
    angle, clamped to the available layers in the radius.
    """
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    theta = np.mod(np.angle(z), 2.0 * np.pi)
    jf = r * n_r - 0.5
    kf = theta * n_theta / (2.0 * np.pi)
    j0 = np.clip(np.floor(jf).astype(int) - 1, 0, n_r - 4)
    k0 = np.floor(kf).astype(int) - 1
    out = np.zeros(z.shape)
    for a in range(4):
        lj = np.ones(z.shape)
        for m in range(4):
            if m != a:
                lj *= (jf - (j0 + m)) / (a - m)
        row = np.zeros(z.shape)
        for b in range(4):
            lk = np.ones(z.shape)
            for m in range(4):
                if m != b:
                    lk *= (kf - (k0 + m)) / (b - m)
            row += lk * vals[j0 + a, np.mod(k0 + b, n_theta)]
        out += lj * row
    return out


@dataclass
class SubharmonicReport:
    worst_violation: float
    worst_center: complex
    worst_radius: float
    centers_checked: int
    tolerance: float

    @property
    def passes(self):
        return self.worst_violation <= self.tolerance


def is_subharmonic_on_disc(
    values_grid, tol=1e-6, test_radii=None, n_phi=32, pole_points=None, pole_clearance=None
):
    """Sub-mean-value check of scalar grid samples on grid-aligned circles.

    For every interior node and every test radius (multiples of the radial
    step) the center value must not exceed the circle average by more than
    ``tol``.  Nodes at -inf pass vacuously as centers and -inf values inside
    averages are floored (which only strengthens the inequality tested).
    Near a pole the bilinear interpolation of a log singularity produces
    spurious positive defects, so centers whose test circle approaches a
    pole (detected -inf nodes plus any declared ``pole_points``) closer
    than ``pole_clearance`` (default one radial step) are excluded.
    """
    vals = np.asarray(values_grid.values, dtype=float)
    n_r, n_theta = values_grid.n_r, values_grid.n_theta
    dr = 1.0 / n_r
    if test_radii is None:
        test_radii = [m * dr for m in (1, 2, 4, 8) if m * dr < values_grid.max_radius]
    if pole_clearance is None:
        pole_clearance = dr

    floored = values_grid.like(np.maximum(vals, NEG_INF_FLOOR))
    nodes = values_grid.nodes
    poles = vals <= NEG_INF_FLOOR
    pole_pts = nodes[poles]
    if pole_points is not None and len(pole_points):
        pole_pts = np.concatenate([pole_pts, np.asarray(pole_points, dtype=complex)])

    worst = -np.inf
    worst_center = 0j
    worst_radius = 0.0
    checked = 0
    phis = 2.0 * np.pi * np.arange(n_phi) / n_phi
    ring = np.exp(1j * phis)
    for radius in test_radii:
        ok = (np.abs(nodes) + radius <= values_grid.max_radius) & ~poles
        if pole_pts.size:
            dmin = np.min(
                np.abs(nodes[:, :, None] - pole_pts[None, None, :]), axis=2
            )
            ok &= dmin - radius > pole_clearance
        centers = nodes[ok]
        if centers.size == 0:
            continue
        floor_vals = np.asarray(floored.values, dtype=float)
        samples = _sample_bicubic(
            floor_vals, n_r, n_theta,
            (centers[:, None] + radius * ring[None, :]).ravel(),
        ).reshape(centers.size, n_phi)
        averages = samples.mean(axis=1)
        violations = vals[ok] - averages
        checked += centers.size
        idx = int(np.argmax(violations))
        if violations[idx] > worst:
            worst = float(violations[idx])
            worst_center = complex(centers[idx])
            worst_radius = radius
    return SubharmonicReport(
        worst_violation=worst if checked else 0.0,
        worst_center=worst_center,
        worst_radius=worst_radius,
        centers_checked=checked,
        tolerance=tol,
    )


@dataclass
class DiscFamilyReport:
    per_disc: List[SubharmonicReport]
    rejected: int
    tolerance: float

    @property
    def passes(self):
        return bool(self.per_disc) and all(r.passes for r in self.per_disc)

    @property
    def worst_violation(self):
        return max((r.worst_violation for r in self.per_disc), default=0.0)


def compose_along_disc(func, disc):
    """Scalar grid of func(u(zeta)) for a C^n-valued disc grid u."""
    points = st.complex_to_real(disc.values)
    return disc.like(func(points))


def check_psh_along_discs(
    func,
    discs,
    tol=1e-6,
    structure=None,
    p=4.0,
    residual_threshold=5e-3,
    test_radii=None,
    pole_points_per_disc=None,
    pole_clearance=None,
):
    """Necessary-condition test: func composed with each disc is subharmonic.

    When ``structure`` is given, discs whose disc-equation residual exceeds
    ``residual_threshold`` are rejected as witnesses rather than tested.
    ``pole_points_per_disc`` optionally lists, per disc, the disc-domain
    points where the composition has a pole (e.g. preimages of a barrier
    center), for the interpolation guard of :func:`is_subharmonic_on_disc`.
    """
    reports = []
    rejected = 0
    for i, disc in enumerate(discs):
        if structure is not None:
            if residual_lp_norm(disc, structure, p) > residual_threshold:
                rejected += 1
                continue
        poles = pole_points_per_disc[i] if pole_points_per_disc is not None else None
        reports.append(
            is_subharmonic_on_disc(
                compose_along_disc(func, disc),
                tol,
                test_radii,
                pole_points=poles,
                pole_clearance=pole_clearance,
            )
        )
    if not reports:
        raise ValueError("no disc in the corpus passed the residual threshold")
    return DiscFamilyReport(per_disc=reports, rejected=rejected, tolerance=tol)


def find_psh_threshold(
    make_func,
    discs,
    tol=1e-6,
    structure=None,
    max_strength=2.0 ** 16,
    rel_tol=0.02,
    test_radii=None,
    pole_points_per_disc=None,
    pole_clearance=None,
):
    """Smallest barrier strength in [0, max_strength] passing the disc test.

    Monotone bisection (larger strength only helps); returns None when even
    the cap fails.  The threshold is structure-dependent and reported, never
    hardcoded.
    """

    def passes(strength):
        return check_psh_along_discs(
            make_func(strength),
            discs,
            tol,
            structure,
            test_radii=test_radii,
            pole_points_per_disc=pole_points_per_disc,
            pole_clearance=pole_clearance,
        ).passes

    if passes(0.0):
        return 0.0
    lo, hi = 0.0, 1.0
    while not passes(hi):
        lo = hi
        hi *= 2.0
        if hi > max_strength:
            return None
    while hi - lo > rel_tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if passes(mid):
            hi = mid
        else:
            lo = mid
    return hi


# ----------------------------------------------------------------------
# weak-Laplacian (C^1) characterization


@dataclass(frozen=True)
class BumpTestFunction:
    """Nonnegative C^1 bump h (1 - |z - c|^2 / r^2)^3 supported in |z-c| < r."""

    center: complex
    radius: float
    height: float = 1.0

    def __call__(self, z):
        s = np.abs(np.asarray(z, dtype=complex) - self.center) ** 2 / self.radius ** 2
        return np.where(s < 1.0, self.height * (1.0 - s) ** 3, 0.0)

    def gradient(self, z):
        """d/dx and d/dy as a complex number gx + i gy."""
        z = np.asarray(z, dtype=complex)
        w = z - self.center
        s = np.abs(w) ** 2 / self.radius ** 2
        factor = np.where(s < 1.0, -6.0 * self.height * (1.0 - s) ** 2 / self.radius ** 2, 0.0)
        return factor * w


@dataclass
class WeakLaplacianReport:
    pairings: List[float]
    tolerance: float

    @property
    def passes(self):
        return all(v >= -self.tolerance for v in self.pairings)


def weak_laplacian_test(mu, grad_x, grad_y, test_functions, tol=1e-8):
    """Distributional positivity of the Laplacian of C^1 grid data.

    Evaluates -(integral of grad(phi) . grad(mu)) for each bump phi; for
    twice-differentiable mu this is the phi-weighted Laplacian mass, and
    nonnegativity for all test bumps characterizes subharmonicity of C^1
    functions.  Bumps reaching the boundary circle are rejected.
    """
    nodes = mu.nodes
    area = mu.cell_area
    gx = np.asarray(grad_x.values, dtype=float)
    gy = np.asarray(grad_y.values, dtype=float)
    pairings = []
    for bump in test_functions:
        if abs(bump.center) + bump.radius >= 1.0:
            raise ValueError(
                "test bump at %s radius %g touches the boundary circle"
                % (bump.center, bump.radius)
            )
        grad = bump.gradient(nodes)
        integrand = -(grad.real * gx + grad.imag * gy)
        pairings.append(float(np.sum(area * integrand)))
    return WeakLaplacianReport(pairings=pairings, tolerance=tol)


# ----------------------------------------------------------------------
# mollification of Lipschitz structures


@dataclass
class MollificationReport:
    structure: st.AlmostComplexStructure
    smoothing_scale: float
    sup_distance: float
    c1_norm_estimate: float


def _inverse_sqrt_spd(mats, iterations=30):
    """X^{-1/2} for stacked matrices near the identity (Newton-Schulz)."""
    mats = np.asarray(mats)
    dim = mats.shape[-1]
    eye = np.eye(dim)
    norm0 = st.operator_norm(mats - eye)
    if np.any(norm0 >= 1.0):
        raise st.StructureError(
            "smoothed field too far from a complex structure for re-projection"
        )
    y = np.broadcast_to(eye, mats.shape).copy()
    for _ in range(iterations):
        yy = np.einsum("...ij,...jk->...ik", y, y)
        inner = 3.0 * eye - np.einsum("...ij,...jk->...ik", mats, yy)
        y = 0.5 * np.einsum("...ij,...jk->...ik", y, inner)
    residual = np.einsum("...ij,...jk,...kl->...il", y, mats, y) - eye
    if float(np.max(st.operator_norm(residual))) > 1e-10:
        raise st.StructureError("re-projection iteration failed to converge")
    return y


def _mollifier_stencil(dim, count=64):
    """Fixed low-discrepancy offsets in the unit ball with bump weights."""
    from scipy.stats import qmc

    sampler = qmc.Halton(d=dim, scramble=False)
    sampler.fast_forward(1)
    pts = []
    while len(pts) < count:
        batch = 2.0 * sampler.random(4 * count) - 1.0
        inside = batch[np.linalg.norm(batch, axis=1) < 1.0]
        pts.extend(inside)
    pts = np.array(pts[:count])
    w = (1.0 - np.linalg.norm(pts, axis=1) ** 2) ** 2
    return pts, w / w.sum()


def mollify_structure(structure, k, stencil_size=64, sample_count=128):
    """Kernel-smoothed structure at scale 1/k, re-projected onto J^2 = -Id.

    The smoothed matrix X is corrected to X (-X^2)^{-1/2}, which squares to
    minus the identity whenever the correction exists (always, for small
    smoothing error).  Reports the sup-distance to the original field and a
    finite-difference C^1-norm estimate; the distance decreases as k grows.
    """
    if k < 1:
        raise ValueError("smoothing index k must be at least 1")
    scale = 1.0 / k
    if scale >= structure.domain_radius:
        raise ValueError("smoothing scale exceeds the domain radius")
    dim = 2 * structure.dimension_n
    offsets, weights = _mollifier_stencil(dim, stencil_size)
    base = structure.field

    def smoothed_field(x):
        x = np.asarray(x, dtype=float)
        shifted = x[..., None, :] + scale * offsets  # (..., stencil, dim)
        mats = np.asarray(base(shifted), dtype=float)
        avg = np.einsum("s,...sij->...ij", weights, mats)
        correction = _inverse_sqrt_spd(
            -np.einsum("...ij,...jk->...ik", avg, avg)
        )
        return np.einsum("...ij,...jk->...ik", avg, correction)

    smooth = st.AlmostComplexStructure(
        dimension_n=structure.dimension_n,
        field=smoothed_field,
        domain_radius=structure.domain_radius - scale,
        lipschitz_estimate=structure.lipschitz_estimate,
        name="%s|mollified_k=%d" % (structure.name, k),
    )
    probe = st.AlmostComplexStructure(
        dimension_n=structure.dimension_n,
        field=structure.field,
        domain_radius=smooth.domain_radius,
        lipschitz_estimate=structure.lipschitz_estimate,
        name=structure.name,
    )
    points = st.ball_samples(probe, sample_count)
    sup_distance = float(
        np.max(st.operator_norm(smooth(points) - structure(points)))
    )
    # directional finite differences at a fixed step for the C^1 estimate
    h = 0.25 * scale
    c1 = 0.0
    inner = points * (1.0 - h / structure.domain_radius)
    for axis in range(dim):
        step = np.zeros(dim)
        step[axis] = h
        diff = (smooth(inner + step) - smooth(inner - step)) / (2.0 * h)
        c1 = max(c1, float(np.max(st.operator_norm(diff))))
    return MollificationReport(
        structure=smooth,
        smoothing_scale=scale,
        sup_distance=sup_distance,
        c1_norm_estimate=c1,
    )
