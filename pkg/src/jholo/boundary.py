"""Boundary behavior of disc maps: cones, limits, zeros and Riesz masses.

Everything here is instance-level checking: given grid samples of a map
or a potential, the module certifies non-tangential limits along concrete
cones (by a Cauchy criterion, never "almost everywhere"), verifies
Schwarz/Poincare-type bounds, extracts preimages by winding numbers,
sums their Blaschke series, and measures distributional Laplacian mass
cell by cell, including log-pole point masses and the residual of the
classical representation formula.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .discgrid import DiscGrid

TWO_PI = 2.0 * np.pi


# ----------------------------------------------------------------------
# cone geometry


@dataclass(frozen=True)
class ConeSpec:
    """Conic approach region at e^{i theta}: points with
    |zeta - e^{i theta} |zeta|| < alpha (1 - |zeta|), optionally truncated
    to |zeta| > r_min."""

    theta: float
    alpha: float
    r_min: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("aperture alpha must lie strictly between 0 and 1")
        if not 0.0 <= self.r_min < 1.0:
            raise ValueError("r_min must lie in [0, 1)")


def cone_contains(cone, zeta):
    """Strict membership test of a point (or array) in the cone."""
    zeta = np.asarray(zeta, dtype=complex)
    if np.any(np.abs(zeta) > 1.0 + 1e-14):
        raise ValueError("cone membership is defined on the closed unit disc")
    r = np.abs(zeta)
    vertex = np.exp(1j * cone.theta)
    inside = np.abs(zeta - vertex * r) < cone.alpha * (1.0 - r)
    if cone.r_min > 0.0:
        inside = inside & (r > cone.r_min)
    return inside


def truncated_cone_region(angles, alpha, r):
    """Predicate for the union of truncated cones over the given vertex angles."""
    angles = list(angles)
    if not angles:
        raise ValueError("the angle set must be nonempty")
    if not 0.0 < r < 1.0:
        raise ValueError("truncation radius must lie in (0, 1)")
    cones = [ConeSpec(theta=t, alpha=alpha, r_min=r) for t in angles]

    def predicate(zeta):
        zeta = np.asarray(zeta, dtype=complex)
        out = np.zeros(zeta.shape, dtype=bool)
        for cone in cones:
            out |= cone_contains(cone, zeta)
        return out

    return predicate


# ----------------------------------------------------------------------
# ray traces and non-tangential limits


@dataclass
class RayTrace:
    theta: float
    nu: float
    samples: List[Tuple[float, np.ndarray]]
    limit_estimate: Optional[np.ndarray]
    cauchy_gap: float
    truncated: bool


def default_t_schedule(grid, t_max=0.5, count=24):
    """Geometric approach schedule down to the resolvable annulus."""
    t_min = 1.0 - grid.max_radius + 1e-12
    if t_max <= t_min:
        raise ValueError("t_max below the grid's resolvable distance")
    return t_min * (t_max / t_min) ** (1.0 - np.arange(count) / (count - 1.0))


def _gap(values):
    """Max pairwise Euclidean gap within a stack of value vectors."""
    stack = np.atleast_2d(np.asarray(values))
    diff = stack[:, None, :] - stack[None, :, :]
    return float(np.max(np.linalg.norm(diff, axis=2)))


def _boundary_estimates(t, vals):
    """First-order extrapolants of an approach sequence to t = 0.

    Raw samples along any approach stay a grid step apart, so a Cauchy
    test on them can never resolve a limit below first order in the mesh;
    the per-step linear extrapolants converge whenever the trace does and
    blow up when it oscillates, which is the behavior the test needs.
    """
    slopes = (vals[1:] - vals[:-1]) / (t[1:] - t[:-1])[:, None]
    return vals[1:] - slopes * t[1:, None]


def ray_trace(u, theta, nu, t_schedule=None, cauchy_tol=1e-4, tail=8):
    """Interpolated samples of u along e^{i theta} - t e^{i (theta - nu)}.

    The limit estimate is set only when the trailing ``tail`` extrapolated
    boundary estimates are mutually within ``cauchy_tol``; sample points
    beyond the grid's resolvable annulus are dropped and flagged as a
    truncation.
    """
    if not -np.pi / 2 < nu < np.pi / 2:
        raise ValueError("direction nu must lie in (-pi/2, pi/2)")
    if t_schedule is None:
        t_schedule = default_t_schedule(u)
    t = np.asarray(sorted(t_schedule, reverse=True), dtype=float)
    if np.any(t <= 0):
        raise ValueError("t values must be positive")
    zeta = np.exp(1j * theta) - t * np.exp(1j * (theta - nu))
    keep = np.abs(zeta) <= u.max_radius
    truncated = bool(np.any(~keep))
    t = t[keep]
    zeta = zeta[keep]
    vals = u.interpolate(zeta)
    if u.n_components == 0:
        vals = vals[:, None]
    samples = [(float(ti), vals[i]) for i, ti in enumerate(t)]
    if len(samples) >= 2:
        estimates = _boundary_estimates(t, vals)
        tail_est = estimates[-min(tail, len(estimates)):]
        gap = _gap(tail_est)
        limit = tail_est[-1] if gap < cauchy_tol else None
    else:
        gap = np.inf
        limit = None
    return RayTrace(
        theta=theta,
        nu=nu,
        samples=samples,
        limit_estimate=limit,
        cauchy_gap=gap,
        truncated=truncated,
    )


def nontangential_limit(u, theta, alphas=(0.25, 0.5, 0.75), cauchy_tol=1e-4, levels=12):
    """Common limit over cone nets at e^{i theta}, or None.

    For each aperture a deterministic net fills the truncated cone down to
    the resolvable annulus; the limit exists when every net tail is Cauchy
    and the per-aperture estimates agree, all within ``cauchy_tol``.
    Passing a single aperture gives the restricted (one-cone) variant.
    """
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    if np.any((alphas <= 0) | (alphas >= 1)):
        raise ValueError("apertures must lie in (0, 1)")
    delta_min = 1.0 - u.max_radius + 1e-12
    delta_max = 0.2
    deltas = delta_min * (delta_max / delta_min) ** (
        1.0 - np.arange(levels) / (levels - 1.0)
    )
    offsets = np.array([-0.9, -0.45, 0.0, 0.45, 0.9])
    estimates = []
    for alpha in alphas:
        rings = []
        for delta in deltas:
            sigma = offsets * alpha * delta / (1.0 - delta)
            zeta = (1.0 - delta) * np.exp(1j * (theta + sigma))
            vals = u.interpolate(zeta)
            if u.n_components == 0:
                vals = vals[:, None]
            rings.append(vals)
        rings = np.asarray(rings)  # (levels, offsets, n)
        # each angular offset traces its own approach curve; extrapolate
        # every curve to the boundary and demand mutual agreement
        curve_estimates = []
        for i in range(offsets.size):
            est = _boundary_estimates(deltas, rings[:, i, :])
            curve_estimates.append(est[-min(3, len(est)):])
        tail = np.concatenate(curve_estimates, axis=0)
        if _gap(tail) >= cauchy_tol:
            return None
        estimates.append(tail.mean(axis=0))
    if _gap(estimates) >= cauchy_tol:
        return None
    return np.mean(estimates, axis=0)


# ----------------------------------------------------------------------
# Schwarz / Poincare bounds


@dataclass
class SchwarzReport:
    minimal_constant: float
    derivative_constant: float
    distance_constant: float
    tolerance: float
    given_constant: float

    @property
    def passes(self):
        return self.given_constant >= self.minimal_constant - self.tolerance


def poincare_distance(z1, z2):
    """Hyperbolic distance 2 artanh(|z1 - z2| / |1 - conj(z2) z1|)."""
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    ratio = np.abs(z1 - z2) / np.abs(1.0 - np.conj(z2) * z1)
    return 2.0 * np.arctanh(np.minimum(ratio, 1.0 - 1e-15))


def schwarz_bound_check(u, constant, tolerance=1e-9, pair_stride=(8, 16), r_limit=None):
    """Derivative decay ||du|| <= C / (1 - |zeta|) and the Poincare-Lipschitz
    bound dist(u(z), u(z')) <= C delta(z, z') on sampled node pairs.

    Reports the smallest constant that would pass both checks; ``r_limit``
    restricts both checks to nodes inside that radius.
    """
    from .cauchy import wirtinger_derivatives

    du_dz, du_dzbar = wirtinger_derivatives(u)
    if u.n_components == 0:
        stretch = np.abs(du_dz.values) + np.abs(du_dzbar.values)
    else:
        stretch = np.linalg.norm(
            np.abs(du_dz.values) + np.abs(du_dzbar.values), axis=2
        )
    r = u.radii[:, None]
    j_max = u.n_r if r_limit is None else int(np.sum(u.radii <= r_limit))
    if j_max < 2:
        raise ValueError("r_limit leaves fewer than two radial layers")
    derivative_constant = float(np.max((stretch * (1.0 - r))[:j_max]))

    nodes = u.nodes[:j_max : pair_stride[0], :: pair_stride[1]].ravel()
    vals = u.values[:j_max : pair_stride[0], :: pair_stride[1]]
    vals = vals.reshape(nodes.size, -1)
    dist = np.linalg.norm(vals[:, None, :] - vals[None, :, :], axis=2)
    pdist = poincare_distance(nodes[:, None], nodes[None, :])
    mask = pdist > 1e-12
    ratios = np.where(mask, dist / np.where(mask, pdist, 1.0), 0.0)
    distance_constant = float(np.max(ratios))
    minimal = max(derivative_constant, distance_constant)
    return SchwarzReport(
        minimal_constant=minimal,
        derivative_constant=derivative_constant,
        distance_constant=distance_constant,
        tolerance=tolerance,
        given_constant=constant,
    )


# ----------------------------------------------------------------------
# zero extraction and the Blaschke sum


@dataclass
class ExtractedZero:
    location: complex
    multiplicity: int
    certified: bool


class _LocalEvaluator:
    """Trigonometric interpolation in the angle, quintic-stencil polynomial
    interpolation in the radius.  Far more accurate than bilinear reads for
    analytic maps, which is what pins zero locations well below the cell
    size."""

    def __init__(self, grid):
        if grid.n_components not in (0, 1):
            raise ValueError("local evaluation supports scalar or C^1-valued grids")
        vals = grid.values if grid.n_components == 0 else grid.values[:, :, 0]
        self.spec = np.fft.fft(np.asarray(vals, dtype=complex), axis=1)
        self.modes = np.fft.fftfreq(grid.n_theta, d=1.0 / grid.n_theta)
        self.grid = grid

    def __call__(self, z):
        z = complex(z)
        r = abs(z)
        theta = np.angle(z)
        n_r = self.grid.n_r
        jf = r * n_r - 0.5
        j0 = int(np.clip(round(jf) - 2, 0, n_r - 5))
        layers = self.spec[j0 : j0 + 5]
        ring_vals = (layers * np.exp(1j * self.modes * theta)).sum(axis=1) / self.grid.n_theta
        radii = self.grid.radii[j0 : j0 + 5]
        # Lagrange interpolation in r through the five layers
        out = 0.0
        for i in range(5):
            w = 1.0
            for l in range(5):
                if l != i:
                    w *= (r - radii[l]) / (radii[i] - radii[l])
            out += w * ring_vals[i]
        return out


def _phase_increments(values):
    """Principal-branch argument increments along a closed sample loop."""
    rolled = np.roll(values, -1, axis=-1)
    return np.angle(rolled / values)


def extract_zeros(
    u,
    p=0.0,
    max_newton=60,
    position_tol=1e-10,
    cluster_tol=1e-6,
):
    """Preimages of p with multiplicities, by cell winding numbers (n = 1).

    Each grid cell's boundary winding of u - p locates candidate cells;
    candidates are polished by (multiplicity-aware) Newton iteration on a
    locally spectral interpolant.  The small disc inside the first radial
    layer is treated as one extra cell.  If a boundary sample lands exactly
    on a zero, the count is retried with an infinitesimally shifted target,
    which is the deterministic analogue of merging the straddled cells.
    For maps into C^n with n > 1 a proximity-clustering heuristic is used
    and the results are flagged uncertified.
    """
    if u.n_components > 1:
        return _extract_zeros_clustering(u, p)
    p = complex(p)
    vals = (u.values if u.n_components == 0 else u.values[:, :, 0]) - p

    for attempt in range(3):
        if np.min(np.abs(vals)) > 1e-13 * max(1.0, float(np.max(np.abs(vals)))):
            break
        shift = 10.0 ** (-11 + attempt) * (1 + 1j)
        vals = vals - shift

    windings = _cell_windings(vals)
    center_winding = int(
        np.rint(_phase_increments(vals[0]).sum() / TWO_PI)
    )

    evaluator = _LocalEvaluator(u.like(vals + 0j))
    zeros = []
    if center_winding != 0:
        zeros.append(_polish_zero(evaluator, 0.0, center_winding, max_newton, position_tol))
    radii = u.radii
    angles = u.angles
    dtheta = TWO_PI / u.n_theta
    for j, k in zip(*np.nonzero(windings)):
        m = int(windings[j, k])
        seed = (radii[j] + 0.5 / u.n_r) * np.exp(1j * (angles[k] + 0.5 * dtheta))
        zeros.append(_polish_zero(evaluator, seed, m, max_newton, position_tol))

    return _cluster_zeros(zeros, cluster_tol)


def _cell_windings(vals):
    """Rounded boundary winding per grid cell (corners at adjacent nodes)."""
    n_r, n_theta = vals.shape
    a = vals[:-1, :]  # (j, k)
    b = vals[1:, :]  # (j+1, k)
    c = np.roll(vals[1:, :], -1, axis=1)  # (j+1, k+1)
    d = np.roll(vals[:-1, :], -1, axis=1)  # (j, k+1)
    total = (
        np.angle(b / a) + np.angle(c / b) + np.angle(d / c) + np.angle(a / d)
    )
    return np.rint(total / TWO_PI).astype(int)


def _polish_zero(evaluator, seed, multiplicity, max_newton, position_tol):
    z = complex(seed)
    h = 1e-6
    m = abs(multiplicity)
    converged = False
    for _ in range(max_newton):
        f = evaluator(z)
        df = (evaluator(z + h) - evaluator(z - h)) / (2.0 * h)
        if df == 0:
            break
        step = m * f / df
        z_new = z - step
        if abs(z_new - seed) > 0.2:
            z_new = complex(seed)  # runaway; keep the cell-certified seed
            break
        z = z_new
        if abs(step) < position_tol:
            converged = True
            break
    # existence is certified by the winding count even if polishing stalls
    del converged
    return ExtractedZero(location=z, multiplicity=m, certified=True)


def _cluster_zeros(zeros, cluster_tol):
    merged = []
    for zero in sorted(zeros, key=lambda w: (w.location.real, w.location.imag)):
        for other in merged:
            if abs(other.location - zero.location) < cluster_tol:
                other.multiplicity += zero.multiplicity
                break
        else:
            merged.append(
                ExtractedZero(zero.location, zero.multiplicity, zero.certified)
            )
    return merged


def _extract_zeros_clustering(u, p):
    """Heuristic preimage clustering for higher-dimensional targets."""
    p = np.atleast_1d(np.asarray(p, dtype=complex))
    dist = np.linalg.norm(u.values - p[None, None, :], axis=2)
    scale = float(np.max(dist))
    threshold = max(1e-12, 2.0 * float(np.min(dist)) + 1e-3 * scale)
    hits = np.nonzero(dist <= threshold)
    points = u.nodes[hits]
    zeros = []
    for pt in points:
        for other in zeros:
            if abs(other.location - pt) < 4.0 / u.n_r:
                break
        else:
            zeros.append(ExtractedZero(location=complex(pt), multiplicity=1, certified=False))
    return zeros


def blaschke_sum(zeros):
    """Sum of multiplicity * (1 - |zeta_k|) over listed zeros."""
    total = 0.0
    for zero in zeros:
        loc = zero.location if isinstance(zero, ExtractedZero) else complex(zero[0])
        mult = zero.multiplicity if isinstance(zero, ExtractedZero) else int(zero[1])
        if abs(loc) >= 1.0:
            raise ValueError("zero at |zeta| >= 1 is not admissible: %s" % loc)
        total += mult * (1.0 - abs(loc))
    return total


# ----------------------------------------------------------------------
# Riesz-measure diagnostics


@dataclass
class RieszReport:
    cell_masses: np.ndarray
    point_masses: List[Tuple[complex, float, bool]]
    blaschke_sum: float
    weighted_integral: float
    representation_residual: float
    boundary_mean: float
    center_value: float


def _laplacian_cell_masses(grid):
    """Distributional Laplacian mass per cell by discrete flux balance.

    Cells are centered at the nodes; the innermost cells absorb the small
    disc around the origin (their inner edge has zero length), and the
    outer edge derivative is one-sided.
    """
    vals = np.asarray(grid.values, dtype=float)
    n_r, n_theta = grid.n_r, grid.n_theta
    dr = 1.0 / n_r
    dtheta = TWO_PI / n_theta
    radii = grid.radii

    # radial fluxes through interfaces r_{j+1/2}, j = 0 .. n_r-1
    flux_r = np.zeros((n_r + 1, n_theta))
    interior = (vals[1:, :] - vals[:-1, :]) / dr
    flux_r[1:n_r] = interior * ((radii[:-1] + 0.5 * dr) * dtheta)[:, None]
    # quadratic extrapolation of d/dr at r = r_last + dr/2
    outer_slope = (2.0 * vals[-1] - 3.0 * vals[-2] + vals[-3]) / dr
    flux_r[n_r] = outer_slope * ((radii[-1] + 0.5 * dr) * dtheta)

    # angular fluxes through interfaces theta_{k+1/2}
    dtheta_vals = (np.roll(vals, -1, axis=1) - vals) / (radii[:, None] * dtheta)
    flux_t = dtheta_vals * dr  # edge length dr

    masses = (
        flux_r[1:] - flux_r[:-1] + flux_t - np.roll(flux_t, 1, axis=1)
    )
    return masses


def _regularized(grid, pole, ladder_n):
    """Max-regularization against a slightly flattened log pole."""
    dist = np.abs(grid.nodes - pole)
    with np.errstate(divide="ignore"):
        floor_vals = (1.0 - 1.0 / ladder_n) * np.log(np.where(dist > 0, dist, 1e-300)) - ladder_n
    return grid.like(np.maximum(np.asarray(grid.values, dtype=float), floor_vals))


def _point_mass(grid, pole, ladder=(16, 32)):
    """Laplacian mass concentrated at a pole candidate.

    Sums cell masses inside shrinking circles (an exact discrete flux
    through the staircase contour), removes the smooth background by a
    linear fit in the squared radius, and extrapolates the regularization
    ladder in 1/n.
    """
    dr = 1.0 / grid.n_r
    r_levels = np.array([0.375, 0.3, 0.24, 0.18, 0.13])
    r_levels = r_levels[r_levels > 5.0 * dr]
    if r_levels.size < 2:
        r_levels = np.array([8.0 * dr, 6.0 * dr])
    dist = np.abs(grid.nodes - pole)
    masses_by_n = []
    for n in ladder:
        cm = _laplacian_cell_masses(_regularized(grid, pole, n))
        levels = np.array([cm[dist <= R].sum() for R in r_levels])
        # remove the smooth part, proportional to the enclosed area
        coeffs = np.polyfit(r_levels ** 2, levels, 1)
        masses_by_n.append(coeffs[1])
    if len(masses_by_n) >= 2:
        n1, n2 = ladder[-2], ladder[-1]
        m1, m2 = masses_by_n[-2], masses_by_n[-1]
        # linear extrapolation in 1/n
        mass = m2 + (m2 - m1) * (1.0 / n2) / (1.0 / n1 - 1.0 / n2)
    else:
        mass = masses_by_n[-1]
    return float(mass)


def riesz_diagnostics(
    rho,
    pole_candidates=(),
    mass_tol=0.05,
    neg_tol=1e-6,
    declared_pole_nodes=16,
):
    """Potential-theoretic diagnostics of a subharmonic candidate.

    Cell Laplacian masses, point masses at pole candidates (flagged when
    they certify a full log-pole quantum of 2 pi), the boundary-weighted
    mass integral, and the defect of the representation formula
    rho(0) = boundary mean - (1/2 pi) integral of mass * log(1/|zeta|).
    """
    vals = np.asarray(rho.values, dtype=float)
    n_inf = int(np.sum(np.isneginf(vals)))
    if n_inf > declared_pole_nodes:
        raise ValueError(
            "%d nodes at -infinity exceed the declared polar locus budget %d"
            % (n_inf, declared_pole_nodes)
        )
    finite = rho
    if n_inf:
        if not pole_candidates:
            raise ValueError("-infinity nodes present but no pole candidates declared")
        reg = np.asarray(vals, dtype=float)
        for pole in pole_candidates:
            reg = np.maximum(
                reg,
                np.asarray(
                    _regularized(rho.like(vals), complex(pole), 32).values, dtype=float
                ),
            )
        finite = rho.like(reg)

    cell_masses = _laplacian_cell_masses(finite)

    point_masses = []
    certified_zeros = []
    for pole in pole_candidates:
        pole = complex(pole)
        mass = _point_mass(rho.like(np.asarray(vals, dtype=float)), pole)
        certified = mass >= TWO_PI * (1.0 - mass_tol)
        point_masses.append((pole, mass, certified))
        if certified:
            certified_zeros.append(ExtractedZero(pole, 1, True))

    radii = finite.radii
    weighted = float(np.sum(cell_masses * (1.0 - radii)[:, None]))

    center_value = float(np.real(finite.interpolate(0.0)))
    boundary_vals = 1.5 * np.asarray(finite.values, dtype=float)[-1] - 0.5 * np.asarray(
        finite.values, dtype=float
    )[-2]
    boundary_mean = float(np.mean(boundary_vals))
    with np.errstate(divide="ignore"):
        green_weight = np.log(1.0 / radii)
    green_term = float(np.sum(cell_masses * green_weight[:, None])) / TWO_PI
    residual = abs(center_value - (boundary_mean - green_term))

    return RieszReport(
        cell_masses=cell_masses,
        point_masses=point_masses,
        blaschke_sum=blaschke_sum(certified_zeros) if certified_zeros else 0.0,
        weighted_integral=weighted,
        representation_residual=residual,
        boundary_mean=boundary_mean,
        center_value=center_value,
    )
