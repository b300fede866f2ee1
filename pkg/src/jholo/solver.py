"""Two-level fixed-point solver for pseudoholomorphic discs.

The disc equation du/dzbar + D(J(u)) du/dz = 0 (D the antilinear
deficiency field of the structure) is solved by composing the
Cauchy-Green transform with a two-point normalization that pins the disc
to prescribed values at z = 0 and z = 1/2.  The inner loop freezes the
coefficients along a reference map and is a genuine contraction when
4 q C_p <= 1/2 (q the deficiency sup-norm, C_p the transform norm); the
outer loop updates the reference map and is iterated to stagnation.
Existence theory only guarantees an outer fixed point, not convergence of
the outer Picard sequence, so nonconvergence is a reported outcome, not
an assertion failure.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import structures as st
from .cauchy import apply_cauchy_green, lp_norm, sobolev_norm, wirtinger_derivatives
from .discgrid import DiscGrid


class ContractionError(RuntimeError):
    """The measured contraction number 4 q C_p exceeds the solvable bound."""

    def __init__(self, contraction):
        self.contraction = contraction
        super().__init__(
            "contraction precondition violated: 4 q C_p = %.6g > 0.5" % contraction
        )


class IterateEscapeError(RuntimeError):
    """An inner iterate left the unit Sobolev ball (endpoints too large)."""

    def __init__(self, norm):
        self.norm = norm
        super().__init__(
            "iterate escaped the unit ball (norm %.6g); endpoint data too large"
            % norm
        )


class NonconvergenceError(RuntimeError):
    """Outer iteration failed to stagnate within the step budget."""

    def __init__(self, gap_history):
        self.gap_history = list(gap_history)
        super().__init__(
            "outer iteration did not converge in %d steps; gaps %s"
            % (len(self.gap_history), ["%.3g" % g for g in self.gap_history])
        )


class PointsTooFarError(RuntimeError):
    """No admissible rescale accommodates the requested endpoints."""

    def __init__(self, separation, admissible):
        self.separation = separation
        self.admissible = admissible
        super().__init__(
            "points not sufficiently close: separation %.6g, maximal admissible "
            "separation found %.6g" % (separation, admissible)
        )


@dataclass
class SolveConfig:
    inner_tol: float = 1e-10
    outer_tol: float = 1e-8
    max_inner: int = 200
    max_outer: int = 60
    safety_factor: float = 2.0
    auto_rescale: bool = True
    sample_count: int = 256
    residual_tol: float = 1e-3
    max_rescale_halvings: int = 20

    def __post_init__(self):
        if self.inner_tol <= 0 or self.outer_tol <= 0 or self.residual_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_inner < 1 or self.max_outer < 1:
            raise ValueError("iteration caps must be at least 1")
        if self.safety_factor < 1.0:
            raise ValueError("safety_factor must be >= 1")


@dataclass
class SolveReport:
    u: DiscGrid
    inner_iterations: List[int]
    outer_iterations: int
    contraction_rate_observed: Optional[float]
    residual_lp: float
    q_used: float
    cp_used: float
    rescale_factor: float = 1.0
    converged: bool = True
    outer_gaps: List[float] = field(default_factory=list)
    inner_gap_traces: List[List[float]] = field(default_factory=list)
    final_sobolev_norm: float = 0.0
    affine_sobolev_norm: float = 0.0


# ----------------------------------------------------------------------
# building blocks


def affine_disc(n_r, n_theta, a, b):
    """The straight disc z -> a + 2 z (b - a); hits a at 0 and b at 1/2."""
    a = np.atleast_1d(np.asarray(a, dtype=complex))
    b = np.atleast_1d(np.asarray(b, dtype=complex))

    def fn(z):
        return a[None, None, :] + 2.0 * z[:, :, None] * (b - a)[None, None, :]

    return DiscGrid.from_function(fn, n_r, n_theta)


def _check_in_domain(u, structure):
    points = st.complex_to_real(u.values)
    norms = np.linalg.norm(points, axis=2)
    if np.any(norms >= structure.domain_radius):
        j, k = np.unravel_index(np.argmax(norms), norms.shape)
        raise st.StructureError(
            "map exits the structure domain at node (j=%d, k=%d): |u| = %.6g >= %.6g"
            % (j, k, norms[j, k], structure.domain_radius)
        )
    return points


def _deficiency_field_along(u, structure):
    """Deficiency matrices evaluated along the map, shape (n_r, n_theta, 2n, 2n)."""
    points = _check_in_domain(u, structure)
    return st.deficiency_matrices(structure, points)


def _apply_antilinear_field(mats, w):
    """Pointwise antilinear action of a matrix field on C^n grid values."""
    return st.real_to_complex(np.einsum("...ij,...j->...i", mats, st.complex_to_real(w)))


def transform_term(u, deficiency_mats):
    """-T_CG[ D(z) du/dz ] for a frozen deficiency field D."""
    du_dz, _ = wirtinger_derivatives(u)
    g = u.like(_apply_antilinear_field(deficiency_mats, du_dz.values))
    out = apply_cauchy_green(g)
    return u.like(-out.values)


def phi(u, structure):
    """The transform term with coefficients taken along u itself."""
    return transform_term(u, _deficiency_field_along(u, structure))


def _normalize_two_point(g, a, b):
    """Pin a grid map to value a at z=0 and b at z=1/2 by an affine correction.

    The correction subtracts the interpolated values of g at the two marked
    points, so the identity holds exactly under the same interpolation.
    """
    a = np.atleast_1d(np.asarray(a, dtype=complex))
    b = np.atleast_1d(np.asarray(b, dtype=complex))
    v0 = g.interpolate(0.0)
    vh = g.interpolate(0.5)
    z = g.nodes[:, :, None]
    vals = (
        g.values
        - v0[None, None, :]
        - 2.0 * z * (vh - v0)[None, None, :]
        + a[None, None, :]
        + 2.0 * z * (b - a)[None, None, :]
    )
    return g.like(vals)


def phi_ab(u, structure, a, b):
    """Two-point normalized transform step with coefficients along u."""
    return _normalize_two_point(phi(u, structure), a, b)


def residual_lp_norm(u, structure, p):
    """L^p size of du/dzbar + D(J(u)) du/dz, the disc-equation defect."""
    du_dz, du_dzbar = wirtinger_derivatives(u)
    mats = _deficiency_field_along(u, structure)
    defect = du_dzbar.values + _apply_antilinear_field(mats, du_dz.values)
    return lp_norm(u.like(defect), p)


# ----------------------------------------------------------------------
# inner contraction (frozen coefficients)


def inner_solve(v, structure, a, b, setting, cfg, q=None):
    """Fixed point of the frozen-coefficient step starting from the affine disc.

    Returns (u, gap_trace).  Raises ContractionError if 4 q C_p > 1/2 and
    IterateEscapeError if an iterate leaves the unit Sobolev ball.
    """
    if q is None:
        q = st.deficiency_sup_norm(structure, cfg.sample_count)
    cp = cfg.safety_factor * setting.cp_estimate
    contraction = 4.0 * q * cp
    if contraction > 0.5 + 1e-12:
        raise ContractionError(contraction)

    mats = _deficiency_field_along(v, structure)
    u = affine_disc(v.n_r, v.n_theta, a, b)
    trace = []
    for _ in range(cfg.max_inner):
        u_next = _normalize_two_point(transform_term(u, mats), a, b)
        gap = sobolev_norm(u_next.like(u_next.values - u.values), setting)
        trace.append(gap)
        norm_next = sobolev_norm(u_next, setting)
        if norm_next > 1.0:
            raise IterateEscapeError(norm_next)
        u = u_next
        if gap < cfg.inner_tol:
            break
    return u, trace


# ----------------------------------------------------------------------
# outer iteration and the end-to-end pipeline


def outer_solve(structure, a, b, setting, cfg=None):
    """Iterate the frozen-coefficient solve to stagnation of the reference map."""
    cfg = cfg or SolveConfig()
    q = st.deficiency_sup_norm(structure, cfg.sample_count)
    cp = cfg.safety_factor * setting.cp_estimate

    grid_shape = _default_grid_shape(setting)
    v = affine_disc(grid_shape[0], grid_shape[1], a, b)
    affine_norm = sobolev_norm(v, setting)

    inner_counts = []
    traces = []
    outer_gaps = []
    u = v
    converged = False
    for _ in range(cfg.max_outer):
        u, trace = inner_solve(v, structure, a, b, setting, cfg, q=q)
        inner_counts.append(len(trace))
        traces.append(trace)
        gap = u.like(u.values - v.values).sup_norm()
        outer_gaps.append(gap)
        v = u
        if gap < cfg.outer_tol:
            converged = True
            break
    if not converged:
        raise NonconvergenceError(outer_gaps)

    ratios = [
        t[i + 1] / t[i]
        for t in traces
        for i in range(1, len(t) - 1)
        if t[i] > 1e2 * np.finfo(float).tiny
    ]
    return SolveReport(
        u=u,
        inner_iterations=inner_counts,
        outer_iterations=len(inner_counts),
        contraction_rate_observed=max(ratios) if ratios else None,
        residual_lp=residual_lp_norm(u, structure, setting.p),
        q_used=q,
        cp_used=cp,
        converged=True,
        outer_gaps=outer_gaps,
        inner_gap_traces=traces,
        final_sobolev_norm=sobolev_norm(u, setting),
        affine_sobolev_norm=affine_norm,
    )


_GRID_SHAPES = {}


def set_default_grid_shape(n_r, n_theta):
    """Resolution used by outer_solve / solve_disc_through (per process)."""
    _GRID_SHAPES["shape"] = (n_r, n_theta)


def _default_grid_shape(setting):
    return _GRID_SHAPES.get("shape", (64, 128))


def solve_disc_through(structure, a, b, setting, cfg=None):
    """Disc through two marked points: normalize, rescale, solve, map back.

    The structure is translated so the first point sits at the origin,
    conjugated to be standard there, and zoomed until its deficiency is
    below the contraction threshold 1/(8 C_p) while the transported
    endpoints still fit in the solvable ball.  The report's map is in the
    original coordinates with u(0) = a and u(1/2) = b.
    """
    cfg = cfg or SolveConfig()
    a = np.atleast_1d(np.asarray(a, dtype=complex))
    b = np.atleast_1d(np.asarray(b, dtype=complex))
    a_real = st.complex_to_real(a)
    b_real = st.complex_to_real(b)
    for name, pt in (("a", a_real), ("b", b_real)):
        if np.linalg.norm(pt) >= structure.domain_radius:
            raise st.StructureError("point %s outside the structure domain" % name)

    shifted = (
        st.translate_structure(structure, a_real)
        if np.linalg.norm(a_real) > 0
        else structure
    )
    framed, frame = st.normalize_at_origin(shifted)
    frame_inv = np.linalg.inv(frame)
    b_framed = st.real_to_complex(frame_inv @ (b_real - a_real))

    cp = cfg.safety_factor * setting.cp_estimate
    q_threshold = 1.0 / (8.0 * cp)
    n_r, n_theta = _default_grid_shape(setting)

    separation = float(np.linalg.norm(b_framed))
    best_admissible = 0.0
    chosen = None
    scale = 1.0
    halvings = cfg.max_rescale_halvings if cfg.auto_rescale else 0
    for _ in range(halvings + 1):
        candidate = st.rescale_structure(framed, scale)
        q_s = st.deficiency_sup_norm(candidate, cfg.sample_count)
        if q_s < q_threshold:
            b_scaled = b_framed / scale
            trial = affine_disc(n_r, n_theta, np.zeros_like(a), b_scaled)
            ball_room = 1.0 - 4.0 * q_s * cp
            affine_norm = sobolev_norm(trial, setting)
            # largest endpoint separation this zoom level could take
            if affine_norm > 0 and ball_room > 0:
                best_admissible = max(
                    best_admissible, separation * ball_room / affine_norm
                )
            sup_reach = 2.0 * float(np.linalg.norm(b_scaled))
            if affine_norm <= ball_room and sup_reach < candidate.domain_radius:
                chosen = (candidate, q_s, b_scaled, scale)
                break
        scale *= 0.5
    if chosen is None:
        raise PointsTooFarError(separation, best_admissible)

    candidate, q_s, b_scaled, scale = chosen
    report = outer_solve(candidate, np.zeros_like(a), b_scaled, setting, cfg)

    # transport the solution back to the original coordinates
    vals_real = st.complex_to_real(report.u.values)
    mapped = a_real[None, None, :] + scale * np.einsum("ij,...j->...i", frame, vals_real)
    u_final = report.u.like(st.real_to_complex(mapped))
    report.u = u_final
    report.rescale_factor = scale
    report.residual_lp = residual_lp_norm(u_final, structure, setting.p)
    return report
