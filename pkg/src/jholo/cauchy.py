"""Wirtinger calculus and the Cauchy-Green (Pompeiu) transform on the disc.

The transform

    (T f)(z) = -(1/pi) integral_disc f(zeta) / (zeta - z) dA(zeta)

is a right inverse of d/dzbar.  On the polar grid it diagonalizes over
angular Fourier modes: a density g(rho) e^{i m phi} is sent to
h(r) e^{i (m-1) theta} with

    h(r) = -2 integral_r^1 g(rho) (rho/r)^{1-m} drho      (m >= 1),
    h(r) =  2 integral_0^r g(rho) (rho/r)^{1-m} drho      (m <= 0),

which we evaluate exactly for the piecewise-linear radial interpolant of
the sampled density.  This keeps the weak singularity of the kernel out
of the quadrature entirely and the scheme is spectral in the angle,
second order in the radius.
"""

from dataclasses import dataclass

import numpy as np

from .discgrid import DiscGrid


# ----------------------------------------------------------------------
# Wirtinger derivatives


def _radial_derivative(values, n_r):
    """Second-order finite differences along the radial axis."""
    dr = 1.0 / n_r
    out = np.empty_like(values)
    out[1:-1] = (values[2:] - values[:-2]) / (2.0 * dr)
    out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dr)
    out[-1] = (3.0 * values[-1] - 4.0 * values[-2] + values[-3]) / (2.0 * dr)
    return out


def wirtinger_derivatives(u):
    """du/dz and du/dzbar of a grid function.

    Spectral differentiation in theta, centered (one-sided at the radial
    ends) finite differences in r.  Exact on functions that are affine in
    r per resolved Fourier mode, in particular on z, zbar and |z|^2.
    """
    values = np.asarray(u.values, dtype=complex)
    spec = np.fft.fft(values, axis=1)
    modes = np.fft.fftfreq(u.n_theta, d=1.0 / u.n_theta)
    if values.ndim == 3:
        modes = modes[:, None]
    du_dtheta = np.fft.ifft(1j * modes * spec, axis=1)
    du_dr = _radial_derivative(values, u.n_r)

    r = u.radii[:, None] if values.ndim == 2 else u.radii[:, None, None]
    phase = np.exp(1j * u.angles)[None, :]
    if values.ndim == 3:
        phase = phase[:, :, None]
    du_dz = 0.5 * np.conj(phase) * (du_dr - 1j * du_dtheta / r)
    du_dzbar = 0.5 * phase * (du_dr + 1j * du_dtheta / r)
    return u.like(du_dz), u.like(du_dzbar)


# ----------------------------------------------------------------------
# Cauchy-Green transform

_transform_cache = {}


def _segment_weights(p, q, r_scale, k_exp):
    """Weights (w_a, w_b) with integral_p^q hat(a,b)(rho) (rho/R)^K drho
    = w_a * a + w_b * b for the linear density equal to a at p and b at q.

    Vectorized over k_exp (array of exponents); p, q, r_scale scalars.
    """
    k = np.asarray(k_exp, dtype=float)
    k1 = k + 1.0
    k2 = k + 2.0
    pr = p / r_scale
    qr = q / r_scale
    with np.errstate(divide="ignore", invalid="ignore"):
        m0 = np.where(
            k1 == 0.0,
            r_scale * np.log(qr / pr) if p > 0 else np.inf,
            r_scale * (qr ** k1 - pr ** k1) / k1,
        )
        m1 = np.where(
            k2 == 0.0,
            r_scale ** 2 * np.log(qr / pr) if p > 0 else np.inf,
            r_scale ** 2 * (qr ** k2 - pr ** k2) / k2,
        )
    w_a = (q * m0 - m1) / (q - p)
    w_b = (m1 - p * m0) / (q - p)
    return w_a, w_b


class _TransformTables:
    """Precomputed radial recurrence tables for one (n_r, n_theta) pair.

    For the inward branch (modes m <= 0, exponent K = 1 - m >= 1) the scaled
    partial integrals H_j = integral_0^{r_j} g (rho/r_j)^K drho satisfy

        H_j = (r_{j-1}/r_j)^K H_{j-1} + [segment r_{j-1}..r_j at scale r_j],

    and symmetrically outward for m >= 1; every factor is bounded by one,
    so no large powers ever appear.
    """

    def __init__(self, n_r, n_theta):
        self.n_r = n_r
        self.n_theta = n_theta
        radii = (np.arange(n_r) + 0.5) / n_r
        modes = np.fft.fftfreq(n_theta, d=1.0 / n_theta).astype(int)
        self.modes = modes
        self.neg = modes <= 0  # inward branch
        self.pos = ~self.neg

        k_in = 1.0 - modes[self.neg]  # >= 1
        k_out = 1.0 - modes[self.pos]  # <= 0
        n_in = k_in.size
        n_out = k_out.size

        # inward: decay factors and segment weights, indexed by target j
        self.decay_in = np.zeros((n_r, n_in))
        self.w_in_a = np.zeros((n_r, n_in))
        self.w_in_b = np.zeros((n_r, n_in))
        wa0, wb0 = _segment_weights(1e-300, radii[0], radii[0], k_in)
        self.w0_in_a, self.w0_in_b = wa0, wb0  # segment [0, r_0], endpoint at rho=0
        for j in range(1, n_r):
            self.decay_in[j] = (radii[j - 1] / radii[j]) ** k_in
            wa, wb = _segment_weights(radii[j - 1], radii[j], radii[j], k_in)
            self.w_in_a[j] = wa
            self.w_in_b[j] = wb

        # outward: from r_j up to 1
        self.decay_out = np.zeros((n_r, n_out))
        self.w_out_a = np.zeros((n_r, n_out))
        self.w_out_b = np.zeros((n_r, n_out))
        wa1, wb1 = _segment_weights(radii[-1], 1.0, radii[-1], k_out)
        self.w1_out_a, self.w1_out_b = wa1, wb1  # segment [r_last, 1]
        for j in range(n_r - 1):
            self.decay_out[j] = (radii[j + 1] / radii[j]) ** k_out
            wa, wb = _segment_weights(radii[j], radii[j + 1], radii[j], k_out)
            self.w_out_a[j] = wa
            self.w_out_b[j] = wb


def _tables(n_r, n_theta):
    key = (n_r, n_theta)
    if key not in _transform_cache:
        _transform_cache[key] = _TransformTables(n_r, n_theta)
    return _transform_cache[key]


def apply_cauchy_green(f):
    """Cauchy-Green transform of a grid density, sampled on the same grid.

    Satisfies d(Tf)/dzbar = f in the discrete sense: the residual of
    ``wirtinger_derivatives(apply_cauchy_green(f))[1] - f`` is limited only
    by the radial finite-difference error on smooth densities.
    """
    values = np.asarray(f.values, dtype=complex)
    scalar = values.ndim == 2
    if scalar:
        values = values[:, :, None]
    n_r, n_theta, n = values.shape
    tab = _tables(n_r, n_theta)

    spec = np.fft.fft(values, axis=1)  # (n_r, n_theta, n), mode index = fft order
    g_neg = spec[:, tab.neg, :]
    g_pos = spec[:, tab.pos, :]

    h_neg = np.zeros_like(g_neg)
    # extrapolated density value at rho = 0 (per mode, per component)
    g_center = 1.5 * g_neg[0] - 0.5 * g_neg[1]
    h_neg[0] = tab.w0_in_a[:, None] * g_center + tab.w0_in_b[:, None] * g_neg[0]
    for j in range(1, n_r):
        h_neg[j] = (
            tab.decay_in[j][:, None] * h_neg[j - 1]
            + tab.w_in_a[j][:, None] * g_neg[j - 1]
            + tab.w_in_b[j][:, None] * g_neg[j]
        )

    h_pos = np.zeros_like(g_pos)
    g_edge = 1.5 * g_pos[-1] - 0.5 * g_pos[-2]
    h_pos[-1] = tab.w1_out_a[:, None] * g_pos[-1] + tab.w1_out_b[:, None] * g_edge
    for j in range(n_r - 2, -1, -1):
        h_pos[j] = (
            tab.decay_out[j][:, None] * h_pos[j + 1]
            + tab.w_out_a[j][:, None] * g_pos[j]
            + tab.w_out_b[j][:, None] * g_pos[j + 1]
        )

    out_spec = np.zeros_like(spec)
    out_spec[:, tab.neg, :] = 2.0 * h_neg
    out_spec[:, tab.pos, :] = -2.0 * h_pos
    # each input mode m contributes to output mode m - 1
    out_spec = np.roll(out_spec, -1, axis=1)
    out = np.fft.ifft(out_spec, axis=1)
    if scalar:
        out = out[:, :, 0]
    return f.like(out)


# ----------------------------------------------------------------------
# scaled Sobolev norms


@dataclass
class SobolevSetting:
    """Integrability exponent p in (2, inf), the norm scale making the
    sup-norm bound hold on grid functions, and the estimated operator norm
    of the Cauchy-Green transform from L^p into the scaled W^{1,p}."""

    p: float
    scale_constant: float
    cp_estimate: float

    def __post_init__(self):
        if not 2.0 < self.p < np.inf:
            raise ValueError("p must lie in (2, inf), got %r" % (self.p,))
        if self.scale_constant <= 0 or self.cp_estimate <= 0:
            raise ValueError("scale_constant and cp_estimate must be positive")


def lp_norm(f, p):
    """Plain L^p norm by midpoint quadrature over the grid cells."""
    mag = (
        np.linalg.norm(f.values, axis=2)
        if f.values.ndim == 3
        else np.abs(f.values)
    )
    return float(np.sum(f.cell_area * mag ** p) ** (1.0 / p))


def sobolev_norm(f, setting):
    """scale * (||f||_p^p + ||df/dz||_p^p + ||df/dzbar||_p^p)^{1/p}."""
    du_dz, du_dzbar = wirtinger_derivatives(f)
    p = setting.p
    total = lp_norm(f, p) ** p + lp_norm(du_dz, p) ** p + lp_norm(du_dzbar, p) ** p
    return setting.scale_constant * total ** (1.0 / p)


def _trial_functions(count):
    """Deterministic densities used for calibration and norm estimation.

    The list is nested: the first k entries never change as count grows.
    """
    fns = []

    def monomial(a, b):
        return lambda z: z ** a * np.conj(z) ** b

    base = [
        lambda z: np.ones_like(z),
        monomial(1, 0),
        monomial(0, 1),
        monomial(2, 0),
        monomial(0, 2),
        monomial(1, 1),
        lambda z: np.exp(z),
        lambda z: np.exp(-4.0 * np.abs(z) ** 2),
        lambda z: np.conj(z) ** 2 * z,
        lambda z: np.cos(3.0 * np.angle(z)) * np.abs(z) ** 3,
        lambda z: 1.0 / (1.0 + np.abs(z) ** 2) + 0j,
        lambda z: np.exp(1j * 4.0 * np.angle(z)) * np.abs(z) ** 4,
    ]
    fns.extend(base)
    a, b = 3, 1
    while len(fns) < count:
        fns.append(monomial(a % 5, b % 4))
        a += 2
        b += 3
    return fns[:count]


def calibrate_scale(p, n_r, n_theta, margin=1.0000001):
    """Norm scale normalizing constants: sup c = ||c|| up to the margin.

    Constants carry no derivative mass, so the scale is fixed by
    ||1||_{L^p} alone.  Peaked functions can still exceed their scaled
    norm; the general embedding constant is absorbed downstream by the
    safety factor applied to the transform-norm estimate.
    """
    grid = DiscGrid.from_function(lambda z: np.ones_like(z), n_r, n_theta)
    area_norm = lp_norm(grid, p)
    return margin / area_norm


def estimate_cp(setting, n_r, n_theta, trial_count=16):
    """Lower bound on the transform norm L^p -> scaled W^{1,p}.

    Maximum of ||T f||_{W^{1,p}} / ||f||_{L^p} over the deterministic
    trial family; nested in trial_count, so doubling the count never
    decreases the estimate.  Callers should multiply by a safety factor
    (>= 2) before using it in contraction thresholds.
    """
    if trial_count < 8:
        raise ValueError("trial_count must be at least 8")
    best = 0.0
    for fn in _trial_functions(trial_count):
        f = DiscGrid.from_function(fn, n_r, n_theta)
        denom = lp_norm(f, setting.p)
        if denom < 1e-300:
            continue
        best = max(best, sobolev_norm(apply_cauchy_green(f), setting) / denom)
    return best


def default_setting(p, n_r, n_theta, trial_count=16):
    """Calibrated SobolevSetting for the given exponent and resolution."""
    scale = calibrate_scale(p, n_r, n_theta)
    setting = SobolevSetting(p=p, scale_constant=scale, cp_estimate=1.0)
    setting.cp_estimate = estimate_cp(setting, n_r, n_theta, trial_count)
    return setting
