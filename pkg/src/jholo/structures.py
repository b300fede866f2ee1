"""Almost complex structures as matrix fields on a ball in R^{2n}.

A structure is an evaluator x -> J(x), a real 2n x 2n matrix squaring to
minus the identity.  The module provides the antilinear deficiency of a
structure relative to the standard one, sup-norm estimates of it, and the
two normalizations the disc solver relies on: a linear frame change making
J standard at the origin, and domain rescaling (which shrinks the
deficiency of a Lipschitz structure linearly).
"""

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.stats import qmc

EPS_STRUCT = 1e-9
MAX_DIMENSION = 8

# real <-> complex identification: z_k = x_{2k} + i x_{2k+1}


class StructureError(ValueError):
    """Raised when a matrix field fails the requirements of a structure."""


def standard_matrix(n):
    """Block-diagonal matrix acting as multiplication by i on C^n."""
    j = np.zeros((2 * n, 2 * n))
    for k in range(n):
        j[2 * k, 2 * k + 1] = -1.0
        j[2 * k + 1, 2 * k] = 1.0
    return j


def complex_to_real(z):
    """C^n points (..., n) -> interleaved R^{2n} points (..., 2n)."""
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


def real_to_complex(x):
    """Interleaved R^{2n} points (..., 2n) -> C^n points (..., n)."""
    x = np.asarray(x, dtype=float)
    return x[..., 0::2] + 1j * x[..., 1::2]


def operator_norm(mats):
    """Largest singular value, vectorized over stacked matrices."""
    return np.linalg.svd(np.asarray(mats), compute_uv=False)[..., 0]


@dataclass(frozen=True)
class AlmostComplexStructure:
    """Matrix field J on the ball of ``domain_radius`` in R^{2n}.

    ``field`` maps point arrays of shape (..., 2n) to matrix arrays of
    shape (..., 2n, 2n) and must be deterministic and thread-safe.
    """

    dimension_n: int
    field: Callable[[np.ndarray], np.ndarray]
    domain_radius: float
    lipschitz_estimate: Union[float, str] = "unknown"
    name: str = "custom"

    def __post_init__(self):
        if self.dimension_n < 1:
            raise StructureError("dimension_n must be positive")
        if self.dimension_n > MAX_DIMENSION:
            raise StructureError(
                "complex dimension %d exceeds supported maximum %d"
                % (self.dimension_n, MAX_DIMENSION)
            )
        if self.domain_radius <= 0:
            raise StructureError("domain_radius must be positive")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != 2 * self.dimension_n:
            raise StructureError(
                "point dimension %d does not match structure dimension %d"
                % (x.shape[-1], 2 * self.dimension_n)
            )
        try:
            mats = np.asarray(self.field(x), dtype=float)
        except Exception as exc:
            raise StructureError("evaluator failed at %s: %s" % (x, exc)) from exc
        expected = x.shape[:-1] + (2 * self.dimension_n, 2 * self.dimension_n)
        if mats.shape != expected:
            raise StructureError(
                "evaluator returned shape %s, expected %s" % (mats.shape, expected)
            )
        return mats


@dataclass(frozen=True)
class DeficiencyMatrix:
    """Real matrix acting on C^n as an antilinear operator (it anticommutes
    with the standard structure)."""

    matrix: np.ndarray

    def apply_antilinear(self, w):
        """Action on C^n vectors through the real representation.

        As an operator this is antilinear: applying it to i*w gives
        -i times the result for w.
        """
        return real_to_complex(np.einsum("ij,...j->...i", self.matrix, complex_to_real(w)))

    def norm(self):
        return float(operator_norm(self.matrix))


@dataclass
class ValidationReport:
    max_deviation: float
    worst_point: np.ndarray
    tolerance: float
    sample_count: int

    @property
    def passes(self):
        return self.max_deviation <= self.tolerance


# ----------------------------------------------------------------------
# deterministic sampling of the domain ball


def ball_samples(structure, sample_count):
    """Low-discrepancy (Halton, unscrambled) points in the domain ball.

    Nested: the first k points never change as sample_count grows, which
    makes sup-norm estimates monotone in the count.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be at least 1")
    d = 2 * structure.dimension_n
    sampler = qmc.Halton(d=d, scramble=False)
    sampler.fast_forward(1)  # skip the origin-corner start
    points = []
    radius = structure.domain_radius
    while len(points) < sample_count:
        batch = radius * (2.0 * sampler.random(4 * sample_count) - 1.0)
        inside = batch[np.linalg.norm(batch, axis=1) < radius]
        points.extend(inside)
    return np.array(points[:sample_count])


# ----------------------------------------------------------------------
# operations


def validate_structure(structure, sample_count=256, tolerance=EPS_STRUCT):
    """Check J(x)^2 = -Id over deterministic samples of the domain ball."""
    points = ball_samples(structure, sample_count)
    mats = structure(points)
    deviation = operator_norm(
        np.einsum("kij,kjl->kil", mats, mats) + np.eye(2 * structure.dimension_n)
    )
    worst = int(np.argmax(deviation))
    return ValidationReport(
        max_deviation=float(deviation[worst]),
        worst_point=points[worst],
        tolerance=tolerance,
        sample_count=sample_count,
    )


def deficiency_matrices(structure, x):
    """[J(x) + J_st]^{-1} [J(x) - J_st], vectorized over points.

    The result anticommutes with the standard structure whenever J is a
    genuine almost complex structure at x.
    """
    jst = standard_matrix(structure.dimension_n)
    mats = structure(x)
    num = mats - jst
    den = mats + jst
    small = np.linalg.svd(den, compute_uv=False)[..., -1]
    if np.any(small < 1e-12):
        dist = float(np.max(operator_norm(num)))
        raise StructureError(
            "structure too far from standard: J + J_st singular, "
            "||J - J_st|| = %.6g" % dist
        )
    return np.linalg.solve(den, num)


def deficiency_at(structure, x):
    """DeficiencyMatrix at a single point."""
    return DeficiencyMatrix(deficiency_matrices(structure, np.asarray(x, dtype=float)))


def deficiency_sup_norm(structure, sample_count=256):
    """Sup over deterministic samples of the deficiency operator norm."""
    points = ball_samples(structure, sample_count)
    return float(np.max(operator_norm(deficiency_matrices(structure, points))))


def normalize_at_origin(structure, tolerance=1e-6):
    """Conjugate by a constant frame so the structure is standard at 0.

    Returns (new_structure, frame) with new J(x) = L^{-1} J(L x) L and
    frame L built by pairing the +i eigenvectors of J(0); the postcondition
    L^{-1} J(0) L = J_st holds to round-off.
    """
    n = structure.dimension_n
    origin = np.zeros(2 * n)
    j0 = structure(origin)
    if float(operator_norm(j0 @ j0 + np.eye(2 * n))) > max(tolerance, EPS_STRUCT * 1e3):
        raise StructureError("J(0) is not a complex structure within tolerance")

    eigvals, eigvecs = np.linalg.eig(j0)
    cols = []
    order = np.argsort(-eigvals.imag)
    for idx in order[:n]:
        v = eigvecs[:, idx]
        # deterministic phase: normalize by the largest entry
        pivot = np.argmax(np.abs(v))
        v = v / v[pivot]
        b = v.imag
        scale = np.linalg.norm(b) or 1.0
        cols.append(b / scale)
        cols.append(j0 @ (b / scale))
    frame = np.column_stack(cols)
    if abs(np.linalg.det(frame)) < 1e-12:
        raise StructureError("frame construction degenerate at the origin")
    frame_inv = np.linalg.inv(frame)
    # exact standardness at 0 is enforced by the construction; residual is
    # round-off only
    base_field = structure.field
    frame_norm = float(operator_norm(frame))
    new_radius = structure.domain_radius / frame_norm

    def new_field(x):
        y = np.einsum("ij,...j->...i", frame, np.asarray(x, dtype=float))
        mats = base_field(y)
        return np.einsum("ij,...jk,kl->...il", frame_inv, mats, frame)

    lip = structure.lipschitz_estimate
    if isinstance(lip, (int, float)):
        lip = float(lip) * float(operator_norm(frame_inv)) * frame_norm ** 2
    return (
        AlmostComplexStructure(
            dimension_n=n,
            field=new_field,
            domain_radius=new_radius,
            lipschitz_estimate=lip,
            name=structure.name + "|framed",
        ),
        frame,
    )


def rescale_structure(structure, s, tolerance=1e-6):
    """x -> J(s x): zooming toward the origin where J is standard.

    For a Lipschitz structure the deficiency sup-norm of the result decays
    linearly in s, which is how the solver reaches its contraction
    threshold.
    """
    if not 0.0 < s <= 1.0:
        raise ValueError("rescale factor must lie in (0, 1], got %r" % (s,))
    n = structure.dimension_n
    j0 = structure(np.zeros(2 * n))
    if float(operator_norm(j0 - standard_matrix(n))) > tolerance:
        raise StructureError("rescaling requires J(0) = J_st; normalize first")
    if s == 1.0:
        return structure
    base_field = structure.field

    def new_field(x):
        return base_field(s * np.asarray(x, dtype=float))

    lip = structure.lipschitz_estimate
    if isinstance(lip, (int, float)):
        lip = float(lip) * s
    return AlmostComplexStructure(
        dimension_n=n,
        field=new_field,
        domain_radius=min(1.0, structure.domain_radius / s),
        lipschitz_estimate=lip,
        name="%s|s=%g" % (structure.name, s),
    )


def translate_structure(structure, center):
    """x -> J(center + x), on the largest ball still inside the domain."""
    center = np.asarray(center, dtype=float)
    remaining = structure.domain_radius - float(np.linalg.norm(center))
    if remaining <= 0:
        raise StructureError("translation center outside the domain ball")
    base_field = structure.field

    def new_field(x):
        return base_field(center + np.asarray(x, dtype=float))

    return AlmostComplexStructure(
        dimension_n=structure.dimension_n,
        field=new_field,
        domain_radius=remaining,
        lipschitz_estimate=structure.lipschitz_estimate,
        name=structure.name + "|shifted",
    )


# ----------------------------------------------------------------------
# built-in families


def standard_structure(n=1, radius=1.0):
    jst = standard_matrix(n)

    def field(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(jst, x.shape[:-1] + jst.shape).copy()

    return AlmostComplexStructure(
        dimension_n=n,
        field=field,
        domain_radius=radius,
        lipschitz_estimate=0.0,
        name="standard",
    )


def constant_deficiency_structure(q_matrix, radius=1.0):
    """Constant structure with prescribed antilinear deficiency.

    Built as J = J_st (Id + Q)(Id - Q)^{-1}; requires ||Q|| < 1 and
    anticommutation of Q with the standard matrix.
    """
    q_matrix = np.asarray(q_matrix, dtype=float)
    if q_matrix.ndim != 2 or q_matrix.shape[0] != q_matrix.shape[1] or q_matrix.shape[0] % 2:
        raise StructureError("deficiency matrix must be square of even size")
    n = q_matrix.shape[0] // 2
    jst = standard_matrix(n)
    if float(operator_norm(q_matrix @ jst + jst @ q_matrix)) > 1e-8:
        raise StructureError("deficiency matrix must anticommute with the standard structure")
    if float(operator_norm(q_matrix)) >= 1.0:
        raise StructureError("deficiency norm must be below one")
    ident = np.eye(2 * n)
    j_const = jst @ (ident + q_matrix) @ np.linalg.inv(ident - q_matrix)

    def field(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(j_const, x.shape[:-1] + j_const.shape).copy()

    return AlmostComplexStructure(
        dimension_n=n,
        field=field,
        domain_radius=radius,
        lipschitz_estimate=0.0,
        name="constant_q",
    )


def radial_lambda_structure(lambda0=1.0, lambda1=0.5, radius=1.0):
    """Lipschitz family on C: J(x) = [[0, -L(|x|)], [1/L(|x|), 0]].

    L(r) = lambda0 + lambda1 * r; squares to -Id identically.  With
    lambda0 = 1 the structure is standard at the origin and its deficiency
    grows linearly from there, making it the stock Lipschitz test case.
    """
    if lambda0 <= 0:
        raise StructureError("lambda0 must be positive")
    if lambda0 + lambda1 * radius <= 0 or lambda0 - abs(lambda1) * 0.0 <= 0:
        raise StructureError("lambda profile must stay positive on the domain")

    def field(x):
        x = np.asarray(x, dtype=float)
        lam = lambda0 + lambda1 * np.linalg.norm(x, axis=-1)
        mats = np.zeros(x.shape[:-1] + (2, 2))
        mats[..., 0, 1] = -lam
        mats[..., 1, 0] = 1.0 / lam
        return mats

    # |dJ/dr| is bounded by |lambda1| * max(1, 1/lambda_min^2)
    lam_min = min(lambda0, lambda0 + lambda1 * radius)
    lip = abs(lambda1) * max(1.0, 1.0 / lam_min ** 2)
    return AlmostComplexStructure(
        dimension_n=1,
        field=field,
        domain_radius=radius,
        lipschitz_estimate=lip,
        name="radial_lambda",
    )


def grid_sampled_structure(points, matrices, radius, lipschitz_estimate="unknown"):
    """Structure interpolating matrix samples on a rectilinear lattice.

    ``points`` (m, 2n) must form a full tensor-product lattice; entries of
    J are interpolated multilinearly and evaluation outside the lattice
    hull clamps to it.
    """
    from scipy.interpolate import RegularGridInterpolator

    points = np.asarray(points, dtype=float)
    matrices = np.asarray(matrices, dtype=float)
    m, d = points.shape
    if d % 2:
        raise StructureError("points must live in an even-dimensional space")
    n = d // 2
    axes = [np.unique(points[:, i]) for i in range(d)]
    sizes = [a.size for a in axes]
    if int(np.prod(sizes)) != m:
        raise StructureError("grid records do not form a full rectilinear lattice")
    lattice = np.full(sizes + [2 * n, 2 * n], np.nan)
    idx = tuple(
        np.searchsorted(axes[i], points[:, i]) for i in range(d)
    )
    lattice[idx] = matrices
    if np.any(np.isnan(lattice)):
        raise StructureError("grid records do not form a full rectilinear lattice")
    interp = RegularGridInterpolator(
        axes, lattice, bounds_error=False, fill_value=None
    )

    def field(x):
        x = np.asarray(x, dtype=float)
        lo = np.array([a[0] for a in axes])
        hi = np.array([a[-1] for a in axes])
        clamped = np.clip(x, lo, hi)
        return interp(clamped)

    return AlmostComplexStructure(
        dimension_n=n,
        field=field,
        domain_radius=radius,
        lipschitz_estimate=lipschitz_estimate,
        name="grid",
    )


# ----------------------------------------------------------------------
# structure file format (textual)
#
#   acs v1 n=<n> radius=<r>
#   family standard
#   family constant_q <(2n)^2 entries row-major>
#   family radial_lambda <lambda0> <lambda1>
#   grid <m>
#   x_1 ... x_{2n} J_11 ... J_{2n,2n}        (m such records)


def load_structure(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise StructureError("%s:1: empty structure file" % path)
    header = lines[0].split()
    if len(header) != 4 or header[0] != "acs" or header[1] != "v1":
        raise StructureError("%s:1: expected 'acs v1 n=<n> radius=<r>'" % path)
    try:
        fields = dict(item.split("=") for item in header[2:])
        n = int(fields["n"])
        radius = float(fields["radius"])
    except (ValueError, KeyError) as exc:
        raise StructureError("%s:1: malformed header (%s)" % (path, exc)) from exc
    if n < 1 or n > MAX_DIMENSION:
        raise StructureError(
            "%s:1: complex dimension %d outside supported range 1..%d"
            % (path, n, MAX_DIMENSION)
        )
    if len(lines) < 2:
        raise StructureError("%s:2: missing body line" % path)
    body = lines[1].split()
    if body[:1] == ["family"]:
        if len(body) < 2:
            raise StructureError("%s:2: family name missing" % path)
        name, params = body[1], body[2:]
        if name == "standard":
            return standard_structure(n, radius)
        if name == "constant_q":
            want = (2 * n) ** 2
            if len(params) != want:
                raise StructureError(
                    "%s:2: constant_q needs %d entries, got %d" % (path, want, len(params))
                )
            q = np.array([float(v) for v in params]).reshape(2 * n, 2 * n)
            return constant_deficiency_structure(q, radius)
        if name == "radial_lambda":
            if len(params) != 2 or n != 1:
                raise StructureError(
                    "%s:2: radial_lambda takes 2 parameters and n=1" % path
                )
            return radial_lambda_structure(float(params[0]), float(params[1]), radius)
        raise StructureError("%s:2: unknown family %r" % (path, name))
    if body[:1] == ["grid"]:
        if len(body) != 2:
            raise StructureError("%s:2: expected 'grid <m>'" % path)
        m = int(body[1])
        rows = lines[2 : 2 + m]
        if len(rows) != m:
            raise StructureError("%s: expected %d grid records, found %d" % (path, m, len(rows)))
        d = 2 * n
        points = np.zeros((m, d))
        matrices = np.zeros((m, d, d))
        for i, row in enumerate(rows):
            parts = row.split()
            if len(parts) != d + d * d:
                raise StructureError(
                    "%s:%d: expected %d values, got %d" % (path, 3 + i, d + d * d, len(parts))
                )
            vals = np.array([float(v) for v in parts])
            points[i] = vals[:d]
            matrices[i] = vals[d:].reshape(d, d)
        return grid_sampled_structure(points, matrices, radius)
    raise StructureError("%s:2: expected 'family ...' or 'grid <m>'" % path)


def save_structure_family(path, name, n, radius, params=()):
    """Write a built-in family description in the textual format."""
    with open(path, "w") as fh:
        fh.write("acs v1 n=%d radius=%s\n" % (n, repr(float(radius))))
        fh.write("family %s" % name)
        for p in params:
            fh.write(" %s" % repr(float(p)))
        fh.write("\n")
