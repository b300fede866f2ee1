"""Polar discretization of the closed unit disc.

The grid carries samples of maps u : disc -> C^n (or scalar functions) at
the nodes r_j e^{i theta_k} with

    r_j     = (j + 1/2) / n_r,          j = 0 .. n_r - 1,
    theta_k = 2 pi k / n_theta,         k = 0 .. n_theta - 1,

so every node lies strictly inside the open disc and the angular nodes are
equispaced (n_theta a power of two, for FFT-based angular calculus).
"""

import numpy as np

MIN_N_R = 8
MIN_N_THETA = 16


def _is_power_of_two(m):
    return m >= 1 and (m & (m - 1)) == 0


class DiscGrid:
    """Grid samples of a scalar or C^n-valued function on the unit disc.

    ``values`` has shape (n_r, n_theta) for scalar data or
    (n_r, n_theta, n) for maps into C^n.  Scalar data may be real
    (e.g. a potential composed with a map); map data is complex.
    Instances are treated as immutable carriers: operations return new
    grids via :meth:`like`.
    """

    def __init__(self, n_r, n_theta, values):
        if n_r < MIN_N_R:
            raise ValueError("n_r must be at least %d, got %d" % (MIN_N_R, n_r))
        if n_theta < MIN_N_THETA or not _is_power_of_two(n_theta):
            raise ValueError(
                "n_theta must be a power of two >= %d, got %d" % (MIN_N_THETA, n_theta)
            )
        values = np.asarray(values)
        if values.shape[:2] != (n_r, n_theta) or values.ndim not in (2, 3):
            raise ValueError(
                "values shape %s incompatible with grid %dx%d"
                % (values.shape, n_r, n_theta)
            )
        self.n_r = n_r
        self.n_theta = n_theta
        self.values = values
        self.radii = (np.arange(n_r) + 0.5) / n_r
        self.angles = 2.0 * np.pi * np.arange(n_theta) / n_theta

    @property
    def n_components(self):
        """Complex dimension of the values (0 for scalar grids)."""
        return self.values.shape[2] if self.values.ndim == 3 else 0

    @property
    def max_radius(self):
        return self.radii[-1]

    @property
    def nodes(self):
        """Complex node positions, shape (n_r, n_theta)."""
        return self.radii[:, None] * np.exp(1j * self.angles[None, :])

    @property
    def cell_area(self):
        """Quadrature weight r_j * dr * dtheta per node, shape (n_r, 1)."""
        dr = 1.0 / self.n_r
        dtheta = 2.0 * np.pi / self.n_theta
        return (self.radii * dr * dtheta)[:, None]

    @classmethod
    def from_function(cls, fn, n_r, n_theta):
        """Sample ``fn`` (vectorized over complex node arrays) on a fresh grid."""
        radii = (np.arange(n_r) + 0.5) / n_r
        angles = 2.0 * np.pi * np.arange(n_theta) / n_theta
        zeta = radii[:, None] * np.exp(1j * angles[None, :])
        return cls(n_r, n_theta, fn(zeta))

    @classmethod
    def zeros(cls, n_r, n_theta, n=0, dtype=complex):
        shape = (n_r, n_theta) if n == 0 else (n_r, n_theta, n)
        return cls(n_r, n_theta, np.zeros(shape, dtype=dtype))

    def like(self, values):
        """New grid with the same resolution and the given values."""
        return DiscGrid(self.n_r, self.n_theta, values)

    def sup_norm(self):
        """Max over nodes of the Euclidean length of the value."""
        if self.values.ndim == 3:
            return float(np.max(np.linalg.norm(self.values, axis=2)))
        return float(np.max(np.abs(self.values)))

    # ------------------------------------------------------------------
    # interpolation

    def interpolate(self, z, extrapolate_boundary=False):
        """Bilinear interpolation in (r, theta) at complex points ``z``.

        Radii below the innermost layer are handled by linear radial
        continuation (exact on functions affine in z, which makes the
        two-point normalization of the solver an algebraic identity).
        Radii beyond the outermost layer raise unless
        ``extrapolate_boundary`` is set.
        """
        z = np.asarray(z, dtype=complex)
        scalar_input = z.ndim == 0
        z = np.atleast_1d(z)
        r = np.abs(z)
        theta = np.mod(np.angle(z), 2.0 * np.pi)

        jf = r * self.n_r - 0.5
        if not extrapolate_boundary and np.any(jf > self.n_r - 1 + 1e-12):
            raise ValueError(
                "point with |z| = %.6f outside resolvable annulus (max %.6f)"
                % (float(np.max(r)), self.max_radius)
            )
        jf = np.minimum(jf, self.n_r - 1.0)
        j0 = np.clip(np.floor(jf).astype(int), 0, self.n_r - 2)
        t = jf - j0  # may be negative near the center: radial continuation

        kf = theta * self.n_theta / (2.0 * np.pi)
        k0 = np.floor(kf).astype(int) % self.n_theta
        s = kf - np.floor(kf)
        k1 = (k0 + 1) % self.n_theta

        v = self.values
        if v.ndim == 3:
            t = t[:, None]
            s = s[:, None]
        out = (1.0 - s) * ((1.0 - t) * v[j0, k0] + t * v[j0 + 1, k0]) + s * (
            (1.0 - t) * v[j0, k1] + t * v[j0 + 1, k1]
        )
        return out[0] if scalar_input else out

    # ------------------------------------------------------------------
    # serialization (format: header then "j k re im ..." rows)

    def save(self, path):
        n = self.n_components
        with open(path, "w") as fh:
            fh.write("discgrid v1 n=%d n_r=%d n_theta=%d\n" % (n, self.n_r, self.n_theta))
            vals = self.values if n > 0 else self.values[:, :, None]
            for j in range(self.n_r):
                for k in range(self.n_theta):
                    row = [str(j), str(k)]
                    for c in np.atleast_1d(vals[j, k]):
                        c = complex(c)
                        row.append(repr(c.real))
                        row.append(repr(c.imag))
                    fh.write(" ".join(row) + "\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            header = fh.readline().split()
            if len(header) != 5 or header[0] != "discgrid" or header[1] != "v1":
                raise ValueError("%s: not a discgrid v1 file" % path)
            fields = dict(item.split("=") for item in header[2:])
            n = int(fields["n"])
            n_r = int(fields["n_r"])
            n_theta = int(fields["n_theta"])
            width = max(n, 1)
            values = np.zeros((n_r, n_theta, width), dtype=complex)
            seen = np.zeros((n_r, n_theta), dtype=bool)
            for lineno, line in enumerate(fh, start=2):
                parts = line.split()
                if not parts:
                    continue
                if len(parts) != 2 + 2 * width:
                    raise ValueError("%s:%d: expected %d columns" % (path, lineno, 2 + 2 * width))
                j, k = int(parts[0]), int(parts[1])
                comps = [
                    float(parts[2 + 2 * i]) + 1j * float(parts[3 + 2 * i])
                    for i in range(width)
                ]
                values[j, k] = comps
                seen[j, k] = True
        if not seen.all():
            raise ValueError("%s: missing %d node rows" % (path, int((~seen).sum())))
        if n == 0:
            flat = values[:, :, 0]
            if np.allclose(flat.imag, 0.0):
                flat = flat.real
            return cls(n_r, n_theta, flat)
        return cls(n_r, n_theta, values)
