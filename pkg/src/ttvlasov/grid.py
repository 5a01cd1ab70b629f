"""Phase-space grids: axis ordering, coordinates, spacings.

Tensor positions interleave velocity and space so that every (x_k, v_k)
pair sits on one bond: (v1, x1) in 2D, (v1, x1, x2, v2) in 4D,
(v1, x1, x2, v2, x3, v3) in 6D.  Space axes are nodal on [0, L) and
velocity axes are cell-centered on (v_min, v_max), which makes the
velocity points symmetric about zero; the exact sum(v_j) = 0 keeps the
mass and momentum correction directions orthogonal.

All axes are periodic and point counts must be powers of two (the
Poisson solve and the spline transform run on FFTs).
"""

from dataclasses import dataclass, field

import numpy as np

_ORDERINGS = {
    1: ("v1", "x1"),
    2: ("v1", "x1", "x2", "v2"),
    3: ("v1", "x1", "x2", "v2", "x3", "v3"),
}


def _is_power_of_two(n):
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """Discretization of [0,L]^dx x [v_min,v_max]^dx phase space."""

    nx: tuple
    nv: tuple
    x_lengths: tuple
    v_min: float = -6.0
    v_max: float = 6.0
    labels: tuple = field(init=False)
    x_positions: tuple = field(init=False)
    v_positions: tuple = field(init=False)

    def __post_init__(self):
        nx = tuple(int(n) for n in self.nx)
        nv = tuple(int(n) for n in self.nv)
        lengths = tuple(float(v) for v in self.x_lengths)
        object.__setattr__(self, "nx", nx)
        object.__setattr__(self, "nv", nv)
        object.__setattr__(self, "x_lengths", lengths)
        d_x = len(nx)
        if d_x not in _ORDERINGS:
            raise ValueError("spatial dimension must be 1, 2, or 3")
        if len(nv) != d_x or len(lengths) != d_x:
            raise ValueError("nx, nv, x_lengths must have matching lengths")
        for n in nx + nv:
            if not _is_power_of_two(n):
                raise ValueError(f"point count {n} is not a power of two")
        if not self.v_max > self.v_min:
            raise ValueError("empty velocity interval")
        labels = _ORDERINGS[d_x]
        object.__setattr__(self, "labels", labels)
        object.__setattr__(
            self, "x_positions",
            tuple(labels.index(f"x{k + 1}") for k in range(d_x)))
        object.__setattr__(
            self, "v_positions",
            tuple(labels.index(f"v{k + 1}") for k in range(d_x)))

    @property
    def d_x(self):
        return len(self.nx)

    @property
    def ndim(self):
        return 2 * self.d_x

    @property
    def mode_sizes(self):
        sizes = [0] * self.ndim
        for k in range(self.d_x):
            sizes[self.x_positions[k]] = self.nx[k]
            sizes[self.v_positions[k]] = self.nv[k]
        return tuple(sizes)

    @property
    def dx(self):
        return tuple(L / n for L, n in zip(self.x_lengths, self.nx))

    @property
    def dv(self):
        return tuple((self.v_max - self.v_min) / n for n in self.nv)

    def x_coords(self, k):
        """Nodal points of spatial axis k: j * dx."""
        return np.arange(self.nx[k]) * self.dx[k]

    def v_coords(self, k):
        """Cell-centered points of velocity axis k, symmetric about 0."""
        return self.v_min + (np.arange(self.nv[k]) + 0.5) * self.dv[k]

    def coords_at(self, position):
        label = self.labels[position]
        k = int(label[1:]) - 1
        return self.x_coords(k) if label[0] == "x" else self.v_coords(k)

    def spacing_at(self, position):
        label = self.labels[position]
        k = int(label[1:]) - 1
        return self.dx[k] if label[0] == "x" else self.dv[k]

    @property
    def total_points(self):
        return int(np.prod(self.mode_sizes))

    @property
    def cell_volume(self):
        """(dx)^dx (dv)^dx quadrature weight of one phase-space cell."""
        return float(np.prod(self.dx) * np.prod(self.dv))

    @property
    def spatial_shape(self):
        return self.nx

    def spatial_cell_volume(self):
        return float(np.prod(self.dx))


def make_grid(d_x, n_x, n_v, length, v_min=-6.0, v_max=6.0):
    """Isotropic grid: same count and length on every axis of a kind."""
    return PhaseSpaceGrid((n_x,) * d_x, (n_v,) * d_x, (length,) * d_x,
                          v_min, v_max)
