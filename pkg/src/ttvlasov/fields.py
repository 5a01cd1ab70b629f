"""Charge density, periodic Poisson solve, and electric-field helpers.

The density integral over velocity contracts each velocity kernel of a
low-rank distribution with midpoint quadrature weights; the surviving
spatial chain is small (at most 64^3 points here) and is densified for
the FFT-based field solve.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .tt import TTTensor, TruncationControl, tt_from_full

logger = logging.getLogger(__name__)

# charge imbalance above NEUTRALITY_LOG is logged quietly (rounding in
# the low-rank updates drifts the mean at this scale); above
# NEUTRALITY_WARN it is a solver-health warning.  The k=0 component is
# projected out either way.  A clipped velocity tail gives a constant
# offset that would repeat every solve, so the warning fires once per
# process and later occurrences drop to INFO.
NEUTRALITY_LOG = 1e-8
NEUTRALITY_WARN = 1e-4

_imbalance_warned = False


def _log_imbalance(value):
    global _imbalance_warned
    if abs(value) <= NEUTRALITY_LOG:
        return
    if abs(value) > NEUTRALITY_WARN and not _imbalance_warned:
        _imbalance_warned = True
        logger.warning("charge imbalance %.3e projected out of the Poisson"
                       " right-hand side (repeats logged at INFO)", value)
    else:
        logger.info("charge imbalance %.3e projected out of the Poisson"
                    " right-hand side", value)


@dataclass(frozen=True)
class SpatialField:
    """Dense real field on the periodic spatial grid."""

    values: np.ndarray
    spacings: tuple

    def __post_init__(self):
        object.__setattr__(self, "values",
                           np.asarray(self.values, dtype=float))
        object.__setattr__(self, "spacings",
                           tuple(float(s) for s in self.spacings))
        if self.values.ndim != len(self.spacings):
            raise ValueError("one spacing per axis required")

    @property
    def shape(self):
        return self.values.shape

    def cell_volume(self):
        return float(np.prod(self.spacings))


def density(f, grid):
    """Velocity integral of f as a dense spatial field.

    Each velocity kernel is contracted with dv * ones (midpoint rule);
    the resulting rank-rank matrices are absorbed into the neighboring
    spatial kernel so the spatial chain keeps unit boundary ranks.
    """
    if list(f.mode_sizes) != list(grid.mode_sizes):
        raise ValueError("distribution does not match grid")
    v_set = set(grid.v_positions)
    pending = None
    spatial = []
    for pos, kern in enumerate(f.kernels):
        if pos in v_set:
            k = grid.v_positions.index(pos)
            mat = kern.sum(axis=1) * grid.dv[k]
            pending = mat if pending is None else pending @ mat
        else:
            if pending is not None:
                kern = np.tensordot(pending, kern, axes=(1, 0))
                pending = None
            spatial.append(kern)
    if pending is not None:
        spatial[-1] = np.tensordot(spatial[-1], pending, axes=(2, 0))
    rho = TTTensor([k.copy() for k in spatial], pivot=None).full()
    return SpatialField(rho, grid.dx)


def poisson_solve(rho):
    """Electrostatic potential and field for charge density rho.

    Solves -laplace(phi) = 1 - rho on the periodic box with the
    zero-mean gauge phi_hat(0) = 0, then E_j = -d(phi)/dx_j.  Returns
    (phi, (E_1, ..., E_d)).  A mean charge imbalance beyond 1e-8 is
    logged; the constant mode is dropped either way.
    """
    rhs = 1.0 - rho.values
    _log_imbalance(float(rhs.mean()))
    rhs_hat = np.fft.fftn(rhs)
    waves = [2.0 * np.pi * np.fft.fftfreq(n, d=h)
             for n, h in zip(rho.shape, rho.spacings)]
    mesh = np.meshgrid(*waves, indexing="ij")
    k_sq = np.zeros(rho.shape)
    for comp in mesh:
        k_sq = k_sq + comp * comp
    origin = (0,) * rho.values.ndim
    k_sq[origin] = 1.0
    phi_hat = rhs_hat / k_sq
    phi_hat[origin] = 0.0
    phi = SpatialField(np.fft.ifftn(phi_hat).real, rho.spacings)
    e_fields = []
    for comp in mesh:
        e_hat = -1j * comp * phi_hat
        e_fields.append(SpatialField(np.fft.ifftn(e_hat).real,
                                     rho.spacings))
    return phi, tuple(e_fields)


def field_to_tt(field, ctrl):
    """Compress a spatial field to TT using a quarter of the budget.

    The field enters later multiplicative stages whose own rounding
    consumes the rest of the step tolerance.
    """
    quarter = TruncationControl(ctrl.epsilon / 4.0, ctrl.r_max)
    return tt_from_full(field.values, quarter)


def electric_energy(e_fields):
    """Per-component field energies (1/2) dx^d sum E_j^2."""
    out = []
    for e in e_fields:
        out.append(0.5 * e.cell_volume() * float(np.sum(e.values ** 2)))
    return tuple(out)
