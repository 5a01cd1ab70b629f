"""Interpolation weights and one-dimensional propagation operators.

All displacements are normalized to cells: a = dt * coeff / dx.  A step
moves the profile so that new[j] = old(x_j - a*dx); positive a shifts
content to the right.  Shift offsets follow the (S_o u)[i] = u[i+o]
convention used by the TT fiber shifts.

Displacements larger than one cell are handled by a sliding window:
s = clip(floor(a), -m, m-1) picks the integer part, theta = a - s lands
in [0, 1], and the scheme's stencil is evaluated at theta around the
shifted base point.  The union of all window positions spans exactly
p + 2m - 1 offsets.
"""

from dataclasses import dataclass

import numpy as np

from . import tt, ttop
from .tt import CFLViolation, TruncationControl
from .ttop import MatrixKernel, TTMatrix


@dataclass(frozen=True)
class Scheme:
    """Interpolation scheme selector: linear, lagrange(p), cubic_spline."""

    kind: str
    p: int = 0

    def __post_init__(self):
        if self.kind == "linear":
            object.__setattr__(self, "p", 2)
        elif self.kind == "lagrange":
            if self.p < 3 or self.p % 2 == 0:
                raise ValueError("lagrange needs an odd point count >= 3")
        elif self.kind == "cubic_spline":
            object.__setattr__(self, "p", 4)
        else:
            raise ValueError(f"unknown scheme kind {self.kind!r}")

    def window_offsets(self, m):
        """Union of stencil offsets over every window position."""
        if self.kind == "linear":
            return np.arange(-m, m + 1)
        if self.kind == "lagrange":
            h = (self.p - 1) // 2
            return np.arange(-h - (m - 1), h + m + 1)
        return np.arange(-m - 1, m + 2)


def linear():
    return Scheme("linear")


def lagrange(p):
    return Scheme("lagrange", p)


def cubic_spline():
    return Scheme("cubic_spline")


def linear_weights(a):
    """Sign-split two-point weights on offsets (-1, 0, +1)."""
    a = np.asarray(a, dtype=float)
    if np.any(np.abs(a) > 1 + 1e-12):
        raise CFLViolation("linear weights need |a| <= 1")
    return np.maximum(0.0, a), 1.0 - np.abs(a), np.maximum(0.0, -a)


def lagrange_weights(a, p):
    """Cardinal weights interpolating at -a on nodes -(p-1)/2 .. (p-1)/2."""
    if p % 2 == 0:
        raise ValueError("point count must be odd")
    a = np.asarray(a, dtype=float)
    h = (p - 1) // 2
    nodes = np.arange(-h, h + 1)
    x = -a[..., None]
    w = np.ones(a.shape + (p,))
    for idx, t in enumerate(nodes):
        others = nodes[nodes != t]
        w[..., idx] = np.prod((x - others) / (t - others), axis=-1)
    return w


def lagrange_poly_coeffs(p):
    """Weight polynomials in the displacement: c[t, k] multiplies a**k."""
    if p % 2 == 0:
        raise ValueError("point count must be odd")
    h = (p - 1) // 2
    nodes = np.arange(-h, h + 1)
    coeffs = np.zeros((p, p))
    for idx, t in enumerate(nodes):
        others = nodes[nodes != t]
        # w_t(a) = prod (-a - t') / (t - t'), roots at a = -t'
        poly = np.poly([-tp for tp in others]) * (-1.0) ** (p - 1)
        poly /= np.prod(t - others)
        coeffs[idx] = poly[::-1]
    return coeffs


def bspline3(x):
    """Centered cubic B-spline, support (-2, 2), unit integral."""
    x = np.abs(np.asarray(x, dtype=float))
    out = np.zeros_like(x)
    inner = x <= 1
    out[inner] = 2.0 / 3.0 - x[inner] ** 2 + 0.5 * x[inner] ** 3
    outer = (x > 1) & (x < 2)
    out[outer] = (2.0 - x[outer]) ** 3 / 6.0
    return out


def _collocation_eigenvalues(n):
    col = np.zeros(n)
    col[0] = 2.0 / 3.0
    col[1 % n] += 1.0 / 6.0
    col[(n - 1) % n] += 1.0 / 6.0
    return np.fft.fft(col)


def spline_coefficients(values, axis=-1):
    """Periodic cubic-spline coefficients along one axis.

    Solves the circulant collocation system (c_{j-1} + 4 c_j + c_{j+1})/6
    = u_j by FFT; the eigenvalues 2/3 + cos(2 pi k / n)/3 never vanish.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[axis]
    lam = _collocation_eigenvalues(n)
    shape = [1] * values.ndim
    shape[axis] = n
    hat = np.fft.fft(values, axis=axis) / lam.reshape(shape)
    return np.fft.ifft(hat, axis=axis).real


def spline_collocation_inverse_column(n):
    """First column of the inverse collocation matrix."""
    lam = _collocation_eigenvalues(n)
    e0 = np.zeros(n)
    e0[0] = 1.0
    return np.fft.ifft(np.fft.fft(e0) / lam).real


def spline_shift_1d(values, a):
    """Periodic cubic-spline evaluation of values shifted by -a cells."""
    values = np.asarray(values, dtype=float)
    coef = spline_coefficients(values)
    s = int(np.floor(a))
    theta = float(a) - s
    out = np.zeros_like(values)
    for q in range(-2, 2):
        w = bspline3(theta + q)
        if w != 0.0:
            out += w * np.roll(coef, s - q)
    return out


def stencil_weight_table(a_values, scheme, m=1):
    """Per-coefficient weights over the full window offset union.

    Returns (offsets, weights) with offsets the p+2m-1 union and
    weights[k, j] the coefficient of (S_offsets[j] u) for displacement
    a_values[k].  Offsets a displacement never reaches get weight 0;
    the operator rank bookkeeping relies on the union size being fixed.
    """
    a = np.asarray(a_values, dtype=float)
    if np.any(np.abs(a) > m + 1e-9):
        worst = float(np.max(np.abs(a)))
        raise CFLViolation(
            f"displacement {worst:.6g} exceeds the {m}-cell window",
            max_displacement=worst)
    offsets = scheme.window_offsets(m)
    pos = {int(o): j for j, o in enumerate(offsets)}
    s = np.clip(np.floor(a).astype(int), -m, m - 1)
    theta = a - s
    weights = np.zeros((a.size, offsets.size))
    rows = np.arange(a.size)
    if scheme.kind == "linear":
        weights[rows, [pos[int(v)] for v in -s - 1]] = theta
        weights[rows, [pos[int(v)] for v in -s]] = 1.0 - theta
    elif scheme.kind == "lagrange":
        h = (scheme.p - 1) // 2
        w = lagrange_weights(theta, scheme.p)
        for t_idx, t in enumerate(range(-h, h + 1)):
            weights[rows, [pos[int(v)] for v in t - s]] = w[:, t_idx]
    else:
        for q in range(-2, 2):
            weights[rows, [pos[int(v)] for v in q - s]] = bspline3(theta + q)
    return offsets, weights


def build_univariate_operator(scheme, coeff, dt, dx, m, mode_sizes,
                              coeff_axis, target_axis):
    """Propagation operator for one advected axis, coefficient on another.

    The bond between the two axes carries one slot per union offset:
    a diagonal kernel of per-coefficient weights on the coefficient axis
    and a shift stencil (for the spline, shift composed with the inverse
    collocation circulant) on the target axis.  Axes in between pass the
    offset index through; axes outside are rank-1 identities.
    """
    if coeff_axis == target_axis:
        raise ValueError("coefficient and target axes must differ")
    coeff = np.asarray(coeff, dtype=float)
    n_c = mode_sizes[coeff_axis]
    n_t = mode_sizes[target_axis]
    if coeff.shape != (n_c,):
        raise ValueError("coefficient values must match the coefficient axis")
    a = dt * coeff / dx
    offsets, weights = stencil_weight_table(a, scheme, m)
    r = offsets.size

    lo, hi = sorted((coeff_axis, target_axis))
    kernels = []
    for k, n in enumerate(mode_sizes):
        left = r if lo < k <= hi else 1
        right = r if lo <= k < hi else 1
        if k == coeff_axis:
            vals = np.zeros((left, n, right))
            if left == 1:
                vals[0] = weights
            else:
                vals[:, :, 0] = weights.T
            kernels.append(MatrixKernel("diag", n, vals))
        elif k == target_axis:
            kernels.append(_shift_bank_kernel(scheme, offsets, n_t,
                                              left, right))
        elif lo < k < hi:
            vals = np.zeros((r, n, r))
            vals[np.arange(r), :, np.arange(r)] = 1.0
            kernels.append(MatrixKernel("diag", n, vals))
        else:
            kernels.append(MatrixKernel.identity(n))
    return TTMatrix(kernels)


def _shift_bank_kernel(scheme, offsets, n, left, right):
    """Stencil kernel whose slot for union offset o applies S_o (and the
    spline's coefficient transform when applicable)."""
    r = offsets.size
    if scheme.kind == "cubic_spline":
        ainv = spline_collocation_inverse_column(n)
        stencil_offsets = np.arange(n)
        bands = np.zeros((r, n))
        for j, o in enumerate(offsets):
            bands[j] = ainv[(int(o) - stencil_offsets) % n]
    else:
        stencil_offsets = offsets
        bands = np.eye(r)
    if left == 1:
        vals = bands[None, :, :].transpose(0, 2, 1)
    else:
        vals = bands[:, :, None]
    return MatrixKernel("stencil", n, vals, stencil_offsets)


def displacement_powers(displacement, p, ctrl):
    """Hadamard powers a^0 .. a^(p-1) of a TT displacement field.

    Each power is rounded at a quarter of the budget.  Rejects any
    per-cell displacement beyond one cell; weight polynomials are only
    valid inside the centered window.
    """
    full = tt.reconstruct_full(displacement)
    worst = float(np.max(np.abs(full)))
    if worst > 1 + 1e-9:
        raise CFLViolation(
            f"displacement {worst:.6g} exceeds one cell",
            max_displacement=worst)
    quarter = TruncationControl(ctrl.epsilon / 4, ctrl.r_max)
    powers = [tt.constant(displacement.mode_sizes, 1.0), displacement]
    for _ in range(2, p):
        powers.append(tt.hadamard_rounded(powers[-1], displacement, quarter))
    return powers


def build_weight_tt(displacement, p, ctrl):
    """Lagrange weight fields evaluated on a TT displacement.

    Returns p diagonal TT operators whose diagonals are the weight
    polynomials of the displacement, built from Hadamard powers with
    rounding at a quarter of the budget after each power and each
    accumulation.
    """
    powers = displacement_powers(displacement, p, ctrl)
    quarter = TruncationControl(ctrl.epsilon / 4, ctrl.r_max)
    coeffs = lagrange_poly_coeffs(p)
    fields = []
    for t_idx in range(p):
        acc = tt.scale(powers[0], coeffs[t_idx, 0])
        for k in range(1, p):
            if coeffs[t_idx, k] == 0.0:
                continue
            term = tt.scale(powers[k], coeffs[t_idx, k])
            acc = tt.round(tt.add(acc, term), quarter)
        fields.append(ttop.diag_matrix(acc))
    return fields
