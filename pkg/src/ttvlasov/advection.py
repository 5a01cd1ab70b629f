"""Semi-Lagrangian advection sweeps acting directly on TT kernels.

Two situations arise in the split-step solver.  When the advection
coefficient lives on the tensor axis next to the advected one (space
moved by its own velocity, or a 1D velocity moved by E(x)), the whole
update touches only one bond: the pair of kernels is expanded by one
stencil slot per union offset and recompressed with a single SVD whose
discarded tail is the exact Frobenius error, because the rest of the
chain is kept orthogonal.  When the coefficient depends on several axes
(velocity moved by E(x_1,...,x_dx)), the update is a sum of fiber
shifts weighted by displacement polynomials in TT form.
"""

import numpy as np

from . import tt
from .interpolation import (displacement_powers, lagrange_poly_coeffs,
                            spline_coefficients, stencil_weight_table)
from .tt import CFLViolation, TTTensor
from .ttop import (MatrixKernel, TTMatrix, add_matrix, diag_matrix, matvec,
                   round_matrix)


def advect_univariate(f, scheme, coeff_values, dt, spacing, coeff_axis,
                      target_axis, ctrl, m=1):
    """Shift the target axis by dt * coeff / spacing cells per fiber.

    The coefficient axis must neighbor the target axis.  Displacements
    up to m cells are allowed; beyond that a CFLViolation carries the
    offending axis and the worst displacement.
    """
    if abs(coeff_axis - target_axis) != 1:
        raise ValueError("coefficient and target axes must be adjacent")
    coeff_values = np.asarray(coeff_values, dtype=float)
    if coeff_values.shape != (f.mode_sizes[coeff_axis],):
        raise ValueError("coefficient values must match the coefficient axis")
    a = dt * coeff_values / spacing
    try:
        offsets, weights = stencil_weight_table(a, scheme, m)
    except CFLViolation as err:
        raise CFLViolation(
            f"axis {target_axis}: {err}", axis=target_axis,
            max_displacement=err.max_displacement) from None

    lo = min(coeff_axis, target_axis)
    hi = lo + 1
    w = tt.orthogonalize(f, lo)
    kernels = [k.copy() for k in w.kernels]
    if scheme.kind == "cubic_spline":
        kernels[target_axis] = spline_coefficients(kernels[target_axis],
                                                   axis=1)
    k_lo, k_hi = kernels[lo], kernels[hi]
    r_l, n_lo, r_mid = k_lo.shape
    _, n_hi, r_r = k_hi.shape

    lo_parts, hi_parts = [], []
    for t in range(offsets.size):
        if target_axis == lo:
            lo_parts.append(np.roll(k_lo, -int(offsets[t]), axis=1))
            hi_parts.append(k_hi * weights[None, :, t, None])
        else:
            lo_parts.append(k_lo * weights[None, :, t, None])
            hi_parts.append(np.roll(k_hi, -int(offsets[t]), axis=1))
    big_lo = np.concatenate(lo_parts, axis=2)
    big_hi = np.concatenate(hi_parts, axis=0)
    grown = big_lo.shape[2]
    assert grown == offsets.size * r_mid
    assert offsets.size == scheme.p + 2 * m - 1

    core = big_lo.reshape(r_l * n_lo, grown) @ big_hi.reshape(grown,
                                                              n_hi * r_r)
    u, s, vt = tt._svd_chop(core, ctrl.epsilon, ctrl.r_max)
    r_new = s.size
    kernels[lo] = (u * s).reshape(r_l, n_lo, r_new)
    kernels[hi] = vt.reshape(r_new, n_hi, r_r)
    return TTTensor(kernels, pivot=lo, validate=False)


def _embed_spatial(w, grid):
    """Extend a spatial TT field over the full phase-space axes.

    Velocity axes outside the spatial span become rank-1 ones kernels;
    a velocity axis between two spatial axes passes the crossing bond
    through unchanged.  The embedding is exact.
    """
    if list(w.mode_sizes) != list(grid.spatial_shape):
        raise ValueError("field does not match the spatial grid")
    x_set = set(grid.x_positions)
    kernels = []
    consumed = 0
    for pos in range(grid.ndim):
        n = grid.mode_sizes[pos]
        if pos in x_set:
            kernels.append(w.kernels[consumed])
            consumed += 1
        elif consumed == 0 or consumed == len(w.kernels):
            kernels.append(np.ones((1, n, 1)))
        else:
            s = w.kernels[consumed - 1].shape[2]
            pas = np.zeros((s, n, s))
            pas[np.arange(s), :, np.arange(s)] = 1.0
            kernels.append(pas)
    return TTTensor(kernels, pivot=None, validate=False)


def _embed_operator(weight_op, grid, v_pos, offsets, band_coeffs):
    """Full phase-space operator: a constant stencil bank on v_pos times
    a diagonal weight operator living on the spatial axes.

    Mirrors _embed_spatial: identities outside the spatial span,
    rank-passing identities inside it, and one stencil kernel at the
    velocity axis whose slot for offsets[t] carries band_coeffs[t] times
    the identity on the crossing rank.  Exact.
    """
    x_set = set(grid.x_positions)
    band_coeffs = np.asarray(band_coeffs, dtype=float)
    kernels = []
    consumed = 0
    for pos in range(grid.ndim):
        n = grid.mode_sizes[pos]
        if pos in x_set:
            kernels.append(weight_op.kernels[consumed])
            consumed += 1
            continue
        if consumed == 0 or consumed == len(weight_op.kernels):
            s = 1
        else:
            s = weight_op.kernels[consumed - 1].s_right
        if pos == v_pos:
            band = np.zeros((s, len(offsets), s))
            band[np.arange(s), :, np.arange(s)] = band_coeffs
            kernels.append(MatrixKernel.stencil(n, offsets, band))
        elif s == 1:
            kernels.append(MatrixKernel.identity(n))
        else:
            pas = np.zeros((s, n, s))
            pas[np.arange(s), :, np.arange(s)] = 1.0
            kernels.append(MatrixKernel("diag", n, pas))
    return TTMatrix(kernels)


def advect_multivariate(f, e_tt, p, dt, grid, v_index, ctrl):
    """Move velocity axis v_index by a field depending on all space.

    The per-cell displacement -dt * E / dv enters degree p-1 weight
    polynomials (one per stencil offset).  Grouping by polynomial degree
    instead of by offset, the operator is a sum over k of (constant
    stencil bank of degree-k weight coefficients) x diag(a^k), so only
    the p-1 Hadamard powers of the displacement are rounded and the
    application needs one rounded sweep at the step tolerance.
    """
    v_pos = grid.v_positions[v_index]
    a_tt = tt.scale(e_tt, -dt / grid.dv[v_index])
    try:
        powers = displacement_powers(a_tt, p, ctrl)
    except CFLViolation as err:
        raise CFLViolation(
            f"velocity axis {v_pos}: {err}", axis=v_pos,
            max_displacement=err.max_displacement) from None
    coeffs = lagrange_poly_coeffs(p)
    h = (p - 1) // 2
    offsets = list(range(-h, h + 1))
    full = None
    for k in range(p):
        term = _embed_operator(diag_matrix(powers[k]), grid, v_pos,
                               offsets, coeffs[:, k])
        full = term if full is None else add_matrix(full, term)
    # operator rank bookkeeping only: identical identity blocks collapse
    # exactly, cross-degree redundancy at the matrix threshold
    full = round_matrix(full, ctrl.scaled(0.25))
    return matvec(full, f, ctrl, mode="diag_with_one_nondiag")
