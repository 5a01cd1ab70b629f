"""Interpolation weights, spline shifts, and propagation operators."""

import numpy as np
import pytest

from ttvlasov import interpolation as interp
from ttvlasov import tt, ttop
from ttvlasov.tt import CFLViolation, TruncationControl

from conftest import random_tt


# -- scheme bookkeeping -----------------------------------------------------


def test_scheme_validation():
    with pytest.raises(ValueError):
        interp.Scheme("lagrange", 4)
    with pytest.raises(ValueError):
        interp.Scheme("lagrande", 3)
    assert interp.linear().p == 2
    assert interp.cubic_spline().p == 4


@pytest.mark.parametrize("scheme,m", [
    (interp.linear(), 1), (interp.linear(), 2),
    (interp.lagrange(3), 1), (interp.lagrange(5), 1), (interp.lagrange(5), 2),
    (interp.cubic_spline(), 1), (interp.cubic_spline(), 3),
])
def test_window_union_size(scheme, m):
    assert scheme.window_offsets(m).size == scheme.p + 2 * m - 1


# -- pointwise weights -------------------------------------------------------


def test_linear_weight_values():
    assert interp.linear_weights(0.0) == (0.0, 1.0, 0.0)
    assert interp.linear_weights(0.5) == (0.5, 0.5, 0.0)
    assert interp.linear_weights(-1.0) == (0.0, 0.0, 1.0)
    with pytest.raises(CFLViolation):
        interp.linear_weights(1.5)


def test_lagrange_three_point_formulas(rng):
    for a in rng.uniform(-1, 1, size=20):
        w = interp.lagrange_weights(a, 3)
        assert np.allclose(w, [a * (a + 1) / 2, 1 - a * a, a * (a - 1) / 2])


def test_lagrange_cardinal_at_zero():
    w = interp.lagrange_weights(0.0, 5)
    assert np.allclose(w, [0, 0, 1, 0, 0])


def test_lagrange_partition_of_unity(rng):
    a = rng.uniform(-1, 1, size=100)
    for p in (3, 5, 7):
        w = interp.lagrange_weights(a, p)
        assert np.allclose(w.sum(axis=-1), 1.0, atol=1e-13)


def test_lagrange_rejects_even_points():
    with pytest.raises(ValueError):
        interp.lagrange_weights(0.5, 4)
    with pytest.raises(ValueError):
        interp.lagrange_poly_coeffs(6)


def test_lagrange_reproduces_cubic():
    """Degree-3 data is interpolated exactly by the 5-point stencil."""
    nodes = np.arange(-2, 3)
    for a in (0.3, -0.7, 1.0):
        w = interp.lagrange_weights(a, 5)
        value = np.sum(w * nodes**3)
        assert abs(value - (-a) ** 3) < 1e-12


def test_lagrange_poly_coeffs_match_weights(rng):
    for p in (3, 5):
        coeffs = interp.lagrange_poly_coeffs(p)
        for a in rng.uniform(-1, 1, size=10):
            want = interp.lagrange_weights(a, p)
            got = coeffs @ (a ** np.arange(p))
            assert np.allclose(got, want, atol=1e-12)


# -- cubic spline ------------------------------------------------------------


def test_bspline_values():
    assert np.isclose(interp.bspline3(0.0), 2 / 3)
    assert np.isclose(interp.bspline3(1.0), 1 / 6)
    assert interp.bspline3(2.0) == 0.0
    assert np.allclose(interp.bspline3([-1.0, 1.0]), [1 / 6, 1 / 6])


def test_spline_coefficients_solve_collocation(rng):
    u = rng.normal(size=16)
    c = interp.spline_coefficients(u)
    back = (np.roll(c, 1) + 4 * c + np.roll(c, -1)) / 6
    assert np.allclose(back, u, atol=1e-13)


def test_spline_shift_integer_is_exact(rng):
    u = rng.normal(size=32)
    for a in (-2, -1, 0, 1, 3):
        got = interp.spline_shift_1d(u, float(a))
        assert np.allclose(got, np.roll(u, a), atol=1e-12)


def test_spline_shift_constant_invariant():
    u = np.full(24, 3.7)
    assert np.allclose(interp.spline_shift_1d(u, 0.413), u, atol=1e-13)


def test_spline_shift_sine_oracle():
    n = 64
    x = np.arange(n) / n
    u = np.sin(2 * np.pi * x)
    a = 0.3
    got = interp.spline_shift_1d(u, a)
    want = np.sin(2 * np.pi * (x - a / n))
    assert np.max(np.abs(got - want)) <= 1e-5


def test_spline_shift_fourth_order():
    errors = []
    sizes = [16, 32, 64]
    for n in sizes:
        x = np.arange(n) / n
        u = np.sin(2 * np.pi * x)
        got = interp.spline_shift_1d(u, 0.37)
        want = np.sin(2 * np.pi * (x - 0.37 / n))
        errors.append(np.max(np.abs(got - want)))
    fit = np.polyfit(np.log(sizes), np.log(errors), 1)
    assert -fit[0] >= 3.7


# -- stencil weight tables ----------------------------------------------------


def test_stencil_table_matches_linear_weights(rng):
    a = rng.uniform(-1, 1, size=30)
    offsets, w = interp.stencil_weight_table(a, interp.linear(), m=1)
    assert offsets.tolist() == [-1, 0, 1]
    direct = np.stack(interp.linear_weights(a), axis=1)
    assert np.allclose(w, direct, atol=1e-13)


def test_stencil_table_partition_of_unity(rng):
    for scheme, m in [(interp.linear(), 2), (interp.lagrange(5), 2),
                      (interp.cubic_spline(), 1)]:
        a = rng.uniform(-m, m, size=50)
        _, w = interp.stencil_weight_table(a, scheme, m=m)
        assert np.allclose(w.sum(axis=1), 1.0, atol=1e-12)


def test_stencil_table_rejects_out_of_window():
    with pytest.raises(CFLViolation):
        interp.stencil_weight_table([1.5], interp.lagrange(3), m=1)


def test_stencil_table_polynomial_reproduction():
    """Constant-displacement advection of degree p-1 samples is exact
    away from the periodic wrap."""
    n = 40
    x = np.arange(n, dtype=float) / n
    poly = lambda t: 0.3 * t**4 - t**2 + 2 * t + 5
    u = poly(x)
    for a in (0.6, -1.4):
        offsets, w = interp.stencil_weight_table([a], interp.lagrange(5), m=2)
        shifted = sum(w[0, j] * np.roll(u, -int(o))
                      for j, o in enumerate(offsets))
        want = poly(x - a / n)
        interior = slice(8, n - 8)
        assert np.max(np.abs(shifted[interior] - want[interior])) < 1e-10


def test_stencil_table_spline_matches_shift(rng):
    """Applying the table to spline coefficients equals spline_shift_1d."""
    u = rng.normal(size=24)
    c = interp.spline_coefficients(u)
    for a in (0.42, -0.9, 1.0):
        offsets, w = interp.stencil_weight_table([a], interp.cubic_spline(), m=1)
        via_table = sum(w[0, j] * np.roll(c, -int(o))
                        for j, o in enumerate(offsets))
        assert np.allclose(via_table, interp.spline_shift_1d(u, a), atol=1e-12)


# -- univariate propagation operators -----------------------------------------


def dense_operator_oracle(scheme, coeff, dt, dx, m, n_t, coeff_first):
    """Row-by-row dense assembly on the (coeff, target) pair."""
    n_c = len(coeff)
    offsets, w = interp.stencil_weight_table(
        np.asarray(coeff) * dt / dx, scheme, m)
    if scheme.kind == "cubic_spline":
        ainv = interp.spline_collocation_inverse_column(n_t)
        base = {int(o): np.array([[ainv[(i + int(o) - j) % n_t]
                                   for j in range(n_t)] for i in range(n_t)])
                for o in offsets}
    else:
        base = {int(o): np.array([[1.0 if (i + int(o) - j) % n_t == 0 else 0.0
                                   for j in range(n_t)] for i in range(n_t)])
                for o in offsets}
    big = np.zeros((n_c * n_t, n_c * n_t)) if coeff_first else \
        np.zeros((n_t * n_c, n_t * n_c))
    for k in range(n_c):
        block = sum(w[k, j] * base[int(o)] for j, o in enumerate(offsets))
        if coeff_first:
            big[k * n_t:(k + 1) * n_t, k * n_t:(k + 1) * n_t] = block
        else:
            big[k::n_c, k::n_c] = block
    return big


@pytest.mark.parametrize("scheme", [interp.linear(), interp.lagrange(5),
                                    interp.cubic_spline()])
@pytest.mark.parametrize("coeff_first", [True, False])
def test_operator_dense_realization(rng, scheme, coeff_first):
    n_c, n_t = 8, 8
    coeff = rng.uniform(-1, 1, size=n_c)
    if coeff_first:
        mode_sizes, ca, ta = (n_c, n_t), 0, 1
    else:
        mode_sizes, ca, ta = (n_t, n_c), 1, 0
    op = interp.build_univariate_operator(scheme, coeff, 1.0, 1.0, 1,
                                          mode_sizes, ca, ta)
    assert op.interior_ranks == (scheme.p + 1,)
    want = dense_operator_oracle(scheme, coeff, 1.0, 1.0, 1, n_t, coeff_first)
    assert np.allclose(op.realize_dense(), want, atol=1e-12)


def test_operator_linear_rank_three():
    op = interp.build_univariate_operator(
        interp.linear(), np.linspace(-0.9, 0.9, 16), 1.0, 1.0, 1,
        (16, 16), 0, 1)
    assert op.ranks == (1, 3, 1)


def test_operator_zero_coeff_rounds_to_identity():
    op = interp.build_univariate_operator(
        interp.lagrange(5), np.zeros(8), 1.0, 1.0, 1, (8, 8), 0, 1)
    assert op.interior_ranks == (6,)
    r = ttop.round_matrix(op, TruncationControl(1e-12))
    assert r.interior_ranks == (1,)
    assert np.allclose(r.realize_dense(), np.eye(64), atol=1e-12)


def test_operator_with_gap_axis(rng):
    """Coefficient and target separated by a pass-through axis."""
    coeff = rng.uniform(-1, 1, size=4)
    op = interp.build_univariate_operator(
        interp.linear(), coeff, 1.0, 1.0, 1, (4, 3, 4), 0, 2)
    pair = dense_operator_oracle(interp.linear(), coeff, 1.0, 1.0, 1, 4, True)
    want = np.einsum("acbd,ef->aecbfd",
                     pair.reshape(4, 4, 4, 4), np.eye(3)).reshape(48, 48)
    assert np.allclose(op.realize_dense(), want, atol=1e-12)
    u = random_tt(rng, (4, 3, 4), 2)
    got = ttop.matvec(op, u, TruncationControl(1e-12)).full()
    assert np.allclose(got.ravel(), want @ u.full().ravel(), atol=1e-10)


def test_operator_cfl_violation():
    with pytest.raises(CFLViolation):
        interp.build_univariate_operator(
            interp.linear(), np.array([2.0, 0.0]), 1.0, 1.0, 1, (2, 8), 0, 1)


def test_operator_matvec_shifts_profile(rng):
    """Constant unit displacement circularly shifts the target axis."""
    n = 16
    u = random_tt(rng, (4, n), 2)
    op = interp.build_univariate_operator(
        interp.cubic_spline(), np.ones(4), 1.0, 1.0, 1, (4, n), 0, 1)
    got = ttop.matvec(op, u, TruncationControl(1e-12)).full()
    want = np.stack([np.roll(u.full()[k], 1) for k in range(4)])
    assert np.allclose(got, want, atol=1e-10)


# -- TT weight fields ----------------------------------------------------------


def test_weight_tt_zero_displacement():
    disp = tt.zeros((8, 8))
    fields = interp.build_weight_tt(disp, 3, TruncationControl(1e-10))
    assert len(fields) == 3
    center = ttop.diag_field(fields[1])
    assert center.interior_ranks == (1,)
    assert np.allclose(center.full(), 1.0)
    for side in (0, 2):
        assert np.allclose(ttop.diag_field(fields[side]).full(), 0.0,
                           atol=1e-12)


def test_weight_tt_matches_dense_polynomials(rng):
    disp = random_tt(rng, (6, 6), 1)
    disp = tt.scale(disp, 0.9 / np.max(np.abs(disp.full())))
    eps = 1e-8
    fields = interp.build_weight_tt(disp, 3, TruncationControl(eps))
    a = disp.full()
    oracles = [a * (a + 1) / 2, 1 - a * a, a * (a - 1) / 2]
    for field, want in zip(fields, oracles):
        got = ttop.diag_field(field).full()
        assert np.max(np.abs(got - want)) <= eps


def test_weight_tt_partition_of_unity(rng):
    disp = random_tt(rng, (6, 5), 2)
    disp = tt.scale(disp, 0.95 / np.max(np.abs(disp.full())))
    eps = 1e-9
    fields = interp.build_weight_tt(disp, 5, TruncationControl(eps))
    total = ttop.diag_field(fields[0])
    for f in fields[1:]:
        total = tt.add(total, ttop.diag_field(f))
    assert np.max(np.abs(total.full() - 1.0)) <= 5 * eps


def test_weight_tt_rejects_large_displacement(rng):
    disp = random_tt(rng, (6, 6), 1)
    disp = tt.scale(disp, 2.0 / np.max(np.abs(disp.full())))
    with pytest.raises(CFLViolation):
        interp.build_weight_tt(disp, 3, TruncationControl(1e-8))
