"""End-to-end commitments of the package, one test per guarantee.

Each test prints a single PASS/FAIL line with the measured numbers next
to the bound it must meet (run pytest with -s to see the PASS lines).
The physics runs use the bundled parameter sets; the randomized sweeps
re-check every tensor operation against its dense oracle in one place.
"""

import time

import numpy as np
import pytest

from conftest import random_tt
from ttvlasov import (SimulationConfig, TruncationControl, init_case,
                      make_grid, run, tt)
from ttvlasov.advection import advect_multivariate, advect_univariate
from ttvlasov.fullgrid import dense_advect, dense_run
from ttvlasov.interpolation import (build_weight_tt, cubic_spline, lagrange,
                                    lagrange_weights, linear)
from ttvlasov.ttop import MatrixKernel, TTMatrix, matvec, round_matrix


def _report(name, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, f"{name}: {detail}"


def _energy(records):
    return np.array([sum(r.electric_energy) for r in records])


def _times(records):
    return np.array([r.time for r in records])


def _weak_landau_2d(t_final=30.0, **kw):
    g = make_grid(1, 32, 128, 4 * np.pi)
    return SimulationConfig(grid=g, case="landau_aligned", alpha=0.01, k=0.5,
                            dt=0.0625, t_final=t_final, epsilon=4e-6, **kw)


def _fit_peak_decay(times, energy, t_lo, t_hi):
    """Slope of a line through the log of the local energy maxima."""
    pk = [i for i in range(1, len(energy) - 1)
          if energy[i] >= energy[i - 1] and energy[i] >= energy[i + 1]
          and t_lo <= times[i] <= t_hi]
    if len(pk) < 2:
        raise AssertionError("not enough oscillation peaks to fit")
    return float(np.polyfit(times[pk], np.log(energy[pk]), 1)[0])


# -- Landau damping physics ----------------------------------------------


def test_weak_landau_damping_rate():
    start = time.perf_counter()
    records, _, _ = run(_weak_landau_2d())
    elapsed = time.perf_counter() - start
    slope = _fit_peak_decay(_times(records), _energy(records), 1.0, 15.0)
    ok = abs(slope - (-0.3066)) <= 0.10 * 0.3066 and elapsed < 120
    _report("weak Landau damping rate", ok,
            f"fitted {slope:.4f} vs -0.3066 within 10%, {elapsed:.0f}s < 120s")


def test_recurrence_peak_in_both_solvers():
    cfg = _weak_landau_2d(t_final=80.0)
    peaks = {}
    for name, solver in (("tt", run), ("dense", dense_run)):
        records, _, _ = solver(cfg)
        t, e = _times(records), _energy(records)
        late = t >= 40.0
        peaks[name] = float(t[late][np.argmax(e[late])])
    ok = all(55.0 <= tp <= 70.0 for tp in peaks.values())
    _report("recurrence peak in both solvers", ok,
            f"tt at t={peaks['tt']:.2f}, dense at t={peaks['dense']:.2f}, "
            f"required within [55, 70]")


def test_tt_matches_dense_distribution():
    cfg = _weak_landau_2d(t_final=40.0)
    _, f_tt, _ = run(cfg)
    _, f_dense, _ = dense_run(cfg)
    diff = float(np.max(np.abs(tt.reconstruct_full(f_tt) - f_dense)))
    ok = diff <= 1e-5
    _report("tt matches dense distribution", ok,
            f"l_inf difference at t=40 is {diff:.3e} <= 1e-5")


def test_4d_compression():
    g = make_grid(2, 32, 128, 4 * np.pi)
    start = time.perf_counter()
    rec_a, _, _ = run(SimulationConfig(
        grid=g, case="landau_aligned", alpha=0.01, k=0.5, dt=0.0625,
        t_final=30.0, epsilon=4e-6))
    rec_d, _, _ = run(SimulationConfig(
        grid=g, case="landau_diag", alpha=0.01, k=0.5, dt=0.0625,
        t_final=30.0, epsilon=4e-6))
    elapsed = time.perf_counter() - start
    ranks_a = np.array([r.ranks for r in rec_a])
    max_a = tuple(int(m) for m in ranks_a.max(axis=0))
    rate_a = max(r.compression_rate for r in rec_a)
    rate_d = max(r.compression_rate for r in rec_d)
    ok = (all(r <= b for r, b in zip(max_a, (20, 8, 18)))
          and rate_a <= 1e-3 and rate_d <= 1e-2 and elapsed < 1800)
    _report("4d compression", ok,
            f"aligned ranks {max_a} <= (20, 8, 18), rate {rate_a:.3e} <= "
            f"1e-3; diagonal rate {rate_d:.3e} <= 1e-2; {elapsed:.0f}s "
            f"< 1800s")


def test_strong_landau_field_error():
    g = make_grid(1, 32, 128, 4 * np.pi)
    cfg = SimulationConfig(grid=g, case="landau_aligned", alpha=0.5, k=0.5,
                           dt=0.0625, t_final=30.0, epsilon=4e-3)
    _, _, series_tt = run(cfg, keep_efield=True)
    _, _, series_dn = dense_run(cfg, keep_efield=True)
    diff = max(float(np.max(np.abs(et - ed)))
               for (_, et), (_, ed) in zip(series_tt, series_dn))
    ok = diff <= 5e-3
    _report("strong Landau field error", ok,
            f"electric field l_inf over the run {diff:.3e} <= 5e-3")


def test_projection_conserves_invariants():
    g = make_grid(2, 16, 32, 4 * np.pi)
    base = dict(grid=g, case="landau_aligned", alpha=0.5, k=0.5, dt=0.125,
                t_final=30.0, epsilon=4e-3)
    rec_on, _, _ = run(SimulationConfig(**base, projection=True))
    rec_off, _, _ = run(SimulationConfig(**base))
    mass0 = rec_on[0].mass
    mass_drift = max(abs(r.mass - mass0) / abs(mass0) for r in rec_on)
    mom_drift = max(max(abs(p - p0) for p, p0
                        in zip(r.momentum, rec_on[0].momentum))
                    for r in rec_on) / abs(mass0)

    def worst(records, key):
        vals = np.array([getattr(r, key) for r in records])
        return float(np.max(np.abs(vals - vals[0])))

    l2_ratio = worst(rec_on, "l2_norm") / worst(rec_off, "l2_norm")
    en_ratio = worst(rec_on, "total_energy") / worst(rec_off, "total_energy")
    ok = (mass_drift <= 1e-9 and mom_drift <= 1e-9
          and l2_ratio <= 1.1 and en_ratio <= 1.1)
    _report("projection conserves invariants", ok,
            f"mass drift {mass_drift:.2e}, momentum drift {mom_drift:.2e} "
            f"<= 1e-9; l2 drift x{l2_ratio:.3f}, energy drift x{en_ratio:.3f}"
            f" <= x1.1 of unprojected")


def test_4d_speed_advantage():
    g = make_grid(2, 16, 32, 4 * np.pi)
    cfg = SimulationConfig(grid=g, case="landau_aligned", alpha=0.01, k=0.5,
                           dt=0.125, t_final=30.0, epsilon=4e-6)
    start = time.perf_counter()
    run(cfg)
    tt_time = time.perf_counter() - start
    start = time.perf_counter()
    dense_run(cfg)
    dense_time = time.perf_counter() - start
    ratio = dense_time / tt_time
    ok = ratio >= 20.0
    _report("4d speed advantage", ok,
            f"tt {tt_time:.2f}s vs dense {dense_time:.2f}s, ratio "
            f"{ratio:.1f} >= 20")


# -- two-stream structure -------------------------------------------------


def test_two_stream_equilibrium_structure():
    g = make_grid(2, 64, 64, 10 * np.pi)
    cfg = SimulationConfig(grid=g, case="two_stream_4d_equilibrium",
                           alpha=0.001, k=0.2, v0=2.4, dt=0.0625,
                           t_final=40.0, epsilon=5e-4)
    init_interior = init_case(cfg).ranks[1:-1]
    records, _, _ = run(cfg)
    ranks = np.array([r.ranks for r in records])
    worst_23 = (int(ranks[:, 1].max()), int(ranks[:, 2].max()))
    ok = all(r == 1 for r in init_interior[1:]) and max(worst_23) <= 2
    _report("two-stream equilibrium structure", ok,
            f"init interior ranks {init_interior} (all but the first are "
            f"one), run max (r2, r3) = {worst_23} <= 2")


@pytest.mark.slow
def test_two_stream_rank_dynamics():
    """Outer ranks grow through the instability and the whole rank
    vector levels off after saturation.

    Reference run of this exact configuration: r1 and r3 rise 3 -> 15
    over t in [20, 30] and sit at exactly 41 from t = 50 on; the middle
    rank climbs to about 200 and then wanders within +-9% of that with
    no trend.  The checks below are qualitative (a 2x growth floor, a
    25% flatness band) so they survive BLAS-dependent truncation ties.
    Takes most of an hour on one core.
    """
    g = make_grid(2, 64, 64, 10 * np.pi)
    cfg = SimulationConfig(grid=g, case="two_stream_4d_product",
                           alpha=0.001, k=0.2, v0=2.4, dt=0.0625,
                           t_final=70.0, epsilon=5e-4, diagnostics_every=4)
    records, _, _ = run(cfg)
    t = _times(records)
    ranks = np.array([r.ranks for r in records])

    def at(tq):
        return int(np.argmin(np.abs(t - tq)))

    r1, r3 = ranks[:, 0], ranks[:, 2]
    growth = (r1[at(30.0)] >= 2 * r1[at(20.0)]
              and r3[at(30.0)] >= 2 * r3[at(20.0)])
    late = ranks[t >= 60.0]
    spans = late.max(axis=0) - late.min(axis=0)
    plateau = bool(np.all(spans <= np.maximum(3, 0.25 * late.mean(axis=0))))
    ok = growth and plateau
    _report("two-stream rank dynamics", ok,
            f"r1 {r1[at(20.0)]}->{r1[at(30.0)]} and r3 {r3[at(20.0)]}->"
            f"{r3[at(30.0)]} grew through [20, 30]; rank spread past t=60 "
            f"is {tuple(int(s) for s in spans)} within 25% of the late "
            f"means {tuple(late.mean(axis=0).round(1))}")


# -- randomized oracle sweeps ---------------------------------------------


def _random_sizes(rng, d_max=4, n_max=8):
    d = int(rng.integers(1, d_max + 1))
    return tuple(int(rng.integers(2, n_max + 1)) for _ in range(d))


def _case_round(rng):
    a = random_tt(rng, _random_sizes(rng), int(rng.integers(1, 5)))
    dense = tt.reconstruct_full(a)
    eps = 10.0 ** rng.uniform(-8, -1) * tt.norm(a)
    out = tt.round(a, TruncationControl(eps))
    err = float(np.linalg.norm(tt.reconstruct_full(out) - dense))
    return err <= eps * (1 + 1e-9), f"round err {err:.2e} vs budget {eps:.2e}"


def _case_add_scale(rng):
    sizes = _random_sizes(rng)
    a = random_tt(rng, sizes, int(rng.integers(1, 4)))
    b = random_tt(rng, sizes, int(rng.integers(1, 4)))
    c = float(rng.standard_normal())
    got = tt.reconstruct_full(tt.add(a, tt.scale(b, c)))
    want = tt.reconstruct_full(a) + c * tt.reconstruct_full(b)
    err = float(np.max(np.abs(got - want)))
    tol = 1e-12 * max(1.0, float(np.max(np.abs(want))))
    return err <= tol, f"add/scale err {err:.2e}"


def _case_hadamard(rng):
    sizes = _random_sizes(rng)
    a = random_tt(rng, sizes, int(rng.integers(1, 4)))
    b = random_tt(rng, sizes, int(rng.integers(1, 4)))
    eps = 10.0 ** rng.uniform(-8, -2) * tt.norm(a) * tt.norm(b)
    got = tt.hadamard_rounded(a, b, TruncationControl(eps))
    want = tt.reconstruct_full(a) * tt.reconstruct_full(b)
    err = float(np.linalg.norm(tt.reconstruct_full(got) - want))
    return err <= 2 * eps * (1 + 1e-9), f"hadamard err {err:.2e} vs 2x{eps:.2e}"


def _case_dot_norm(rng):
    sizes = _random_sizes(rng)
    a = random_tt(rng, sizes, int(rng.integers(1, 4)))
    b = random_tt(rng, sizes, int(rng.integers(1, 4)))
    da, db = tt.reconstruct_full(a), tt.reconstruct_full(b)
    scale = float(np.linalg.norm(da) * np.linalg.norm(db)) + 1e-30
    ok = (abs(tt.dot(a, b) - float(np.vdot(da, db))) <= 1e-10 * scale
          and abs(tt.norm(a) - float(np.linalg.norm(da)))
          <= 1e-10 * float(np.linalg.norm(da)))
    return ok, "dot/norm against dense contraction"


def _case_shift(rng):
    sizes = _random_sizes(rng)
    a = random_tt(rng, sizes, int(rng.integers(1, 4)))
    axis = int(rng.integers(0, len(sizes)))
    j = int(rng.integers(-3, 4))
    got = tt.reconstruct_full(tt.shift_fiber(a, axis, j))
    want = np.roll(tt.reconstruct_full(a), -j, axis=axis)
    err = float(np.max(np.abs(got - want)))
    return err <= 1e-12 * max(1.0, float(np.max(np.abs(want)))), \
        f"shift err {err:.2e}"


def _case_univariate_advect(rng):
    d = int(rng.integers(2, 4))
    sizes = [int(rng.integers(2, 5)) for _ in range(d)]
    target = int(rng.integers(0, d))
    neighbors = [ax for ax in (target - 1, target + 1) if 0 <= ax < d]
    coeff_axis = int(rng.choice(neighbors))
    sizes[target] = int(rng.choice([8, 16]))
    sizes[coeff_axis] = int(rng.choice([4, 8]))
    scheme = {0: linear(), 1: lagrange(5), 2: cubic_spline()}[
        int(rng.integers(0, 3))]
    a = random_tt(rng, tuple(sizes), int(rng.integers(1, 4)))
    coeff = rng.uniform(-0.9, 0.9, sizes[coeff_axis])
    out = advect_univariate(a, scheme, coeff, 1.0, 1.0, int(coeff_axis),
                            int(target), TruncationControl(1e-12))
    view = [1] * d
    view[coeff_axis] = sizes[coeff_axis]
    shape = list(sizes)
    shape[target] = 1
    disp = np.squeeze(np.broadcast_to(coeff.reshape(view), shape),
                      axis=int(target))
    want = dense_advect(tt.reconstruct_full(a), int(target), disp, scheme)
    err = float(np.max(np.abs(tt.reconstruct_full(out) - want)))
    return err <= 1e-8, f"univariate advect err {err:.2e}"


def _case_multivariate_advect(rng):
    grid = make_grid(2, 8, 8, 2 * np.pi, v_min=-4.0, v_max=4.0)
    p = int(rng.choice([3, 5]))
    e_vals = rng.uniform(-0.8, 0.8, (8, 8))
    v_index = int(rng.integers(0, 2))
    dv = grid.dv[v_index]
    e_tt = tt.tt_from_full(e_vals, TruncationControl(1e-13))
    f = random_tt(rng, grid.mode_sizes, int(rng.integers(1, 4)))
    out = advect_multivariate(f, e_tt, p, 1.0, grid, v_index,
                              TruncationControl(1e-12))
    v_pos = grid.v_positions[v_index]
    shape = list(grid.mode_sizes)
    shape[v_pos] = 1
    view = [1] * grid.ndim
    for i, x_pos in enumerate(grid.x_positions):
        view[x_pos] = grid.mode_sizes[x_pos]
    disp = np.squeeze(np.broadcast_to(
        (-e_vals / dv).reshape(view), shape), axis=v_pos)
    want = dense_advect(tt.reconstruct_full(f), v_pos, disp, lagrange(p),
                        split=False)
    err = float(np.max(np.abs(tt.reconstruct_full(out) - want)))
    return err <= 1e-7, f"multivariate advect err {err:.2e}"


def _case_weight_fields(rng):
    sizes = (int(rng.choice([4, 8])), int(rng.choice([4, 8])))
    p = int(rng.choice([3, 5]))
    vals = rng.uniform(-0.95, 0.95, sizes)
    disp = tt.tt_from_full(vals, TruncationControl(1e-13))
    fields = build_weight_tt(disp, p, TruncationControl(1e-12))
    want = lagrange_weights(vals.ravel(), p)
    worst = 0.0
    for t_idx, op in enumerate(fields):
        got = tt.reconstruct_full(
            tt.TTTensor([k.values.copy() for k in op.kernels])).ravel()
        worst = max(worst, float(np.max(np.abs(got - want[:, t_idx]))))
    return worst <= 1e-8, f"weight field err {worst:.2e}"


def _case_matvec(rng):
    d = int(rng.integers(1, 4))
    sizes = tuple(int(rng.integers(3, 9)) for _ in range(d))
    nondiag = int(rng.integers(0, d))
    kernels = []
    for k, n in enumerate(sizes):
        if k == nondiag:
            offs = [-1, 0, 1] if n >= 3 else [0]
            kernels.append(MatrixKernel.stencil(
                n, offs, rng.standard_normal((1, len(offs), 1))))
        else:
            kernels.append(MatrixKernel.diagonal(
                rng.standard_normal((1, n, 1))))
    mat = TTMatrix(kernels)
    x = random_tt(rng, sizes, int(rng.integers(1, 4)))
    got = tt.reconstruct_full(
        matvec(mat, x, TruncationControl(1e-13), mode="diag_with_one_nondiag"))
    want = (mat.realize_dense() @ tt.reconstruct_full(x).ravel()).reshape(sizes)
    err = float(np.max(np.abs(got - want)))
    return err <= 1e-9 * max(1.0, float(np.max(np.abs(want)))), \
        f"matvec err {err:.2e}"


def _case_round_matrix(rng):
    d = int(rng.integers(1, 4))
    sizes = tuple(int(rng.integers(3, 7)) for _ in range(d))
    kernels = [MatrixKernel.diagonal(rng.standard_normal((1, n, 1)))
               for n in sizes]
    mat = TTMatrix(kernels)
    out = round_matrix(mat, TruncationControl(1e-13))
    err = float(np.max(np.abs(out.realize_dense() - mat.realize_dense())))
    return err <= 1e-10, f"round_matrix err {err:.2e}"


_ORACLE_CASES = (
    _case_round, _case_add_scale, _case_hadamard, _case_dot_norm,
    _case_shift, _case_univariate_advect, _case_multivariate_advect,
    _case_weight_fields, _case_matvec, _case_round_matrix,
)


def test_operations_match_dense_oracles(rng):
    failures = []
    for i in range(200):
        case = _ORACLE_CASES[int(rng.integers(0, len(_ORACLE_CASES)))]
        ok, detail = case(rng)
        if not ok:
            failures.append(f"case {i} {case.__name__}: {detail}")
    ok = not failures
    _report("operations match dense oracles", ok,
            f"200 randomized cases, {len(failures)} failures"
            + (": " + "; ".join(failures[:3]) if failures else ""))


def test_rounding_error_contract(rng):
    bad_round = bad_had = 0
    for _ in range(500):
        sizes = _random_sizes(rng)
        a = random_tt(rng, sizes, int(rng.integers(1, 6)))
        dense = tt.reconstruct_full(a)
        eps = 10.0 ** rng.uniform(-8, -1) * float(np.linalg.norm(dense))
        out = tt.round(a, TruncationControl(eps))
        if float(np.linalg.norm(tt.reconstruct_full(out) - dense)) \
                > eps * (1 + 1e-9):
            bad_round += 1
        b = random_tt(rng, sizes, int(rng.integers(1, 4)))
        had = tt.hadamard_rounded(a, b, TruncationControl(eps))
        want = dense * tt.reconstruct_full(b)
        if float(np.linalg.norm(tt.reconstruct_full(had) - want)) \
                > 2 * eps * (1 + 1e-9):
            bad_had += 1
    ok = bad_round == 0 and bad_had == 0
    _report("rounding error contract", ok,
            f"500 random tensors: {bad_round} rounding violations, "
            f"{bad_had} product violations")
