"""Dense full-grid reference solver.

Shares the interpolation formulas, the Poisson solve, the initial
conditions, and the step order with the TT solver, so any disagreement
beyond the rounding tolerance isolates the low-rank arithmetic.  Only
practical for 2D phase space and small 4D grids; a hard size guard
rejects anything above ten million points.
"""

import numpy as np

from . import tt
from .fields import SpatialField, electric_energy, poisson_solve
from .interpolation import bspline3, lagrange_weights, spline_coefficients
from .simulation import DiagnosticsRecord, init_case
from .tt import CFLViolation, FULL_SIZE_LIMIT


def dense_advect(values, axis, displacement, scheme, m=1, split=True):
    """Shift each line along `axis` by its own constant displacement.

    displacement (in cells) must broadcast against the array with
    `axis` removed.  With split=True this mirrors the TT pair path:
    s = clip(floor(a), -m, m-1), theta = a - s in [0, 1].  With
    split=False it mirrors the TT weight-polynomial path: centered
    lagrange weights evaluated at the raw displacement, |a| <= 1.
    """
    arr = np.moveaxis(np.asarray(values, dtype=float), axis, -1)
    n = arr.shape[-1]
    disp = np.broadcast_to(np.asarray(displacement, dtype=float),
                           arr.shape[:-1])
    worst = float(np.max(np.abs(disp))) if disp.size else 0.0
    limit = m if split else 1
    if worst > limit + 1e-9:
        raise CFLViolation(
            f"axis {axis}: displacement {worst:.6g} exceeds window "
            f"{limit}", axis=axis, max_displacement=worst)
    if split:
        s = np.clip(np.floor(disp), -m, m - 1).astype(int)
        theta = disp - s
    else:
        if scheme.kind != "lagrange":
            raise ValueError("unsplit weights exist only for lagrange")
        s = np.zeros(disp.shape, dtype=int)
        theta = disp
    if scheme.kind == "cubic_spline":
        data = spline_coefficients(arr, axis=-1)
        base = np.arange(-2, 2)
        weights = bspline3(theta[..., None] + base)
    elif scheme.kind == "lagrange":
        data = arr
        h = (scheme.p - 1) // 2
        base = np.arange(-h, h + 1)
        weights = lagrange_weights(theta, scheme.p)
    else:
        data = arr
        base = np.array([-1, 0])
        weights = np.stack([theta, 1.0 - theta], axis=-1)
    idx = np.arange(n)
    out = np.zeros_like(arr)
    for ti, t in enumerate(base):
        gather = (idx + (int(t) - s)[..., None]) % n
        out += weights[..., ti, None] * np.take_along_axis(data, gather,
                                                           axis=-1)
    return np.moveaxis(out, -1, axis)


def _line_displacement(grid, values_1d, varying_pos, advected_pos):
    """Reshape a per-index coefficient so it broadcasts over the grid
    with the advected axis removed."""
    view = []
    for j in range(grid.ndim):
        if j == advected_pos:
            continue
        view.append(grid.mode_sizes[j] if j == varying_pos else 1)
    return np.asarray(values_1d, dtype=float).reshape(view)


def _field_displacement(grid, e_values, advected_pos):
    x_set = set(grid.x_positions)
    view = []
    for j in range(grid.ndim):
        if j == advected_pos:
            continue
        view.append(grid.mode_sizes[j] if j in x_set else 1)
    return np.asarray(e_values, dtype=float).reshape(view)


def _dense_density(f, grid):
    v_axes = tuple(grid.v_positions)
    rho = f.sum(axis=v_axes) * float(np.prod(grid.dv))
    return SpatialField(rho, grid.dx)


def _advect_space_half(f, config):
    g = config.grid
    for i in range(g.d_x):
        disp = _line_displacement(
            g, 0.5 * config.dt * g.v_coords(i) / g.dx[i],
            g.v_positions[i], g.x_positions[i])
        f = dense_advect(f, g.x_positions[i], disp, config.scheme_x,
                         m=config.m)
    return f


def _advect_velocity(f, e_fields, config, dt):
    # one spatial axis advects velocity through the pair path (window
    # split); several spatial axes use the weight-polynomial path, so
    # the dense oracle must evaluate the same unsplit weights
    g = config.grid
    for i in range(g.d_x):
        disp = _field_displacement(
            g, -dt * e_fields[i].values / g.dv[i], g.v_positions[i])
        f = dense_advect(f, g.v_positions[i], disp, config.scheme_v,
                         m=1, split=g.d_x == 1)
    return f


def _dense_diagnostics(f, e_fields, grid, time):
    vol = grid.cell_volume
    mass = vol * float(f.sum())
    momentum, kinetic = [], 0.0
    for i in range(grid.d_x):
        view = [1] * grid.ndim
        view[grid.v_positions[i]] = grid.nv[i]
        v = grid.v_coords(i).reshape(view)
        momentum.append(vol * float((f * v).sum()))
        kinetic += 0.5 * vol * float((f * v * v).sum())
    e_energy = electric_energy(e_fields)
    return DiagnosticsRecord(
        time=time, mass=mass, momentum=tuple(momentum),
        l2_norm=float(np.sqrt(vol * (f * f).sum())),
        kinetic_energy=kinetic, electric_energy=e_energy,
        total_energy=kinetic + sum(e_energy),
        ranks=(), stored_doubles=f.size, compression_rate=1.0)


def dense_step(f, e_fields, config):
    g = config.grid
    if config.substep_order == "standard":
        f = _advect_space_half(f, config)
        _, e_fields = poisson_solve(_dense_density(f, g))
        f = _advect_velocity(f, e_fields, config, config.dt)
        f = _advect_space_half(f, config)
    else:
        if e_fields is None:
            _, e_fields = poisson_solve(_dense_density(f, g))
        f = _advect_velocity(f, e_fields, config, 0.5 * config.dt)
        f = _advect_space_half(f, config)
        _, e_fields = poisson_solve(_dense_density(f, g))
        f = _advect_velocity(f, e_fields, config, 0.5 * config.dt)
    return f, e_fields


def dense_run(config, on_record=None, keep_efield=False):
    """Dense counterpart of simulation.run with identical outputs."""
    g = config.grid
    if g.total_points > FULL_SIZE_LIMIT:
        raise ValueError(
            f"dense solver refuses {g.total_points} > "
            f"{FULL_SIZE_LIMIT:.0e} grid points")
    f = tt.reconstruct_full(init_case(config))
    _, e_fields = poisson_solve(_dense_density(f, g))
    records = [_dense_diagnostics(f, e_fields, g, 0.0)]
    if on_record is not None:
        on_record(records[0])
    efield_series = []
    if keep_efield and g.d_x == 1:
        efield_series.append((0.0, e_fields[0].values.copy()))
    vol = g.cell_volume
    mass0 = vol * float(f.sum())
    mom0 = []
    for i in range(g.d_x):
        view = [1] * g.ndim
        view[g.v_positions[i]] = g.nv[i]
        mom0.append(vol * float((f * g.v_coords(i).reshape(view)).sum()))
    e_cur = e_fields
    n = config.n_steps
    for j in range(1, n + 1):
        f, e_cur = dense_step(f, e_cur, config)
        if config.projection:
            f = _dense_project(f, mass0, mom0, g)
        if j % config.diagnostics_every == 0 or j == n:
            rec = _dense_diagnostics(f, e_cur, g, j * config.dt)
            records.append(rec)
            if on_record is not None:
                on_record(rec)
            if keep_efield and g.d_x == 1:
                efield_series.append((j * config.dt,
                                      e_cur[0].values.copy()))
    return records, f, efield_series


def _dense_project(f, mass0, mom0, grid):
    vol = grid.cell_volume
    total = grid.total_points
    f = f + (mass0 - vol * f.sum()) / (vol * total)
    for i in range(grid.d_x):
        view = [1] * grid.ndim
        view[grid.v_positions[i]] = grid.nv[i]
        v = grid.v_coords(i).reshape(view)
        c_k = float(np.sum(grid.v_coords(i) ** 2)) / grid.nv[i]
        d_mom = mom0[i] - vol * float((f * v).sum())
        f = f + d_mom * v / (vol * total * c_k)
    return f
