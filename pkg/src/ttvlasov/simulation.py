"""Split-step Vlasov-Poisson time loop on TT distributions.

One step advances f through half steps in space, a Poisson solve, and
full steps in velocity, with every rounding operation budgeted by the
scheduled step tolerance.  Space moves by its own velocity, so those
advections touch a single bond each; velocity moves by the electric
field, which in more than one spatial dimension depends on all space
and goes through the weight-polynomial path.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import tt
from .advection import advect_multivariate, advect_univariate
from .fields import density, electric_energy, field_to_tt, poisson_solve
from .grid import PhaseSpaceGrid
from .interpolation import Scheme, lagrange
from .tt import TruncationControl

CASES = ("landau_aligned", "landau_diag", "two_stream_1d",
         "two_stream_4d_equilibrium", "two_stream_4d_product")

# load-time screen for the velocity CFL bound; the run aborts with a
# CFLViolation if the actual field ever exceeds one cell per step
E_ESTIMATE_FACTOR = 1.2


@dataclass(frozen=True)
class SimulationConfig:
    """Everything one run needs; validates both CFL bounds on creation."""

    grid: PhaseSpaceGrid
    case: str
    alpha: float
    k: float
    dt: float
    t_final: float
    epsilon: float
    r_max: int | None = None
    v0: float = 2.4
    scheme_x: Scheme = field(default_factory=lambda: lagrange(5))
    scheme_v: Scheme = field(default_factory=lambda: lagrange(5))
    m: int = 1
    projection: bool = False
    substep_order: str = "standard"
    diagnostics_every: int = 1

    def __post_init__(self):
        if self.case not in CASES:
            raise ValueError(f"unknown case {self.case!r}")
        if self.dt <= 0 or self.t_final <= 0:
            raise ValueError("dt and t_final must be positive")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if self.substep_order not in ("standard", "printed"):
            raise ValueError("substep_order must be standard or printed")
        if self.diagnostics_every < 1:
            raise ValueError("diagnostics cadence must be positive")
        g = self.grid
        if g.d_x >= 2 and self.scheme_v.kind != "lagrange":
            raise ValueError("velocity advection across several spatial "
                             "axes needs a lagrange scheme")
        for i in range(g.d_x):
            v_max = float(np.max(np.abs(g.v_coords(i))))
            bound = self.m * g.dx[i]
            if self.dt * v_max > bound + 1e-12:
                raise ValueError(
                    f"spatial CFL violated on axis {i + 1}: dt*v_max = "
                    f"{self.dt * v_max:.4g} > m*dx = {bound:.4g}")
        e_est = E_ESTIMATE_FACTOR * abs(self.alpha) / self.k
        for i in range(g.d_x):
            if self.dt * e_est > g.dv[i] + 1e-12:
                raise ValueError(
                    f"velocity CFL estimate violated on axis {i + 1}: "
                    f"dt*E_est = {self.dt * e_est:.4g} > dv = "
                    f"{g.dv[i]:.4g}")

    @property
    def n_steps(self):
        return max(1, int(round(self.t_final / self.dt)))


def tolerance_schedule(j, n_steps, eps_final):
    """Step tolerance grows linearly: filaments develop over time, so
    early steps are rounded harder than late ones."""
    if not 1 <= j <= n_steps:
        raise ValueError("step index out of range")
    return (j / n_steps) * eps_final


def _gaussian(v):
    return np.exp(-0.5 * v ** 2)


def _case_terms(config):
    """Rank-1 factor lists (one 1D array per tensor position)."""
    g = config.grid
    d_x = g.d_x
    alpha, k, v0 = config.alpha, config.k, config.v0
    ones = {pos: np.ones(g.mode_sizes[pos]) for pos in range(g.ndim)}

    def term(overrides):
        factors = [ones[pos].copy() for pos in range(g.ndim)]
        for pos, vec in overrides.items():
            factors[pos] = vec
        return factors

    if config.case == "landau_aligned":
        norm_c = (2.0 * np.pi) ** (-d_x / 2.0)
        base = {g.v_positions[i]: _gaussian(g.v_coords(i))
                for i in range(d_x)}
        base[g.v_positions[0]] = base[g.v_positions[0]] * norm_c
        if d_x == 1:
            one = dict(base)
            one[g.x_positions[0]] = 1.0 + alpha * np.cos(k * g.x_coords(0))
            return [term(one)]
        terms = [term(base)]
        for i in range(d_x):
            extra = dict(base)
            extra[g.x_positions[i]] = alpha * np.cos(k * g.x_coords(i))
            terms.append(term(extra))
        return terms

    if config.case == "landau_diag":
        if d_x < 2:
            raise ValueError("diagonal perturbation needs d_x >= 2")
        norm_c = (2.0 * np.pi) ** (-d_x / 2.0)
        base = {g.v_positions[i]: _gaussian(g.v_coords(i))
                for i in range(d_x)}
        base[g.v_positions[0]] = base[g.v_positions[0]] * norm_c
        terms = [term(base)]
        # cos(sum theta_l) expands over subsets with an even number of
        # sine factors, with alternating sign
        from itertools import combinations
        for n_sin in range(0, d_x + 1, 2):
            for subset in combinations(range(d_x), n_sin):
                extra = dict(base)
                sign = (-1.0) ** (n_sin // 2)
                for i in range(d_x):
                    x = g.x_coords(i)
                    fac = np.sin(k * x) if i in subset else np.cos(k * x)
                    extra[g.x_positions[i]] = fac
                extra[g.x_positions[0]] = extra[g.x_positions[0]] \
                    * alpha * sign
                terms.append(term(extra))
        return terms

    def bump(v):
        return _gaussian(v - v0) + _gaussian(v + v0)

    if config.case == "two_stream_1d":
        if d_x != 1:
            raise ValueError("two_stream_1d needs d_x = 1")
        one = {
            g.v_positions[0]: 0.5 / np.sqrt(2.0 * np.pi)
            * bump(g.v_coords(0)),
            g.x_positions[0]: 1.0 + alpha * np.cos(k * g.x_coords(0)),
        }
        return [term(one)]

    if config.case == "two_stream_4d_equilibrium":
        if d_x != 2:
            raise ValueError("this case needs d_x = 2")
        one = {
            g.v_positions[0]: 0.5 / (2.0 * np.pi) * bump(g.v_coords(0)),
            g.v_positions[1]: _gaussian(g.v_coords(1)),
            g.x_positions[0]: 1.0 + alpha * np.cos(k * g.x_coords(0)),
        }
        return [term(one)]

    if config.case == "two_stream_4d_product":
        if d_x != 2:
            raise ValueError("this case needs d_x = 2")
        base = {
            g.v_positions[0]: 0.25 / (2.0 * np.pi) * bump(g.v_coords(0)),
            g.v_positions[1]: bump(g.v_coords(1)),
        }
        terms = [term(base)]
        for i in range(2):
            extra = dict(base)
            extra[g.x_positions[i]] = alpha * np.cos(k * g.x_coords(i))
            terms.append(term(extra))
        return terms

    raise ValueError(f"unknown case {config.case!r}")


def init_case(config):
    """Initial distribution as a sum of rank-1 terms, rounded at the
    first-step tolerance.  Never densified.

    The configured epsilon is relative to the distribution's Frobenius
    norm (a conserved quantity), here and in the time loop; the tensor
    layer itself works with absolute budgets.
    """
    terms = _case_terms(config)
    out = tt.rank_one(terms[0])
    for factors in terms[1:]:
        out = tt.add(out, tt.rank_one(factors))
    eps_init = config.epsilon / config.n_steps * tt.norm(out)
    return tt.round(out, TruncationControl(eps_init, config.r_max))


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Conserved-quantity and compression snapshot at one time."""

    time: float
    mass: float
    momentum: tuple
    l2_norm: float
    kinetic_energy: float
    electric_energy: tuple
    total_energy: float
    ranks: tuple
    stored_doubles: int
    compression_rate: float


def _moment_tensor(grid, weights, position):
    factors = [np.ones(n) for n in grid.mode_sizes]
    factors[position] = weights
    return tt.rank_one(factors)


def diagnostics(f, e_fields, grid, time):
    vol = grid.cell_volume
    ones = tt.constant(grid.mode_sizes)
    mass = vol * tt.dot(f, ones)
    momentum, kinetic = [], 0.0
    for i in range(grid.d_x):
        v = grid.v_coords(i)
        pos = grid.v_positions[i]
        momentum.append(vol * tt.dot(f, _moment_tensor(grid, v, pos)))
        kinetic += 0.5 * vol * tt.dot(f, _moment_tensor(grid, v * v, pos))
    e_energy = electric_energy(e_fields)
    return DiagnosticsRecord(
        time=time,
        mass=mass,
        momentum=tuple(momentum),
        l2_norm=tt.norm(f) * math.sqrt(vol),
        kinetic_energy=kinetic,
        electric_energy=e_energy,
        total_energy=kinetic + sum(e_energy),
        ranks=f.interior_ranks,
        stored_doubles=f.stored_doubles,
        compression_rate=f.compression_rate(),
    )


def project_conserve(f, mass0, momentum0, grid):
    """Restore mass and the d_x momenta by rank-1 corrections.

    The correction directions (all-ones and each v_k profile) are
    mutually orthogonal because the centered velocity grids sum to
    zero, so each deficit is fixed independently.  Adds d_x + 1 rank-1
    terms and does not round.
    """
    vol = grid.cell_volume
    total = grid.total_points
    ones = tt.constant(grid.mode_sizes)
    d_mass = mass0 - vol * tt.dot(f, ones)
    out = tt.add(f, tt.scale(ones, d_mass / (vol * total)))
    for i in range(grid.d_x):
        v = grid.v_coords(i)
        pos = grid.v_positions[i]
        direction = _moment_tensor(grid, v, pos)
        c_k = float(np.sum(v * v)) / grid.nv[i]
        d_mom = momentum0[i] - vol * tt.dot(f, direction)
        out = tt.add(out, tt.scale(direction, d_mom / (vol * total * c_k)))
    return out


def _advect_space_half(f, config, ctrl):
    g = config.grid
    for i in range(g.d_x):
        f = advect_univariate(
            f, config.scheme_x, g.v_coords(i), 0.5 * config.dt, g.dx[i],
            g.v_positions[i], g.x_positions[i], ctrl, m=config.m)
    return f


def _advect_velocity(f, e_fields, config, ctrl, dt):
    g = config.grid
    if g.d_x == 1:
        return advect_univariate(
            f, config.scheme_v, -e_fields[0].values, dt, g.dv[0],
            g.x_positions[0], g.v_positions[0], ctrl, m=1)
    for i in range(g.d_x):
        e_tt = field_to_tt(e_fields[i], ctrl)
        f = advect_multivariate(f, e_tt, config.scheme_v.p, dt, g, i, ctrl)
    return f


def strang_step(f, e_fields, config, ctrl, targets=None):
    """One full dt.  Returns (f', E') where E' is the field the step
    computed from its own Poisson solve."""
    g = config.grid
    if config.substep_order == "standard":
        f = _advect_space_half(f, config, ctrl)
        _, e_fields = poisson_solve(density(f, g))
        f = _advect_velocity(f, e_fields, config, ctrl, config.dt)
        f = _advect_space_half(f, config, ctrl)
    else:
        if e_fields is None:
            _, e_fields = poisson_solve(density(f, g))
        f = _advect_velocity(f, e_fields, config, ctrl, 0.5 * config.dt)
        f = _advect_space_half(f, config, ctrl)
        _, e_fields = poisson_solve(density(f, g))
        f = _advect_velocity(f, e_fields, config, ctrl, 0.5 * config.dt)
    if targets is not None:
        f = project_conserve(f, targets[0], targets[1], g)
    return f, e_fields


def run(config, on_record=None, keep_efield=False):
    """Full time loop.  Returns (records, final f, efield history).

    The efield history is a list of (time, stacked component arrays)
    kept only for 1D-in-space runs when requested.
    """
    g = config.grid
    f = init_case(config)
    _, e_fields = poisson_solve(density(f, g))
    records = [diagnostics(f, e_fields, g, 0.0)]
    if on_record is not None:
        on_record(records[0])
    efield_series = []
    if keep_efield and g.d_x == 1:
        efield_series.append((0.0, e_fields[0].values.copy()))
    targets = None
    if config.projection:
        vol = g.cell_volume
        ones = tt.constant(g.mode_sizes)
        mass0 = vol * tt.dot(f, ones)
        mom0 = tuple(
            vol * tt.dot(f, _moment_tensor(g, g.v_coords(i),
                                           g.v_positions[i]))
            for i in range(g.d_x))
        targets = (mass0, mom0)
    e_cur = e_fields
    n = config.n_steps
    # epsilon is relative; the reference scale is the conserved norm
    scale = tt.norm(f)
    for j in range(1, n + 1):
        ctrl = TruncationControl(
            tolerance_schedule(j, n, config.epsilon) * scale,
            config.r_max)
        f, e_cur = strang_step(f, e_cur, config, ctrl, targets)
        if j % config.diagnostics_every == 0 or j == n:
            rec = diagnostics(f, e_cur, g, j * config.dt)
            records.append(rec)
            if on_record is not None:
                on_record(rec)
            if keep_efield and g.d_x == 1:
                efield_series.append((j * config.dt,
                                      e_cur[0].values.copy()))
    return records, f, efield_series


# -- CSV output ---------------------------------------------------------


def diagnostics_header(d_x, n_ranks):
    cols = ["time", "mass"]
    cols += [f"momentum_{i + 1}" for i in range(d_x)]
    cols += ["l2_norm", "kinetic_energy"]
    cols += [f"electric_energy_{i + 1}" for i in range(d_x)]
    cols += ["total_energy"]
    cols += [f"rank_{i + 1}" for i in range(n_ranks)]
    cols += ["stored_doubles", "compression_rate"]
    return cols


def record_row(rec):
    row = [rec.time, rec.mass, *rec.momentum, rec.l2_norm,
           rec.kinetic_energy, *rec.electric_energy, rec.total_energy,
           *rec.ranks, rec.stored_doubles, rec.compression_rate]
    return row


def write_diagnostics_csv(records, path, d_x):
    n_ranks = len(records[0].ranks)
    with open(path, "w", newline="") as fh:
        fh.write("# " + ",".join(diagnostics_header(d_x, n_ranks)) + "\n")
        writer = csv.writer(fh)
        writer.writerow(diagnostics_header(d_x, n_ranks))
        for rec in records:
            writer.writerow([repr(v) if isinstance(v, float) else v
                             for v in record_row(rec)])


def write_rank_history_csv(records, path):
    n_ranks = len(records[0].ranks)
    cols = ["time"] + [f"rank_{i + 1}" for i in range(n_ranks)]
    with open(path, "w", newline="") as fh:
        fh.write("# " + ",".join(cols) + "\n")
        writer = csv.writer(fh)
        writer.writerow(cols)
        for rec in records:
            writer.writerow([repr(rec.time), *rec.ranks])


def write_efield_csv(series, path):
    if not series:
        raise ValueError("no electric-field history was kept")
    n = series[0][1].size
    cols = ["time"] + [f"e_{j}" for j in range(n)]
    with open(path, "w", newline="") as fh:
        fh.write("# " + ",".join(cols) + "\n")
        writer = csv.writer(fh)
        writer.writerow(cols)
        for t, vals in series:
            writer.writerow([repr(float(t))] + [repr(float(v))
                                                for v in vals])


def read_diagnostics_csv(path):
    """Returns (column names, dict column -> float array)."""
    with open(path) as fh:
        rows = [line for line in fh if not line.startswith("#")]
    reader = csv.reader(rows)
    header = next(reader)
    data = {name: [] for name in header}
    for row in reader:
        for name, val in zip(header, row):
            data[name].append(float(val))
    return header, {k: np.asarray(v) for k, v in data.items()}
