"""Batch front-end: run a configured simulation, compare diagnostics files.

Usage:
    ttvlasov run <config.ini>
    ttvlasov compare <a.csv> <b.csv>

Config files are INI-style key = value sections (see configs/ for
examples).  The TTVLASOV_OUTPUT_DIR environment variable overrides the
output directory named in the config.

Exit codes: 0 success, 1 runtime failure, 2 config parse error,
3 validation error (a named bound was violated).
"""

import argparse
import configparser
import datetime
import json
import os
import re
import sys

import numpy as np

from . import __version__
from .fullgrid import dense_run
from .grid import PhaseSpaceGrid
from .interpolation import cubic_spline, lagrange, linear
from .simulation import (SimulationConfig, read_diagnostics_csv, run,
                         write_diagnostics_csv, write_efield_csv,
                         write_rank_history_csv)
from .tt import FULL_SIZE_LIMIT, save_tt

OUTPUT_DIR_ENV = "TTVLASOV_OUTPUT_DIR"

EXIT_RUNTIME = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3


class ConfigError(ValueError):
    """Structural problem in a config file (wrong keys, bad literals)."""


_KNOWN_KEYS = {
    "run": {"solver", "case", "label"},
    "grid": {"d_x", "n_x", "n_v", "length", "v_min", "v_max"},
    "physics": {"alpha", "k", "v0"},
    "numerics": {"dt", "t_final", "epsilon", "r_max", "scheme_x",
                 "scheme_v", "m", "projection", "substep_order",
                 "diagnostics_every"},
    "output": {"directory"},
}

_REQUIRED = {
    "run": {"solver", "case"},
    "grid": {"d_x", "n_x", "n_v", "length"},
    "physics": {"alpha", "k"},
    "numerics": {"dt", "t_final", "epsilon"},
}


def _parse_scheme(text):
    text = text.strip()
    if text == "linear":
        return linear()
    if text == "cubic_spline":
        return cubic_spline()
    hit = re.fullmatch(r"lagrange(\d+)", text)
    if hit:
        return lagrange(int(hit.group(1)))
    raise ConfigError(f"unknown scheme {text!r} (use linear, "
                      "cubic_spline, or lagrangeN with odd N)")


def _parse_length(text):
    """Accepts a float literal or a pi multiple like '4pi'."""
    text = text.strip()
    hit = re.fullmatch(r"([-+0-9.eE]*)\s*pi", text)
    if hit:
        factor = hit.group(1)
        return (float(factor) if factor else 1.0) * np.pi
    return float(text)


def _get(parser, section, key, cast, default=None):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key).strip()
    if raw == "":
        return default
    try:
        return cast(raw)
    except ConfigError:
        raise
    except ValueError as err:
        raise ConfigError(f"[{section}] {key}: {err}") from None


def _parse_bool(text):
    low = text.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def load_config(path):
    """Parse an INI config into (SimulationConfig, solver, label, out_dir).

    Raises ConfigError for structural problems; the SimulationConfig
    constructor raises ValueError for violated physical bounds.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config: {err}") from None
    except configparser.Error as err:
        raise ConfigError(str(err)) from None

    for section in parser.sections():
        if section not in _KNOWN_KEYS:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser.options(section):
            if key not in _KNOWN_KEYS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
    for section, keys in _REQUIRED.items():
        if not parser.has_section(section):
            raise ConfigError(f"missing section [{section}]")
        for key in keys:
            if not parser.has_option(section, key):
                raise ConfigError(f"missing key {key!r} in [{section}]")

    solver = parser.get("run", "solver").strip()
    if solver not in ("tt", "dense"):
        raise ConfigError(f"solver must be tt or dense, got {solver!r}")
    default_label = os.path.splitext(os.path.basename(path))[0]
    label = _get(parser, "run", "label", str, default_label) or default_label

    d_x = _get(parser, "grid", "d_x", int)
    n_x = _get(parser, "grid", "n_x", int)
    n_v = _get(parser, "grid", "n_v", int)
    length = _get(parser, "grid", "length", _parse_length)
    v_min = _get(parser, "grid", "v_min", float, -6.0)
    v_max = _get(parser, "grid", "v_max", float, 6.0)
    if d_x not in (1, 2, 3):
        raise ConfigError("d_x must be 1, 2, or 3")
    grid = PhaseSpaceGrid(nx=(n_x,) * d_x, nv=(n_v,) * d_x,
                          x_lengths=(length,) * d_x,
                          v_min=v_min, v_max=v_max)

    kwargs = dict(
        grid=grid,
        case=parser.get("run", "case").strip(),
        alpha=_get(parser, "physics", "alpha", float),
        k=_get(parser, "physics", "k", float),
        dt=_get(parser, "numerics", "dt", float),
        t_final=_get(parser, "numerics", "t_final", float),
        epsilon=_get(parser, "numerics", "epsilon", float),
    )
    v0 = _get(parser, "physics", "v0", float)
    if v0 is not None:
        kwargs["v0"] = v0
    r_max = _get(parser, "numerics", "r_max", int)
    if r_max is not None:
        kwargs["r_max"] = r_max
    for key, cast in (("scheme_x", _parse_scheme),
                      ("scheme_v", _parse_scheme), ("m", int),
                      ("projection", _parse_bool),
                      ("substep_order", str),
                      ("diagnostics_every", int)):
        val = _get(parser, "numerics", key, cast)
        if val is not None:
            kwargs[key] = val

    config = SimulationConfig(**kwargs)
    out_dir = _get(parser, "output", "directory", str, ".") \
        if parser.has_section("output") else "."
    return config, solver, label, out_dir


def _scheme_text(scheme):
    if scheme.kind == "lagrange":
        return f"lagrange{scheme.p}"
    return scheme.kind


def config_text(config, solver, label, out_dir):
    """Serialize a configuration back to INI; load_config inverts this."""
    g = config.grid
    lines = [
        "[run]",
        f"solver = {solver}",
        f"case = {config.case}",
        f"label = {label}",
        "",
        "[grid]",
        f"d_x = {g.d_x}",
        f"n_x = {g.nx[0]}",
        f"n_v = {g.nv[0]}",
        f"length = {g.x_lengths[0]!r}",
        f"v_min = {g.v_min!r}",
        f"v_max = {g.v_max!r}",
        "",
        "[physics]",
        f"alpha = {config.alpha!r}",
        f"k = {config.k!r}",
        f"v0 = {config.v0!r}",
        "",
        "[numerics]",
        f"dt = {config.dt!r}",
        f"t_final = {config.t_final!r}",
        f"epsilon = {config.epsilon!r}",
        f"r_max = {'' if config.r_max is None else config.r_max}",
        f"scheme_x = {_scheme_text(config.scheme_x)}",
        f"scheme_v = {_scheme_text(config.scheme_v)}",
        f"m = {config.m}",
        f"projection = {str(config.projection).lower()}",
        f"substep_order = {config.substep_order}",
        f"diagnostics_every = {config.diagnostics_every}",
        "",
        "[output]",
        f"directory = {out_dir}",
    ]
    return "\n".join(lines) + "\n"


def _now():
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def run_command(config_path):
    try:
        config, solver, label, out_dir = load_config(config_path)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_PARSE
    except ValueError as err:
        print(f"validation error: {err}", file=sys.stderr)
        return EXIT_VALIDATION

    if solver == "dense" and config.grid.total_points > FULL_SIZE_LIMIT:
        print(f"validation error: dense solver refuses "
              f"{config.grid.total_points} > {FULL_SIZE_LIMIT:.0e} grid "
              f"points", file=sys.stderr)
        return EXIT_VALIDATION

    out_dir = os.environ.get(OUTPUT_DIR_ENV, out_dir)
    started = _now()
    try:
        os.makedirs(out_dir, exist_ok=True)
        keep = config.grid.d_x == 1
        if solver == "tt":
            records, final, series = run(config, keep_efield=keep)
        else:
            records, final, series = dense_run(config, keep_efield=keep)

        paths = {}
        paths["diagnostics"] = os.path.join(out_dir,
                                            f"{label}_diagnostics.csv")
        write_diagnostics_csv(records, paths["diagnostics"],
                              config.grid.d_x)
        paths["ranks"] = os.path.join(out_dir, f"{label}_ranks.csv")
        write_rank_history_csv(records, paths["ranks"])
        if series:
            paths["efield"] = os.path.join(out_dir, f"{label}_efield.csv")
            write_efield_csv(series, paths["efield"])
        if solver == "tt":
            paths["state"] = os.path.join(out_dir, f"{label}_final.tt")
            save_tt(final, paths["state"])

        manifest = {
            "code_version": __version__,
            "config_path": os.path.abspath(config_path),
            "config_echo": config_text(config, solver, label, out_dir),
            "started": started,
            "finished": _now(),
            "output_paths": {k: os.path.abspath(v)
                             for k, v in paths.items()},
            "final_ranks": list(records[-1].ranks),
            "peak_stored_doubles": max(r.stored_doubles for r in records),
            "steps": config.n_steps,
        }
        manifest_path = os.path.join(out_dir, f"{label}_manifest.json")
        with open(manifest_path, "w") as fh:
            json.dump(manifest, fh, indent=2)
            fh.write("\n")
    except Exception as err:  # noqa: BLE001 - boundary of the process
        print(f"runtime error: {err}", file=sys.stderr)
        return EXIT_RUNTIME

    print(f"wrote {manifest_path}")
    for name in sorted(paths):
        print(f"  {name}: {paths[name]}")
    return 0


def compare_command(path_a, path_b):
    try:
        header_a, data_a = read_diagnostics_csv(path_a)
        header_b, data_b = read_diagnostics_csv(path_b)
    except (OSError, ValueError) as err:
        print(f"cannot read diagnostics: {err}", file=sys.stderr)
        return EXIT_PARSE

    if "time" not in header_a or "time" not in header_b:
        print("both files need a time column", file=sys.stderr)
        return EXIT_PARSE
    ta, tb = data_a["time"], data_b["time"]
    if ta.shape != tb.shape or not np.array_equal(ta, tb):
        print("time axes differ; interpolation is not supported",
              file=sys.stderr)
        return EXIT_VALIDATION

    shared = [c for c in header_a if c in set(header_b) and c != "time"]
    only_a = [c for c in header_a if c not in set(header_b)]
    only_b = [c for c in header_b if c not in set(header_a)]
    if only_a:
        print(f"columns only in {path_a}: {', '.join(only_a)}")
    if only_b:
        print(f"columns only in {path_b}: {', '.join(only_b)}")

    print(f"{'column':<24} {'l_inf':>13} {'l_2':>13}")
    field_cols = []
    for col in shared:
        diff = data_a[col] - data_b[col]
        linf = float(np.max(np.abs(diff))) if diff.size else 0.0
        l2 = float(np.linalg.norm(diff))
        print(f"{col:<24} {linf:13.6e} {l2:13.6e}")
        if re.fullmatch(r"e_\d+", col):
            field_cols.append(linf)
    if field_cols:
        print(f"electric field l_inf over all samples: "
              f"{max(field_cols):.6e}")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="ttvlasov",
        description="Low-rank Vlasov solver batch runner")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a configured simulation")
    p_run.add_argument("config", help="INI config file")
    p_cmp = sub.add_parser("compare",
                           help="per-column differences of two CSVs")
    p_cmp.add_argument("csv_a")
    p_cmp.add_argument("csv_b")
    args = parser.parse_args(argv)
    if args.command == "run":
        return run_command(args.config)
    return compare_command(args.csv_a, args.csv_b)


if __name__ == "__main__":
    sys.exit(main())
