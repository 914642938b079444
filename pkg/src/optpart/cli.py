"""Command-line entry point.

Every option has a dotted config key; a flat ``key = value`` file given
with ``--config`` supplies values and explicit flags override it. Each run
writes ``report.json`` (effective config, versions, timings, checks) and
its CSV data into ``--out-dir``. Exit status: 0 when every hard check
passed, 1 when a check failed, 2 on usage errors, 3 on numerical failure
(with ``diagnostics.json``).
"""
import argparse
import json
import os
import platform
import sys
import time
import traceback

import numpy as np

from . import __version__
from . import _backend
from .io import write_grid_csv, write_header, write_json, write_rows

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# value parsers
# --------------------------------------------------------------------------

def _floats(s):
    return [float(v) for v in str(s).split(",") if v.strip()]


def _strs(s):
    return [v.strip() for v in str(s).split(",") if v.strip()]


def _exponent(s):
    return float("inf") if str(s).strip().lower() in ("inf", "infinity") else float(s)


def _bool(s):
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _range3(s):
    parts = str(s).split(":")
    if len(parts) != 3:
        raise ValueError("expected start:stop:count")
    a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    if n < 1:
        raise ValueError("count must be positive")
    return a, b, n


def geometric_grid(s):
    """``a:b:n`` -> n log-spaced values (reciprocal pairs stay exact at 1)."""
    a, b, n = _range3(s)
    if a <= 0 or b <= 0:
        raise ValueError("r-grid must be positive")
    if n == 1:
        return [a]
    vals = np.exp(np.linspace(np.log(a), np.log(b), n))
    return [float("%.15g" % v) for v in vals]


def linear_grid(s):
    a, b, n = _range3(s)
    return [float(v) for v in np.linspace(a, b, n)]


def _matrix(s):
    s = str(s)
    if ";" not in s:
        return float(s)
    return [_floats(row) for row in s.split(";")]


# (key, flag, parser, default, help)
OPTIONS = {
    "domain": [
        ("domain.kind", "--domain", str, None, "interval, rectangle/square, disk, circle"),
        ("domain.n", "--n", int, None, "lattice points per axis"),
        ("domain.lengths", "--lengths", _floats, None, "side lengths (default 1)"),
        ("domain.origin", "--origin", _floats, None, "lower-left corner"),
    ],
    "solver": [
        ("solver.eig_tol", "--eig-tol", float, 1e-10, "eigen-solver residual tolerance"),
        ("solver.outer_tol", "--outer-tol", float, 1e-9, "relative objective decrease for stalls"),
        ("solver.max_outer", "--max-outer", int, 5000, "outer iteration cap"),
    ],
    "partition": [
        ("partition.k", "--k", int, 2, "number of components"),
        ("partition.p", "--p", _exponent, 1.0, "exponent (inf for min-max)"),
        ("partition.weights", "--weights", _floats, None, "component weights"),
        ("partition.seeds", "--seeds", _strs, ["vertical"], "seed layouts"),
    ],
    "fucik": [
        ("fucik.balance_tol", "--balance-tol", float, 1e-2, "balance-gap tolerance"),
        ("fucik.schedule", "--schedule", _floats, [1, 2, 4, 8, 16, 32], "p-homotopy"),
        ("fucik.warm_start", "--warm-start", _bool, True, "warm-start neighbouring slopes"),
        ("fucik.curve_tol", "--curve-tol", float, 2e-2, "symmetry tolerance on reciprocal pairs"),
    ],
    "fucik.trace": [("fucik.r_grid", "--r-grid", geometric_grid, "0.25:4:5", "start:stop:count (log)")],
    "fucik.point": [("fucik.r", "--r", float, 1.0, "slope r")],
    "oned": [
        ("oned.r_grid", "--r-grid", geometric_grid, "0.25:4:5", "start:stop:count (log)"),
        ("oned.k_max", "--k-max", int, 3, "largest k"),
        ("oned.length", "--length", float, 1.0, "interval length"),
        ("oned.grid_n", "--grid-n", int, 60, "brute-force candidate positions"),
    ],
    "monotone.phi": [
        ("monotone.variant", "--variant", str, "disjoint", "disjoint or acf"),
        ("monotone.field", "--field", str, "halves", "halves, sectors3, generic"),
        ("monotone.beta", "--beta", float, None, "exponent (default from field set)"),
    ],
    "monotone": [
        ("monotone.center", "--center", _floats, [0.0, 0.0], "ball centre"),
        ("monotone.radii", "--radii", linear_grid, "0.1:0.45:15", "start:stop:count (linear)"),
        ("monotone.slack", "--slack", float, 2e-2, "step slack / constancy threshold"),
        ("monotone.from_index", "--from-index", int, None, "first checked step"),
    ],
    "monotone.compete": [
        ("compete.setup", "--setup", str, None, "JSON file with grid, a, boundary"),
        ("compete.a", "--a", _matrix, 100.0, "coupling (scalar or rows 'a,b;c,d')"),
        ("compete.boundary", "--boundary", _strs, ["x+", "x-"], "boundary profile names"),
        ("compete.tol", "--tol", float, 1e-10, "relative update tolerance"),
        ("compete.h", "--h", int, 2, "components in the product"),
        ("compete.hprime", "--hprime", float, 1.9, "rescaling exponent"),
    ],
    "beta": [
        ("beta.k", "--k", int, None, "number of arcs"),
        ("beta.N", "--N", int, 2, "dimension"),
        ("beta.k_max", "--k-max", int, 7, "largest k for the monotonicity check"),
        ("beta.n", "--n", int, None, "circle lattice points for the lattice value"),
    ],
    "run": [
        ("run.workers", "--workers", int, 1, "process pool size for independent samples"),
        ("output.dir", "--out-dir", str, ".", "output directory"),
        ("output.csv", "--out", str, None, "CSV path (default inside out-dir)"),
    ],
}

COMMANDS = {
    "partition": ("domain", "solver", "partition", "run"),
    "fucik trace": ("domain", "solver", "fucik", "fucik.trace", "run"),
    "fucik point": ("domain", "solver", "fucik", "fucik.point", "run"),
    "oned curves": ("oned", "run"),
    "monotone phi": ("domain", "monotone", "monotone.phi", "run"),
    "monotone compete": ("domain", "solver", "monotone", "monotone.compete", "run"),
    "beta": ("beta", "run"),
    "selftest": ("run",),
}

_DOMAIN_DEFAULTS = {"monotone phi": ("square", 257), "monotone compete": ("square", 129)}


def _options_for(command):
    out = []
    for group in COMMANDS[command]:
        out.extend(OPTIONS[group])
    return out


def _add_options(parser, command):
    parser.add_argument("--config", help="flat 'key = value' file with dotted keys")
    for key, flag, _, default, help_ in _options_for(command):
        parser.add_argument(flag, dest=key, default=None, metavar="V",
                            help=f"{help_} [{key}; default {default}]")


def build_parser():
    p = argparse.ArgumentParser(prog="optpart", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"optpart {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    _add_options(sub.add_parser("partition", help="optimal k-partition"), "partition")
    fz = sub.add_parser("fucik", help="first Fucik curve").add_subparsers(dest="action", required=True)
    _add_options(fz.add_parser("trace", help="c(r) over an r-grid"), "fucik trace")
    _add_options(fz.add_parser("point", help="c(r) at one slope"), "fucik point")
    od = sub.add_parser("oned", help="1-D closed forms").add_subparsers(dest="action", required=True)
    _add_options(od.add_parser("curves", help="closed form vs brute force"), "oned curves")
    mo = sub.add_parser("monotone", help="monotonicity functionals").add_subparsers(dest="action",
                                                                                    required=True)
    _add_options(mo.add_parser("phi", help="Phi(r) of segregated test fields"), "monotone phi")
    _add_options(mo.add_parser("compete", help="competition system and its Phi"), "monotone compete")
    _add_options(sub.add_parser("beta", help="optimal-partition constants"), "beta")
    _add_options(sub.add_parser("selftest", help="analytic oracle suite"), "selftest")
    return p


def read_config_file(path):
    out = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    with fh:
        for num, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{num}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key] = value
    return out


def resolve_config(command, ns):
    """Defaults, then the config file, then flags; every value parsed and checked."""
    opts = _options_for(command)
    known = {key: (parser, default) for key, _, parser, default, _ in opts}
    raw = {}
    if getattr(ns, "config", None):
        for key, value in read_config_file(ns.config).items():
            if key not in known:
                raise UsageError(f"unknown config key {key!r} for '{command}'")
            raw[key] = value
    for key in known:
        v = getattr(ns, key, None)
        if v is not None:
            raw[key] = v
    cfg = {}
    for key, (parser, default) in known.items():
        if key in raw:
            try:
                cfg[key] = parser(raw[key])
            except (TypeError, ValueError) as exc:
                raise UsageError(f"invalid value for {key}: {raw[key]!r} ({exc})") from None
        elif isinstance(default, str) and parser is not str:
            cfg[key] = parser(default)
        else:
            cfg[key] = default
    if command in _DOMAIN_DEFAULTS:
        kind, n = _DOMAIN_DEFAULTS[command]
        cfg["domain.kind"] = cfg["domain.kind"] or kind
        cfg["domain.n"] = cfg["domain.n"] or n
    _validate(command, cfg)
    return cfg


def _validate(command, cfg):
    if "domain.kind" in cfg:
        if not cfg["domain.kind"]:
            raise UsageError("missing required option --domain (domain.kind)")
        if cfg["domain.n"] is None:
            raise UsageError("missing required option --n (domain.n)")
        if cfg["domain.n"] < 3:
            raise UsageError("domain.n must be at least 3")
    for key in ("solver.eig_tol", "solver.outer_tol", "fucik.balance_tol", "fucik.curve_tol",
                "monotone.slack", "compete.tol"):
        if key in cfg and cfg[key] is not None and not 0 < cfg[key] < 1:
            raise UsageError(f"{key} must lie in (0, 1)")
    if "solver.eig_tol" in cfg and cfg["solver.eig_tol"] > 1e-2:
        raise UsageError("solver.eig_tol must not exceed 1e-2")
    for key in ("fucik.r_grid", "oned.r_grid"):
        if key in cfg and any(r <= 0 for r in cfg[key]):
            raise UsageError(f"{key} must be positive")
    if "fucik.r" in cfg and not cfg["fucik.r"] > 0:
        raise UsageError("fucik.r must be positive")
    if cfg.get("run.workers", 1) < 1:
        raise UsageError("run.workers must be at least 1")


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------

def _grid(cfg):
    from .geometry import build_grid
    kind = cfg["domain.kind"]
    lengths = cfg["domain.lengths"]
    if lengths is None:
        lengths = [2 * np.pi] if kind in ("circle", "arc") else [1.0]
    try:
        return build_grid(kind, lengths, cfg["domain.n"], cfg["domain.origin"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _centered_grid(cfg):
    """Monotonicity runs default to a box centred at the origin."""
    from .geometry import build_grid
    kind = cfg["domain.kind"]
    lengths = cfg["domain.lengths"] or [1.0]
    origin = cfg["domain.origin"]
    if origin is None:
        L = lengths if len(lengths) > 1 else lengths * 2
        origin = [-L[0] / 2, -L[1] / 2]
    try:
        return build_grid(kind, lengths, cfg["domain.n"], origin)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _csv_path(cfg, default):
    return cfg["output.csv"] or os.path.join(cfg["output.dir"], default)


def versions():
    out = {"optpart": __version__, "python": platform.python_version(), "numpy": np.__version__}
    import scipy
    out["scipy"] = scipy.__version__
    try:
        import numba
        out["numba"] = numba.__version__
    except ImportError:
        out["numba"] = None
    out["backend"] = _backend.BACKEND
    return out


def _fucik_opts(cfg):
    from .fucik import FucikOptions
    return FucikOptions(schedule=tuple(cfg["fucik.schedule"]), balance_tol=cfg["fucik.balance_tol"],
                        eig_tol=cfg["solver.eig_tol"], max_outer=cfg["solver.max_outer"],
                        rel_tol=cfg["solver.outer_tol"], warm_start=cfg["fucik.warm_start"])


# --------------------------------------------------------------------------
# commands: each returns (checks, outputs, extra)
# --------------------------------------------------------------------------

def cmd_partition(cfg, timings):
    from .partition import PartitionOptions, extremality_check, optimize_partition, postprocess_connect
    grid = _grid(cfg)
    k = cfg["partition.k"]
    opts = PartitionOptions(seeds=tuple(cfg["partition.seeds"]), max_outer=cfg["solver.max_outer"],
                            rel_tol=cfg["solver.outer_tol"], eig_tol=cfg["solver.eig_tol"])
    t = time.perf_counter()
    try:
        res = optimize_partition(grid, k, cfg["partition.p"], cfg["partition.weights"], opts)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    res = postprocess_connect(res, cfg["solver.eig_tol"])
    timings["optimize"] = time.perf_counter() - t
    total = np.sum([m.astype(int) for m in res.masks], axis=0)
    hist = np.asarray(res.history)
    checks = {
        "disjoint": bool(total.max() <= 1),
        "converged": bool(res.converged),
        "history_nonincreasing": bool(np.all(np.diff(hist) <= 1e-10 * np.abs(hist[:-1]))),
    }
    out_csv = _csv_path(cfg, "partition.csv")
    rows = [(i, res.weights[i], res.lambdas[i], int(m.sum())) for i, m in enumerate(res.masks)]
    write_rows(out_csv, ("component", "weight", "lambda", "nodes"), rows)
    labels = np.full(grid.shape, -1.0)
    for i, m in enumerate(res.masks):
        labels[m] = i
    grid_csv = os.path.join(cfg["output.dir"], "labels.csv")
    write_grid_csv(grid_csv, grid, grid.domain, labels)
    write_header(os.path.join(cfg["output.dir"], "labels.json"), grid)
    extra = {"result": res.to_json()}
    if not np.isinf(res.p):
        extra["extremality"] = extremality_check(res, 1.0).__dict__
    return checks, [out_csv, grid_csv], extra


def cmd_fucik_trace(cfg, timings):
    from .fucik import check_curve_properties, trace_curve
    grid = _grid(cfg)
    t = time.perf_counter()
    curve = trace_curve(grid, cfg["fucik.r_grid"], _fucik_opts(cfg), workers=cfg["run.workers"])
    timings["trace"] = time.perf_counter() - t
    rep = check_curve_properties(curve, cfg["fucik.curve_tol"])
    out_csv = _csv_path(cfg, "curve.csv")
    curve.to_csv(out_csv)
    checks = {
        "samples_converged": all(s.converged for s in curve.samples),
        "symmetry": all(e <= rep.tol for _, e in rep.symmetry),
        "c_increasing": rep.monotone,
        "above_lambda1": rep.above_lambda1,
        "two_nodal_domains": rep.nodal_ok,
    }
    extra = {"lambda1": curve.lambda1, "symmetry": rep.symmetry,
             "symmetry_checked": rep.symmetry_checked}
    return checks, [out_csv], extra


def cmd_fucik_point(cfg, timings):
    from .fucik import c_of_r, write_curve_csv
    from .spectral import principal_eigenpair
    grid = _grid(cfg)
    t = time.perf_counter()
    pt = c_of_r(grid, cfg["fucik.r"], _fucik_opts(cfg))
    timings["point"] = time.perf_counter() - t
    lam1 = principal_eigenpair(grid, grid.domain, None, cfg["solver.eig_tol"]).lam
    out_csv = _csv_path(cfg, "point.csv")
    write_curve_csv(out_csv, [pt])
    field_csv = os.path.join(cfg["output.dir"], "u.csv")
    write_grid_csv(field_csv, grid, grid.domain, pt.u)
    write_header(os.path.join(cfg["output.dir"], "u.json"), grid)
    checks = {"converged": bool(pt.converged), "above_lambda1": bool(pt.c > lam1),
              "two_nodal_domains": pt.nodal_domains == 2}
    extra = {"c": pt.c, "lambda": pt.lam, "mu": pt.mu, "balance_gap": pt.balance_gap,
             "pde_residual": pt.pde_residual, "lambda1": lam1, "events": pt.events}
    return checks, [out_csv, field_csv], extra


def cmd_oned_curves(cfg, timings):
    from .oned import c_k1_bruteforce, c_k1_closed, curve_identity_residual
    rows = []
    worst, worst_id = 0.0, 0.0
    t = time.perf_counter()
    L = cfg["oned.length"]
    for r in cfg["oned.r_grid"]:
        for k in range(1, cfg["oned.k_max"] + 1):
            cc = c_k1_closed(r, k, L)
            cb = c_k1_bruteforce(r, k, L, cfg["oned.grid_n"])
            ident = curve_identity_residual(cc / r, cc, L) if k == 1 else None
            worst = max(worst, abs(cc - cb) / cc)
            if ident is not None:
                worst_id = max(worst_id, abs(ident))
            rows.append((r, k, cc, cb, cc / r, cc, ident))
    timings["curves"] = time.perf_counter() - t
    out_csv = _csv_path(cfg, "curves.csv")
    write_rows(out_csv, ("r", "k", "c_closed", "c_bruteforce", "lambda", "mu", "identity_residual"),
               rows)
    checks = {"closed_matches_bruteforce": worst <= 1e-6, "curve_identity": worst_id <= 1e-10}
    return checks, [out_csv], {"max_relative_gap": worst, "max_identity_residual": worst_id}


def _phi_rows(series, report):
    slopes = series.slopes()
    return [(r, v, s, report.classification) for r, v, s in zip(series.radii, series.values, slopes)]


def cmd_monotone_phi(cfg, timings):
    from .monotonicity import check_monotone, named_fields, phi_acf, phi_disjoint
    grid = _centered_grid(cfg)
    x0 = tuple(cfg["monotone.center"])
    try:
        fields, beta = named_fields(grid, cfg["monotone.field"], x0)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    beta = cfg["monotone.beta"] if cfg["monotone.beta"] is not None else beta
    t = time.perf_counter()
    variant = cfg["monotone.variant"]
    try:
        if variant == "disjoint":
            series = phi_disjoint(grid, fields, x0, cfg["monotone.radii"], beta)
        elif variant == "acf":
            if len(fields) != 2:
                raise UsageError("the acf variant needs a two-field set")
            series = phi_acf(grid, fields[0], fields[1], x0, cfg["monotone.radii"])
        else:
            raise UsageError(f"unknown variant {variant!r}")
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    timings["phi"] = time.perf_counter() - t
    rep = check_monotone(series, cfg["monotone.slack"], cfg["monotone.from_index"])
    out_csv = _csv_path(cfg, "phi.csv")
    write_rows(out_csv, ("radius", "phi", "slope", "classification"), _phi_rows(series, rep))
    checks = {"monotone": rep.passed}
    extra = {"classification": rep.classification, "variation": rep.variation,
             "worst_ratio": rep.worst_ratio, "beta": beta}
    return checks, [out_csv], extra


def cmd_monotone_compete(cfg, timings):
    from .monotonicity import (boundary_profile, check_monotone, growth_diagnostic, phi_competition,
                               solve_competition)
    a, names = cfg["compete.a"], cfg["compete.boundary"]
    if cfg["compete.setup"]:
        try:
            with open(cfg["compete.setup"]) as fh:
                setup = json.load(fh)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read setup {cfg['compete.setup']}: {exc}") from None
        g = setup.get("grid", {})
        cfg["domain.kind"] = g.get("kind", cfg["domain.kind"])
        cfg["domain.n"] = int(g.get("n", cfg["domain.n"]))
        a = setup.get("a", a)
        names = setup.get("boundary", names)
    grid = _centered_grid(cfg)
    x0 = tuple(cfg["monotone.center"])
    try:
        boundary = [boundary_profile(grid, nm, x0) for nm in names]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    t = time.perf_counter()
    state = solve_competition(grid, a, boundary, cfg["compete.tol"])
    timings["solve"] = time.perf_counter() - t
    series = phi_competition(state, cfg["compete.h"], cfg["compete.hprime"], x0, cfg["monotone.radii"])
    rep = check_monotone(series, cfg["monotone.slack"], cfg["monotone.from_index"])
    growth = growth_diagnostic(state, x0, cfg["monotone.radii"], cfg["compete.hprime"])
    out_csv = _csv_path(cfg, "compete_phi.csv")
    write_rows(out_csv, ("radius", "phi", "slope", "classification"), _phi_rows(series, rep))
    overlap = float(np.sum(np.prod(state.fields, axis=0)[grid.domain]) * grid.cell_volume)
    checks = {"converged": bool(state.update < cfg["compete.tol"]),
              "residual": bool(state.residual <= 1e-8), "nonnegative": state.nonnegative,
              "max_principle": state.max_principle, "phi_monotone": rep.passed}
    extra = {"residual": state.residual, "sweeps": state.sweeps, "overlap": overlap,
             "classification": rep.classification, "growth": growth.__dict__,
             "a": np.asarray(state.a).tolist(), "boundary": names}
    return checks, [out_csv], extra


def cmd_beta(cfg, timings):
    from .monotonicity import UnknownConstantError, beta_circle, beta_known, beta_monotone_check
    checks, extra = {}, {}
    if cfg["beta.k"] is not None:
        try:
            extra["beta_known"] = beta_known(cfg["beta.k"], cfg["beta.N"])
            checks["known"] = True
        except UnknownConstantError as exc:
            extra["beta_known"] = "unknown"
            extra["reason"] = str(exc)
            checks["known"] = False
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    rows = []
    t = time.perf_counter()
    for k in range(2, cfg["beta.k_max"] + 1):
        bc = beta_circle(k, cfg["beta.n"])
        rows.append((k, beta_known(k, 2), bc.closed, bc.descent, bc.grid, bc.agree))
    rep = beta_monotone_check(cfg["beta.k_max"], {r[0]: r[3] for r in rows})
    timings["beta"] = time.perf_counter() - t
    checks["descent_matches_closed"] = all(r[5] for r in rows)
    checks["monotone_in_k"] = rep.passed
    out_csv = _csv_path(cfg, "beta.csv")
    write_rows(out_csv, ("k", "beta_known", "circle_closed", "circle_descent", "circle_lattice",
                         "agree"), rows)
    return checks, [out_csv], extra


def selftest_rows():
    """Analytic-oracle suite: (check, value, reference, rel_error, tol, passed)."""
    from .fucik import FucikOptions, c_of_r
    from .geometry import build_grid
    from .monotonicity import beta_circle_opt, beta_known
    from .oned import c_k1_bruteforce, c_k1_closed, curve_identity_residual
    from .spectral import arc_mask, principal_eigenpair
    rows = []

    def add(name, value, ref, tol, absolute=False):
        err = abs(value - ref) if absolute else abs(value - ref) / abs(ref)
        rows.append((name, value, ref, err, tol, bool(err <= tol)))

    g = build_grid("interval", 1.0, 1001)
    add("eig_interval_n1001", principal_eigenpair(g, g.domain).lam, np.pi ** 2, 1e-3)
    g = build_grid("square", 1.0, 129)
    add("eig_square_n129", principal_eigenpair(g, g.domain).lam, 2 * np.pi ** 2, 5e-3)
    g = build_grid("circle", 2 * np.pi, 720)
    add("eig_arc_pi_n720", principal_eigenpair(g, arc_mask(g, 0.0, np.pi)).lam, 1.0, 1e-3)
    for r in (0.5, 2.0):
        for k in (1, 2):
            add(f"oned_r{r:g}_k{k}", c_k1_bruteforce(r, k), c_k1_closed(r, k), 1e-6)
    c = c_k1_closed(2.0, 1)
    add("oned_identity_r2", curve_identity_residual(c / 2.0, c), 0.0, 1e-10, absolute=True)
    add("beta_known_2_3", beta_known(2, 3), 3.0, 0.0)
    add("beta_known_5_2", beta_known(5, 2), 5.0, 0.0)
    for k in (2, 3, 4):
        add(f"beta_circle_k{k}", beta_circle_opt(k), float(k), 1e-6)
    g = build_grid("interval", 1.0, 401)
    add("c1_interval_n401", c_of_r(g, 1.0, FucikOptions()).c, 4 * np.pi ** 2, 1e-2)
    return rows


def cmd_selftest(cfg, timings):
    t = time.perf_counter()
    rows = selftest_rows()
    timings["selftest"] = time.perf_counter() - t
    out_csv = _csv_path(cfg, "selftest.csv")
    write_rows(out_csv, ("check", "value", "reference", "error", "tolerance", "passed"), rows)
    return {r[0]: r[5] for r in rows}, [out_csv], {}


HANDLERS = {
    "partition": cmd_partition, "fucik trace": cmd_fucik_trace, "fucik point": cmd_fucik_point,
    "oned curves": cmd_oned_curves, "monotone phi": cmd_monotone_phi,
    "monotone compete": cmd_monotone_compete, "beta": cmd_beta, "selftest": cmd_selftest,
}


def run(command, cfg):
    """Execute one command with a resolved config; returns the exit status."""
    os.makedirs(cfg["output.dir"], exist_ok=True)
    timings = {}
    report = {"command": command, "config": cfg, "versions": versions()}
    t0 = time.perf_counter()
    try:
        checks, outputs, extra = HANDLERS[command](cfg, timings)
    except UsageError:
        raise
    except Exception as exc:  # numerical failure: keep a trace for diagnosis
        diag = {"command": command, "config": cfg, "error": repr(exc),
                "traceback": traceback.format_exc()}
        if hasattr(exc, "residual"):
            diag["residual"] = exc.residual
        if hasattr(exc, "history"):
            diag["history"] = exc.history
        path = os.path.join(cfg["output.dir"], "diagnostics.json")
        write_json(path, diag)
        print(f"optpart: numerical failure ({exc}); see {path}", file=sys.stderr)
        return EXIT_NUMERIC
    timings["total"] = time.perf_counter() - t0
    passed = all(bool(v) for v in checks.values())
    report.update({"checks": checks, "passed": passed, "outputs": outputs, "timings": timings,
                   "details": extra})
    write_json(os.path.join(cfg["output.dir"], "report.json"), report)
    for name, ok in checks.items():
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    return EXIT_OK if passed else EXIT_CHECK


def main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)
    command = ns.command if getattr(ns, "action", None) is None else f"{ns.command} {ns.action}"
    try:
        cfg = resolve_config(command, ns)
        return run(command, cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"optpart: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
