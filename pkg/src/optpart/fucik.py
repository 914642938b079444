"""First Fucik curve through weighted min-max 2-partitions.

For a slope r > 0, c(r) = inf max{r lam_1(omega_1), lam_1(omega_2)} over
disjoint pairs. At the optimum both weighted eigenvalues coincide and the
spliced function u = phi_1 - kappa phi_2 solves -Lap u = lam u+ - mu u-
with (lam, mu) = (c/r, c).
"""
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .geometry import connected_components
from .io import write_rows
from .partition import (P_SCHEDULE, PartitionOptions, balance_gap, interface_nodes,
                        min_max_partition, multiplicity_map)
from .spectral import apply_laplacian, principal_eigenpair

log = logging.getLogger(__name__)

CSV_COLUMNS = ("r", "lambda", "mu", "c", "balance_gap", "pde_residual", "outer_iterations",
               "converged")


@dataclass
class FucikOptions:
    schedule: tuple = P_SCHEDULE
    balance_tol: float = 1e-2
    seeds: tuple = ("vertical",)
    eig_tol: float = 1e-10
    max_outer: int = 5000
    rel_tol: float = 1e-9
    patience: int = 3
    smoothing_sweeps: int = 0
    warm_start: bool = True

    def partition_options(self, **kw):
        return PartitionOptions(seeds=tuple(self.seeds), max_outer=self.max_outer,
                                rel_tol=self.rel_tol, patience=self.patience,
                                eig_tol=self.eig_tol, smoothing_sweeps=self.smoothing_sweeps, **kw)


@dataclass(frozen=True)
class WeightContext:
    """Mass weights for the positive (p) and negative (q) parts."""
    grid: object = field(repr=False)
    pweight: np.ndarray = field(repr=False)
    qweight: np.ndarray = field(repr=False)

    def mass_weights(self):
        return [self.pweight, self.qweight]


@dataclass
class FucikPoint:
    r: float
    c: float
    lam: float
    mu: float
    balance_gap: float
    pde_residual: float
    outer_iterations: int = 0
    converged: bool = True
    lambdas: np.ndarray = None
    masks: list = field(default=None, repr=False)
    fields: list = field(default=None, repr=False)
    u: np.ndarray = field(default=None, repr=False)
    nodal_domains: int = None
    events: list = field(default_factory=list)

    def row(self):
        return {"r": self.r, "lambda": self.lam, "mu": self.mu, "c": self.c,
                "balance_gap": self.balance_gap, "pde_residual": self.pde_residual,
                "outer_iterations": self.outer_iterations, "converged": self.converged}


@dataclass
class FucikCurve:
    samples: list
    domain: dict = None
    lambda1: float = None

    @property
    def r(self):
        return np.array([s.r for s in self.samples])

    @property
    def c(self):
        return np.array([s.c for s in self.samples])

    def to_csv(self, path):
        write_curve_csv(path, self.samples)


@dataclass
class CurveReport:
    symmetry: list
    symmetry_checked: bool
    monotone: bool
    above_lambda1: bool
    asymptote: bool
    nodal_ok: bool
    tol: float

    @property
    def passed(self):
        sym = all(err <= self.tol for _, err in self.symmetry) if self.symmetry_checked else True
        return bool(sym and self.monotone and self.above_lambda1 and self.asymptote and self.nodal_ok)


@dataclass
class HKResult:
    h: int
    k: int
    r: float
    c: float
    lambdas: np.ndarray
    weights: np.ndarray
    certified: bool
    reason: str
    pde_residual: float = None
    u: np.ndarray = field(default=None, repr=False)
    masks: list = field(default=None, repr=False)
    converged: bool = True


def set_weights(grid, pweight, qweight):
    """Weighted Rayleigh quotients: mass weight p on omega_1, q on omega_2."""
    out = []
    for w in (pweight, qweight):
        w = np.broadcast_to(np.asarray(w, dtype=float), grid.shape).copy()
        if np.any(w[grid.domain] <= 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be strictly positive")
        w[~grid.domain] = 1.0
        w.setflags(write=False)
        out.append(w)
    return WeightContext(grid, out[0], out[1])


def residual_check(grid, u, lam, mu, pweight=None, qweight=None):
    """Relative residual of -Lap u = lam p u+ - mu q u- over the domain nodes.

    ``p`` and ``q`` default to 1.
    """
    u = np.asarray(u, dtype=float)
    if not np.any(u):
        raise ValueError("u vanishes identically")
    up = np.maximum(u, 0.0) * (1.0 if pweight is None else pweight)
    um = np.maximum(-u, 0.0) * (1.0 if qweight is None else qweight)
    res = (apply_laplacian(grid, u) - lam * up + mu * um)[grid.domain]
    den = lam * np.linalg.norm(up[grid.domain]) + mu * np.linalg.norm(um[grid.domain])
    return float(np.linalg.norm(res) / den)


def splice(grid, phis, signs, nus, mass_weights=None):
    """Combine sign-alternating eigenfunctions with least-squares amplitudes.

    Returns ``(u, kappa)`` where ``u = sum s_i kappa_i phi_i`` (kappa_0 = 1)
    minimises the residual of -Lap u = nu_i w_i u on each support.
    """
    dom = grid.domain
    mw = mass_weights or [None] * len(phis)
    R = [(s * (apply_laplacian(grid, f) - nu * (1.0 if w is None else w) * f))[dom]
         for f, s, nu, w in zip(phis, signs, nus, mw)]
    kappa = np.ones(len(phis))
    if len(phis) > 1:
        M = np.stack(R[1:], axis=1)
        sol, *_ = np.linalg.lstsq(M, -R[0], rcond=None)
        kappa[1:] = sol
    kappa = np.abs(kappa)
    u = np.sum([s * k * f for f, s, k in zip(phis, signs, kappa)], axis=0)
    return u, kappa


def nodal_domain_count(grid, u):
    return (len(connected_components(grid, u > 0)) + len(connected_components(grid, u < 0)))


def _point_from(grid, r, res):
    lams = np.asarray(res.lambdas, dtype=float)
    c = float(max(r * lams[0], lams[1]))
    lam, mu = c / r, c
    mw = res.mass_weights or [None, None]
    u, _ = splice(grid, res.fields, (1.0, -1.0), (lam, mu), mw)
    gap = balance_gap(lams, (r, 1.0))
    return FucikPoint(r=float(r), c=c, lam=lam, mu=mu, balance_gap=gap,
                      pde_residual=residual_check(grid, u, lam, mu, *mw),
                      outer_iterations=res.iterations, converged=res.converged, lambdas=lams,
                      masks=res.masks, fields=res.fields, u=u,
                      nodal_domains=nodal_domain_count(grid, u), events=list(res.events))


def c_of_r(grid, r, opts=None, context=None, initial_masks=None):
    """Min-max value c(r) with its achieving pair and Fucik eigenfunction."""
    if not r > 0:
        raise ValueError("r must be positive")
    opts = opts or FucikOptions()
    mw = context.mass_weights() if context is not None else None
    popts = opts.partition_options(mass_weights=mw, initial_masks=initial_masks)
    res = min_max_partition(grid, 2, (float(r), 1.0), popts, tuple(opts.schedule), opts.balance_tol)
    pt = _point_from(grid, r, res)
    if not pt.converged:
        log.warning("c(%g): unconverged (%s)", r, "; ".join(pt.events) or "stage limit")
    return pt


def _trace_one(args):
    grid, r, opts, context = args
    return c_of_r(grid, r, opts, context)


def trace_curve(grid, r_list, opts=None, context=None, workers=1):
    """c(r) over a sorted list of slopes.

    With ``opts.warm_start`` each sample starts from its neighbour's pair;
    otherwise samples are independent and may run in ``workers`` processes.
    """
    opts = opts or FucikOptions()
    r_list = [float(r) for r in r_list]
    if any(r <= 0 for r in r_list):
        raise ValueError("slopes must be positive")
    if any(b <= a for a, b in zip(r_list, r_list[1:])):
        raise ValueError("slopes must be strictly increasing")
    samples = []
    if opts.warm_start or workers <= 1:
        masks = None
        for r in r_list:
            pt = c_of_r(grid, r, opts, context, masks if opts.warm_start else None)
            masks = pt.masks
            samples.append(pt)
    else:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as ex:
            samples = list(ex.map(_trace_one, [(grid, r, opts, context) for r in r_list]))
    lam1 = None
    if context is None:
        lam1 = principal_eigenpair(grid, grid.domain, None, opts.eig_tol).lam
    return FucikCurve(samples, grid.header(), lam1)


def check_curve_properties(curve, tol, lambda1=None):
    """Symmetry, monotonicity, lower bound, asymptote and nodal count checks."""
    lam1 = curve.lambda1 if lambda1 is None else lambda1
    samples = sorted(curve.samples, key=lambda s: s.r)
    by_r = {round(s.r, 12): s for s in samples}
    sym = []
    for s in samples:
        other = by_r.get(round(1.0 / s.r, 12))
        if other is not None and s.r >= 1.0:
            sym.append((s.r, abs(s.lam - other.mu) / other.mu))
    checked = bool(sym)
    if len(samples) >= 2 and not checked:
        warnings.warn("no reciprocal slope pairs: symmetry not checked", stacklevel=2)
    c = np.array([s.c for s in samples])
    monotone = bool(np.all(np.diff(c) > 0))
    above = True if lam1 is None else bool(np.all(c > lam1))
    if lam1 is None or len(c) < 2:
        asym = True
    else:
        d = c - lam1
        asym = bool(np.all(np.diff(d) > 0))
    nodal = all(s.nodal_domains == 2 for s in samples if s.nodal_domains is not None)
    return CurveReport(sym, checked, monotone, above, asym, nodal, tol)


def _alternating_order(h, k):
    """Strip position -> component index, larger group at both ends."""
    weighted = list(range(h))
    plain = list(range(h, k))
    first, second = (weighted, plain) if h >= k - h else (plain, weighted)
    order = []
    while first or second:
        if first:
            order.append(first.pop(0))
        if second:
            order.append(second.pop(0))
    return order


def _adjacent_pairs(grid, masks):
    from scipy import ndimage
    size = (3,) * grid.ndim
    grown = [ndimage.maximum_filter(m.astype(np.uint8), size=size,
                                    mode="wrap" if grid.periodic else "constant") > 0
             for m in masks]
    pairs = set()
    for i in range(len(masks)):
        for j in range(i + 1, len(masks)):
            if np.any(grown[i] & grown[j]):
                pairs.add((i, j))
    return pairs


def c_hk(grid, h, k, r, opts=None):
    """Generalised min-max value with h weighted and k - h unweighted components.

    The achieving partition is certified when every interface node has
    multiplicity two and separates a weighted from an unweighted component;
    the spliced sign-alternating function is then a Fucik eigenfunction.
    """
    if not 1 <= h <= k or k < 2:
        raise ValueError("need 1 <= h <= k and k >= 2")
    if not r > 0:
        raise ValueError("r must be positive")
    opts = opts or FucikOptions()
    a = np.array([float(r)] * h + [1.0] * (k - h))
    popts = opts.partition_options(seed_order=tuple(_alternating_order(h, k)))
    res = min_max_partition(grid, k, a, popts, tuple(opts.schedule), opts.balance_tol)
    lams = np.asarray(res.lambdas)
    c = float(np.max(a * lams))
    out = HKResult(h, k, float(r), c, lams, a, False, "", masks=res.masks, converged=res.converged)
    m = multiplicity_map(grid, res.masks, 1)
    iface = interface_nodes(grid, res.masks)
    if np.any(m[iface] > 2):
        out.reason = "interface node of multiplicity three or more"
        return out
    bad = [(i, j) for i, j in _adjacent_pairs(grid, res.masks) if (i < h) == (j < h)]
    if bad:
        out.reason = f"components {bad[0]} of the same sign class touch"
        return out
    signs = np.where(np.arange(k) < h, 1.0, -1.0)
    nus = np.where(np.arange(k) < h, c / r, c)
    u, _ = splice(grid, res.fields, signs, nus)
    out.u = u
    out.pde_residual = residual_check(grid, u, c / r, c)
    out.certified = True
    out.reason = "all interface nodes have multiplicity two"
    return out


def write_curve_csv(path, samples):
    write_rows(path, CSV_COLUMNS, [s.row() for s in samples])


def closed_form_curve(r_list, L=1.0):
    """Exact 1-D curve (two nodal intervals per sample) for reference checks."""
    from .oned import c_k1_closed
    samples = []
    for r in r_list:
        c = c_k1_closed(r, 1, L)
        samples.append(FucikPoint(r=float(r), c=c, lam=c / r, mu=c, balance_gap=0.0,
                                  pde_residual=0.0, nodal_domains=2))
    return FucikCurve(samples, {"kind": "interval", "lengths": [L]}, (np.pi / L) ** 2)
