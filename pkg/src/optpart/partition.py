"""Spectral optimal partitions on a lattice.

A partition is a list of boolean masks that never touch: between two
components there is always at least one gap node where every density
vanishes. The gap layer is the discrete free boundary, which keeps the
effective subdomain lengths consistent with the continuum problem.

The descent alternates eigen-solves on fixed masks, a Nehari rescaling of
each eigenfunction, and interface transfers decided winner-takes-all on
the rescaled densities; every transfer set is kept only if the objective
drops.
"""
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .geometry import (connected_components, labels_from_masks, separate, sector_labels,
                       strip_labels)
from .spectral import apply_laplacian, principal_eigenpair

log = logging.getLogger(__name__)

SEED_LAYOUTS = ("vertical", "horizontal", "sectors")


@dataclass
class PartitionOptions:
    seeds: tuple = ("vertical",)
    seed_order: tuple = None
    initial_masks: list = None
    mass_weights: list = None
    max_outer: int = 5000
    rel_tol: float = 1e-9
    patience: int = 3
    eig_tol: float = 1e-10
    smoothing_sweeps: int = 0


@dataclass
class PartitionResult:
    grid: object = field(repr=False)
    masks: list = field(repr=False)
    fields: list = field(repr=False)
    lambdas: np.ndarray
    weights: np.ndarray
    p: float
    objective: float
    history: list = field(repr=False)
    iterations: int = 0
    converged: bool = False
    seed: str = ""
    events: list = field(default_factory=list)
    mass_weights: list = field(default=None, repr=False)

    @property
    def k(self):
        return len(self.masks)

    def to_json(self):
        return {
            "k": self.k,
            "p": "infinity" if np.isinf(self.p) else float(self.p),
            "weights": [float(a) for a in self.weights],
            "lambdas": [float(v) for v in self.lambdas],
            "objective": float(self.objective),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "seed": self.seed,
            "events": list(self.events),
        }


@dataclass
class ExtremalityReport:
    upper: np.ndarray
    lower: np.ndarray
    tol: float

    @property
    def passed(self):
        return bool(np.all(self.upper <= self.tol) and np.all(self.lower >= -self.tol))


# --------------------------------------------------------------------------
# objective
# --------------------------------------------------------------------------

def objective_value(lambdas, weights, p):
    """(1/k) sum (a_i lam_i)^p, or max a_i lam_i for p = inf."""
    vals = np.asarray(weights, dtype=float) * np.asarray(lambdas, dtype=float)
    if not np.all(np.isfinite(vals)):
        return np.inf
    if np.isinf(p):
        return float(vals.max())
    return float(np.mean(vals ** p))


def nehari_scales(lambdas, weights, p):
    """Amplitudes t_i with t_i^2 proportional to a_i^p lam_i^(p-1), max t = 1.

    This is t^(2q-2) = lam for the dual exponent q = p/(p-1), extended with
    the weights; at p = 1 and in the min-max limit every component keeps
    unit mass.
    """
    lam = np.asarray(lambdas, dtype=float)
    a = np.asarray(weights, dtype=float)
    if np.isinf(p):
        return np.ones_like(lam)
    logt = 0.5 * (p * np.log(a) + (p - 1.0) * np.log(lam))
    return np.exp(logt - logt.max())


def _check_disjoint(masks):
    total = np.sum([np.asarray(m, dtype=np.int64) for m in masks], axis=0)
    if np.any(total > 1):
        raise ValueError("masks overlap")


def evaluate_partition(grid, masks, p, weights=None, mass_weights=None, tol=1e-10):
    """Objective of a fixed partition; +inf if any component is empty."""
    _check_disjoint(masks)
    k = len(masks)
    a = np.ones(k) if weights is None else np.asarray(weights, dtype=float)
    mw = mass_weights or [None] * k
    lams = [principal_eigenpair(grid, m, mw[i], tol).lam for i, m in enumerate(masks)]
    return objective_value(lams, a, p)


# --------------------------------------------------------------------------
# segregation and seeds
# --------------------------------------------------------------------------

def segregate(fields):
    """Winner-takes-all: each node keeps only its largest component (lowest index on ties)."""
    stack = np.stack([np.maximum(np.asarray(f, dtype=float), 0.0) for f in fields])
    win = np.argmax(stack, axis=0)
    out = []
    for i in range(stack.shape[0]):
        out.append(np.where((win == i) & (stack[i] > 0), stack[i], 0.0))
    return out


def seed_masks(grid, k, layout, order=None):
    if layout == "vertical":
        lab = strip_labels(grid, k, axis=0)
    elif layout == "horizontal":
        lab = strip_labels(grid, k, axis=min(1, grid.ndim - 1))
    elif layout == "sectors":
        lab = sector_labels(grid, k)
    else:
        raise ValueError(f"unknown seed layout {layout!r}")
    if order is not None:
        perm = np.asarray(order, dtype=np.int64)
        lab = np.where(lab >= 0, perm[np.maximum(lab, 0)], lab)
    return separate(grid, lab)


def _refill_empty(grid, masks, events):
    """Give an empty component half of the largest one."""
    masks = [m.copy() for m in masks]
    for i, m in enumerate(masks):
        if m.any():
            continue
        big = int(np.argmax([mm.sum() for mm in masks]))
        nodes = np.flatnonzero(masks[big])
        half = nodes[nodes.size // 2:]
        lab = labels_from_masks(grid, masks).ravel().copy()
        lab[half] = i
        lab = lab.reshape(grid.shape)
        lab[lab == kernels.GAP] = -1
        masks = separate(grid, np.where(lab == kernels.OUTSIDE, -1, lab))
        events.append(f"component {i} empty: split component {big}")
        log.info(events[-1])
    return masks


# --------------------------------------------------------------------------
# descent
# --------------------------------------------------------------------------

class _Solver:
    """Caches eigenpairs per mask so unchanged components are not re-solved."""

    def __init__(self, grid, mass_weights, tol):
        self.grid = grid
        self.mw = mass_weights
        self.tol = tol
        self.cache = {}

    def __call__(self, i, mask):
        key = (i, mask.tobytes())
        res = self.cache.get(key)
        if res is None:
            res = principal_eigenpair(self.grid, mask, self.mw[i], self.tol)
            if len(self.cache) > 64:
                self.cache.clear()
            self.cache[key] = res
        return res


def _pulls(grid, fields):
    """Off-diagonal stencil action sum_nb u(nb)/h^2 for each field."""
    ix, iy = grid.inv_h2()
    out = []
    for f in fields:
        sx, sy = kernels._shift_sum(grid.as2d(f), grid.periodic)
        out.append((ix * sx + iy * sy).reshape(grid.shape))
    return np.stack(out)


def _candidates(grid, labels, fields, only=None):
    """Gap nodes ranked by how much harder the winner pulls than the runner-up."""
    P = _pulls(grid, fields)
    gap = labels == kernels.GAP
    if P.shape[0] > 1:
        order = np.argsort(-P, axis=0, kind="stable")
        best = order[0]
        pb = np.take_along_axis(P, order[:1], axis=0)[0]
        ps = np.take_along_axis(P, order[1:2], axis=0)[0]
    else:
        best = np.zeros(grid.shape, dtype=np.int64)
        pb, ps = P[0], np.zeros(grid.shape)
    if only is not None:
        best = np.full(grid.shape, only, dtype=np.int64)
        pb = P[only]
        ps = np.max(np.delete(P, only, axis=0), axis=0) if P.shape[0] > 1 else 0.0 * pb
    score = pb - ps
    ok = gap & (pb > 0)
    if only is None:
        ok &= score > 0
    flat = np.flatnonzero(ok.ravel())
    s = score.ravel()[flat]
    rank = np.lexsort((flat, -s))
    return flat[rank].astype(np.int64), best.ravel()[flat[rank]].astype(np.int64)


class _State:
    def __init__(self, solver, masks, weights, p):
        self.eig = [solver(i, m) for i, m in enumerate(masks)]
        self.masks = [e.support.copy() if np.isfinite(e.lam) else m.copy()
                      for e, m in zip(self.eig, masks)]
        self.lams = np.array([e.lam for e in self.eig])
        self.obj = objective_value(self.lams, weights, p)


def _scaled_fields(grid, state, weights, p, sweeps):
    t = nehari_scales(state.lams, weights, p)
    fields = []
    for ti, e, m in zip(t, state.eig, state.masks):
        u = ti * e.eigenfunction
        if sweeps:
            ix, iy = grid.inv_h2()
            u2 = np.ascontiguousarray(grid.as2d(u.copy()))
            kernels.rb_smooth(u2, np.ascontiguousarray(grid.as2d(m)), e.lam, ix, iy, sweeps, grid.periodic)
            u = u2.reshape(grid.shape)
        fields.append(u)
    return fields


def _trial(grid, solver, state, cand, comp, n_apply, weights, p):
    lab = labels_from_masks(grid, state.masks)
    lab2 = np.ascontiguousarray(grid.as2d(lab))
    kernels.apply_transfers(lab2, cand, comp, n_apply, grid.periodic)
    lab = lab2.reshape(grid.shape)
    masks = [lab == i for i in range(len(state.masks))]
    return _State(solver, masks, weights, p)


def descend(grid, masks, weights, p, opts, solver=None):
    """Monotone interface descent from ``masks``; returns (state, history, iters, converged)."""
    weights = np.asarray(weights, dtype=float)
    solver = solver or _Solver(grid, opts.mass_weights or [None] * len(masks), opts.eig_tol)
    state = _State(solver, masks, weights, p)
    history = [state.obj]
    cap = None
    stall = 0
    converged = False
    it = 0
    for it in range(1, opts.max_outer + 1):
        fields = _scaled_fields(grid, state, weights, p, opts.smoothing_sweeps)
        cand, comp = _candidates(grid, labels_from_masks(grid, state.masks), fields)
        if cand.size == 0:
            converged = True
            break
        n_try = cand.size if cap is None else min(cap, cand.size)
        new = None
        while n_try >= 1:
            trial = _trial(grid, solver, state, cand, comp, n_try, weights, p)
            if trial.obj < state.obj:
                new = trial
                break
            n_try //= 2
        if new is None:
            converged = True
            break
        cap = None if n_try == cand.size else 2 * n_try
        rel = (state.obj - new.obj) / abs(state.obj)
        state = new
        history.append(state.obj)
        stall = stall + 1 if rel < opts.rel_tol else 0
        if stall >= opts.patience:
            converged = True
            break
    return state, history, it, converged


def equalize(grid, masks, weights, tol, opts, solver=None, max_steps=100000, tries=8):
    """Grow the component with the largest weighted eigenvalue until balanced.

    Each step moves one gap node into the leading component; a step is kept
    only if it lowers max a_i lam_i. Returns (state, converged).
    """
    weights = np.asarray(weights, dtype=float)
    solver = solver or _Solver(grid, opts.mass_weights or [None] * len(masks), opts.eig_tol)
    state = _State(solver, masks, weights, np.inf)
    for _ in range(max_steps):
        if balance_gap(state.lams, weights) <= tol:
            return state, True
        hi = int(np.argmax(weights * state.lams))
        fields = [e.eigenfunction for e in state.eig]
        cand, comp = _candidates(grid, labels_from_masks(grid, state.masks), fields, only=hi)
        moved = False
        for c in range(min(tries, cand.size)):
            trial = _trial(grid, solver, state, cand[c:c + 1], comp[c:c + 1], 1, weights, np.inf)
            if trial.obj < state.obj:
                state = trial
                moved = True
                break
        if not moved:
            break
    return state, balance_gap(state.lams, weights) <= tol


def balance_gap(lambdas, weights):
    vals = np.asarray(weights) * np.asarray(lambdas)
    if not np.all(np.isfinite(vals)):
        return np.inf
    return float((vals.max() - vals.min()) / vals.max())


def _result(grid, state, weights, p, history, iters, converged, seed, events, mass_weights=None):
    t = nehari_scales(state.lams, weights, p)
    fields = [ti * e.eigenfunction for ti, e in zip(t, state.eig)]
    return PartitionResult(grid, [m.copy() for m in state.masks], fields, state.lams.copy(),
                           np.asarray(weights, dtype=float), p, state.obj, list(history),
                           iters, converged, seed, list(events), mass_weights)


def optimize_partition(grid, k, p, weights=None, opts=None):
    """Local minimiser of (1/k) sum (a_i lam_1(omega_i))^p over separated k-tuples.

    Multistart over ``opts.seeds``; the lowest objective wins, first seed on
    ties. ``p = inf`` runs the min-max balancing descent instead.
    """
    if k < 2:
        raise ValueError("need at least two components")
    if not p > 0:
        raise ValueError("p must be positive")
    opts = opts or PartitionOptions()
    a = np.ones(k) if weights is None else np.asarray(weights, dtype=float)
    if a.shape != (k,) or np.any(a <= 0):
        raise ValueError("weights must be k positive numbers")
    if opts.mass_weights is not None and len(opts.mass_weights) != k:
        raise ValueError("need one mass weight per component")
    solver = _Solver(grid, opts.mass_weights or [None] * k, opts.eig_tol)
    starts = ([("warm", opts.initial_masks)] if opts.initial_masks is not None
              else [(s, None) for s in opts.seeds])
    best = None
    for name, masks in starts:
        events = []
        if masks is None:
            masks = seed_masks(grid, k, name, opts.seed_order)
        masks = _refill_empty(grid, [np.asarray(m, dtype=bool) & grid.domain for m in masks], events)
        if np.isinf(p):
            state, conv = equalize(grid, masks, a, 0.0, opts, solver)
            res = _result(grid, state, a, p, [state.obj], 0, True, name, events, opts.mass_weights)
        else:
            state, hist, iters, conv = descend(grid, masks, a, p, opts, solver)
            if not conv:
                events.append("max outer iterations reached")
            res = _result(grid, state, a, p, hist, iters, conv, name, events, opts.mass_weights)
        if best is None or res.objective < best.objective:
            best = res
    return best


def postprocess_connect(result, tol=1e-10):
    """Keep, for each component, its connected piece of smallest first eigenvalue."""
    grid = result.grid
    mw = result.mass_weights or [None] * result.k
    masks, eigs = [], []
    for i, m in enumerate(result.masks):
        pieces = connected_components(grid, m)
        if len(pieces) <= 1:
            masks.append(m.copy())
            eigs.append(principal_eigenpair(grid, m, mw[i], tol))
            continue
        sols = [principal_eigenpair(grid, pc, mw[i], tol) for pc in pieces]
        j = int(np.argmin([s.lam for s in sols]))
        masks.append(pieces[j])
        eigs.append(sols[j])
    lams = np.array([e.lam for e in eigs])
    t = nehari_scales(lams, result.weights, result.p)
    fields = [ti * e.eigenfunction for ti, e in zip(t, eigs)]
    obj = objective_value(lams, result.weights, result.p)
    return replace(result, masks=masks, fields=fields, lambdas=lams, objective=obj)


P_SCHEDULE = (1, 2, 4, 8, 16, 32)


def min_max_partition(grid, k, weights, opts=None, schedule=P_SCHEDULE, balance_tol=1e-2):
    """Approximate inf max a_i lam_1(omega_i) by a warm-started p-homotopy.

    Each stage minimises the p-objective from the previous stage's masks;
    a final pass grows the leading component one node at a time while the
    maximum keeps dropping, then every component is reduced to its best
    connected piece. ``converged`` requires every stage to converge and the
    final balance gap to be within ``balance_tol``.
    """
    opts = opts or PartitionOptions()
    a = np.ones(k) if weights is None else np.asarray(weights, dtype=float)
    masks = opts.initial_masks
    events, iters, ok = [], 0, True
    seed = "warm"
    for p in schedule:
        stage = optimize_partition(grid, k, p, a, replace(opts, initial_masks=masks))
        if masks is None:
            seed = stage.seed
        masks = stage.masks
        iters += stage.iterations
        ok &= stage.converged
        events += [f"p={p}: {e}" for e in stage.events]
    solver = _Solver(grid, opts.mass_weights or [None] * k, opts.eig_tol)
    state, _ = equalize(grid, masks, a, 0.0, opts, solver)
    res = _result(grid, state, a, np.inf, [state.obj], iters, ok, seed, events, opts.mass_weights)
    res = postprocess_connect(res, opts.eig_tol)
    gap = balance_gap(res.lambdas, a)
    if gap > balance_tol:
        res.events.append(f"balance gap {gap:.3e} above tolerance {balance_tol:.1e}")
    res.converged = bool(ok and gap <= balance_tol)
    return res


# --------------------------------------------------------------------------
# diagnostics
# --------------------------------------------------------------------------

def extremality_check(result, tol):
    """Residuals of the two sub/super-solution inequalities.

    Residuals are pointwise over the domain and divided by
    ``max lam * max |u|``: ``upper[i] = max(A u_i - lam_i u_i)`` and
    ``lower[i] = min(A u^_i - lam_i u_i + sum_{j!=i} lam_j u_j)`` with
    ``u^_i = u_i - sum_{j!=i} u_j``.
    """
    grid = result.grid
    U = [np.asarray(f, dtype=float) for f in result.fields]
    lam = np.asarray(result.lambdas, dtype=float)
    scale = lam.max() * max(np.abs(u).max() for u in U)
    AU = [apply_laplacian(grid, u) for u in U]
    dom = grid.domain
    upper, lower = [], []
    total_A = np.sum(AU, axis=0)
    total_lu = np.sum([l * u for l, u in zip(lam, U)], axis=0)
    for i, (u, Au) in enumerate(zip(U, AU)):
        r1 = (Au - lam[i] * u)[dom]
        upper.append(r1.max() / scale)
        A_hat = 2 * Au - total_A
        rhs = 2 * lam[i] * u - total_lu
        lower.append((A_hat - rhs)[dom].min() / scale)
    return ExtremalityReport(np.array(upper), np.array(lower), tol)


def multiplicity_map(grid, masks, radius=1):
    """Number of components meeting the (2R+1)-cell window around each node."""
    _check_disjoint(masks)
    lab = labels_from_masks(grid, masks)
    lab = np.where(lab >= 0, lab, -1)
    out = kernels.multiplicity_counts(np.ascontiguousarray(grid.as2d(lab)), len(masks), int(radius),
                                      grid.periodic)
    return out.reshape(grid.shape)


def local_exponent_fit(grid, V, point, radii):
    """Slope of log sup_{|x-pt|=r} V against log r.

    Circle sup is taken over nodes within half a cell of the circle.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.size < 3:
        raise ValueError("need at least three radii")
    V = np.asarray(V, dtype=float)
    coords = grid.mesh()
    dist = np.sqrt(sum((c - x0) ** 2 for c, x0 in zip(coords, point)))
    half = 0.5 * max(grid.h)
    sups = np.array([V[np.abs(dist - r) <= half].max(initial=0.0) for r in radii])
    ok = sups > 0
    if ok.sum() < 2:
        raise ValueError("V vanishes on the sampled circles")
    slope, _ = np.polyfit(np.log(radii[ok]), np.log(sups[ok]), 1)
    return float(slope)


def interface_nodes(grid, masks):
    """Gap nodes adjacent to at least two components."""
    m = multiplicity_map(grid, masks, 1)
    lab = labels_from_masks(grid, masks)
    return (lab == kernels.GAP) & (m >= 2)
