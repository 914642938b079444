"""Monotonicity functionals, sphere-partition constants and competing densities.

Ball integrals use cell quadrature on planar grids: a lattice cell belongs
to B(x0, r) when its centre does, its energy density is the mean of the
squared differences on its four edges, and radii are snapped to
half-integer multiples of h around a lattice node x0. The normalising
radius of each discrete ball is its area-equivalent radius, so the
rescaled energies of exactly homogeneous fields are reproduced without the
jitter of counting cells.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .spectral import assemble_laplacian

log = logging.getLogger(__name__)

VARIANTS = ("acf-kernel", "disjoint-k", "competition")


class UnknownConstantError(LookupError):
    """The constant is not available for this (k, N)."""


class CompetitionError(RuntimeError):
    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


# --------------------------------------------------------------------------
# beta(k, N)
# --------------------------------------------------------------------------

def beta_known(k, N):
    """Known optimal-partition constants: beta(2, N) = N and beta(k, 2) = k."""
    if int(k) != k or int(N) != N or k < 2 or N < 2:
        raise ValueError("need integers k >= 2 and N >= 2")
    if N == 2:
        return float(k)
    if k == 2:
        return float(N)
    raise UnknownConstantError(f"beta({k}, {N}) is not known")


def circle_value(arcs):
    """(2/k) sum sqrt(lam_1(arc)) = (2/k) sum pi/theta_i."""
    arcs = np.asarray(arcs, dtype=float)
    return float(2.0 / arcs.size * np.sum(np.pi / arcs))


@dataclass
class BetaCircle:
    k: int
    closed: float
    descent: float
    arcs: np.ndarray
    iterations: int
    grid: float = None
    n: int = None

    @property
    def agree(self):
        return abs(self.descent - self.closed) <= 1e-6 * self.closed


def _arc_descent(k, tol=1e-13, max_iter=100000):
    """Projected gradient descent on sum theta = 2 pi from an uneven start."""
    theta = np.arange(1, k + 1, dtype=float)
    theta *= 2 * np.pi / theta.sum()
    f = circle_value(theta)
    step = 0.1
    it = 0
    for it in range(1, max_iter + 1):
        g = -(2.0 / k) * np.pi / theta ** 2
        g -= g.mean()
        gn = np.linalg.norm(g)
        if gn < tol:
            break
        while True:
            trial = theta - step * g
            if np.all(trial > 0):
                ft = circle_value(trial)
                if ft <= f - 1e-4 * step * gn ** 2:
                    break
            step *= 0.5
            if step < 1e-18:
                return theta, f, it
        theta, f = trial, ft
        step *= 2.0
    return theta, f, it


def beta_circle(k, n=None):
    """Closed form, numerical descent and (optionally) lattice values on S^1."""
    if int(k) != k or k < 2:
        raise ValueError("k must be an integer >= 2")
    k = int(k)
    closed = circle_value(np.full(k, 2 * np.pi / k))
    arcs, value, it = _arc_descent(k)
    out = BetaCircle(k, closed, value, arcs, it)
    if n is not None:
        from .geometry import build_grid
        from .spectral import arc_mask, principal_eigenpair
        grid = build_grid("circle", 2 * np.pi, n)
        edges = np.rint(np.arange(k + 1) * n / k).astype(int)
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            lam = principal_eigenpair(grid, arc_mask(grid, a * grid.h[0], (b - a) * grid.h[0])).lam
            total += np.sqrt(lam)
        out.grid = float(2.0 / k * total)
        out.n = int(n)
    return out


def beta_circle_opt(k, n=None):
    """Optimal (2/k) sum sqrt(lam_1) over k-arc partitions of the circle.

    Returns the value reached by the numerical descent; it must agree with
    the equal-arc closed form to 1e-6 or an error is raised.
    """
    res = beta_circle(k, n)
    if not res.agree:
        raise RuntimeError(f"arc descent {res.descent} disagrees with equal arcs {res.closed}")
    return res.descent


@dataclass
class BetaMonotoneReport:
    values: dict
    nondecreasing: bool
    strict_gap: bool
    passed: bool


def beta_monotone_check(k_max, table=None):
    """beta(k, 2) non-decreasing in k and beta(3, 2) > beta(2, 2)."""
    if k_max < 2:
        raise ValueError("k_max must be at least 2")
    if table is None:
        values = {k: beta_circle_opt(k) for k in range(2, k_max + 1)}
    else:
        values = {int(k): float(v) for k, v in dict(table).items() if 2 <= int(k) <= k_max}
    ks = sorted(values)
    seq = np.array([values[k] for k in ks])
    nondec = bool(np.all(np.diff(seq) >= 0))
    strict = True if k_max < 3 else bool(values.get(3, -np.inf) > values.get(2, np.inf))
    return BetaMonotoneReport(values, nondec, strict, nondec and strict)


# --------------------------------------------------------------------------
# ball quadrature
# --------------------------------------------------------------------------

@dataclass
class PhiSeries:
    radii: np.ndarray
    values: np.ndarray
    variant: str
    params: dict = field(default_factory=dict)
    center: tuple = None
    effective_radii: np.ndarray = None

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if np.any(np.diff(self.radii) <= 0):
            raise ValueError("radii must increase strictly")
        if np.any(self.values < 0):
            raise ValueError("values must be non-negative")

    def slopes(self):
        """Forward difference quotients (last entry repeats the previous one)."""
        if self.radii.size < 2:
            return np.zeros_like(self.values)
        d = np.diff(self.values) / np.diff(self.radii)
        return np.append(d, d[-1])


class _Ball:
    """Cell-centre geometry of a planar grid around a lattice node."""

    def __init__(self, grid, x0):
        if grid.ndim != 2:
            raise ValueError("ball integrals need a planar grid")
        self.grid = grid
        hx, hy = grid.h
        if not np.isclose(hx, hy):
            raise ValueError("ball integrals need square cells")
        self.h = hx
        ax = grid.axes()
        i0 = int(np.rint((x0[0] - ax[0][0]) / hx))
        j0 = int(np.rint((x0[1] - ax[1][0]) / hy))
        if not (0 <= i0 < grid.shape[0] and 0 <= j0 < grid.shape[1]) or not grid.domain[i0, j0]:
            raise ValueError("centre must lie inside the domain")
        self.x0 = (float(ax[0][i0]), float(ax[1][j0]))
        cx = 0.5 * (ax[0][:-1] + ax[0][1:])
        cy = 0.5 * (ax[1][:-1] + ax[1][1:])
        self.dist = np.hypot(cx[:, None] - self.x0[0], cy[None, :] - self.x0[1])
        # cells entirely inside the domain
        dom = grid.domain
        self.inside = dom[:-1, :-1] & dom[1:, :-1] & dom[:-1, 1:] & dom[1:, 1:]

    def snap(self, radii):
        h = self.h
        r = (np.rint(np.asarray(radii, dtype=float) / h - 0.5) + 0.5) * h
        r = np.maximum(r, 0.5 * h)
        return r

    def inradius(self):
        # largest snapped radius whose cells all lie inside the domain
        out = self.dist[~self.inside]
        return float(out.min()) if out.size else np.inf

    def check(self, radii):
        if np.any(radii >= self.inradius()):
            raise ValueError("radius exceeds the distance from the centre to the boundary")

    def cell_mask(self, r):
        return self.dist < r

    def effective_radius(self, r):
        return float(np.sqrt(self.cell_mask(r).sum() * self.h ** 2 / np.pi))

    def energy_density(self, w):
        h = self.h
        gx = np.diff(w, axis=0) / h
        gy = np.diff(w, axis=1) / h
        return 0.5 * (gx[:, :-1] ** 2 + gx[:, 1:] ** 2) + 0.5 * (gy[:-1, :] ** 2 + gy[1:, :] ** 2)

    def cell_average(self, f):
        return 0.25 * (f[:-1, :-1] + f[1:, :-1] + f[:-1, 1:] + f[1:, 1:])

    def kernel(self, power):
        if power == 0:
            return np.ones_like(self.dist)
        return self.dist ** (-power)

    def integral(self, density, r):
        return float(density[self.cell_mask(r)].sum() * self.h ** 2)


def _check_segregated(fields):
    for i in range(len(fields)):
        for j in range(i + 1, len(fields)):
            if np.max(np.abs(fields[i] * fields[j])) > 0:
                raise ValueError(f"fields {i} and {j} are not segregated")


def _phi(ball, densities, radii, exponent):
    values, reff = [], []
    for r in radii:
        re = ball.effective_radius(r)
        reff.append(re)
        prod = 1.0
        for d in densities:
            prod *= ball.integral(d, r) / re ** exponent
        values.append(prod)
    return np.array(values), np.array(reff)


def phi_disjoint(grid, fields, x0, radii, beta):
    """Product over components of r^-beta times the Dirichlet energy in B(x0, r)."""
    fields = [np.asarray(f, dtype=float) for f in fields]
    _check_segregated(fields)
    ball = _Ball(grid, x0)
    radii = ball.snap(radii)
    ball.check(radii)
    dens = [ball.energy_density(f) for f in fields]
    vals, reff = _phi(ball, dens, radii, beta)
    return PhiSeries(radii, vals, "disjoint-k", {"beta": float(beta), "h": len(fields)},
                     ball.x0, reff)


def phi_acf(grid, w1, w2, x0, radii):
    """Two-phase functional with kernel |x - x0|^(2-N); the kernel is 1 in the plane."""
    fields = [np.asarray(w1, dtype=float), np.asarray(w2, dtype=float)]
    _check_segregated(fields)
    ball = _Ball(grid, x0)
    radii = ball.snap(radii)
    ball.check(radii)
    N = grid.ndim
    ker = ball.kernel(N - 2)
    dens = [ball.energy_density(f) * ker for f in fields]
    vals, reff = _phi(ball, dens, radii, 2.0)
    return PhiSeries(radii, vals, "acf-kernel", {"beta": 2.0, "h": 2}, ball.x0, reff)


@dataclass
class MonotoneReport:
    classification: str
    passed: bool
    variation: float
    worst_ratio: float
    from_index: int
    slack: float


def check_monotone(series, slack, from_index=None):
    """Phi(r_{j+1}) >= Phi(r_j)(1 - slack) for j >= from_index.

    ``classification`` is "constant" when the relative total variation
    (max - min)/mean is below ``slack``, "increasing" when every step
    passes, and "non-monotone" otherwise.
    """
    v = np.asarray(series.values, dtype=float)
    if v.size < 3:
        raise ValueError("need at least three radii")
    if from_index is None:
        from_index = v.size // 3
    tail = v[from_index:]
    steps_ok = bool(np.all(tail[1:] >= tail[:-1] * (1.0 - slack)))
    mean = v.mean()
    variation = 0.0 if mean == 0 else float((v.max() - v.min()) / mean)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(tail[:-1] > 0, tail[1:] / tail[:-1], 1.0)
    worst = float(ratios.min()) if ratios.size else 1.0
    if variation < slack:
        cls = "constant"
    elif steps_ok:
        cls = "increasing"
    else:
        cls = "non-monotone"
    return MonotoneReport(cls, steps_ok, variation, worst, int(from_index), float(slack))


# --------------------------------------------------------------------------
# competition-diffusion system
# --------------------------------------------------------------------------

@dataclass
class CompetitionState:
    grid: object = field(repr=False)
    fields: list = field(repr=False)
    a: np.ndarray = None
    residual: float = np.inf
    update: float = np.inf
    sweeps: int = 0
    nonnegative: bool = True
    max_principle: bool = True
    history: list = field(default_factory=list, repr=False)

    @property
    def k(self):
        return len(self.fields)


def coupling_matrix(a, k):
    a = np.asarray(a, dtype=float)
    if a.ndim == 0:
        a = float(a) * (1.0 - np.eye(k))
    if a.shape != (k, k):
        raise ValueError("coupling matrix must be k x k")
    if np.any(a < 0):
        raise ValueError("couplings must be non-negative")
    a = a.copy()
    np.fill_diagonal(a, 0.0)
    return a


def _lift(grid, g):
    """Right-hand side of the Dirichlet data at domain nodes."""
    out = np.zeros(grid.shape)
    ix, iy = grid.inv_h2()
    inv = (ix, iy)
    for ax in range(grid.ndim):
        p = np.pad(g, [(1, 1) if a == ax else (0, 0) for a in range(g.ndim)])
        lo = [slice(None)] * g.ndim
        hi = [slice(None)] * g.ndim
        lo[ax] = slice(0, -2)
        hi[ax] = slice(2, None)
        out += inv[ax] * (p[tuple(lo)] + p[tuple(hi)])
    return out[grid.domain]


def _residuals(A, U, B, a):
    res = []
    for i, (u, b) in enumerate(zip(U, B)):
        pot = sum(a[i, j] * U[j] for j in range(len(U)) if j != i)
        r = A @ u + pot * u - b
        den = np.linalg.norm(b)
        res.append(np.linalg.norm(r) / den if den > 0 else np.linalg.norm(r))
    return float(max(res))


def solve_competition(grid, a, boundary, tol=1e-10, max_sweeps=500):
    """Fixed point of -Lap u_i = -u_i sum_j a_ij u_j with Dirichlet data.

    Components are updated in index order; each update is an exact linear
    solve with the other components frozen at their latest values. Stops
    when the relative update drops below ``tol``; fails when the residual
    grows for 10 consecutive sweeps.
    """
    if grid.periodic or grid.ndim != 2:
        raise ValueError("competition runs need a planar box or disk grid")
    G = [np.asarray(g, dtype=float) for g in boundary]
    k = len(G)
    a = coupling_matrix(a, k)
    if any(np.any(g[~grid.domain] < 0) for g in G):
        raise ValueError("boundary data must be non-negative")
    dom = grid.domain
    G = [np.where(dom, 0.0, g) for g in G]
    A = assemble_laplacian(grid, dom)
    B = [_lift(grid, g) for g in G]
    U = [np.zeros(A.shape[0]) for _ in range(k)]
    history = []
    growth = 0
    res = np.inf
    update = np.inf
    nonneg = True
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        update = 0.0
        for i in range(k):
            pot = sum(a[i, j] * U[j] for j in range(k) if j != i)
            if not np.any(B[i]):
                new = np.zeros_like(U[i])
            else:
                new = splu((A + sp.diags(pot)).tocsc()).solve(B[i])
            scale = max(np.linalg.norm(new), np.finfo(float).tiny)
            update = max(update, np.linalg.norm(new - U[i]) / scale if np.any(new) else 0.0)
            if new.size and new.min() < -1e-12 * max(new.max(), 1.0):
                nonneg = False
            U[i] = np.maximum(new, 0.0)
        res_new = _residuals(A, U, B, a)
        history.append(res_new)
        growth = growth + 1 if res_new > res else 0
        res = res_new
        if growth >= 10:
            raise CompetitionError(f"residual grew for 10 sweeps (last {res:.3e})", history)
        if update < tol:
            break
    fields = []
    mp = True
    for u, g in zip(U, G):
        f = g.copy()
        f[dom] = u
        gmax = g[~dom].max() if np.any(~dom) else 0.0
        mp &= bool(u.size == 0 or u.max() <= gmax * (1 + 1e-12) + 1e-300)
        fields.append(f)
    if update >= tol:
        log.warning("competition solve stopped at %d sweeps (update %.3e)", sweeps, update)
    return CompetitionState(grid, fields, a, res, update, sweeps, nonneg, mp, history)


def _competition_densities(ball, state, comps):
    dens = []
    for i in comps:
        u = state.fields[i]
        pot = sum(state.a[i, j] * state.fields[j] for j in range(state.k) if j != i)
        dens.append(ball.energy_density(u) + ball.cell_average(u * u * pot))
    return dens


def phi_competition(state, h, hprime, x0, radii):
    """Product over the first h components of r^-h' (energy + interaction) in B(x0, r)."""
    if h < 1 or h > state.k:
        raise ValueError("h must count existing components")
    N = state.grid.ndim
    try:
        bound = beta_known(h, N) if h >= 2 else None
    except UnknownConstantError:
        bound = None
    if bound is not None and hprime >= bound:
        raise ValueError(f"h' = {hprime} must stay below beta({h}, {N}) = {bound}")
    ball = _Ball(state.grid, x0)
    radii = ball.snap(radii)
    ball.check(radii)
    dens = _competition_densities(ball, state, range(h))
    vals, reff = _phi(ball, dens, radii, hprime)
    return PhiSeries(radii, vals, "competition", {"hprime": float(hprime), "h": int(h)},
                     ball.x0, reff)


@dataclass
class GrowthReport:
    status: str
    exponent: float
    reference: float
    advisory: bool = True
    note: str = "finite-box fit; asymptotic growth cannot be verified"


def growth_diagnostic(state, x0, radii, hprime=None):
    """Log-log slope of prod_i (energy + interaction) over B(x0, r). Advisory only."""
    ball = _Ball(state.grid, x0)
    radii = ball.snap(radii)
    ball.check(radii)
    dens = _competition_densities(ball, state, range(state.k))
    vals, reff = _phi(ball, dens, radii, 0.0)
    ref = None if hprime is None else state.k * float(hprime)
    if not np.all(vals > 0):
        return GrowthReport("degenerate", float("nan"), ref)
    slope, _ = np.polyfit(np.log(reff), np.log(vals), 1)
    return GrowthReport("fitted", float(slope), ref)


# --------------------------------------------------------------------------
# named test data
# --------------------------------------------------------------------------

def _polar(grid, x0):
    X, Y = grid.mesh()
    dx, dy = X - x0[0], Y - x0[1]
    return dx, dy, np.hypot(dx, dy), np.arctan2(dy, dx)


def sector_fields(grid, k, x0=(0.0, 0.0), degree=None):
    """r^alpha |cos(alpha (theta - theta_i))| on k equal sectors, alpha = k/2 by default."""
    alpha = k / 2.0 if degree is None else float(degree)
    _, _, R, T = _polar(grid, x0)
    out = []
    for i in range(k):
        th = np.pi / k + 2 * np.pi * i / k
        d = np.angle(np.exp(1j * (T - th)))
        out.append(np.where(np.abs(d) < np.pi / k, R ** alpha * np.abs(np.cos(alpha * d)), 0.0))
    return out


def named_fields(grid, name, x0=(0.0, 0.0)):
    """Segregated test fields and their equality-case beta.

    ``halves``: (y)+ and (-y)+, beta 2. ``sectors3``: degree-3/2 sector
    fields, beta 3. ``generic``: positive parts of +-y + 0.2 y^2 (subharmonic,
    not homogeneous), beta 2.
    """
    _, dy, _, _ = _polar(grid, x0)
    if name == "halves":
        return [np.maximum(dy, 0.0), np.maximum(-dy, 0.0)], 2.0
    if name == "sectors3":
        return sector_fields(grid, 3, x0), 3.0
    if name == "generic":
        return [np.where(dy > 0, dy + 0.2 * dy ** 2, 0.0),
                np.where(dy < 0, -dy + 0.2 * dy ** 2, 0.0)], 2.0
    raise ValueError(f"unknown field set {name!r}")


def boundary_profile(grid, name, x0=(0.0, 0.0)):
    """Named non-negative Dirichlet data: x+, x-, y+, y-, zero, one, arc:i:k."""
    dx, dy, _, _ = _polar(grid, x0)
    table = {"x+": np.maximum(dx, 0.0), "x-": np.maximum(-dx, 0.0),
             "y+": np.maximum(dy, 0.0), "y-": np.maximum(-dy, 0.0),
             "zero": np.zeros(grid.shape), "one": np.ones(grid.shape)}
    if name in table:
        return table[name]
    if name.startswith("arc:"):
        _, i, k = name.split(":")
        return sector_fields(grid, int(k), x0)[int(i)]
    raise ValueError(f"unknown boundary profile {name!r}")
