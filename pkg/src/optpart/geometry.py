"""Uniform lattices, subdomain masks and quadrature.

Masks and fields are plain numpy arrays shaped like ``grid.shape``:
booleans for masks, floats for fields. Dirichlet grids include their
boundary nodes, which are never part of the computational domain, so a
field that vanishes outside its mask automatically carries zero boundary
values.
"""
from dataclasses import dataclass, field

import numpy as np

from . import kernels

KINDS = ("interval", "rectangle", "disk", "circle")
_ALIASES = {"disk-in-rectangle": "disk", "square": "rectangle", "arc": "circle"}


@dataclass(frozen=True, eq=False)
class Grid:
    kind: str
    lengths: tuple
    shape: tuple
    origin: tuple
    domain: np.ndarray = field(repr=False)

    @property
    def ndim(self):
        return len(self.shape)

    @property
    def periodic(self):
        return self.kind == "circle"

    @property
    def h(self):
        if self.periodic:
            return tuple(L / n for L, n in zip(self.lengths, self.shape))
        return tuple(L / (n - 1) for L, n in zip(self.lengths, self.shape))

    @property
    def cell_volume(self):
        return float(np.prod(self.h))

    def axes(self):
        return [o + np.arange(n) * hh for o, n, hh in zip(self.origin, self.shape, self.h)]

    def mesh(self):
        return np.meshgrid(*self.axes(), indexing="ij")

    def as2d(self, a):
        """View a grid array as 2-D (kernels are written for 2-D)."""
        return a.reshape(self.shape[0], -1)

    def inv_h2(self):
        h = self.h
        return (1.0 / h[0] ** 2, 1.0 / h[1] ** 2 if self.ndim == 2 else 0.0)

    def header(self):
        return {
            "kind": self.kind,
            "lengths": list(self.lengths),
            "points": list(self.shape),
            "h": list(self.h),
            "origin": list(self.origin),
        }


def build_grid(kind, lengths, points, origin=None, periodic=None):
    """Build a lattice.

    ``interval`` and ``rectangle`` nodes include both boundary layers, so
    ``h = L/(n-1)``; the circle is periodic with ``h = L/n``. A ``disk``
    lives in its bounding rectangle with the inscribed disk as domain.
    """
    kind = _ALIASES.get(kind, kind)
    if kind not in KINDS:
        raise ValueError(f"unknown grid kind {kind!r}")
    if periodic and kind != "circle":
        raise ValueError("periodic topology is only available for the circle")
    dim = 1 if kind in ("interval", "circle") else 2
    lengths = tuple(float(v) for v in np.atleast_1d(lengths))
    points = tuple(int(v) for v in np.atleast_1d(points))
    if len(lengths) == 1 and dim == 2:
        lengths = lengths * 2
    if len(points) == 1 and dim == 2:
        points = points * 2
    if len(lengths) != dim or len(points) != dim:
        raise ValueError(f"{kind} grids need {dim} lengths and point counts")
    if any(L <= 0 for L in lengths):
        raise ValueError("lengths must be positive")
    if any(n < 3 for n in points):
        raise ValueError("at least 3 points per axis are required")
    origin = tuple(float(v) for v in (origin if origin is not None else (0.0,) * dim))

    domain = np.ones(points, dtype=bool)
    if kind != "circle":
        domain[0] = domain[-1] = False
        if dim == 2:
            domain[:, 0] = domain[:, -1] = False
    grid = Grid(kind, lengths, points, origin, domain)
    if kind == "disk":
        X, Y = grid.mesh()
        cx = origin[0] + lengths[0] / 2
        cy = origin[1] + lengths[1] / 2
        R = min(lengths) / 2
        domain &= np.hypot(X - cx, Y - cy) < R
    domain.setflags(write=False)
    return grid


def center(grid):
    return tuple(o + L / 2 for o, L in zip(grid.origin, grid.lengths))


def connected_components(grid, mask):
    """Split a mask into its 4-connected pieces (raster order of first node)."""
    mask = np.asarray(mask, dtype=bool)
    labels = grid_labels(grid, mask)
    n = int(labels.max()) if labels.size else 0
    return [labels == t for t in range(1, n + 1)]


def grid_labels(grid, mask):
    lab = kernels.label_components(np.ascontiguousarray(grid.as2d(np.asarray(mask, dtype=bool))), grid.periodic)
    return lab.reshape(grid.shape)


def _check_weight(weight):
    if weight is not None and np.any(np.asarray(weight) <= 0):
        raise ValueError("mass weight must be strictly positive")


def gradient_edges(grid, u):
    """Forward differences along every lattice edge, per axis."""
    out = []
    for ax, hh in enumerate(grid.h):
        if grid.periodic:
            d = np.roll(u, -1, axis=ax) - u
        else:
            d = np.diff(u, axis=ax)
        out.append(d / hh)
    return out


def dirichlet_energy(grid, u):
    """Lattice quadrature of the Dirichlet integral of ``u``."""
    u = np.asarray(u, dtype=float)
    return float(sum(np.sum(d * d) for d in gradient_edges(grid, u)) * grid.cell_volume)


def mass(grid, u, weight=None):
    """Lattice quadrature of the (weighted) L2 mass of ``u``."""
    _check_weight(weight)
    u = np.asarray(u, dtype=float)
    w = 1.0 if weight is None else np.asarray(weight, dtype=float)
    return float(np.sum(w * u * u) * grid.cell_volume)


def strip_labels(grid, k, axis=0):
    """Equal strips along ``axis``; returns an int label map (-1 off-domain)."""
    coords = grid.mesh()[axis]
    lo = grid.origin[axis]
    lab = np.floor(k * (coords - lo) / grid.lengths[axis]).astype(np.int64)
    lab = np.clip(lab, 0, k - 1)
    lab[~grid.domain] = -1
    return lab


def sector_labels(grid, k, offset=0.0):
    """Angular sectors around the domain centre (arcs on the circle)."""
    if grid.kind == "circle":
        return strip_labels(grid, k)
    if grid.ndim == 1:
        return strip_labels(grid, k)
    X, Y = grid.mesh()
    cx, cy = center(grid)
    theta = np.mod(np.arctan2(Y - cy, X - cx) - offset, 2 * np.pi)
    lab = np.minimum((k * theta / (2 * np.pi)).astype(np.int64), k - 1)
    lab[~grid.domain] = -1
    return lab


def separate(grid, labels):
    """Turn a full label map into separated masks.

    Two lattice neighbours with different labels cannot both keep them: the
    node later in raster order becomes a gap node. The rule depends only on
    geometry, so relabelling the input permutes the output.
    """
    lab = np.array(labels, dtype=np.int64, copy=True)
    k = int(lab.max()) + 1 if lab.size else 0
    lab[~grid.domain] = kernels.OUTSIDE
    flat = lab.ravel()
    idx = np.arange(flat.size).reshape(grid.shape)
    drop = np.zeros(flat.size, dtype=bool)
    for ax in range(grid.ndim):
        if grid.periodic:
            a, b = idx.ravel(), np.roll(idx, -1, axis=ax).ravel()
        else:
            a = np.take(idx, np.arange(grid.shape[ax] - 1), axis=ax).ravel()
            b = np.take(idx, np.arange(1, grid.shape[ax]), axis=ax).ravel()
        la, lb = flat[a], flat[b]
        clash = (la >= 0) & (lb >= 0) & (la != lb)
        later = np.maximum(a[clash], b[clash])
        drop[later] = True
    flat[drop] = kernels.GAP
    return [lab == t for t in range(k)]


def labels_from_masks(grid, masks):
    lab = np.full(grid.shape, kernels.GAP, dtype=np.int64)
    for t, m in enumerate(masks):
        lab[m] = t
    lab[~grid.domain] = kernels.OUTSIDE
    return lab
