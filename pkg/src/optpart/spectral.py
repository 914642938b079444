"""First Dirichlet eigenpair of the lattice Laplacian on a mask."""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .geometry import connected_components, dirichlet_energy, mass


class EmptyMaskError(ValueError):
    """The mask has no lattice node; its first eigenvalue is +inf."""


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


@dataclass
class EigenResult:
    lam: float
    eigenfunction: np.ndarray
    iterations: int
    residual: float
    support: np.ndarray = None


def _neighbour_pairs(grid, mask):
    """Flat index pairs (a, b, axis) of lattice edges with both ends in ``mask``."""
    idx = np.arange(mask.size).reshape(grid.shape)
    out = []
    for ax in range(grid.ndim):
        if grid.periodic:
            a, b = idx, np.roll(idx, -1, axis=ax)
        else:
            n = grid.shape[ax]
            a = np.take(idx, np.arange(n - 1), axis=ax)
            b = np.take(idx, np.arange(1, n), axis=ax)
        a, b = a.ravel(), b.ravel()
        flat = mask.ravel()
        keep = flat[a] & flat[b]
        out.append((a[keep], b[keep], ax))
    return out


def assemble_laplacian(grid, mask):
    """Sparse -Lap on the nodes of ``mask`` (row-major order) with zero exterior."""
    mask = np.asarray(mask, dtype=bool)
    nodes = np.flatnonzero(mask)
    if nodes.size == 0:
        raise EmptyMaskError("empty mask")
    pos = np.full(mask.size, -1, dtype=np.int64)
    pos[nodes] = np.arange(nodes.size)
    inv = grid.inv_h2()
    diag = np.full(nodes.size, sum(2.0 * inv[ax] for ax in range(grid.ndim)))
    rows, cols, vals = [np.arange(nodes.size)], [np.arange(nodes.size)], [diag]
    for a, b, ax in _neighbour_pairs(grid, mask):
        if a.size == 0:
            continue
        pa, pb = pos[a], pos[b]
        w = np.full(a.size, -inv[ax])
        rows += [pa, pb]
        cols += [pb, pa]
        vals += [w, w]
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(nodes.size, nodes.size))
    return A.tocsc()


def apply_laplacian(grid, u):
    """Matrix-free -Lap u on the full lattice (zero exterior or periodic)."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    for ax, hh in enumerate(grid.h):
        if grid.periodic:
            nb = np.roll(u, 1, axis=ax) + np.roll(u, -1, axis=ax)
        else:
            p = np.pad(u, [(1, 1) if a == ax else (0, 0) for a in range(u.ndim)])
            sl_lo = [slice(None)] * u.ndim
            sl_hi = [slice(None)] * u.ndim
            sl_lo[ax] = slice(0, -2)
            sl_hi[ax] = slice(2, None)
            nb = p[tuple(sl_lo)] + p[tuple(sl_hi)]
        out += (2.0 * u - nb) / hh ** 2
    return out


def _inverse_iteration(A, w, tol, max_iter):
    n = A.shape[0]
    if n == 1:
        lam = A[0, 0] / w[0]
        return lam, np.ones(1), 1, 0.0
    lu = splu(A)
    x = np.ones(n)
    x /= np.sqrt(np.dot(w * x, x))
    residual = np.inf
    for it in range(1, max_iter + 1):
        y = lu.solve(w * x)
        y /= np.sqrt(np.dot(w * y, y))
        if y.sum() < 0:
            y = -y
        Ay = A @ y
        lam = float(np.dot(y, Ay))
        r = Ay - lam * w * y
        residual = float(np.linalg.norm(r) / (lam * np.linalg.norm(w * y)))
        x = y
        if residual <= tol:
            return lam, x, it, residual
    raise ConvergenceError(f"inverse iteration stalled after {max_iter} iterations "
                           f"(residual {residual:.3e})", residual)


def principal_eigenpair(grid, mask, weight=None, tol=1e-10, max_iter=20000):
    """Smallest eigenpair of ``A phi = lam W phi`` on ``mask``.

    The mask is split into connected pieces and the piece with the lowest
    eigenvalue wins (lowest raster index on ties), so the eigenfunction is
    positive on exactly one piece. The eigenfunction is normalised to unit
    weighted mass. An empty mask gives ``lam = inf`` and a zero field.
    """
    if not 0 < tol <= 1e-2:
        raise ValueError("tol must lie in (0, 1e-2]")
    mask = np.asarray(mask, dtype=bool) & grid.domain
    if weight is not None:
        weight = np.broadcast_to(np.asarray(weight, dtype=float), grid.shape)
        if np.any(weight[mask] <= 0):
            raise ValueError("mass weight must be strictly positive")
    best = None
    for piece in connected_components(grid, mask):
        A = assemble_laplacian(grid, piece)
        w = np.ones(A.shape[0]) if weight is None else weight[piece]
        lam, x, it, res = _inverse_iteration(A, w, tol, max_iter)
        if best is None or lam < best[0]:
            best = (lam, piece, x, it, res)
    phi = np.zeros(grid.shape)
    if best is None:
        return EigenResult(np.inf, phi, 0, 0.0, np.zeros(grid.shape, dtype=bool))
    lam, piece, x, it, res = best
    phi[piece] = np.maximum(x, 0.0)
    phi /= np.sqrt(mass(grid, phi, weight))
    return EigenResult(lam, phi, it, res, piece)


def rayleigh(grid, u, weight=None):
    """Energy over (weighted) mass; homogeneous of degree zero."""
    m = mass(grid, u, weight)
    if m <= 0:
        raise ValueError("zero mass")
    return dirichlet_energy(grid, u) / m


def lambda1_analytic(shape, *params):
    """Closed-form first Dirichlet eigenvalues of an interval, rectangle or arc."""
    if any(p <= 0 for p in params):
        raise ValueError("parameters must be positive")
    if shape == "interval":
        (L,) = params
        return (np.pi / L) ** 2
    if shape == "rectangle":
        a, b = params
        return np.pi ** 2 * (1 / a ** 2 + 1 / b ** 2)
    if shape == "arc":
        (theta,) = params
        return (np.pi / theta) ** 2
    raise ValueError(f"unknown shape {shape!r}")


def arc_mask(grid, start, length):
    """Circle nodes strictly between the two nodes nearest the arc ends.

    The end nodes play the role of the Dirichlet zeros, so the discrete arc
    has length ``(b - a) h`` with both ends snapped to the lattice.
    """
    n = grid.shape[0]
    h = grid.h[0]
    a = int(np.rint(start / h))
    b = int(np.rint((start + length) / h))
    if b - a < 2:
        return np.zeros(n, dtype=bool)
    idx = np.arange(a + 1, b) % n
    mask = np.zeros(n, dtype=bool)
    mask[idx] = True
    return mask
