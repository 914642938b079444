"""Closed-form one-dimensional curves and their brute-force oracle.

On an interval of length L, c_{k+1}(r) is the infimum over k interior
breakpoints of the largest alternating-weight eigenvalue
max{r lam_1(I_1), lam_1(I_2), r lam_1(I_3), ...}, with lam_1(I) = (pi/|I|)^2.
"""
from dataclasses import dataclass

import numpy as np

from .kernels import exhaustive_breakpoints, max_weighted_eig

MEMBERSHIP_CAP = 64


@dataclass(frozen=True)
class Breakpoints:
    L: float
    t: tuple

    def __post_init__(self):
        t = tuple(float(v) for v in self.t)
        object.__setattr__(self, "t", t)
        full = (0.0,) + t + (float(self.L),)
        if self.L <= 0 or any(b <= a for a, b in zip(full, full[1:])):
            raise ValueError("breakpoints must increase strictly inside (0, L)")

    @property
    def lengths(self):
        return np.diff(np.concatenate([[0.0], self.t, [self.L]]))


def _check(r, k, L):
    if not r > 0 or not L > 0:
        raise ValueError("r and L must be positive")
    if int(k) != k or k < 1:
        raise ValueError("k must be a positive integer")


def alternating_weights(r, k):
    """Weights r, 1, r, 1, ... for the k + 1 intervals."""
    return np.array([r if i % 2 == 0 else 1.0 for i in range(k + 1)], dtype=float)


def c_k1_closed(r, k, L=1.0):
    """Equalised value pi^2 (n_a sqrt(r) + n_b)^2 / L^2.

    n_a = ceil((k+1)/2) intervals carry the weight r and n_b = floor((k+1)/2)
    do not; all weighted eigenvalues agree when the unweighted lengths are
    the weighted ones divided by sqrt(r).
    """
    _check(r, k, L)
    n_a = (k + 2) // 2
    n_b = (k + 1) // 2
    return float(np.pi ** 2 * (n_a * np.sqrt(r) + n_b) ** 2 / L ** 2)


def _box_refine(t, L, w, half, m, rel_tol):
    """Shrinking-box exhaustive search around ``t``.

    Each round evaluates a tensor grid of ``m`` points per breakpoint in
    ``t +- half`` and recentres on the best point; the box halves each round
    and always spans several grid steps around the incumbent.
    """
    best = float(max_weighted_eig(t, L, w)[0])
    offs = np.linspace(-1.0, 1.0, m)
    nb = t.size
    while half > rel_tol * L * 1e-3:
        axes = [t[i] + half * offs for i in range(nb)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, nb)
        vals = max_weighted_eig(pts, L, w)
        j = int(np.argmin(vals))
        if vals[j] < best:
            best = float(vals[j])
            t = pts[j].copy()
        half *= 0.5
    return best, t


def breakpoints_search(r, k, L=1.0, grid_n=200, rel_tol=1e-10):
    """Brute-force minimiser: exhaustive over ``grid_n`` positions, then box refinement.

    Returns ``(value, Breakpoints)``.
    """
    _check(r, k, L)
    if grid_n < 50:
        raise ValueError("grid_n must be at least 50")
    w = alternating_weights(r, k)
    pos = L * np.arange(1, grid_n + 1) / (grid_n + 1)
    _, idx = exhaustive_breakpoints(pos, float(L), w)
    t = pos[np.asarray(idx)].astype(float)
    m = 17 if k <= 3 else 9
    value, t = _box_refine(t, L, w, 2.0 * L / (grid_n + 1), m, rel_tol)
    return value, Breakpoints(L, tuple(t))


def c_k1_bruteforce(r, k, L=1.0, grid_n=60):
    """Brute-force value of c_{k+1}(r) (independent of the closed form)."""
    return breakpoints_search(r, k, L, grid_n)[0]


def fucik_1d_membership(lam, mu, L=1.0, tol=1e-9, cap=MEMBERSHIP_CAP):
    """Number of nodal intervals of a 1-D Fucik eigenfunction for (lam, mu), or None.

    Nodal intervals alternate between half-periods pi/sqrt(lam) (positive)
    and pi/sqrt(mu) (negative); both starting signs are tried and the
    smallest matching count is returned.
    """
    if not lam > 0 or not mu > 0:
        raise ValueError("lam and mu must be positive")
    a = np.pi / np.sqrt(lam)
    b = np.pi / np.sqrt(mu)
    for n in range(1, cap + 1):
        hi, lo = (n + 1) // 2, n // 2
        if abs(hi * a + lo * b - L) <= tol or abs(hi * b + lo * a - L) <= tol:
            return n
    return None


def curve_identity_residual(lam, mu, L=1.0):
    """pi/sqrt(lam) + pi/sqrt(mu) - L: zero on the first 1-D curve."""
    return float(np.pi / np.sqrt(lam) + np.pi / np.sqrt(mu) - L)
