"""Hot lattice kernels with numba and numpy implementations.

All kernels operate on 2-D arrays; 1-D grids are passed as ``(n, 1)``
views with a zero inverse spacing on the dummy axis. ``periodic`` wraps
axis 0 only (the circle grid). Public names dispatch to the numba version
when available; the ``*_np`` functions are the reference fallback.
"""
from itertools import combinations

import numpy as np
from scipy import ndimage

from ._backend import njit, select

GAP = -1
OUTSIDE = -2


# --------------------------------------------------------------------------
# connected-component labelling (4-neighbour)
# --------------------------------------------------------------------------

def _label_py(mask, periodic):
    nx, ny = mask.shape
    labels = np.zeros((nx, ny), dtype=np.int64)
    stack = np.empty(nx * ny, dtype=np.int64)
    current = 0
    for i0 in range(nx):
        for j0 in range(ny):
            if not mask[i0, j0] or labels[i0, j0] != 0:
                continue
            current += 1
            labels[i0, j0] = current
            top = 0
            stack[top] = i0 * ny + j0
            top += 1
            while top > 0:
                top -= 1
                p = stack[top]
                i = p // ny
                j = p - i * ny
                for d in range(4):
                    ii = i
                    jj = j
                    if d == 0:
                        ii = i - 1
                    elif d == 1:
                        ii = i + 1
                    elif d == 2:
                        jj = j - 1
                    else:
                        jj = j + 1
                    if periodic:
                        if ii < 0:
                            ii = nx - 1
                        elif ii >= nx:
                            ii = 0
                    if ii < 0 or ii >= nx or jj < 0 or jj >= ny:
                        continue
                    if mask[ii, jj] and labels[ii, jj] == 0:
                        labels[ii, jj] = current
                        stack[top] = ii * ny + jj
                        top += 1
    return labels


def label_components_np(mask, periodic=False):
    labels, n = ndimage.label(mask)
    labels = labels.astype(np.int64)
    if periodic and n > 1:
        first, last = labels[0], labels[-1]
        for a, b in zip(first, last):
            if a and b and a != b:
                labels[labels == b] = a
    # renumber by first raster occurrence
    flat = labels.ravel()
    present = flat[flat > 0]
    if present.size == 0:
        return labels
    _, first_pos = np.unique(present, return_index=True)
    uniq = present[np.sort(first_pos)]
    remap = np.zeros(flat.max() + 1, dtype=np.int64)
    remap[uniq] = np.arange(1, uniq.size + 1)
    return remap[labels]


label_components = select(njit(_label_py), label_components_np)


# --------------------------------------------------------------------------
# red-black Gauss-Seidel relaxation of (-Lap - lam) u = 0 inside a mask
# --------------------------------------------------------------------------

def _rb_smooth_py(u, mask, lam, inv_hx2, inv_hy2, sweeps, periodic):
    nx, ny = u.shape
    diag = 2.0 * inv_hx2 + 2.0 * inv_hy2 - lam
    for _ in range(sweeps):
        for color in range(2):
            for i in range(nx):
                for j in range(ny):
                    if (i + j) % 2 != color or not mask[i, j]:
                        continue
                    im = i - 1
                    ip = i + 1
                    if periodic:
                        if im < 0:
                            im = nx - 1
                        if ip >= nx:
                            ip = 0
                    left = u[im, j] if im >= 0 else 0.0
                    right = u[ip, j] if ip < nx else 0.0
                    down = u[i, j - 1] if j >= 1 else 0.0
                    up = u[i, j + 1] if j + 1 < ny else 0.0
                    u[i, j] = (inv_hx2 * (left + right) + inv_hy2 * (down + up)) / diag
    return u


def _shift_sum(u, periodic):
    """Return (left+right, down+up) neighbour sums with zero exterior."""
    p = np.zeros((u.shape[0] + 2, u.shape[1] + 2))
    p[1:-1, 1:-1] = u
    if periodic:
        p[0, 1:-1] = u[-1]
        p[-1, 1:-1] = u[0]
    return p[:-2, 1:-1] + p[2:, 1:-1], p[1:-1, :-2] + p[1:-1, 2:]


def rb_smooth_np(u, mask, lam, inv_hx2, inv_hy2, sweeps, periodic):
    nx, ny = u.shape
    parity = (np.arange(nx)[:, None] + np.arange(ny)[None, :]) % 2
    diag = 2.0 * inv_hx2 + 2.0 * inv_hy2 - lam
    for _ in range(sweeps):
        for color in range(2):
            sel = (parity == color) & mask
            sx, sy = _shift_sum(u, periodic)
            u[sel] = ((inv_hx2 * sx + inv_hy2 * sy) / diag)[sel]
    return u


rb_smooth = select(njit(_rb_smooth_py), rb_smooth_np)


# --------------------------------------------------------------------------
# interface transfers
# --------------------------------------------------------------------------

def _transfer_py(labels, cand, comp, n_apply, periodic):
    """Move gap nodes ``cand`` (flat, best first) into ``comp``.

    Other components' 4-neighbours of a moved node become gap nodes, so
    distinct components never touch. A node freed or claimed by one move
    cannot be taken by a different component in the same pass.
    """
    nx, ny = labels.shape
    flat = labels.ravel()
    orig = flat.copy()
    claim = np.full(nx * ny, -1, dtype=np.int64)
    nbs = np.empty(4, dtype=np.int64)
    applied = 0
    for c in range(cand.shape[0]):
        if applied >= n_apply:
            break
        p = cand[c]
        k = comp[c]
        if orig[p] != GAP or flat[p] != GAP:
            continue
        if claim[p] >= 0 and claim[p] != k:
            continue
        i = p // ny
        j = p - i * ny
        nn = 0
        for d in range(4):
            ii = i
            jj = j
            if d == 0:
                ii = i - 1
            elif d == 1:
                ii = i + 1
            elif d == 2:
                jj = j - 1
            else:
                jj = j + 1
            if periodic:
                if ii < 0:
                    ii = nx - 1
                elif ii >= nx:
                    ii = 0
            if ii < 0 or ii >= nx or jj < 0 or jj >= ny:
                continue
            nbs[nn] = ii * ny + jj
            nn += 1
        touches = False
        for t in range(nn):
            if orig[nbs[t]] == k:
                touches = True
        if not touches:
            continue
        flat[p] = k
        for t in range(nn):
            q = nbs[t]
            if flat[q] >= 0 and flat[q] != k:
                flat[q] = GAP
            if flat[q] == GAP:
                claim[q] = k
        applied += 1
    return applied


def transfer_np(labels, cand, comp, n_apply, periodic):
    # inherently sequential; plain loop over the (short) candidate list
    nx, ny = labels.shape
    flat = labels.ravel()
    orig = flat.copy()
    claim = np.full(nx * ny, -1, dtype=np.int64)
    applied = 0
    for p, k in zip(cand.tolist(), comp.tolist()):
        if applied >= n_apply:
            break
        if orig[p] != GAP or flat[p] != GAP:
            continue
        if claim[p] >= 0 and claim[p] != k:
            continue
        i, j = divmod(p, ny)
        nbs = []
        for ii, jj in ((i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)):
            if periodic:
                ii %= nx
            if 0 <= ii < nx and 0 <= jj < ny:
                nbs.append(ii * ny + jj)
        if not any(orig[q] == k for q in nbs):
            continue
        flat[p] = k
        for q in nbs:
            if flat[q] >= 0 and flat[q] != k:
                flat[q] = GAP
            if flat[q] == GAP:
                claim[q] = k
        applied += 1
    return applied


apply_transfers = select(njit(_transfer_py), transfer_np)


# --------------------------------------------------------------------------
# multiplicity: number of distinct labels in a (2R+1)-window
# --------------------------------------------------------------------------

def _multiplicity_py(labels, k, radius, periodic):
    nx, ny = labels.shape
    out = np.zeros((nx, ny), dtype=np.int64)
    seen = np.zeros(k, dtype=np.bool_)
    for i in range(nx):
        for j in range(ny):
            seen[:] = False
            for di in range(-radius, radius + 1):
                ii = i + di
                if periodic:
                    ii = ii % nx
                if ii < 0 or ii >= nx:
                    continue
                for dj in range(-radius, radius + 1):
                    jj = j + dj
                    if jj < 0 or jj >= ny:
                        continue
                    lab = labels[ii, jj]
                    if lab >= 0:
                        seen[lab] = True
            cnt = 0
            for t in range(k):
                if seen[t]:
                    cnt += 1
            out[i, j] = cnt
    return out


def multiplicity_np(labels, k, radius, periodic):
    size = (2 * radius + 1, 2 * radius + 1 if labels.shape[1] > 1 else 1)
    out = np.zeros(labels.shape, dtype=np.int64)
    for t in range(k):
        hit = ndimage.maximum_filter(
            (labels == t).astype(np.uint8), size=size,
            mode=("wrap", "constant") if periodic else "constant", cval=0)
        out += hit.astype(np.int64)
    return out


multiplicity_counts = select(njit(_multiplicity_py), multiplicity_np)


# --------------------------------------------------------------------------
# exhaustive breakpoint search for the 1-D min-max problem
# --------------------------------------------------------------------------

def _breakpoints_py(positions, length, weights):
    """Minimise max_i w_i (pi/len_i)^2 over increasing breakpoint tuples."""
    m = positions.shape[0]
    nb = weights.shape[0] - 1
    idx = np.arange(nb)
    best = np.inf
    best_idx = idx.copy()
    if nb > m:
        return best, best_idx
    while True:
        worst = 0.0
        prev = 0.0
        for s in range(nb + 1):
            cur = positions[idx[s]] if s < nb else length
            seg = cur - prev
            val = weights[s] * (np.pi / seg) ** 2
            if val > worst:
                worst = val
            prev = cur
        if worst < best:
            best = worst
            best_idx[:] = idx
        # next combination in lexicographic order
        s = nb - 1
        while s >= 0 and idx[s] == m - nb + s:
            s -= 1
        if s < 0:
            break
        idx[s] += 1
        for t in range(s + 1, nb):
            idx[t] = idx[t - 1] + 1
    return best, best_idx


def breakpoints_np(positions, length, weights):
    nb = weights.shape[0] - 1
    combos = np.array(list(combinations(range(positions.shape[0]), nb)), dtype=np.int64)
    if combos.size == 0:
        return np.inf, np.arange(nb)
    values = max_weighted_eig(positions[combos], length, weights)
    best = int(np.argmin(values))
    return values[best], combos[best]


def max_weighted_eig(t, length, weights):
    """Batch objective: rows of ``t`` are increasing breakpoints in (0, L)."""
    t = np.atleast_2d(t)
    edges = np.concatenate([np.zeros((t.shape[0], 1)), t, np.full((t.shape[0], 1), length)], axis=1)
    seg = np.diff(edges, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = weights[None, :] * (np.pi / seg) ** 2
    vals[seg <= 0] = np.inf
    worst = vals[:, 0].copy()
    for s in range(1, vals.shape[1]):
        worst = np.maximum(worst, vals[:, s])
    return worst


exhaustive_breakpoints = select(njit(_breakpoints_py), breakpoints_np)
