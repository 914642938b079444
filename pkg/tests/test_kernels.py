"""The numba kernels and their numpy fallbacks must agree exactly."""
import numpy as np
import pytest

from optpart import _backend, kernels

pytestmark = pytest.mark.skipif(not _backend.HAVE_NUMBA, reason="numba not available")


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b)) or np.allclose(a, b, rtol=1e-13, atol=0)


@pytest.fixture
def rng():
    return np.random.default_rng(3)


@pytest.mark.parametrize("periodic", [False, True])
def test_label_components(rng, periodic):
    mask = rng.random((40, 30)) < 0.55
    assert _same(kernels.label_components(mask, periodic), kernels.label_components_np(mask, periodic))


def test_rb_smooth(rng):
    u = rng.random((33, 33))
    inner = np.zeros_like(u, dtype=bool)
    inner[1:-1, 1:-1] = True
    a = kernels.rb_smooth(u.copy(), inner, 0.0, 1024.0, 1024.0, 5, False)
    b = kernels.rb_smooth_np(u.copy(), inner, 0.0, 1024.0, 1024.0, 5, False)
    assert np.allclose(a, b, rtol=1e-13, atol=1e-15)


def test_apply_transfers():
    n = 20
    lab = np.full((n, n), kernels.GAP, dtype=np.int64)
    lab[1:n // 2, 1:-1] = 0
    lab[n // 2 + 1:-1, 1:-1] = 1
    lab[0] = lab[-1] = lab[:, 0] = lab[:, -1] = kernels.OUTSIDE
    cand = (n // 2) * n + np.arange(1, n - 1, dtype=np.int64)
    comp = np.zeros(cand.size, dtype=np.int64)
    a, b = lab.copy(), lab.copy()
    ra = kernels.apply_transfers(a, cand, comp, cand.size, False)
    rb = kernels.transfer_np(b, cand, comp, cand.size, False)
    assert np.array_equal(a, b) and _same(ra, rb)


def test_multiplicity_counts(rng):
    lab = rng.integers(-1, 3, size=(25, 25))
    assert _same(kernels.multiplicity_counts(lab, 3, 1, False), kernels.multiplicity_np(lab, 3, 1, False))


@pytest.mark.parametrize("w", [[2.0, 1.0], [2.0, 1.0, 2.0, 1.0]])
def test_exhaustive_breakpoints(w):
    pos = np.linspace(0.02, 0.98, 30)
    w = np.array(w)
    assert _same(kernels.exhaustive_breakpoints(pos, 1.0, w), kernels.breakpoints_np(pos, 1.0, w))
