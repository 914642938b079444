import numpy as np
import pytest

from optpart.geometry import (build_grid, connected_components, dirichlet_energy, labels_from_masks,
                              mass, separate, strip_labels)


def test_spacing_conventions():
    assert build_grid("interval", 1.0, 101).h == pytest.approx((0.01,))
    assert build_grid("rectangle", [1, 1], [129, 129]).h == pytest.approx((1 / 128, 1 / 128))
    g = build_grid("circle", 2 * np.pi, 360)
    assert g.periodic and g.h[0] == pytest.approx(np.pi / 180)


def test_domain_excludes_boundary_layer():
    g = build_grid("square", 1.0, 9)
    assert not g.domain[0].any() and not g.domain[:, -1].any()
    assert g.domain[1:-1, 1:-1].all()
    assert build_grid("circle", 1.0, 5).domain.all()


def test_disk_domain_is_inscribed():
    g = build_grid("disk-in-rectangle", 2.0, 41)
    X, Y = g.mesh()
    inside = np.hypot(X - 1, Y - 1) < 1
    assert np.array_equal(g.domain, inside & build_grid("square", 2.0, 41).domain)


@pytest.mark.parametrize("kwargs", [
    dict(kind="interval", lengths=-1.0, points=11),
    dict(kind="interval", lengths=1.0, points=2),
    dict(kind="square", lengths=1.0, points=11, periodic=True),
    dict(kind="torus", lengths=1.0, points=11),
])
def test_build_grid_rejects(kwargs):
    with pytest.raises(ValueError):
        build_grid(**kwargs)


def _flood_fill_count(mask):
    # plain recursive-free flood fill as an independent oracle
    seen = np.zeros_like(mask)
    count = 0
    for start in zip(*np.nonzero(mask)):
        if seen[start]:
            continue
        count += 1
        stack = [start]
        seen[start] = True
        while stack:
            i, j = stack.pop()
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                a, b = i + di, j + dj
                if 0 <= a < mask.shape[0] and 0 <= b < mask.shape[1] and mask[a, b] and not seen[a, b]:
                    seen[a, b] = True
                    stack.append((a, b))
    return count


def test_connected_components_examples():
    g = build_grid("square", 1.0, 12)
    two = np.zeros(g.shape, dtype=bool)
    two[2:4, 2:4] = True
    two[6:9, 6:9] = True
    assert len(connected_components(g, two)) == 2
    assert len(connected_components(g, g.domain)) == 1
    assert connected_components(g, np.zeros(g.shape, dtype=bool)) == []


def test_checkerboard_cells_are_separate_components():
    g = build_grid("square", 1.0, 7)
    I, J = np.indices(g.shape)
    mask = g.domain & ((I + J) % 2 == 0)
    comps = connected_components(g, mask)
    assert len(comps) == _flood_fill_count(mask) == mask.sum()


def test_components_cover_and_are_disjoint():
    rng = np.random.default_rng(3)
    g = build_grid("square", 1.0, 30)
    mask = g.domain & (rng.random(g.shape) < 0.5)
    comps = connected_components(g, mask)
    stack = np.sum([c.astype(int) for c in comps], axis=0)
    assert stack.max() == 1
    assert np.array_equal(stack.astype(bool), mask)
    assert len(comps) == _flood_fill_count(mask)


def test_circle_components_wrap():
    g = build_grid("circle", 1.0, 20)
    mask = np.zeros(20, dtype=bool)
    mask[:3] = mask[-3:] = True
    assert len(connected_components(g, mask)) == 1


def test_energy_of_sine():
    g = build_grid("interval", 1.0, 1001)
    x = g.axes()[0]
    assert dirichlet_energy(g, np.sin(np.pi * x)) == pytest.approx(np.pi ** 2 / 2, rel=1e-4)


def test_energy_second_order():
    errs = []
    for n in (101, 201, 401):
        g = build_grid("interval", 1.0, n)
        x = g.axes()[0]
        errs.append(abs(dirichlet_energy(g, np.sin(np.pi * x)) - np.pi ** 2 / 2))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((ratios > 3.5) & (ratios < 4.5))


def test_zero_field_and_square_mass():
    g = build_grid("square", 1.0, 129)
    z = np.zeros(g.shape)
    assert dirichlet_energy(g, z) == 0 and mass(g, z) == 0
    X, Y = g.mesh()
    assert mass(g, np.sin(np.pi * X) * np.sin(np.pi * Y)) == pytest.approx(0.25, rel=1e-6)


def test_quadratic_scaling_and_weights():
    g = build_grid("square", 1.0, 17)
    u = np.random.default_rng(0).random(g.shape)
    assert dirichlet_energy(g, 3 * u) == pytest.approx(9 * dirichlet_energy(g, u), rel=1e-14)
    assert mass(g, u, 2.0) == pytest.approx(2 * mass(g, u), rel=1e-14)
    with pytest.raises(ValueError):
        mass(g, u, np.where(g.domain, 1.0, 0.0))


def test_separate_leaves_gap_between_labels():
    g = build_grid("square", 1.0, 21)
    masks = separate(g, strip_labels(g, 3, axis=0))
    lab = labels_from_masks(g, masks)
    for ax in (0, 1):
        a = np.take(lab, range(lab.shape[ax] - 1), axis=ax)
        b = np.take(lab, range(1, lab.shape[ax]), axis=ax)
        assert not np.any((a >= 0) & (b >= 0) & (a != b))


def test_separate_is_permutation_equivariant():
    g = build_grid("square", 1.0, 21)
    lab = strip_labels(g, 3, axis=1)
    perm = np.array([2, 0, 1])
    relab = np.where(lab >= 0, perm[np.maximum(lab, 0)], lab)
    a = separate(g, lab)
    b = separate(g, relab)
    for i in range(3):
        assert np.array_equal(a[i], b[perm[i]])
