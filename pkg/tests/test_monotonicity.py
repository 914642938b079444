import numpy as np
import pytest

from optpart.geometry import build_grid
from optpart.monotonicity import (PhiSeries, UnknownConstantError, beta_circle, beta_circle_opt,
                                  beta_known, beta_monotone_check, boundary_profile,
                                  check_monotone, growth_diagnostic, named_fields, phi_acf,
                                  phi_competition, phi_disjoint, solve_competition, CompetitionState,
                                  coupling_matrix)

RADII = np.linspace(0.1, 0.4, 10)


@pytest.fixture(scope="module")
def box():
    return build_grid("square", 1.0, 129, origin=(-0.5, -0.5))


@pytest.fixture(scope="module")
def compete(box):
    bnd = [boundary_profile(box, "y+"), boundary_profile(box, "y-")]
    return {a: solve_competition(box, a, bnd) for a in (1.0, 10.0)}


def test_beta_known_table():
    assert beta_known(2, 2) == 2.0
    assert beta_known(2, 3) == 3.0
    assert beta_known(5, 2) == 5.0
    with pytest.raises(UnknownConstantError):
        beta_known(3, 3)
    with pytest.raises(ValueError):
        beta_known(1, 2)


@pytest.mark.parametrize("k", [2, 5, 7])
def test_beta_circle(k):
    assert beta_circle_opt(k) == pytest.approx(k, rel=1e-6)


def test_beta_circle_lattice():
    res = beta_circle(3, n=720)
    assert res.agree and res.grid == pytest.approx(3.0, rel=1e-3)
    assert np.allclose(res.arcs, 2 * np.pi / 3, rtol=1e-6)


def test_beta_monotone_check():
    assert beta_monotone_check(6).passed
    assert beta_monotone_check(2).passed
    bad = beta_monotone_check(4, table={2: 2.0, 3: 1.5, 4: 4.0})
    assert not bad.passed and not bad.nondecreasing
    with pytest.raises(ValueError):
        beta_monotone_check(1)


def test_phi_halves_constant(box):
    fields, beta = named_fields(box, "halves")
    s = phi_disjoint(box, fields, (0, 0), RADII, beta)
    assert check_monotone(s, 1e-9).classification == "constant"
    assert s.values[0] == pytest.approx((np.pi / 2) ** 2, rel=1e-9)


def test_phi_acf_equals_disjoint_in_plane(box):
    (w1, w2), _ = named_fields(box, "halves")
    a = phi_acf(box, w1, w2, (0, 0), RADII)
    b = phi_disjoint(box, [w1, w2], (0, 0), RADII, 2.0)
    assert np.allclose(a.values, b.values, rtol=1e-14)


def test_phi_generic_increasing(box):
    fields, beta = named_fields(box, "generic")
    rep = check_monotone(phi_disjoint(box, fields, (0, 0), RADII, beta), 1e-6, from_index=0)
    assert rep.classification == "increasing" and rep.worst_ratio > 1


def test_phi_errors(box):
    fields, _ = named_fields(box, "halves")
    with pytest.raises(ValueError):
        phi_disjoint(box, [fields[0], fields[0]], (0, 0), RADII, 2.0)
    with pytest.raises(ValueError):
        phi_disjoint(box, fields, (0, 0), [0.1, 0.6], 2.0)
    with pytest.raises(ValueError):
        phi_disjoint(box, fields, (0.9, 0), RADII, 2.0)
    with pytest.raises(ValueError):
        PhiSeries([0.2, 0.1], [1.0, 1.0], "disjoint-k")
    with pytest.raises(ValueError):
        check_monotone(PhiSeries([0.1, 0.2], [1.0, 1.0], "disjoint-k"), 1e-6)


def test_check_monotone_detects_drop():
    s = PhiSeries(np.arange(1, 7) * 0.1, [1.0, 1.1, 1.2, 1.3, 1.0, 1.4], "disjoint-k")
    rep = check_monotone(s, 1e-6, from_index=0)
    assert rep.classification == "non-monotone" and not rep.passed
    assert rep.worst_ratio == pytest.approx(1.0 / 1.3)
    assert np.allclose(s.slopes()[:2], [1.0, 1.0])


def test_competition_zero_coupling_is_harmonic(box):
    g = boundary_profile(box, "y+")
    st = solve_competition(box, 0.0, [g, boundary_profile(box, "y-")])
    assert st.residual <= 1e-10 and st.sweeps <= 2
    u = st.fields[0]
    lap = u[2:, 1:-1] + u[:-2, 1:-1] + u[1:-1, 2:] + u[1:-1, :-2] - 4 * u[1:-1, 1:-1]
    assert np.abs(lap).max() <= 1e-12
    assert st.nonnegative and st.max_principle


def test_competition_converges_and_separates(compete):
    ov = []
    for a, st in compete.items():
        assert st.residual <= 1e-8 and st.nonnegative and st.max_principle
        ov.append(np.sum(st.fields[0] * st.fields[1]))
    assert ov[1] < ov[0]


def test_competition_zero_boundary(box):
    st = solve_competition(box, 5.0, [boundary_profile(box, "zero"), boundary_profile(box, "one")])
    assert not np.any(st.fields[0])
    assert np.allclose(st.fields[1][box.domain], 1.0)


def test_competition_input_errors(box):
    g = boundary_profile(box, "y+")
    with pytest.raises(ValueError):
        solve_competition(box, -1.0, [g, g])
    with pytest.raises(ValueError):
        solve_competition(box, 1.0, [-g - 1.0, g])
    with pytest.raises(ValueError):
        coupling_matrix(np.ones((3, 3)), 2)
    with pytest.raises(ValueError):
        solve_competition(build_grid("interval", 1.0, 11), 1.0, [np.ones(11), np.ones(11)])


def test_phi_competition(compete, box):
    st = compete[10.0]
    rep = check_monotone(phi_competition(st, 2, 1.9, (0, 0), RADII), 1e-6)
    assert rep.passed
    with pytest.raises(ValueError):
        phi_competition(st, 2, 2.0, (0, 0), RADII)
    with pytest.raises(ValueError):
        phi_competition(st, 3, 1.0, (0, 0), RADII)


def test_phi_competition_decoupled_matches_disjoint(box):
    fields, _ = named_fields(box, "halves")
    st = CompetitionState(box, fields, coupling_matrix(0.0, 2))
    a = phi_competition(st, 2, 1.5, (0, 0), RADII)
    b = phi_disjoint(box, fields, (0, 0), RADII, 1.5)
    assert np.allclose(a.values, b.values, rtol=1e-10)
    # r^(4 - 2 h') growth: slope one in log-log for h' = 1.5
    slope = np.polyfit(np.log(a.effective_radii), np.log(a.values), 1)[0]
    assert slope == pytest.approx(1.0, abs=1e-9)


def test_growth_diagnostic(box, compete):
    fields, _ = named_fields(box, "halves")
    st = CompetitionState(box, fields, coupling_matrix(0.0, 2))
    rep = growth_diagnostic(st, (0, 0), RADII, hprime=1.9)
    assert rep.status == "fitted" and rep.exponent == pytest.approx(4.0, abs=1e-9)
    assert rep.reference == pytest.approx(3.8) and rep.advisory
    zero = CompetitionState(box, [np.zeros(box.shape)] * 2, coupling_matrix(0.0, 2))
    assert growth_diagnostic(zero, (0, 0), RADII).status == "degenerate"
    assert growth_diagnostic(compete[1.0], (0, 0), RADII).exponent > 3.0


def test_three_arc_competition(box):
    bnd = [boundary_profile(box, f"arc:{i}:3") for i in range(3)]
    st = solve_competition(box, 10.0, bnd)
    assert st.residual <= 1e-8 and st.k == 3
    rep = growth_diagnostic(st, (0, 0), RADII)
    assert np.isfinite(rep.exponent)
    with pytest.raises(ValueError):
        boundary_profile(box, "nope")
