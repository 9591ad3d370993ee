import numpy as np
import pytest
from numpy.testing import assert_allclose

from simcurv import systems as ss
from simcurv import criteria as cr
from simcurv.grids import GridSpec


def test_f1_at_family_zero(ds):
    # a''(2) = -2/9 + 4/27 = -2/27, squared is 4/729
    spec = cr.CriterionSpec("F1", 2.0, ds)
    assert_allclose(cr.eval_criterion(spec, 0.0), 4.0 / 729.0, rtol=1e-14)


def test_f3_zero_weights_vanishes(ds, rng):
    spec = cr.CriterionSpec("F3", 2.0, ds, k1=0.0, k2=0.0)
    for c in rng.uniform(-1, 1, size=5):
        assert cr.eval_criterion(spec, c) == 0.0


def test_f2_equals_hand_substitution(ds):
    # J(u, a(u)) applied to (f, g) at u=2, c=0
    spec = cr.CriterionSpec("F2", 2.0, ds)
    state = np.array([2.0, 2.0 / 3.0])
    v = ss.rhs_jacobian(ds, state) @ ss.rhs(ds, state)
    assert_allclose(cr.eval_criterion(spec, 0.0), v @ v, rtol=1e-14)


def test_minimizers_published_values(ds):
    r1 = cr.minimize_criterion(cr.CriterionSpec("F1", 2.0, ds))
    assert 0.0028 <= r1.c_min <= 0.0032  # reported as ~0.003
    r2 = cr.minimize_criterion(cr.CriterionSpec("F2", 2.0, ds))
    assert 0.00051 <= r2.c_min <= 0.00056  # reported as ~0.00053
    gamma = ds.params["gamma"]
    r3 = cr.minimize_criterion(cr.CriterionSpec("F3", 2.0, ds, k1=1.0, k2=gamma / 3.0))
    assert abs(r3.c_min) <= 1e-10
    for r in (r1, r2, r3):
        assert abs(r.c_min - r.c_min_numeric) <= 1e-8
        assert r.second_derivative > 0


@pytest.mark.parametrize("u", [0.5, 1.0, 2.0])
def test_second_derivatives_match_printed_forms(ds, u):
    g = ds.params["gamma"]
    f1 = cr.second_derivative_closed(cr.CriterionSpec("F1", u, ds))
    assert_allclose(f1, 2 * (g * (g - 1) * u ** (g - 2)) ** 2, rtol=1e-10)
    f2 = cr.second_derivative_closed(cr.CriterionSpec("F2", u, ds))
    assert_allclose(f2, 2 * (u ** g * g ** 2) ** 2, rtol=1e-10)
    k2 = g / (u + 1.0)
    f3 = cr.second_derivative_closed(cr.CriterionSpec("F3", u, ds, k1=1.0, k2=k2))
    assert_allclose(f3, 2 * g * (u ** g) ** 2 * (g * u + g - 1) / (u + 1), rtol=1e-10)


def test_second_derivative_matches_difference_quotient(ds, rng):
    for kind in cr.CRITERIA:
        u = float(rng.uniform(0.5, 2.5))
        spec = cr.CriterionSpec(kind, u, ds, k1=1.0, k2=0.3)
        h = 1e-3
        fd = (
            cr.eval_criterion(spec, h) - 2 * cr.eval_criterion(spec, 0.0)
            + cr.eval_criterion(spec, -h)
        ) / h ** 2
        assert_allclose(fd, cr.second_derivative_closed(spec), rtol=1e-6)


def test_criteria_are_quadratic_in_c(ds):
    # coefficients from three evaluations reproduce any other evaluation
    for kind in cr.CRITERIA:
        spec = cr.CriterionSpec(kind, 1.3, ds, k1=1.0, k2=0.7)
        f = lambda c: cr.eval_criterion(spec, c)
        a2 = (f(1.0) + f(-1.0) - 2 * f(0.0)) / 2
        a1 = (f(1.0) - f(-1.0)) / 2
        a0 = f(0.0)
        probe = 0.37
        assert_allclose(a2 * probe ** 2 + a1 * probe + a0, f(probe), rtol=1e-12)


def test_f3_root_formula_against_numeric_root(rng):
    # the closed root must match the root recovered from evaluations alone
    for _ in range(20):
        gamma = float(rng.uniform(2.5, 5.0))
        system = ss.make_system("davis_skodje", {"gamma": gamma})
        u = float(rng.uniform(0.3, 2.5))
        k1 = float(rng.uniform(0.2, 2.0))
        k2 = float(rng.uniform(-1.0, 1.0))
        if abs(k1 * gamma ** 2 - k2) < 1e-3:
            continue  # nearly degenerate quadratic
        spec = cr.CriterionSpec("F3", u, system, k1=k1, k2=k2)
        f = lambda c: cr.eval_criterion(spec, c)
        a2 = (f(1.0) + f(-1.0) - 2 * f(0.0)) / 2
        a1 = (f(1.0) - f(-1.0)) / 2
        root_numeric = -a1 / (2 * a2)
        root_closed = cr.closed_form_minimizer(spec)
        assert_allclose(root_closed, root_numeric, rtol=1e-10, atol=1e-12)


def test_sweep_rows(ds):
    rows = cr.criteria_sweep(ds, 2.0, [-0.01, 0.0, 0.01], 1.0, ds.params["gamma"] / 3.0)
    assert len(rows) == 3
    assert rows[1][0] == 0.0
    assert rows[1][1] == pytest.approx(4.0 / 729.0)


def test_sufficient_characterization(ds):
    grid = GridSpec((0, 2), 5, ((0.2, 2),), (5,))
    rep = cr.sufficient_characterization_check(
        ds, grid, u_samples=(0.5, 1.0, 2.0, 3.0), c_nonzero=(0.05, -0.5)
    )
    assert rep.passed
    assert rep.max_abs_K_c0 <= 1e-7
    assert rep.max_abs_K_family <= 1e-7  # flat but not slow
    assert all(abs(v) <= 1e-10 for v in rep.f3_minimizer_at_c0.values())


def test_sufficient_check_excludes_u_zero(ds):
    grid = GridSpec((0, 1), 2, ((0.2, 1),), (2,))
    rep = cr.sufficient_characterization_check(ds, grid, u_samples=(0.0, 1.0))
    assert 0.0 not in rep.f3_minimizer_at_c0
    assert rep.passed


def test_spec_validation(ds, kuehn):
    with pytest.raises(ValueError, match="criterion"):
        cr.CriterionSpec("F4", 1.0, ds)
    with pytest.raises(ValueError, match="davis_skodje"):
        cr.CriterionSpec("F1", 1.0, kuehn)
    with pytest.raises(ValueError, match="finite"):
        cr.CriterionSpec("F3", 1.0, ds, k1=np.inf)
    with pytest.raises(ValueError, match="degenerate"):
        cr.minimize_criterion(cr.CriterionSpec("F1", 0.0, ds))
