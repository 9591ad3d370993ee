import numpy as np
import pytest
from numpy.testing import assert_allclose

from simcurv import systems as ss
from simcurv import geometry as geo
from simcurv import graphp as gp
from simcurv.bvp import BvpConfig
from simcurv.errors import GeometryError, NodeEvaluationError
from simcurv.grids import GridSpec
from simcurv.ode import IntegratorConfig
from simcurv.systems import _U


def _synthetic_eval(d1, d2, point=None):
    d1 = np.asarray(d1, dtype=float)
    m, d = d1.shape
    return gp.GraphEval(
        point=np.zeros(d) if point is None else np.asarray(point, dtype=float),
        p=np.zeros(m),
        d1=d1,
        d2=np.asarray(d2, dtype=float),
        d3=None,
        source=gp.GraphSource.CLOSED_FORM,
    )


def test_metric_of_flat_graph_is_identity():
    ge = _synthetic_eval(np.zeros((1, 2)), np.zeros((1, 2, 2)))
    met = geo.metric_tensor(gp.immersion_jacobian(ge))
    assert_allclose(met.g, np.eye(2), atol=0)
    assert_allclose(met.g_inv, np.eye(2), atol=0)
    assert met.det == 1.0


def test_metric_11_block_form(rng):
    # (1,1): g = [[1+pt^2, pt px], [pt px, 1+px^2]]
    pt, px = rng.uniform(-1, 1, size=2)
    ge = _synthetic_eval([[pt, px]], np.zeros((1, 2, 2)))
    met = geo.metric_tensor(gp.immersion_jacobian(ge))
    expected = np.array([[1 + pt ** 2, pt * px], [pt * px, 1 + px ** 2]])
    assert_allclose(met.g, expected, rtol=1e-15)


def test_metric_on_slow_graph_point(ds):
    # a = h_eps at (1, 1): p_t = 0, p_x = 1/4 -> g = diag(1, 17/16)
    ge = gp.eval_graph(ds, ss.sim_graph(ds), 1.0, 1.0, order=2, mode="closed")
    met = geo.metric_tensor(gp.immersion_jacobian(ge))
    assert_allclose(met.g, [[1.0, 0.0], [0.0, 1.0 + 1.0 / 16.0]], atol=1e-12)


def test_metric_properties_at_random_points(m32, rng):
    a = ss.critical_graph(m32)
    for _ in range(5):
        t = rng.uniform(0, 2)
        x = rng.uniform(0.2, 1.0, size=3)
        ge = gp.eval_graph(m32, a, t, x, order=2, mode="closed")
        met = geo.metric_tensor(gp.immersion_jacobian(ge))
        assert_allclose(met.g, met.g.T, atol=0)
        assert_allclose(met.g @ met.g_inv, np.eye(4), atol=1e-10)
        assert np.all(np.diag(met.g) >= 1.0)  # diagonal is 1 + sum of squares
        # leading principal minors positive (positive definiteness)
        for r in range(1, 5):
            assert np.linalg.det(met.g[:r, :r]) > 0


def test_metric_degeneracy_detected():
    J = np.array([[1.0, 1.0], [1.0, 1.0], [0.0, 0.0]])
    with pytest.raises(GeometryError, match="positive definiteness"):
        geo.metric_tensor(J)


def test_christoffel_vanishes_for_constant_metric():
    ge = _synthetic_eval([[0.3, -0.2]], np.zeros((1, 2, 2)))
    gamma = geo.christoffel_symbols(ge)
    assert_allclose(gamma, 0.0, atol=0)


def test_christoffel_time_block_on_invariant_graph(ds21, rng):
    # p_t = 0 makes g block diagonal and time-independent, so the
    # time-labelled symbols vanish: Gamma^1_ij = -1/2 d_t g_ij = 0
    heps = ss.sim_graph(ds21)
    for _ in range(3):
        t = rng.uniform(0, 2)
        x = rng.uniform(0.2, 1.2, size=2)
        ge = gp.eval_graph(ds21, heps, t, x, order=3, mode="closed")
        met = geo.metric_tensor(gp.immersion_jacobian(ge))
        assert np.max(np.abs(met.g[0, 1:])) <= 1e-7
        dg = geo._metric_derivatives(ge)
        assert np.max(np.abs(dg[0])) <= 1e-6  # d/dt g = 0
        gamma = geo.christoffel_symbols(ge, met)
        assert np.max(np.abs(gamma[0])) <= 1e-7
        assert_allclose(gamma, np.swapaxes(gamma, 1, 2), atol=1e-12)


def test_riemann_slice_zero_on_flat_and_invariant(ds):
    ge = _synthetic_eval([[0.1, 0.4]], np.zeros((1, 2, 2)))
    gamma = geo.christoffel_symbols(ge)
    assert_allclose(gamma, 0.0, atol=0)
    rep = geo.curvature_at(ds, ss.sim_graph(ds), 0.7, 0.9, route="christoffel", mode="closed")
    assert np.max(np.abs(rep.riemann_slice)) <= 1e-10
    assert np.max(np.abs(rep.K)) <= 1e-10


@pytest.mark.parametrize("route", ["gauss_equation", "christoffel", "closed_11"])
def test_kuehn_critical_graph_point_value(kuehn, route):
    rep = geo.curvature_at(kuehn, ss.critical_graph(kuehn), 0.0, 0.5, route=route, mode="closed")
    assert rep.K.shape == (1,)
    assert abs(rep.K[0] - (-0.00255)) <= 0.02 * 0.00255
    assert rep.route == route


def test_gaussian_curvature_of_plane_is_zero():
    ge = _synthetic_eval([[0.7, -1.2]], np.zeros((1, 2, 2)))
    assert geo.gaussian_curvature_11(ge) == 0.0


def test_gauss_equation_reduces_to_closed_11(rng):
    # algebraic identity in (1,1): both routes from the same derivatives
    for _ in range(20):
        d1 = rng.normal(size=(1, 2))
        d2s = rng.normal(size=(2, 2))
        d2 = (d2s + d2s.T)[None, :, :] / 2
        ge = _synthetic_eval(d1, d2)
        k_gauss = geo.gauss_equation_curvatures(ge)
        k_11 = geo.gaussian_curvature_11(ge)
        assert_allclose(k_gauss, [k_11], rtol=1e-12, atol=1e-14)


def test_route_agreement_on_noninvariant_lift(ds):
    # same K from the Riemann machinery and the closed Gaussian formula
    a = ss.initial_value_from_exprs(ds, 1 - _U[0] / 2, label="1-u/2")
    rep_c = geo.curvature_at(ds, a, 0.5, 1.0, route="christoffel", mode="closed")
    rep_g = geo.curvature_at(ds, a, 0.5, 1.0, route="gauss_equation", mode="closed")
    rep_1 = geo.curvature_at(ds, a, 0.5, 1.0, route="closed_11", mode="closed")
    assert abs(rep_c.K[0] - rep_1.K[0]) <= 1e-6
    assert abs(rep_g.K[0] - rep_1.K[0]) <= 1e-6
    assert rep_c.christoffel is not None and rep_c.riemann_slice is not None


def test_ds21_slow_graph_curvatures_vanish(ds21, rng):
    heps = ss.sim_graph(ds21)
    for _ in range(5):
        rep = geo.curvature_at(
            ds21, heps, rng.uniform(0, 2), rng.uniform(0.2, 1.2, size=2),
            route="gauss_equation", mode="closed",
        )
        assert np.max(np.abs(rep.K)) <= 1e-10


def test_m32_critical_graph_triple_regression(m32):
    # verified values of the printed model at (0, 0.3, 1, 0.5): confirmed
    # against an independent 40-digit finite-difference computation and the
    # christoffel route
    rep = geo.curvature_at(m32, ss.critical_graph(m32), 0.0, [0.3, 1.0, 0.5],
                           route="gauss_equation", mode="closed")
    expected = [-0.04849965643873862, -0.029317140282697110, -0.00024509990547966177]
    assert_allclose(rep.K, expected, rtol=1e-9)
    rep_c = geo.curvature_at(m32, ss.critical_graph(m32), 0.0, [0.3, 1.0, 0.5],
                             route="christoffel", mode="closed")
    assert_allclose(rep_c.K, expected, rtol=1e-9)


def test_curvature_integral_invariant_family_is_zero(ds):
    grid = GridSpec((0, 2), 6, ((0, 2),), (6,))
    val = geo.curvature_integral(ds, ss.invariant_family(ds, 0.0), grid, mode="closed")
    assert val <= 1e-8


def test_curvature_integral_single_node(kuehn):
    grid = GridSpec((0, 0), 1, ((0.5, 0.5),), (1,))
    val = geo.curvature_integral(kuehn, ss.critical_graph(kuehn), grid, mode="closed")
    rep = geo.curvature_at(kuehn, ss.critical_graph(kuehn), 0.0, 0.5, mode="closed")
    assert_allclose(val, abs(rep.K[0]), rtol=1e-14)


def test_curvature_integral_decreases_with_expansion_order(enzyme_int, kernel_warm):
    grid = GridSpec((0, 2), 4, ((0.2, 3),), (6,))
    vals = [
        geo.curvature_integral(
            enzyme_int, ss.asymptotic_initial_value(enzyme_int, k), grid, mode="bvp", jobs=2
        )
        for k in range(3)
    ]
    assert vals[0] > vals[1] > vals[2]


def test_field_matches_pointwise_and_csv_roundtrip(kuehn, tmp_path):
    grid = GridSpec((0, 1), 3, ((0.4, 0.8),), (3,))
    field = geo.curvature_field(kuehn, ss.critical_graph(kuehn), grid, mode="closed")
    assert field.points.shape == (9, 2)
    idx = 4  # center node
    rep = geo.curvature_at(
        kuehn, ss.critical_graph(kuehn), field.points[idx, 0], field.points[idx, 1:],
        mode="closed",
    )
    assert_allclose(field.K[idx], rep.K, rtol=1e-13)
    path = tmp_path / "field.csv"
    field.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t,x_1,p_1,K_2,route"
    assert len(lines) == 10
    cells = lines[1 + idx].split(",")
    assert float(cells[0]) == field.points[idx, 0]
    assert float(cells[1]) == field.points[idx, 1]
    assert float(cells[3]) == field.K[idx, 0]  # shortest round-trip repr
    assert cells[4] == "gauss_equation"


def test_field_is_parallelism_invariant(ds):
    grid = GridSpec((0, 2), 4, ((0.2, 1.8),), (4,))
    a = ss.initial_value_from_exprs(ds, 1 - _U[0] / 2, label="1-u/2")
    f1 = geo.curvature_field(ds, a, grid, mode="closed", jobs=1)
    f4 = geo.curvature_field(ds, a, grid, mode="closed", jobs=4)
    assert np.array_equal(f1.K, f4.K)
    assert np.array_equal(f1.p, f4.p)


def test_node_failure_reports_coordinates(enzyme):
    a = ss.constant_initial_value(enzyme, 0.5)
    grid = GridSpec((0, 2), 3, ((0.5, 1.5),), (3,))
    crippled = BvpConfig(integrator=IntegratorConfig(max_steps=3))
    with pytest.raises(NodeEvaluationError) as err:
        geo.curvature_field(enzyme, a, grid, mode="bvp", bvp_config=crippled, jobs=1)
    assert err.value.point is not None


def test_enzyme_constant_lift_field_regression(enzyme, kernel_warm):
    # frozen after the first verified run (finite field, route agreement)
    grid = GridSpec((0, 2), 5, ((0, 3),), (7,))
    field = geo.curvature_field(enzyme, ss.constant_initial_value(enzyme, 0.5), grid,
                                mode="bvp", jobs=2)
    assert np.all(np.isfinite(field.K))
    assert_allclose(field.max_abs_K, 0.25000074790742594, rtol=1e-5)
    idx = 17  # node (t, x) = (1.0, 1.5)
    assert_allclose(field.points[idx], [1.0, 1.5], atol=0)
    assert_allclose(field.p[idx, 0], 0.50011113510255, atol=1e-9)
    assert_allclose(field.K[idx, 0], -0.0005739750676818738, atol=1e-7)


def test_unknown_route_rejected(ds):
    with pytest.raises(ValueError, match="route"):
        geo.curvature_at(ds, ss.sim_graph(ds), 0.5, 1.0, route="frenet")


def test_necessary_condition_bvp_route_all_models(
    ds, kuehn, enzyme, ds21, m32, kernel_warm
):
    # the shooting-backed stencils carry a ~1e-4 noise floor; invariant
    # lifts must stay below it on every model
    g11 = GridSpec((0.1, 1.9), 3, ((0.3, 1.7),), (3,))
    cases = [
        (ds, ss.sim_graph(ds), g11),
        (kuehn, ss.sim_graph(kuehn), g11),
        (enzyme, ss.asymptotic_initial_value(enzyme, 5), g11),
        (ds21, ss.sim_graph(ds21), GridSpec((0.1, 1.9), 3, ((0.3, 1.2),) * 2, (3, 3))),
        (m32, ss.sim_graph(m32), GridSpec((0.1, 1.9), 3, ((0.3, 0.9),) * 3, (3,) * 3)),
    ]
    for system, a, grid in cases:
        field = geo.curvature_field(system, a, grid, mode="bvp", jobs=4)
        assert field.max_abs_K <= 1e-4, system.name


def test_asymmetric_second_derivatives_rejected():
    d2 = np.zeros((1, 2, 2))
    d2[0, 0, 1] = 1.0  # deliberately non-symmetric
    with pytest.raises(NodeEvaluationError, match="asymmetry"):
        gp.GraphEval(
            point=np.zeros(2),
            p=np.zeros(1),
            d1=np.zeros((1, 2)),
            d2=d2,
            d3=None,
            source=gp.GraphSource.FINITE_DIFFERENCE,
        )
