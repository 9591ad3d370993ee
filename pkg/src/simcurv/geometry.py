"""Differential geometry of the graph immersion: metric, curvatures, integral.

The immersion psi(t, x) = (t, x, p(t, x; a)) pulls the Euclidean metric of
the ambient space back to g = J^T J on the (k+1)-dimensional graph.  The
quantities of interest are the sectional curvatures K(sigma_i) of the
planes spanned by the time tangent and each slow tangent: they all vanish
when the lift is the slow invariant manifold graph, which is the
computable necessary condition this package tests.

Three routes compute the same K(sigma_i):

* ``gauss_equation`` (default) - second fundamental form of the immersion;
  needs only second derivatives of p, so it works on BVP-backed data.
* ``christoffel`` - Christoffel symbols and the (1,i,i) Riemann slice from
  exact first-to-third derivatives; closed-form models only.  The index
  convention is pinned so that the (1,1) case reduces to the closed
  Gaussian-curvature formula below (verified by tests).
* ``closed_11`` - for (1,1) systems,
  K = (p_tt p_xx - p_tx^2) / (1 + p_t^2 + p_x^2)^2.
"""

from __future__ import annotations

import concurrent.futures
import os
from dataclasses import dataclass

import numpy as np

from .bvp import BvpConfig
from .errors import GeometryError, NodeEvaluationError
from .graphp import GraphEval, eval_graph, immersion_jacobian, invariant_graph_eval
from .grids import GridSpec
from .systems import InitialValueFunction, SlowFastSystem

__all__ = [
    "ROUTES",
    "MetricTensor",
    "CurvatureReport",
    "metric_tensor",
    "gaussian_curvature_11",
    "gauss_equation_curvatures",
    "christoffel_symbols",
    "christoffel_derivatives",
    "riemann_time_slice",
    "time_sectional_curvatures",
    "curvature_at",
    "CurvatureField",
    "curvature_field",
    "curvature_integral",
]

ROUTES = ("gauss_equation", "christoffel", "closed_11")


@dataclass(frozen=True)
class MetricTensor:
    """Induced metric g = J^T J with inverse and determinant."""

    g: np.ndarray
    g_inv: np.ndarray
    det: float


def metric_tensor(J: np.ndarray) -> MetricTensor:
    """Gramian of the immersion columns; positive definite for rank-(k+1) J."""
    g = J.T @ J
    try:
        L = np.linalg.cholesky(g)
        if not np.all(np.diag(L) > 0):
            raise np.linalg.LinAlgError("zero pivot")
        g_inv = np.linalg.inv(g)
    except np.linalg.LinAlgError as exc:
        raise GeometryError(
            "induced metric lost positive definiteness (upstream derivative blowup?)"
        ) from exc
    det = float(np.prod(np.diag(L)) ** 2)
    return MetricTensor(g=g, g_inv=g_inv, det=det)


def _metric_from_graph(ge: GraphEval) -> MetricTensor:
    return metric_tensor(immersion_jacobian(ge))


def gaussian_curvature_11(ge: GraphEval) -> float:
    """Closed Gaussian curvature of a (1,1)-system graph.

    Canonical route for one slow and one fast variable; doubles as the
    anchor fixing the Riemann index convention of the other routes.
    """
    if ge.k != 1 or ge.m != 1:
        raise ValueError("gaussian_curvature_11 needs a (1,1) system")
    if ge.d2 is None:
        raise ValueError("second derivatives required")
    pt, px = ge.d1[0]
    ptt = ge.d2[0, 0, 0]
    ptx = ge.d2[0, 0, 1]
    pxx = ge.d2[0, 1, 1]
    return float((ptt * pxx - ptx ** 2) / (1.0 + pt ** 2 + px ** 2) ** 2)


def gauss_equation_curvatures(ge: GraphEval, metric: MetricTensor | None = None) -> np.ndarray:
    """Time-sectional curvatures from the second fundamental form.

    For a submanifold of Euclidean space the Gauss equation gives the
    sectional curvature of span(e_1, e_i) as
    (<II_11, II_ii> - |II_1i|^2) / (g_11 g_ii - g_1i^2), with II the normal
    projection of the ambient second derivatives of the immersion.
    """
    if ge.d2 is None:
        raise ValueError("second derivatives required")
    d = ge.k + 1
    J = immersion_jacobian(ge)
    metric = metric or metric_tensor(J)
    g, g_inv = metric.g, metric.g_inv
    # ambient second derivatives (0 on the base coordinates, p_ij on fibers)
    # normal projection: v - J g^{-1} J^T v, and J^T v = d1^T-contracted p_ij
    def normal(v_fast):
        w = ge.d1.T @ v_fast  # J^T v with zero base block
        out = -(J @ (g_inv @ w))
        out[d:] += v_fast
        return out

    K = np.empty(ge.k)
    II_11 = normal(ge.d2[:, 0, 0])
    for i in range(1, d):
        II_ii = normal(ge.d2[:, i, i])
        II_1i = normal(ge.d2[:, 0, i])
        denom = g[0, 0] * g[i, i] - g[0, i] ** 2
        if denom <= 0:
            raise GeometryError(f"degenerate tangent plane (denominator {denom:g})")
        K[i - 1] = (II_11 @ II_ii - II_1i @ II_1i) / denom
    return K


def _metric_derivatives(ge: GraphEval) -> np.ndarray:
    """dg[a, i, j] = d/dz_a g_ij from first and second derivatives of p."""
    return np.einsum("lia,lj->aij", ge.d2, ge.d1) + np.einsum("li,lja->aij", ge.d1, ge.d2)


def christoffel_symbols(ge: GraphEval, metric: MetricTensor | None = None) -> np.ndarray:
    """Christoffel symbols Gamma[m, i, j] of the induced metric (exact).

    Gamma^m_ij = 1/2 g^{mq} (d_i g_jq + d_j g_iq - d_q g_ij), with the
    metric derivatives obtained by differentiating g = I + d1^T d1 through
    the chain rule; symmetric in (i, j).
    """
    if ge.d2 is None:
        raise ValueError("second derivatives required")
    metric = metric or _metric_from_graph(ge)
    dg = _metric_derivatives(ge)
    # T[i,j,q] = d_i g_jq + d_j g_iq - d_q g_ij
    d = ge.k + 1
    T = np.empty((d, d, d))
    for i in range(d):
        for j in range(d):
            for q in range(d):
                T[i, j, q] = dg[i, j, q] + dg[j, i, q] - dg[q, i, j]
    return 0.5 * np.einsum("mq,ijq->mij", metric.g_inv, T)


def christoffel_derivatives(ge: GraphEval, metric: MetricTensor | None = None) -> np.ndarray:
    """dGamma[b, m, i, j] = d/dz_b Gamma^m_ij; needs third derivatives of p."""
    if ge.d3 is None:
        raise ValueError("third derivatives required for the Christoffel route")
    metric = metric or _metric_from_graph(ge)
    g_inv = metric.g_inv
    d1, d2, d3 = ge.d1, ge.d2, ge.d3
    dg = _metric_derivatives(ge)
    # ddg[b, a, i, j] = d_b d_a g_ij
    ddg = (
        np.einsum("liab,lj->baij", d3, d1)
        + np.einsum("lia,ljb->baij", d2, d2)
        + np.einsum("lib,lja->baij", d2, d2)
        + np.einsum("li,ljab->baij", d1, d3)
    )
    dginv = -np.einsum("mq,bqr,rs->bms", g_inv, dg, g_inv)
    d = ge.k + 1
    T = np.empty((d, d, d))
    dT = np.empty((d, d, d, d))
    for i in range(d):
        for j in range(d):
            for q in range(d):
                T[i, j, q] = dg[i, j, q] + dg[j, i, q] - dg[q, i, j]
                for b in range(d):
                    dT[b, i, j, q] = ddg[b, i, j, q] + ddg[b, j, i, q] - ddg[b, q, i, j]
    return 0.5 * (
        np.einsum("bmq,ijq->bmij", dginv, T) + np.einsum("mq,bijq->bmij", g_inv, dT)
    )


def riemann_time_slice(gamma: np.ndarray, dgamma: np.ndarray) -> np.ndarray:
    """Riemann components R^m_{1ii} for the time-direction planes.

    R^m_{1ii} = d_1 Gamma^m_ii - d_i Gamma^m_1i
                + Gamma^q_ii Gamma^m_1q - Gamma^q_1i Gamma^m_iq,
    returned as R[m, i-1] for slow indices i = 1..k (time is index 0).
    """
    d = gamma.shape[0]
    R = np.empty((d, d - 1))
    for i in range(1, d):
        for m in range(d):
            R[m, i - 1] = (
                dgamma[0, m, i, i]
                - dgamma[i, m, 0, i]
                + gamma[:, i, i] @ gamma[m, 0, :]
                - gamma[:, 0, i] @ gamma[m, i, :]
            )
    return R


def time_sectional_curvatures(R: np.ndarray, g: np.ndarray) -> np.ndarray:
    """K(sigma_i) = R^m_{1ii} g_m1 / (g_11 g_ii - g_1i^2), summed over m."""
    d = g.shape[0]
    K = np.empty(d - 1)
    for i in range(1, d):
        denom = g[0, 0] * g[i, i] - g[0, i] ** 2
        if denom <= 0:
            raise GeometryError(f"degenerate tangent plane (denominator {denom:g})")
        K[i - 1] = (R[:, i - 1] @ g[:, 0]) / denom
    return K


@dataclass(frozen=True)
class CurvatureReport:
    """Metric, optional connection data, and time-sectional curvatures at a point."""

    point: np.ndarray  # (k+1,)
    metric: MetricTensor
    K: np.ndarray  # (k,)
    route: str
    p: np.ndarray  # graph value at the point
    christoffel: np.ndarray | None = None
    riemann_slice: np.ndarray | None = None


def curvature_from_graph(ge: GraphEval, route: str = "gauss_equation") -> CurvatureReport:
    """Curvature report from an already-evaluated GraphEval."""
    metric = _metric_from_graph(ge)
    if route == "gauss_equation":
        K = gauss_equation_curvatures(ge, metric)
        return CurvatureReport(ge.point, metric, K, route, ge.p)
    if route == "christoffel":
        gamma = christoffel_symbols(ge, metric)
        dgamma = christoffel_derivatives(ge, metric)
        R = riemann_time_slice(gamma, dgamma)
        K = time_sectional_curvatures(R, metric.g)
        return CurvatureReport(ge.point, metric, K, route, ge.p, gamma, R)
    if route == "closed_11":
        K = np.array([gaussian_curvature_11(ge)])
        return CurvatureReport(ge.point, metric, K, route, ge.p)
    raise ValueError(f"unknown route {route!r}; choose from {ROUTES}")


def curvature_at(
    system: SlowFastSystem,
    a: InitialValueFunction,
    t,
    x,
    route: str = "gauss_equation",
    mode: str = "auto",
    bvp_config: BvpConfig | None = None,
) -> CurvatureReport:
    """Time-sectional curvatures of the graph of p(., .; a) at one point."""
    order = 3 if route == "christoffel" else 2
    ge = eval_graph(system, a, t, x, order=order, mode=mode, bvp_config=bvp_config)
    return curvature_from_graph(ge, route)


# ---------------------------------------------------------------------------
# grid sweeps


@dataclass(frozen=True)
class CurvatureField:
    """Pointwise curvature results over a grid, in node order."""

    system_name: str
    a_label: str
    route: str
    points: np.ndarray  # (N, k+1)
    p: np.ndarray  # (N, m)
    K: np.ndarray  # (N, k)

    @property
    def max_abs_K(self) -> float:
        return float(np.max(np.abs(self.K)))

    @property
    def mean_abs_K2(self) -> float:
        return float(np.mean(np.abs(self.K[:, 0])))

    def to_csv(self, path):
        """Write one row per node: t, x_1..x_k, p_1..p_m, K_2..K_{k+1}, route.

        Floats use the shortest round-trip decimal representation.
        """
        k = self.points.shape[1] - 1
        m = self.p.shape[1]
        cols = (
            ["t"]
            + [f"x_{j + 1}" for j in range(k)]
            + [f"p_{j + 1}" for j in range(m)]
            + [f"K_{j + 2}" for j in range(k)]
            + ["route"]
        )
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(cols) + "\n")
            for row in range(self.points.shape[0]):
                vals = [repr(float(v)) for v in self.points[row]]
                vals += [repr(float(v)) for v in self.p[row]]
                vals += [repr(float(v)) for v in self.K[row]]
                vals.append(self.route)
                fh.write(",".join(vals) + "\n")


def resolve_jobs(jobs: int | None) -> int:
    if jobs is not None and jobs >= 1:
        return int(jobs)
    env = os.environ.get("SIMCURV_JOBS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def curvature_field(
    system: SlowFastSystem,
    a: InitialValueFunction,
    grid: GridSpec,
    route: str = "gauss_equation",
    mode: str = "auto",
    jobs: int | None = None,
    bvp_config: BvpConfig | None = None,
    invariant_shortcut: bool = False,
) -> CurvatureField:
    """Evaluate curvatures at every grid node (parallel over nodes).

    Any node failure aborts the sweep with the offending coordinates; no
    nodes are skipped silently.  ``invariant_shortcut`` evaluates the graph
    through the invariance identity p = a(x) (flow-invariant lifts only).
    """
    if grid.k != system.k:
        raise ValueError(f"grid has {grid.k} slow axes, model needs {system.k}")
    nodes = grid.nodes()
    order = 3 if route == "christoffel" else 2

    def one(idx):
        z = nodes[idx]
        try:
            if invariant_shortcut:
                ge = invariant_graph_eval(system, a, z[0], z[1:], order=order)
            else:
                ge = eval_graph(system, a, z[0], z[1:], order=order, mode=mode, bvp_config=bvp_config)
            rep = curvature_from_graph(ge, route)
        except NodeEvaluationError:
            raise
        except Exception as exc:
            raise NodeEvaluationError(f"node (t={z[0]:g}, x={z[1:]}) failed: {exc}", point=z) from exc
        return rep.p, rep.K

    njobs = resolve_jobs(jobs)
    results = [None] * len(nodes)
    if njobs == 1 or len(nodes) < 4:
        for i in range(len(nodes)):
            results[i] = one(i)
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=njobs) as ex:
            for i, res in enumerate(ex.map(one, range(len(nodes)))):
                results[i] = res
    p = np.array([r[0] for r in results])
    K = np.array([r[1] for r in results])
    return CurvatureField(
        system_name=system.name,
        a_label=a.label,
        route=route,
        points=nodes,
        p=p,
        K=K,
    )


def curvature_integral(
    system: SlowFastSystem,
    a: InitialValueFunction,
    grid: GridSpec,
    route: str = "gauss_equation",
    mode: str = "auto",
    jobs: int | None = None,
    bvp_config: BvpConfig | None = None,
) -> float:
    """Grid functional I[a]: the node mean of |K(sigma_2)|.

    Uses the plain node-count normalization (sum / number of nodes), not
    cell-area weighting, so single-node grids return |K| at that node.
    """
    field = curvature_field(
        system, a, grid, route=route, mode=mode, jobs=jobs, bvp_config=bvp_config
    )
    return field.mean_abs_K2
