"""Evaluation and differentiation of the graph parameterization p(t, x; a).

The phase-space-time manifold studied here is the graph of y = p(t, x; a),
the fast coordinates reached at time t by the trajectory that passes over x
and was launched from the lift a.  Curvature needs p together with its
partial derivatives up to third order.  Two evaluation paths exist:

* closed form - for the analytically solvable models the parameterization
  is built symbolically from the lift's expressions and differentiated
  exactly (source ``CLOSED_FORM``);
* finite differences - central stencils over pointwise values of p, which
  themselves come either from the closed form or from shooting solves of
  the boundary value problem (source ``FINITE_DIFFERENCE``).

Stencil steps balance truncation against the shooting-solver noise floor
(~1e-10): closed-form-backed stencils use 1e-6/1e-4/1e-3 of the coordinate
scale for first/second/third derivatives, BVP-backed stencils use 1e-3
throughout and do not support third derivatives.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
import sympy as sp

from .bvp import BvpConfig, BvpProblem, solve_bvp
from .errors import NodeEvaluationError, ShootingError, IntegrationError
from .systems import InitialValueFunction, SlowFastSystem, artifacts, _T, _U, _X

__all__ = ["GraphSource", "GraphEval", "eval_graph", "immersion_jacobian", "invariant_graph_eval"]

# relative stencil steps (first, second, third derivatives)
CLOSED_STEPS = (1e-6, 1e-4, 1e-3)
BVP_STEPS = (1e-3, 1e-3, None)

SYMMETRY_TOL = 1e-6


class GraphSource(Enum):
    CLOSED_FORM = "closed_form"
    FINITE_DIFFERENCE = "finite_difference"


@dataclass(frozen=True)
class GraphEval:
    """Value and partial derivatives of p at one (t, x) point.

    ``d1[l, i]`` is the derivative of fast component l along coordinate i
    of z = (t, x_1..x_k); ``d2``/``d3`` extend this symmetrically and are
    None beyond the requested order.
    """

    point: np.ndarray  # (k+1,)
    p: np.ndarray  # (m,)
    d1: np.ndarray  # (m, k+1)
    d2: np.ndarray | None  # (m, k+1, k+1)
    d3: np.ndarray | None  # (m, k+1, k+1, k+1)
    source: GraphSource

    def __post_init__(self):
        for arr in (self.p, self.d1, self.d2, self.d3):
            if arr is not None and not np.all(np.isfinite(arr)):
                raise NodeEvaluationError(
                    f"non-finite graph derivative at point {self.point}", point=self.point
                )
        if self.d2 is not None:
            defect = np.max(np.abs(self.d2 - np.swapaxes(self.d2, 1, 2)))
            if defect > SYMMETRY_TOL * max(1.0, np.max(np.abs(self.d2))):
                raise NodeEvaluationError(
                    f"second-derivative asymmetry defect {defect:.3e} at {self.point}",
                    point=self.point,
                )

    @property
    def k(self) -> int:
        return self.point.shape[0] - 1

    @property
    def m(self) -> int:
        return self.p.shape[0]


def immersion_jacobian(ge: GraphEval) -> np.ndarray:
    """Jacobian of the immersion (t, x) -> (t, x, p): identity over d1.

    Full column rank k+1 by construction, which is what makes the pulled
    back metric positive definite.
    """
    d = ge.k + 1
    return np.vstack([np.eye(d), ge.d1])


# ---------------------------------------------------------------------------
# closed-form evaluation


class _ClosedForm:
    """Lambdified p and exact partials for a fixed tuple of p-expressions."""

    def __init__(self, p_exprs, k, m):
        self.k = k
        self.m = m
        self.args = (_T, *_X[:k])
        self.p_exprs = tuple(sp.sympify(e) for e in p_exprs)
        self._vars = self.args
        self._fns = {}

    def _fn(self, order):
        if order in self._fns:
            return self._fns[order]
        v = self._vars
        d = self.k + 1
        if order == 0:
            flat = list(self.p_exprs)
        elif order == 1:
            flat = [sp.diff(p, v[i]) for p in self.p_exprs for i in range(d)]
        elif order == 2:
            flat = [
                sp.diff(p, v[i], v[j])
                for p in self.p_exprs
                for i in range(d)
                for j in range(i, d)
            ]
        else:
            flat = [
                sp.diff(p, v[i], v[j], v[l])
                for p in self.p_exprs
                for i in range(d)
                for j in range(i, d)
                for l in range(j, d)
            ]
        fn = sp.lambdify(self.args, flat, modules="numpy")
        self._fns[order] = fn
        return fn

    def p_value(self, z) -> np.ndarray:
        return np.array(self._fn(0)(*z), dtype=float)

    def eval(self, t, x, order) -> GraphEval:
        z = np.concatenate([[t], np.atleast_1d(x)]).astype(float)
        d = self.k + 1
        m = self.m
        p = self.p_value(z)
        d1 = np.array(self._fn(1)(*z), dtype=float).reshape(m, d)
        d2 = d3 = None
        if order >= 2:
            flat = np.array(self._fn(2)(*z), dtype=float)
            d2 = np.empty((m, d, d))
            idx = 0
            for l in range(m):
                for i in range(d):
                    for j in range(i, d):
                        d2[l, i, j] = d2[l, j, i] = flat[idx]
                        idx += 1
        if order >= 3:
            flat = np.array(self._fn(3)(*z), dtype=float)
            d3 = np.empty((m, d, d, d))
            idx = 0
            for l in range(m):
                for i in range(d):
                    for j in range(i, d):
                        for q in range(j, d):
                            val = flat[idx]
                            idx += 1
                            for perm in itertools.permutations((i, j, q)):
                                d3[(l,) + perm] = val
        return GraphEval(point=z, p=p, d1=d1, d2=d2, d3=d3, source=GraphSource.CLOSED_FORM)


@lru_cache(maxsize=None)
def _closed_form(system: SlowFastSystem, a: InitialValueFunction) -> _ClosedForm:
    return _ClosedForm(artifacts(system).p_exprs(a.exprs), system.k, system.m)


@lru_cache(maxsize=None)
def _invariant_form(a: InitialValueFunction) -> _ClosedForm:
    exprs = tuple(e.subs(dict(zip(_U[: a.k], _X[: a.k])), simultaneous=True) for e in a.exprs)
    return _ClosedForm(exprs, a.k, a.m)


def has_closed_form(system: SlowFastSystem, a: InitialValueFunction) -> bool:
    return artifacts(system).has_closed_flow and a.exprs is not None


def invariant_graph_eval(
    system: SlowFastSystem, a: InitialValueFunction, t, x, order: int = 2
) -> GraphEval:
    """Graph evaluation under the invariance identity p(t, x; a) = a(x).

    Exact precisely when the lift is flow-invariant (then trajectories never
    leave the graph, so the bundle over x at any time sits at a(x)); used
    for necessary-condition checks where no closed-form flow exists.  The
    caller is responsible for the invariance of ``a``.
    """
    if a.exprs is None:
        raise ValueError("invariant_graph_eval needs a lift with expressions")
    return _invariant_form(a).eval(t, x, order)


# ---------------------------------------------------------------------------
# finite-difference evaluation


class _MemoizedPointwise:
    """Pointwise p with per-sweep memoization (keys rounded to 1e-12).

    Adjacent stencils share evaluation points; caching is purely a
    performance device and has no semantic effect.
    """

    def __init__(self, fn):
        self._fn = fn
        self._cache = {}

    def __call__(self, z) -> np.ndarray:
        key = tuple(np.round(z, 12))
        hit = self._cache.get(key)
        if hit is None:
            hit = self._fn(z)
            self._cache[key] = hit
        return hit


def _bvp_pointwise(system, a, bvp_config):
    def fn(z):
        try:
            sol = solve_bvp(BvpProblem(system, float(z[0]), z[1:], a), bvp_config)
        except (ShootingError, IntegrationError) as exc:
            raise NodeEvaluationError(
                f"BVP failure at stencil point (t={z[0]:.8g}, x={z[1:]}): {exc}", point=z
            ) from exc
        return sol.y_star

    return fn


def _fd_graph_eval(pf, z0, order, steps) -> tuple:
    """Central-difference derivatives of pf at z0 (symmetric by construction)."""
    d = z0.shape[0]
    scale = np.maximum(1.0, np.abs(z0))
    h1 = steps[0] * scale
    h2 = steps[1] * scale if order >= 2 else None
    p0 = pf(z0)
    m = p0.shape[0]

    def at(offsets):
        z = z0.copy()
        for i, off in offsets:
            z[i] += off
        return pf(z)

    d1 = np.empty((m, d))
    for i in range(d):
        d1[:, i] = (at([(i, h1[i])]) - at([(i, -h1[i])])) / (2 * h1[i])

    d2 = d3 = None
    if order >= 2:
        d2 = np.empty((m, d, d))
        for i in range(d):
            d2[:, i, i] = (at([(i, h2[i])]) - 2 * p0 + at([(i, -h2[i])])) / h2[i] ** 2
        for i in range(d):
            for j in range(i + 1, d):
                val = (
                    at([(i, h2[i]), (j, h2[j])])
                    - at([(i, h2[i]), (j, -h2[j])])
                    - at([(i, -h2[i]), (j, h2[j])])
                    + at([(i, -h2[i]), (j, -h2[j])])
                ) / (4 * h2[i] * h2[j])
                d2[:, i, j] = d2[:, j, i] = val
    if order >= 3:
        if steps[2] is None:
            raise ValueError(
                "third derivatives are not supported on the BVP-backed path "
                "(use the closed form or the second-derivative curvature route)"
            )
        h3 = steps[2] * scale
        d3 = np.empty((m, d, d, d))
        for i in range(d):
            d3[:, i, i, i] = (
                at([(i, 2 * h3[i])])
                - 2 * at([(i, h3[i])])
                + 2 * at([(i, -h3[i])])
                - at([(i, -2 * h3[i])])
            ) / (2 * h3[i] ** 3)
        for i in range(d):
            for j in range(d):
                if i == j:
                    continue
                # d^3/(di^2 dj)
                val = (
                    at([(i, h3[i]), (j, h3[j])])
                    - 2 * at([(j, h3[j])])
                    + at([(i, -h3[i]), (j, h3[j])])
                    - at([(i, h3[i]), (j, -h3[j])])
                    + 2 * at([(j, -h3[j])])
                    - at([(i, -h3[i]), (j, -h3[j])])
                ) / (2 * h3[i] ** 2 * h3[j])
                for perm in itertools.permutations((i, i, j)):
                    d3[(slice(None),) + perm] = val
        for i, j, q in itertools.combinations(range(d), 3):
            val = 0.0
            for si, sj, sq in itertools.product((1, -1), repeat=3):
                val = val + si * sj * sq * at([(i, si * h3[i]), (j, sj * h3[j]), (q, sq * h3[q])])
            val = val / (8 * h3[i] * h3[j] * h3[q])
            for perm in itertools.permutations((i, j, q)):
                d3[(slice(None),) + perm] = val
    return p0, d1, d2, d3


def eval_graph(
    system: SlowFastSystem,
    a: InitialValueFunction,
    t,
    x,
    order: int = 2,
    mode: str = "auto",
    bvp_config: BvpConfig | None = None,
) -> GraphEval:
    """Evaluate p(t, x; a) and its partials up to ``order`` (1, 2 or 3).

    mode ``auto`` prefers the closed form and falls back to BVP-backed
    finite differences; ``closed`` requires a closed form; ``numeric``
    forces finite differences over the best available pointwise p;
    ``bvp`` forces finite differences over shooting solves.
    """
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    z0 = np.concatenate([[float(t)], np.atleast_1d(np.asarray(x, dtype=float))])
    if z0.shape[0] != system.k + 1:
        raise ValueError(f"x must have dimension {system.k}")
    closed_ok = has_closed_form(system, a)

    if mode == "auto":
        mode = "closed" if closed_ok else "bvp"
    if mode == "closed":
        if not closed_ok:
            raise ValueError(
                f"{system.name} with lift {a.label} has no closed-form parameterization"
            )
        return _closed_form(system, a).eval(z0[0], z0[1:], order)
    if mode == "numeric":
        if closed_ok:
            cf = _closed_form(system, a)
            pf = _MemoizedPointwise(lambda z: cf.p_value(z))
            steps = CLOSED_STEPS
        else:
            pf = _MemoizedPointwise(_bvp_pointwise(system, a, bvp_config))
            steps = BVP_STEPS
    elif mode == "bvp":
        pf = _MemoizedPointwise(_bvp_pointwise(system, a, bvp_config))
        steps = BVP_STEPS
    else:
        raise ValueError(f"unknown mode {mode!r}")
    p0, d1, d2, d3 = _fd_graph_eval(pf, z0, order, steps)
    return GraphEval(
        point=z0, p=p0, d1=d1, d2=d2, d3=d3, source=GraphSource.FINITE_DIFFERENCE
    )
