"""Model registry for slow-fast ODE systems and their lifting functions.

Five benchmark systems are provided, each stored in its published time
convention (no rescaling layer):

======================  =====  ==============================================
name                    (k,m)  parameters
======================  =====  ==============================================
``davis_skodje``        (1,1)  gamma > 1 (gamma = 1/eps inside the fast RHS)
``kuehn_nonlinear``     (1,1)  eps > 0 (eps multiplies the slow RHS)
``enzyme_mmh``          (1,1)  kappa > lambda > 0, eps > 0
``ds_2_1``              (2,1)  gamma > 2
``model_3_2``           (3,2)  0 < eps < 1/2
======================  =====  ==============================================

Besides the right-hand sides and Jacobians, the registry exposes analytic
artifacts where they exist (slow-manifold graphs, closed-form flow,
one-parameter invariant families) and the asymptotic expansion of the slow
manifold graph for the enzyme model.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property, lru_cache
from typing import Callable, Sequence

import numpy as np
import sympy as sp

from . import _kernels

__all__ = [
    "MODEL_NAMES",
    "TimeConvention",
    "IvKind",
    "SlowFastSystem",
    "InitialValueFunction",
    "AnalyticArtifacts",
    "make_system",
    "rhs",
    "rhs_jacobian",
    "artifacts",
    "sim_graph",
    "critical_graph",
    "invariant_family",
    "constant_initial_value",
    "initial_value_from_exprs",
    "asymptotic_coefficients",
    "asymptotic_initial_value",
    "invariance_residual",
]

MODEL_NAMES = ("davis_skodje", "kuehn_nonlinear", "enzyme_mmh", "ds_2_1", "model_3_2")

_T = sp.Symbol("t", real=True)
_X = tuple(sp.Symbol(f"x{i + 1}", real=True) for i in range(3))
_U = tuple(sp.Symbol(f"u{i + 1}", real=True) for i in range(3))
_Y = sp.Symbol("y", real=True)
_EPS = sp.Symbol("epsilon", positive=True)


class TimeConvention(Enum):
    """Which side of the system the time-scale parameter multiplies."""

    FAST_TIME = "fast_time"  # eps on the slow RHS; fast RHS is O(1)
    SLOW_TIME = "slow_time"  # fast RHS carries gamma = 1/eps; slow RHS is O(1)


class IvKind(Enum):
    CLOSED_FORM = "closed_form"
    ASYMPTOTIC = "asymptotic_truncation"
    INVARIANT_FAMILY = "invariant_family"


@dataclass(frozen=True)
class SlowFastSystem:
    """Immutable description of one (k, m)-slow-fast model."""

    name: str
    k: int
    m: int
    time_convention: TimeConvention
    kernel_id: int
    param_items: tuple[tuple[str, float], ...]

    @property
    def n(self) -> int:
        return self.k + self.m

    @property
    def params(self) -> dict[str, float]:
        return dict(self.param_items)

    @cached_property
    def kernel_params(self) -> np.ndarray:
        return np.array([v for _, v in self.param_items], dtype=float)

    def __repr__(self) -> str:
        p = ", ".join(f"{name}={v:g}" for name, v in self.param_items)
        return f"SlowFastSystem({self.name}, k={self.k}, m={self.m}, {p})"


@dataclass(frozen=True, eq=False)
class InitialValueFunction:
    """Lift ``a``: slow coordinates -> fast coordinates, y(0) = a(x(0)).

    ``exprs`` (when present) are sympy expressions in the slow placeholder
    symbols u1..uk; they make closed-form graph parameterizations and exact
    derivatives available downstream.  Equality/hash is by identity so that
    evaluator caches key on the object.
    """

    kind: IvKind
    label: str
    k: int
    m: int
    exprs: tuple[sp.Expr, ...] | None
    order: int | None = None
    free_params: tuple[float, ...] = ()

    @cached_property
    def _fn(self) -> Callable:
        if self.exprs is None:
            raise ValueError("initial value function has no closed expression")
        return sp.lambdify(_U[: self.k], list(self.exprs), modules="numpy")

    @cached_property
    def _jac_fn(self) -> Callable:
        flat = [sp.diff(e, u) for e in self.exprs for u in _U[: self.k]]
        return sp.lambdify(_U[: self.k], flat, modules="numpy")

    def __call__(self, u) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if u.shape != (self.k,):
            raise ValueError(f"expected slow state of dimension {self.k}, got shape {u.shape}")
        return np.array(self._fn(*u), dtype=float)

    @property
    def eval(self) -> Callable[[np.ndarray], np.ndarray]:
        return self.__call__

    def jacobian(self, u) -> np.ndarray:
        """Exact derivative Da(u), shape (m, k)."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        return np.array(self._jac_fn(*u), dtype=float).reshape(self.m, self.k)

    def __repr__(self) -> str:
        return f"InitialValueFunction({self.label})"


@dataclass(frozen=True, eq=False)
class AnalyticArtifacts:
    """Closed-form knowledge attached to a model (fields None when unknown).

    For the analytically solvable models the slow coordinates decouple,
    ``x_j(t) = x_j(0) exp(-nu_j t)``, and each fast deviation from the slow
    manifold graph decays at rate ``mu_l``; that pair of exponent vectors is
    all the flow and the graph parameterization need.
    """

    system: SlowFastSystem
    h0_exprs: tuple[sp.Expr, ...]
    heps_exprs: tuple[sp.Expr, ...] | None
    nu: tuple[float, ...] | None
    mu: tuple[float, ...] | None

    @property
    def has_closed_flow(self) -> bool:
        return self.nu is not None

    @cached_property
    def h0(self) -> InitialValueFunction:
        return InitialValueFunction(
            IvKind.CLOSED_FORM, "h0", self.system.k, self.system.m, self.h0_exprs
        )

    @cached_property
    def h_eps(self) -> InitialValueFunction:
        if self.heps_exprs is None:
            raise ValueError(
                f"{self.system.name} has no closed-form slow manifold graph; "
                "use asymptotic_initial_value(system, order)"
            )
        return InitialValueFunction(
            IvKind.CLOSED_FORM, "h_eps", self.system.k, self.system.m, self.heps_exprs
        )

    def flow_solution(self, state0) -> Callable:
        """Closed-form trajectory through ``state0`` (solvable models only).

        Returns a callable mapping t (scalar or array) to the state; fast
        components are ``(y0 - h_eps(x0)) exp(-mu t) + h_eps(x(t))``.
        """
        if not self.has_closed_flow:
            raise ValueError(f"{self.system.name} has no closed-form flow solution")
        k, m = self.system.k, self.system.m
        state0 = np.asarray(state0, dtype=float)
        x0, y0 = state0[:k], state0[k:]
        nu = np.array(self.nu)
        mu = np.array(self.mu)
        heps = self.h_eps
        c_fast = y0 - heps(x0)

        def sol(t):
            t = np.asarray(t, dtype=float)
            xt = x0 * np.exp(-np.outer(t, nu)) if t.ndim else x0 * np.exp(-nu * t)
            if t.ndim:
                out = np.empty(t.shape + (k + m,))
                for i, (ti, xi) in enumerate(zip(t, xt)):
                    out[i, :k] = xi
                    out[i, k:] = c_fast * np.exp(-mu * ti) + heps(xi)
                return out
            return np.concatenate([xt, c_fast * np.exp(-mu * t) + heps(xt)])

        return sol

    def p_exprs(self, a_exprs: Sequence[sp.Expr]) -> tuple[sp.Expr, ...]:
        """Closed graph parameterization p(t, x; a) as sympy expressions.

        Trajectories launched from the lift ``a`` relax toward the slow
        manifold graph:  p_l = (a_l(u) - h_eps_l(u)) exp(-mu_l t) + h_eps_l(x)
        with u_j = x_j exp(nu_j t) the initial slow coordinates of the
        trajectory passing through x at time t.
        """
        if not self.has_closed_flow:
            raise ValueError(f"{self.system.name} has no closed-form parameterization")
        k = self.system.k
        u_of_tx = {_U[j]: _X[j] * sp.exp(self.nu[j] * _T) for j in range(k)}
        x_for_u = {_U[j]: _X[j] for j in range(k)}
        out = []
        for a_l, h_l, mu_l in zip(a_exprs, self.heps_exprs, self.mu):
            dev = (a_l - h_l).subs(u_of_tx, simultaneous=True)
            out.append(dev * sp.exp(-mu_l * _T) + h_l.subs(x_for_u, simultaneous=True))
        return tuple(out)


# ---------------------------------------------------------------------------
# registry


def _validate_davis_skodje(p):
    if not p["gamma"] > 1:
        raise ValueError("davis_skodje requires gamma > 1")


def _validate_kuehn(p):
    if not p["eps"] > 0:
        raise ValueError("kuehn_nonlinear requires eps > 0")
    if p["eps"] == 0.5:
        raise ValueError("kuehn_nonlinear is degenerate at eps = 1/2")


def _validate_enzyme(p):
    if not (p["kappa"] > p["lambda"] > 0):
        raise ValueError("enzyme_mmh requires kappa > lambda > 0")
    if not p["eps"] > 0:
        raise ValueError("enzyme_mmh requires eps > 0")


def _validate_ds21(p):
    if not p["gamma"] > 2:
        raise ValueError("ds_2_1 requires gamma > 2")


def _validate_m32(p):
    if not 0 < p["eps"] < 0.5:
        raise ValueError("model_3_2 requires 0 < eps < 1/2")


@dataclass(frozen=True)
class _ModelDef:
    name: str
    k: int
    m: int
    kernel_id: int
    convention: TimeConvention
    param_order: tuple[str, ...]
    validate: Callable


_MODELS = {
    "davis_skodje": _ModelDef(
        "davis_skodje", 1, 1, _kernels.DAVIS_SKODJE, TimeConvention.SLOW_TIME,
        ("gamma",), _validate_davis_skodje,
    ),
    "kuehn_nonlinear": _ModelDef(
        "kuehn_nonlinear", 1, 1, _kernels.KUEHN, TimeConvention.FAST_TIME,
        ("eps",), _validate_kuehn,
    ),
    "enzyme_mmh": _ModelDef(
        "enzyme_mmh", 1, 1, _kernels.ENZYME, TimeConvention.FAST_TIME,
        ("eps", "kappa", "lambda"), _validate_enzyme,
    ),
    "ds_2_1": _ModelDef(
        "ds_2_1", 2, 1, _kernels.DS21, TimeConvention.SLOW_TIME,
        ("gamma",), _validate_ds21,
    ),
    "model_3_2": _ModelDef(
        "model_3_2", 3, 2, _kernels.MODEL32, TimeConvention.FAST_TIME,
        ("eps",), _validate_m32,
    ),
}


def make_system(name: str, params: dict) -> SlowFastSystem:
    """Build a registered model from its name and parameter dict."""
    if name not in _MODELS:
        raise ValueError(f"unknown model {name!r}; available: {', '.join(MODEL_NAMES)}")
    d = _MODELS[name]
    missing = [p for p in d.param_order if p not in params]
    if missing:
        raise ValueError(f"{name} requires parameters {d.param_order}, missing {missing}")
    extra = [p for p in params if p not in d.param_order]
    if extra:
        raise ValueError(f"{name} got unknown parameters {extra}")
    pvals = {p: float(params[p]) for p in d.param_order}
    d.validate(pvals)
    return SlowFastSystem(
        name=name,
        k=d.k,
        m=d.m,
        time_convention=d.convention,
        kernel_id=d.kernel_id,
        param_items=tuple((p, pvals[p]) for p in d.param_order),
    )


def rhs(system: SlowFastSystem, state) -> np.ndarray:
    """Full right-hand side in the model's published time convention."""
    state = np.asarray(state, dtype=float)
    if state.shape != (system.n,):
        raise ValueError(f"state must have dimension {system.n}, got shape {state.shape}")
    out = np.empty(system.n)
    _kernels.rhs_into(system.kernel_id, system.kernel_params, state, _kernels.RHS_FULL, out)
    return out


def rhs_jacobian(system: SlowFastSystem, state) -> np.ndarray:
    """Exact Jacobian of :func:`rhs` at ``state``."""
    state = np.asarray(state, dtype=float)
    if state.shape != (system.n,):
        raise ValueError(f"state must have dimension {system.n}, got shape {state.shape}")
    out = np.empty((system.n, system.n))
    _kernels.jac_into(system.kernel_id, system.kernel_params, state, out)
    return out


# ---------------------------------------------------------------------------
# analytic artifacts


@lru_cache(maxsize=None)
def artifacts(system: SlowFastSystem) -> AnalyticArtifacts:
    """Analytic artifacts of ``system`` (graphs, flow exponents)."""
    p = system.params
    u = _U
    if system.name == "davis_skodje":
        gam = p["gamma"]
        h = (u[0] / (u[0] + 1),)
        return AnalyticArtifacts(system, h, h, nu=(1.0,), mu=(gam,))
    if system.name == "kuehn_nonlinear":
        eps = p["eps"]
        h0 = (u[0] ** 2,)
        heps = (u[0] ** 2 / (1 - 2 * eps),)
        return AnalyticArtifacts(system, h0, heps, nu=(eps,), mu=(1.0,))
    if system.name == "enzyme_mmh":
        kap = p["kappa"]
        h0 = (u[0] / (u[0] + kap),)
        return AnalyticArtifacts(system, h0, None, nu=None, mu=None)
    if system.name == "ds_2_1":
        gam = p["gamma"]
        h = (u[0] / (u[0] + 1) + 2 * u[1] / (u[1] + 1),)
        return AnalyticArtifacts(system, h, h, nu=(1.0, 2.0), mu=(gam,))
    # model_3_2
    eps = p["eps"]
    h0 = (u[0] ** 2 / 2 + u[1] ** 2 * u[2] / 4, u[0] ** 4 + u[1] ** 3 / 3)
    heps = (
        u[0] ** 2 / (2 - eps) + u[1] ** 2 * u[2] / (4 - 7 * eps),
        3 * u[0] ** 4 / (3 - 4 * eps) + u[1] ** 3 / (3 - 6 * eps),
    )
    return AnalyticArtifacts(system, h0, heps, nu=(eps, 2 * eps, 3 * eps), mu=(4.0, 3.0))


def sim_graph(system: SlowFastSystem) -> InitialValueFunction:
    """The slow invariant manifold graph h_eps as a lift (closed models)."""
    return artifacts(system).h_eps


def critical_graph(system: SlowFastSystem) -> InitialValueFunction:
    """The critical manifold graph h_0 as a lift."""
    return artifacts(system).h0


def invariant_family(system: SlowFastSystem, free_params) -> InitialValueFunction:
    """Member of the model's family of flow-invariant lifts.

    All-zero parameters give the slow manifold graph itself; nonzero values
    give graphs that are invariant under the flow but not slow.  The models
    with function-valued family freedom are restricted to constants here.
    """
    if np.isscalar(free_params):
        free_params = (float(free_params),)
    free_params = tuple(float(c) for c in free_params)
    arts = artifacts(system)
    p = system.params
    u = _U
    if system.name == "davis_skodje" or system.name == "ds_2_1":
        (c,) = free_params
        exprs = (arts.heps_exprs[0] + c * u[0] ** p["gamma"],)
    elif system.name == "kuehn_nonlinear":
        (c,) = free_params
        exprs = (arts.heps_exprs[0] + c * u[0] ** (1 / p["eps"]),)
    elif system.name == "model_3_2":
        c1, c2 = free_params
        eps = p["eps"]
        exprs = (
            arts.heps_exprs[0] + c1 * u[0] ** (4 / eps),
            arts.heps_exprs[1] + c2 * u[0] ** (3 / eps),
        )
    else:
        raise ValueError(f"{system.name} has no published invariant family")
    label = "family(" + ",".join(f"{c:g}" for c in free_params) + ")"
    return InitialValueFunction(
        IvKind.INVARIANT_FAMILY, label, system.k, system.m, exprs, free_params=free_params
    )


def constant_initial_value(system: SlowFastSystem, values) -> InitialValueFunction:
    """Constant lift a(u) = v (one value per fast component)."""
    if np.isscalar(values):
        values = (float(values),) * system.m
    values = tuple(float(v) for v in values)
    if len(values) != system.m:
        raise ValueError(f"need {system.m} constant value(s), got {len(values)}")
    exprs = tuple(sp.Float(v) for v in values)
    label = "const(" + ",".join(f"{v:g}" for v in values) + ")"
    return InitialValueFunction(IvKind.CLOSED_FORM, label, system.k, system.m, exprs)


def initial_value_from_exprs(system: SlowFastSystem, exprs, label="custom") -> InitialValueFunction:
    """Lift from explicit sympy expressions in u1..uk."""
    if isinstance(exprs, (sp.Expr, str, int, float)):
        exprs = (exprs,)
    exprs = tuple(sp.sympify(e) for e in exprs)
    if len(exprs) != system.m:
        raise ValueError(f"need {system.m} expression(s), got {len(exprs)}")
    allowed = set(_U[: system.k])
    for e in exprs:
        if not e.free_symbols <= allowed:
            raise ValueError(f"expression {e} uses symbols outside u1..u{system.k}")
    return InitialValueFunction(IvKind.CLOSED_FORM, label, system.k, system.m, exprs)


# ---------------------------------------------------------------------------
# asymptotic slow-manifold expansion (enzyme model)

_ASYM_ORDER_CAP = 8


def _symbolic_rhs_blocks(system: SlowFastSystem):
    """Slow/fast RHS as sympy expressions, eps symbolic, in (u1, y).

    Parameters enter as exact rationals: the expansion recursion relies on
    polynomial gcd cancellation, which degenerates (exponential expression
    swell) over float coefficients.
    """
    if system.name != "enzyme_mmh":
        raise ValueError(f"asymptotic expansion is implemented for enzyme_mmh, not {system.name}")
    kap = sp.Rational(str(system.params["kappa"]))
    lam = sp.Rational(str(system.params["lambda"]))
    x = _U[0]
    f = _EPS * (-x + (x + kap - lam) * _Y)
    g = x - (x + kap) * _Y
    return f, g


def _asymptotic_exprs(system: SlowFastSystem, order: int) -> tuple[sp.Expr, ...]:
    f, g = _symbolic_rhs_blocks(system)
    # eps stays symbolic in the recursion, so cache on the blocks only
    return _asymptotic_exprs_cached(f, g, order)


@lru_cache(maxsize=None)
def _asymptotic_exprs_cached(f: sp.Expr, g: sp.Expr, order: int) -> tuple[sp.Expr, ...]:
    """Graph coefficients h_0..h_order by power matching in the invariance equation.

    With both RHS blocks affine in the fast variable, f = eps*(f0 + f1*y)
    and g = g0 + g1*y, inserting the series sum(eps^j h_j) into
    eps*Dh*f - g = 0 and collecting order k gives the linear recursion

        h_k = (f0 h_{k-1}' + f1 * sum_{i+j=k-1} h_i' h_j) / g1,

    solved here in exact rational arithmetic (h_0 is the critical-manifold
    graph g = 0); memoized incrementally over the order.
    """
    x = _U[0]
    slow = sp.cancel(f / _EPS)  # published slow RHS carries the eps factor
    f1 = sp.diff(slow, _Y)
    g1 = sp.diff(g, _Y)
    if sp.simplify(sp.diff(g1, _Y)) != 0 or sp.simplify(sp.diff(f1, _Y)) != 0:
        raise ValueError("asymptotic expansion needs RHS blocks affine in y")
    f0 = sp.cancel(slow - f1 * _Y)
    if order == 0:
        sol = sp.solve(sp.Eq(g.subs(_EPS, 0), 0), _Y)
        if len(sol) != 1:
            raise ValueError("critical manifold is not a unique graph")
        return (sp.cancel(sol[0]),)
    hs = _asymptotic_exprs_cached(f, g, order - 1)
    dhs = [sp.cancel(sp.diff(h, x)) for h in hs]
    conv = sum(dhs[i] * hs[order - 1 - i] for i in range(order))
    hk = sp.cancel((f0 * dhs[order - 1] + f1 * conv) / g1)
    return hs + (hk,)


def asymptotic_coefficients(system: SlowFastSystem, order: int) -> list[Callable]:
    """Coefficient functions h_0..h_order of the slow-manifold graph expansion.

    Each returned callable maps a slow scalar to the fast coordinate and
    carries its exact expression on the ``expr`` attribute.  h_0 is the
    critical manifold graph.
    """
    if order > _ASYM_ORDER_CAP:
        raise ValueError(f"asymptotic order capped at {_ASYM_ORDER_CAP}, got {order}")
    if order < 0:
        raise ValueError("order must be >= 0")
    exprs = _asymptotic_exprs(system, order)
    out = []
    for e in exprs:
        fn = sp.lambdify(_U[: system.k], e, modules="numpy")
        fn.expr = e
        out.append(fn)
    return out


def asymptotic_initial_value(system: SlowFastSystem, order: int) -> InitialValueFunction:
    """Truncated expansion a_k(u) = sum of eps^l h_l(u) as a lift."""
    if order > _ASYM_ORDER_CAP:
        raise ValueError(f"asymptotic order capped at {_ASYM_ORDER_CAP}, got {order}")
    exprs = _asymptotic_exprs(system, order)
    eps = sp.Rational(str(system.params["eps"]))
    total = sp.cancel(sum(eps ** j * exprs[j] for j in range(order + 1)))
    return InitialValueFunction(
        IvKind.ASYMPTOTIC, f"asym({order})", system.k, system.m, (total,), order=order
    )


# ---------------------------------------------------------------------------
# invariance diagnostics


def invariance_residual(system: SlowFastSystem, a: InitialValueFunction, x) -> np.ndarray:
    """Residual of the invariance equation at slow point x.

    A graph y = a(x) is flow-invariant iff Da(x) f_slow(x, a(x)) equals
    g_fast(x, a(x)) along it (stated in the model's own time convention, so
    the published eps placement is used as-is).  Uses the exact Da when the
    lift has expressions, central differences otherwise.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    ax = a(x)
    full = rhs(system, np.concatenate([x, ax]))
    f_slow, g_fast = full[: system.k], full[system.k :]
    try:
        Da = a.jacobian(x)
    except (ValueError, TypeError):
        Da = _fd_jacobian(a, x, system.m)
    return Da @ f_slow - g_fast


def _fd_jacobian(a, x, m, rel_step=1e-6):
    k = x.shape[0]
    J = np.empty((m, k))
    for j in range(k):
        h = rel_step * max(1.0, abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        J[:, j] = (a(xp) - a(xm)) / (2 * h)
    return J
