"""Scalar criteria probing sufficiency over the invariant-graph family.

Zero time-sectional curvature is necessary but not sufficient: on the
Davis-Skodje model every member a_c(u) = u/(u+1) + c u^gamma of the
invariant family is curvature-flat, yet only c = 0 is the slow manifold.
Three scalar functions of c are studied as tie-breakers at a fixed slow
point u:

* F1 - squared second derivative of the graph (classical curvature proxy);
* F2 - squared norm of J(u, a(u)) applied to the vector field (J the full
  system Jacobian);
* F3 - generalized kinetic minus potential energy,
  k1 |(f, g)|^2 - k2 |(u, a(u))|^2.

All three are quadratic in c with closed-form minimizers; F3 with k1 = 1,
k2 = gamma/(u+1) is minimized exactly at c = 0, singling out the slow
manifold among the invariant graphs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .geometry import curvature_field
from .grids import GridSpec
from .systems import SlowFastSystem, invariant_family, rhs, rhs_jacobian

__all__ = [
    "CRITERIA",
    "CriterionSpec",
    "eval_criterion",
    "closed_form_minimizer",
    "second_derivative_closed",
    "MinimizerResult",
    "minimize_criterion",
    "criteria_sweep",
    "SufficientReport",
    "sufficient_characterization_check",
]

CRITERIA = ("F1", "F2", "F3")


@dataclass(frozen=True)
class CriterionSpec:
    """One criterion at a fixed evaluation point of the slow variable."""

    kind: str  # "F1" | "F2" | "F3"
    u: float
    system: SlowFastSystem
    k1: float = 1.0  # F3 kinetic weight
    k2: float = 0.0  # F3 potential weight

    def __post_init__(self):
        if self.kind not in CRITERIA:
            raise ValueError(f"unknown criterion {self.kind!r}; choose from {CRITERIA}")
        if self.system.name != "davis_skodje":
            raise ValueError(
                f"criteria are implemented for davis_skodje (closed forms exist there), "
                f"not {self.system.name}"
            )
        if not (math.isfinite(self.k1) and math.isfinite(self.k2)):
            raise ValueError("k1, k2 must be finite")

    @property
    def gamma(self) -> float:
        return self.system.params["gamma"]


def _family_value(gamma: float, u: float, c: float) -> float:
    return u / (u + 1.0) + c * u ** gamma


def _family_d2(gamma: float, u: float, c: float) -> float:
    # a''(u) = -2/(u+1)^3 + c gamma (gamma-1) u^(gamma-2)
    return -2.0 / (u + 1.0) ** 3 + c * gamma * (gamma - 1.0) * u ** (gamma - 2.0)


def eval_criterion(spec: CriterionSpec, c: float) -> float:
    """Value of the criterion at family parameter c (quadratic in c)."""
    gamma, u = spec.gamma, spec.u
    if spec.kind == "F1":
        return _family_d2(gamma, u, c) ** 2
    state = np.array([u, _family_value(gamma, u, c)])
    if spec.kind == "F2":
        v = rhs_jacobian(spec.system, state) @ rhs(spec.system, state)
        return float(v @ v)
    f = rhs(spec.system, state)
    return float(spec.k1 * (f @ f) - spec.k2 * (state @ state))


def closed_form_minimizer(spec: CriterionSpec) -> float:
    """Root of F'(c) = 0 in the published closed form."""
    g, u = spec.gamma, spec.u
    if spec.kind == "F1":
        den = g * (g * u ** 3 + 3 * g * u ** 2 - u ** 3 + 3 * g * u - 3 * u ** 2 + g - 3 * u - 1)
        return 2 * u ** (2 - g) / den
    if spec.kind == "F2":
        return u * (u - 1) / (u ** g * g ** 2 * (u ** 3 + 3 * u ** 2 + 3 * u + 1))
    k1, k2 = spec.k1, spec.k2
    num = (g * k1 - u * k2 - k2) * u
    den = (g ** 2 * u ** 2 * k1 + 2 * g ** 2 * u * k1 + g ** 2 * k1 - u ** 2 * k2 - 2 * u * k2 - k2) * u ** g
    return -num / den


def second_derivative_closed(spec: CriterionSpec) -> float:
    """F''(c), constant in c since the criteria are quadratic."""
    g, u = spec.gamma, spec.u
    if spec.kind == "F1":
        return 2 * (g * (g - 1) * u ** (g - 2)) ** 2
    if spec.kind == "F2":
        return 2 * (u ** g * g ** 2) ** 2
    return 2 * u ** (2 * g) * (spec.k1 * g ** 2 - spec.k2)


@dataclass(frozen=True)
class MinimizerResult:
    c_min: float  # closed form
    value: float
    second_derivative: float
    c_min_numeric: float


def _numeric_minimizer(spec: CriterionSpec, bounds=(-1.0, 1.0), xatol=1e-12) -> float:
    res = minimize_scalar(
        lambda c: eval_criterion(spec, c), bounds=bounds, method="bounded",
        options={"xatol": xatol},
    )
    return float(res.x)


def minimize_criterion(spec: CriterionSpec) -> MinimizerResult:
    """Closed-form minimizer cross-checked by derivative-free minimization.

    Raises when the bracketing minimizer on c in [-1, 1] disagrees with the
    closed form beyond 1e-8 (an implementation fault, since the criteria
    are exact quadratics).
    """
    if spec.u == 0:
        raise ValueError("minimizer is degenerate at u = 0 (second derivative vanishes)")
    c_closed = closed_form_minimizer(spec)
    c_num = _numeric_minimizer(spec)
    if abs(c_closed - c_num) > 1e-8:
        raise ArithmeticError(
            f"{spec.kind}: closed-form minimizer {c_closed:.12g} and numeric "
            f"minimizer {c_num:.12g} disagree beyond 1e-8"
        )
    d2 = second_derivative_closed(spec)
    return MinimizerResult(
        c_min=c_closed,
        value=eval_criterion(spec, c_closed),
        second_derivative=d2,
        c_min_numeric=c_num,
    )


def criteria_sweep(system: SlowFastSystem, u: float, c_values, k1: float, k2: float):
    """Rows (c, F1, F2, F3) over the family parameter sweep."""
    specs = {
        kind: CriterionSpec(kind=kind, u=u, system=system, k1=k1, k2=k2) for kind in CRITERIA
    }
    rows = []
    for c in np.asarray(c_values, dtype=float):
        c = float(c)
        rows.append((c,) + tuple(float(eval_criterion(specs[kind], c)) for kind in CRITERIA))
    return rows


@dataclass
class SufficientReport:
    """Outcome of the two-direction sufficiency check on the invariant family."""

    u_samples: tuple[float, ...]
    c_nonzero: tuple[float, ...]
    max_abs_K_c0: float
    max_abs_K_family: float
    f3_minimizer_at_c0: dict[float, float]  # u -> closed-form c*
    violations: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def sufficient_characterization_check(
    system: SlowFastSystem,
    grid: GridSpec,
    u_samples=(0.5, 1.0, 2.0, 3.0),
    c_nonzero=(0.05, -0.5, 1.0),
    flat_tol: float = 1e-7,
) -> SufficientReport:
    """Verify both directions of the family characterization on Davis-Skodje.

    (i) c = 0 is curvature-flat on the grid and F3-minimal (with k1 = 1,
    k2 = gamma/(u+1)) at every sampled u != 0; (ii) c != 0 members are
    equally curvature-flat yet strictly not F3-minimal.  Violations are
    listed, not raised.
    """
    if system.name != "davis_skodje":
        raise ValueError("sufficiency study is specific to davis_skodje")
    gamma = system.params["gamma"]
    violations = []

    field0 = curvature_field(system, invariant_family(system, 0.0), grid, mode="closed")
    if field0.max_abs_K > flat_tol:
        violations.append(f"c=0 grid max|K|={field0.max_abs_K:.3e} exceeds {flat_tol:g}")

    max_family = 0.0
    for c in c_nonzero:
        fc = curvature_field(system, invariant_family(system, c), grid, mode="closed")
        max_family = max(max_family, fc.max_abs_K)
        if fc.max_abs_K > flat_tol:
            violations.append(f"family c={c:g} not curvature-flat (max|K|={fc.max_abs_K:.3e})")

    f3_roots = {}
    for u in u_samples:
        if u == 0:
            continue  # second-derivative positivity claims exclude u = 0
        spec = CriterionSpec("F3", u, system, k1=1.0, k2=gamma / (u + 1.0))
        c_star = closed_form_minimizer(spec)
        f3_roots[u] = c_star
        if abs(c_star) > 1e-10:
            violations.append(f"F3 minimizer at u={u:g} is {c_star:.3e}, not 0")
        f0 = eval_criterion(spec, 0.0)
        for c in c_nonzero:
            if not eval_criterion(spec, c) > f0:
                violations.append(f"F3(c={c:g}) not above F3(0) at u={u:g}")

    return SufficientReport(
        u_samples=tuple(u_samples),
        c_nonzero=tuple(c_nonzero),
        max_abs_K_c0=field0.max_abs_K,
        max_abs_K_family=max_family,
        f3_minimizer_at_c0=f3_roots,
        violations=violations,
    )
