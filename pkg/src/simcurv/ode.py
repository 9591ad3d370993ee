"""Adaptive explicit Runge-Kutta integration of the registered models.

A Dormand-Prince 5(4) pair with embedded error control and a quartic dense
interpolant realizes the flow map used by the shooting solver; the stepping
loop lives in :mod:`simcurv._kernels` so it can run compiled.  Default
tolerances are deliberately tight: graph curvature takes second and third
differences of the solved boundary values, so integration error has to sit
well below the differencing steps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import IntegrationError
from .systems import SlowFastSystem

__all__ = ["IntegratorConfig", "Trajectory", "integrate"]


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-10
    atol: float = 1e-12
    h_init: float = 0.0  # <= 0 selects the step heuristically
    h_min: float = 1e-14
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("rtol and atol must be positive")
        if self.h_min <= 0:
            raise ValueError("h_min must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


DEFAULT_CONFIG = IntegratorConfig()


@dataclass(frozen=True)
class Trajectory:
    """Accepted nodes plus the per-step dense-output polynomials.

    ``dense_eval(t)`` interpolates anywhere inside the integration span and
    reproduces the stored states exactly at the nodes.
    """

    times: np.ndarray  # (N,), strictly monotone in integration direction
    states: np.ndarray  # (N, n)
    _dense_q: np.ndarray  # (N-1, n, 4)

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def end_state(self) -> np.ndarray:
        return self.states[-1]

    def dense_eval(self, t):
        """Continuous interpolant over the integration span."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        tq = np.atleast_1d(t)
        lo, hi = (self.times[0], self.times[-1]) if self.times[-1] >= self.times[0] else (
            self.times[-1],
            self.times[0],
        )
        if np.any(tq < lo - 1e-12) or np.any(tq > hi + 1e-12):
            raise ValueError(f"dense evaluation outside span [{lo}, {hi}]")
        ts = self.times
        sign = 1.0 if ts[-1] >= ts[0] else -1.0
        out = np.empty((tq.shape[0], self.states.shape[1]))
        for i, ti in enumerate(tq):
            j = int(np.searchsorted(sign * ts, sign * ti, side="right")) - 1
            j = min(max(j, 0), len(ts) - 2)
            if ti == ts[j]:
                out[i] = self.states[j]
                continue
            if ti == ts[j + 1]:
                out[i] = self.states[j + 1]
                continue
            h = ts[j + 1] - ts[j]
            s = (ti - ts[j]) / h
            powers = np.array([s, s * s, s ** 3, s ** 4])
            out[i] = self.states[j] + self._dense_q[j] @ powers
        return out[0] if scalar else out

    def __call__(self, t):
        return self.dense_eval(t)


_STATUS_MESSAGES = {
    _kernels.STEP_UNDERFLOW: (
        "step size underflow (below h_min): the configuration is stiffer than the "
        "explicit integrator budget; reduce t* or the stiffness parameter range"
    ),
    _kernels.MAX_STEPS_EXCEEDED: "maximum step count exceeded",
    _kernels.NONFINITE_RHS: "non-finite right-hand side encountered",
}


def integrate(
    system: SlowFastSystem,
    state0,
    t_span,
    config: IntegratorConfig | None = None,
    *,
    rhs_mode: int = _kernels.RHS_FULL,
) -> Trajectory:
    """Integrate ``system`` from ``state0`` over ``t_span``.

    Pure function of its arguments; error per step is controlled against
    atol + rtol*|state| by the embedded pair.  ``rhs_mode`` selects the full
    system or the slow block with frozen fast variables (shooting guess).
    """
    config = config or DEFAULT_CONFIG
    state0 = np.asarray(state0, dtype=float)
    if state0.shape != (system.n,):
        raise ValueError(f"state0 must have dimension {system.n}, got shape {state0.shape}")
    if not np.all(np.isfinite(state0)):
        raise ValueError("state0 must be finite")
    t0, t1 = float(t_span[0]), float(t_span[1])
    # overflow inside a step is caught by the kernel's finiteness check
    with np.errstate(over="ignore", invalid="ignore"):
        status, ts, ys, qs = _kernels.integrate(
            system.kernel_id,
            system.kernel_params,
            state0,
            t0,
            t1,
            config.rtol,
            config.atol,
            config.h_init,
            config.h_min,
            config.max_steps,
            rhs_mode,
        )
    if status != _kernels.OK:
        raise IntegrationError(
            f"{system.name}: {_STATUS_MESSAGES[status]} at t={ts[-1]:.6g} "
            f"(span [{t0:g}, {t1:g}])"
        )
    return Trajectory(times=ts, states=ys, _dense_q=qs)
