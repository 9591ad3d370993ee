"""Single-shooting solver for the trajectory-bundle boundary value problem.

Given a lift ``a`` coupling y(0) = a(x(0)) and a target x(t*) = x*, the
solver finds the initial slow state xi = x(0) by damped Newton iteration on
the residual r(xi) = x(t*; xi, a(xi)) - x* and reads off y* = y(t*).  The
fast variables enter only through the initial lift, so fast contraction
does not ill-condition the residual; the slow flow over the short horizons
used here is mildly contracting in reverse and Newton converges in a
handful of iterations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import IntegrationError, ShootingError
from .ode import IntegratorConfig, Trajectory, integrate
from .systems import InitialValueFunction, SlowFastSystem

__all__ = ["BvpProblem", "BvpConfig", "BvpSolution", "solve_bvp"]


@dataclass(frozen=True)
class BvpProblem:
    system: SlowFastSystem
    t_star: float
    x_star: np.ndarray
    a: InitialValueFunction

    def __post_init__(self):
        object.__setattr__(self, "x_star", np.atleast_1d(np.asarray(self.x_star, dtype=float)))
        if self.x_star.shape != (self.system.k,):
            raise ValueError(
                f"x_star must have dimension {self.system.k}, got shape {self.x_star.shape}"
            )
        if self.a.k != self.system.k or self.a.m != self.system.m:
            raise ValueError("lift dimensions do not match the system")


@dataclass(frozen=True)
class BvpConfig:
    newton_tol: float = 1e-10  # convergence threshold on |r|_inf
    max_iters: int = 25
    fd_step: float = 1e-7  # relative Jacobian perturbation
    max_halvings: int = 10
    check_second_guess: bool = False  # flag multiple-root suspicion
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)


DEFAULT_BVP_CONFIG = BvpConfig()


@dataclass
class BvpSolution:
    xi0: np.ndarray  # solved initial slow state x(0)
    y_star: np.ndarray
    trajectory: Trajectory
    newton_iters: int
    residual_norm: float
    multiple_root_suspected: bool = False


def _shoot(problem: BvpProblem, xi: np.ndarray, config: BvpConfig) -> Trajectory:
    state0 = np.concatenate([xi, problem.a(xi)])
    return integrate(problem.system, state0, (0.0, problem.t_star), config.integrator)


def default_initial_guess(problem: BvpProblem) -> np.ndarray:
    """Backward slow-subsystem integration from x* with the lift frozen at a(x*).

    Cheap and accurate when the slow block is weakly coupled to the fast
    variables; falls back to x* itself if the backward sweep fails.
    """
    system = problem.system
    state = np.concatenate([problem.x_star, problem.a(problem.x_star)])
    try:
        guess_cfg = IntegratorConfig(rtol=1e-8, atol=1e-10)
        tr = integrate(
            system, state, (problem.t_star, 0.0), guess_cfg, rhs_mode=_kernels.RHS_SLOW_FROZEN
        )
        return tr.end_state[: system.k].copy()
    except IntegrationError:
        return problem.x_star.copy()


def _newton(problem: BvpProblem, xi: np.ndarray, config: BvpConfig):
    k = problem.system.k
    traj = _shoot(problem, xi, config)
    r = traj.end_state[:k] - problem.x_star
    rnorm = float(np.max(np.abs(r)))
    iters = 0
    while rnorm > config.newton_tol:
        if iters >= config.max_iters:
            raise ShootingError(
                f"{problem.system.name}: shooting Newton did not converge within "
                f"{config.max_iters} iterations at t*={problem.t_star:g}, "
                f"x*={problem.x_star}, |r|={rnorm:.3e}, xi={xi}"
            )
        J = np.empty((k, k))
        for j in range(k):
            h = config.fd_step * max(1.0, abs(xi[j]))
            xip = xi.copy()
            xip[j] += h
            rp = _shoot(problem, xip, config).end_state[:k] - problem.x_star
            J[:, j] = (rp - r) / h
        try:
            delta = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError as exc:
            raise ShootingError(
                f"{problem.system.name}: singular shooting Jacobian at xi={xi}"
            ) from exc
        lam = 1.0
        for _ in range(config.max_halvings + 1):
            xi_new = xi + lam * delta
            traj_new = _shoot(problem, xi_new, config)
            r_new = traj_new.end_state[:k] - problem.x_star
            rnorm_new = float(np.max(np.abs(r_new)))
            if rnorm_new < rnorm or rnorm_new <= config.newton_tol:
                break
            lam *= 0.5
        else:
            raise ShootingError(
                f"{problem.system.name}: shooting line search stalled at xi={xi}, "
                f"|r|={rnorm:.3e}"
            )
        xi, traj, r, rnorm = xi_new, traj_new, r_new, rnorm_new
        iters += 1
    return xi, traj, rnorm, iters


def solve_bvp(
    problem: BvpProblem,
    config: BvpConfig | None = None,
    initial_guess=None,
) -> BvpSolution:
    """Solve the bundle BVP; returns y* = y(t*) and the solved trajectory.

    Divergence of xi outside the model's meaningful domain (e.g. negative
    enzyme concentrations) is reported through the solver errors rather
    than clamped.  With ``config.check_second_guess`` the solve is repeated
    from x* itself and disagreement beyond 1e-8 flags a multiple-root
    suspicion on the returned solution.
    """
    config = config or DEFAULT_BVP_CONFIG
    system = problem.system

    if problem.t_star == 0.0:
        xi = problem.x_star.copy()
        traj = _shoot(problem, xi, config)
        return BvpSolution(
            xi0=xi,
            y_star=traj.end_state[system.k :].copy(),
            trajectory=traj,
            newton_iters=0,
            residual_norm=0.0,
        )

    if initial_guess is not None:
        guesses = [np.atleast_1d(np.asarray(initial_guess, dtype=float))]
    else:
        guesses = [default_initial_guess(problem), problem.x_star.copy()]

    last_exc = None
    for gi, guess in enumerate(guesses):
        try:
            xi, traj, rnorm, iters = _newton(problem, guess, config)
            break
        except (ShootingError, IntegrationError) as exc:
            last_exc = exc
    else:
        if len(guesses) == 1:
            raise last_exc
        raise ShootingError(
            f"{system.name}: all shooting initial guesses failed at "
            f"t*={problem.t_star:g}, x*={problem.x_star}"
        ) from last_exc

    suspected = False
    if config.check_second_guess and initial_guess is None and gi == 0:
        try:
            xi2, _, _, _ = _newton(problem, problem.x_star.copy(), config)
            suspected = bool(np.max(np.abs(xi2 - xi)) > 1e-8)
        except (ShootingError, IntegrationError):
            pass

    return BvpSolution(
        xi0=xi,
        y_star=traj.end_state[system.k :].copy(),
        trajectory=traj,
        newton_iters=iters,
        residual_norm=rnorm,
        multiple_root_suspected=suspected,
    )
