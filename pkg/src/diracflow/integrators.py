"""Implicit one-step maps built from discretization maps.

Two construction orders are provided: discretize the raw implicit system
directly (method 1), or stabilize it with the constraint algorithm first
and discretize the resolved field on the final constraint set (method 2).
Both reduce each step to a root-finding problem handled by a damped Newton
iteration with finite-difference Jacobians; an explicit second-order
Runge-Kutta step is included as the non-geometric reference.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .constraints import ImplicitSystem, StabilizedSystem, constraint_values
from .maps import DiscretizationMap, MapDomainError, PointPair, TangentVector


@dataclass(frozen=True)
class SolverConfig:
    newton_tol: float = 1e-12
    max_iter: int = 50
    fd_step: float = 1e-6
    damping: str = "backtracking"  # or "none"

    def __post_init__(self):
        if self.newton_tol <= 0:
            raise ValueError("newton_tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.damping not in ("backtracking", "none"):
            raise ValueError("damping must be 'backtracking' or 'none'")


class NewtonError(RuntimeError):
    def __init__(self, message, residual_norm=None, condition=None):
        super().__init__(message)
        self.residual_norm = residual_norm
        self.condition = condition


def fd_jacobian(func, z, step) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    f0 = np.atleast_1d(func(z))
    J = np.zeros((f0.size, z.size))
    for j in range(z.size):
        h = step * max(1.0, abs(z[j]))
        zp, zm = z.copy(), z.copy()
        zp[j] += h
        zm[j] -= h
        J[:, j] = (np.atleast_1d(func(zp)) - np.atleast_1d(func(zm))) / (2 * h)
    return J


def newton_solve(residual, guess, cfg: SolverConfig = SolverConfig()):
    """Damped Newton iteration; returns (solution, iterations, residual_norm).

    The Jacobian is rebuilt each iteration by central differences.  Non-square
    residuals are handled by least squares, which covers consistent
    overdetermined systems (e.g. projected constraint steps).  Raises
    NewtonError when the iteration stalls or the budget is exhausted.
    """
    z = np.asarray(guess, dtype=float).copy()
    r = np.atleast_1d(residual(z))
    norm = np.linalg.norm(r, np.inf)
    for it in range(cfg.max_iter):
        if norm <= cfg.newton_tol:
            return z, it, float(norm)
        J = fd_jacobian(residual, z, cfg.fd_step)
        square = J.shape[0] == J.shape[1]
        try:
            if square:
                dz = np.linalg.solve(J, -r)
            else:
                dz, *_ = np.linalg.lstsq(J, -r, rcond=None)
        except np.linalg.LinAlgError:
            s = np.linalg.svd(J, compute_uv=False)
            cond = float(s[0] / s[-1]) if s[-1] > 0 else np.inf
            raise NewtonError("singular Jacobian in Newton iteration",
                              residual_norm=float(norm), condition=cond)
        if cfg.damping == "none":
            z = z + dz
            r = np.atleast_1d(residual(z))
            norm = np.linalg.norm(r, np.inf)
            continue
        step = 1.0
        accepted = False
        for _ in range(9):  # full step plus up to 8 halvings
            z_try = z + step * dz
            r_try = np.atleast_1d(residual(z_try))
            norm_try = np.linalg.norm(r_try, np.inf)
            if norm_try < norm or norm_try <= cfg.newton_tol:
                z, r, norm = z_try, r_try, norm_try
                accepted = True
                break
            step *= 0.5
        if not accepted:
            s = np.linalg.svd(J, compute_uv=False)
            cond = float(s[0] / s[-1]) if s[-1] > 0 else np.inf
            raise NewtonError("backtracking failed to reduce the residual",
                              residual_norm=float(norm), condition=cond)
    if norm <= cfg.newton_tol:
        return z, cfg.max_iter, float(norm)
    raise NewtonError(f"Newton did not converge in {cfg.max_iter} iterations",
                      residual_norm=float(norm))


@dataclass
class StepResult:
    next_state: np.ndarray
    aux: dict = field(default_factory=dict)
    newton_iters: int = 0
    residual_norm: float = 0.0


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    energies: np.ndarray | None = None
    constraint_residuals: np.ndarray | None = None
    newton_iters: np.ndarray | None = None
    residual_norms: np.ndarray | None = None

    def __len__(self):
        return len(self.times)


def method1_step(sys: ImplicitSystem, rd: DiscretizationMap, h: float, x_k,
                 cfg: SolverConfig = SolverConfig(), inputs=None,
                 guess=None) -> StepResult:
    """Discretize-first step: (1/h) R_d^{-1}(x_k, x_{k+1}) must lie in the system.

    The reconstructed rate is matched against drift + ports @ u at the base
    point of R_d^{-1}, and any algebraic constraints are imposed there as
    well.  With `inputs` given, u is exogenous (open ports) and only
    x_{k+1} is solved for; otherwise u joins the unknowns.
    """
    if h == 0:
        raise ValueError("step size must be nonzero")
    x_k = np.asarray(x_k, dtype=float)
    n = sys.dim
    m = 0 if inputs is not None else sys.n_ports
    u_fixed = None if inputs is None else np.asarray(inputs, dtype=float).reshape(sys.n_ports)

    def residual(z):
        x_next = z[:n]
        u = u_fixed if u_fixed is not None else z[n:]
        base, vel = rd.inverse_arrays(x_k, x_next)
        r_kin = vel / h - np.asarray(sys.drift(base), dtype=float)
        B = sys.ports_matrix(base)
        if B.shape[1]:
            r_kin = r_kin - B @ u
        r_con = constraint_values(sys.constraints, base)
        return np.concatenate([r_kin, r_con])

    if guess is None:
        z0 = np.concatenate([x_k, np.zeros(m)])
    else:
        z0 = np.asarray(guess, dtype=float)
    z, iters, norm = newton_solve(residual, z0, cfg)
    x_next = z[:n]
    aux = {}
    if u_fixed is not None:
        aux["u"] = u_fixed
    elif m:
        aux["u"] = z[n:]
    return StepResult(x_next, aux, iters, norm)


def method2_step(stab: StabilizedSystem, rd_on_m0: DiscretizationMap, h: float,
                 x_k, cfg: SolverConfig = SolverConfig(), guess=None) -> StepResult:
    """Stabilize-first step on the final constraint set.

    Solves for an interior point z with resolved velocity v(z) such that the
    first leg of the discretization map lands on x_k and z satisfies the
    final constraints; the step output is the second leg.  The system is
    overdetermined but consistent, so Newton runs in least-squares mode.
    """
    if h == 0:
        raise ValueError("step size must be nonzero")
    x_k = np.asarray(x_k, dtype=float)

    def legs(z):
        v = stab.field(z)
        return rd_on_m0.forward_arrays(z, h * v)

    def residual(z):
        a, _ = legs(z)
        r = a - x_k
        con = constraint_values(stab.final_constraints, z)
        if con.size:
            r = np.concatenate([r, con])
        return r

    z0 = x_k.copy() if guess is None else np.asarray(guess, dtype=float)
    z, iters, norm = newton_solve(residual, z0, cfg)
    _, x_next = legs(z)
    aux = {"interior_point": z}
    lam = stab.multiplier_map(z)
    if np.size(lam):
        aux["multipliers"] = np.atleast_1d(lam)
    return StepResult(np.asarray(x_next, dtype=float), aux, iters, norm)


def lagrangian_midpoint_step(lagrangian, h: float, q_k, p_k,
                             cfg: SolverConfig = SolverConfig(),
                             guess=None) -> StepResult:
    """Midpoint scheme driven by a Lagrangian, regular or not.

    Solves, with qm = (q_k + q_{k+1})/2 and w = (q_{k+1} - q_k)/h,

        (p_k + p_{k+1}) / 2 = dL/dqdot(qm, w)
        (p_{k+1} - p_k) / h = dL/dq(qm, w)

    for (q_{k+1}, p_{k+1}).  `lagrangian` provides d_q(q, qdot) and
    d_qdot(q, qdot).
    """
    q_k = np.asarray(q_k, dtype=float)
    p_k = np.asarray(p_k, dtype=float)
    n = q_k.size

    def residual(z):
        q_next, p_next = z[:n], z[n:]
        qm = 0.5 * (q_k + q_next)
        w = (q_next - q_k) / h
        r1 = 0.5 * (p_k + p_next) - lagrangian.d_qdot(qm, w)
        r2 = (p_next - p_k) / h - lagrangian.d_q(qm, w)
        return np.concatenate([r1, r2])

    z0 = np.concatenate([q_k, p_k]) if guess is None else np.asarray(guess, dtype=float)
    z, iters, norm = newton_solve(residual, z0, cfg)
    return StepResult(z, {}, iters, norm)


def rk2_step(f, h: float, x_k) -> np.ndarray:
    """Explicit midpoint Runge-Kutta: x + h f(x + (h/2) f(x))."""
    x_k = np.asarray(x_k, dtype=float)
    return x_k + h * np.asarray(f(x_k + 0.5 * h * np.asarray(f(x_k), dtype=float)), dtype=float)


class StepFailure(RuntimeError):
    def __init__(self, step_index, cause):
        super().__init__(f"step {step_index} failed: {cause}")
        self.step_index = step_index
        self.cause = cause


def run_trajectory(stepper, x0, h: float, steps: int,
                   energy: Callable | None = None,
                   constraint_residual: Callable | None = None) -> Trajectory:
    """Iterate a stepper, recording per-step diagnostics.

    `stepper(x, warm)` must return a StepResult; `warm` carries the previous
    StepResult so implementations can warm-start their Newton solves.  Step
    failures propagate as StepFailure with the failing index attached.
    """
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    x = np.asarray(x0, dtype=float)
    states = [x.copy()]
    iters = [0]
    norms = [0.0]
    warm = None
    for k in range(steps):
        try:
            result = stepper(x, warm)
        except (NewtonError, MapDomainError) as exc:
            raise StepFailure(k, exc) from exc
        x = np.asarray(result.next_state, dtype=float)
        states.append(x.copy())
        iters.append(result.newton_iters)
        norms.append(result.residual_norm)
        warm = result
    states = np.asarray(states)
    times = h * np.arange(steps + 1)
    energies = None
    if energy is not None:
        energies = np.array([float(energy(s)) for s in states])
    residuals = None
    if constraint_residual is not None:
        residuals = np.array([float(constraint_residual(s)) for s in states])
    return Trajectory(times, states, energies, residuals,
                      np.asarray(iters), np.asarray(norms))


def make_method1_stepper(sys: ImplicitSystem, rd: DiscretizationMap, h: float,
                         cfg: SolverConfig = SolverConfig(), input_sequence=None):
    """Stepper closure for run_trajectory; warm-starts unknowns from the last step."""
    counter = {"k": 0}

    def stepper(x, warm):
        inputs = None
        if input_sequence is not None:
            inputs = input_sequence(counter["k"]) if callable(input_sequence) \
                else input_sequence[counter["k"]]
        m = 0 if inputs is not None else sys.n_ports
        guess = None
        if warm is not None and "u" in warm.aux and inputs is None:
            guess = np.concatenate([x, warm.aux["u"]])
        elif m:
            guess = np.concatenate([x, np.zeros(m)])
        result = method1_step(sys, rd, h, x, cfg, inputs=inputs, guess=guess)
        counter["k"] += 1
        return result

    return stepper


def make_method2_stepper(stab: StabilizedSystem, rd_on_m0: DiscretizationMap,
                         h: float, cfg: SolverConfig = SolverConfig()):
    def stepper(x, warm):
        guess = None
        if warm is not None and "interior_point" in warm.aux:
            # reuse the previous interior point shifted by the last displacement
            guess = warm.aux["interior_point"] + (x - warm.aux["_last_start"]) \
                if "_last_start" in warm.aux else None
        result = method2_step(stab, rd_on_m0, h, x, cfg, guess=guess)
        result.aux["_last_start"] = np.asarray(x, dtype=float)
        return result

    return stepper


def make_rk2_stepper(f, h: float):
    def stepper(x, warm):
        return StepResult(rk2_step(f, h, x), {}, 0, 0.0)

    return stepper


def make_lagrangian_midpoint_stepper(lagrangian, h: float,
                                     cfg: SolverConfig = SolverConfig()):
    def stepper(x, warm):
        n = x.size // 2
        return lagrangian_midpoint_step(lagrangian, h, x[:n], x[n:], cfg,
                                        guess=x.copy())

    return stepper
