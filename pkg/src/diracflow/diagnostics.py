"""Numerical verification of structural claims.

Symplecticity of an implicit one-step map is checked at the flow level: the
Jacobian A of the map is probed by central differences through the solver
and the congruence residual |A^T W(x1) A - W(x0)| is reported.  Energy
drift, constraint residuals and convergence order round out the toolbox.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .integrators import SolverConfig, method2_step
from .maps import DiscretizationMap, theta_map


@dataclass
class TwoForm:
    """Constant or state-dependent skew bilinear form."""

    matrix: np.ndarray | None = None
    func: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if (self.matrix is None) == (self.func is None):
            raise ValueError("provide exactly one of matrix, func")
        if self.matrix is not None:
            self.matrix = np.asarray(self.matrix, dtype=float)
            if np.linalg.norm(self.matrix + self.matrix.T) > 1e-12 * max(1.0, np.linalg.norm(self.matrix)):
                raise ValueError("two-form matrix must be skew-symmetric")

    def __call__(self, x) -> np.ndarray:
        return self.matrix if self.matrix is not None else np.asarray(self.func(x), dtype=float)

    @classmethod
    def canonical(cls, n: int) -> "TwoForm":
        """dq ^ dp pairing on (q, p) states of dimension 2n."""
        Z = np.zeros((n, n))
        I = np.eye(n)
        return cls(matrix=np.block([[Z, I], [-I, Z]]))


@dataclass
class FlowProbe:
    """One-step map to differentiate, anchored at a base point."""

    step: Callable[[np.ndarray], np.ndarray]
    base_point: np.ndarray
    fd_step: float = 1e-5

    def __post_init__(self):
        self.base_point = np.asarray(self.base_point, dtype=float)


def flow_jacobian(step, x, fd_step: float = 1e-5) -> np.ndarray:
    """Central-difference Jacobian of a (possibly implicit) one-step map."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(step(x), dtype=float)
    J = np.zeros((f0.size, x.size))
    for j in range(x.size):
        h = fd_step * max(1.0, abs(x[j]))
        xp, xm = x.copy(), x.copy()
        xp[j] += h
        xm[j] -= h
        J[:, j] = (np.asarray(step(xp), dtype=float) - np.asarray(step(xm), dtype=float)) / (2 * h)
    return J


def symplectic_check(probe: FlowProbe, form: TwoForm) -> float:
    """Congruence residual |A^T W(x1) A - W(x0)|_inf of the one-step map."""
    x0 = probe.base_point
    x1 = np.asarray(probe.step(x0), dtype=float)
    A = flow_jacobian(probe.step, x0, probe.fd_step)
    return float(np.max(np.abs(A.T @ form(x1) @ A - form(x0))))


def lift_symplectic_residual(lift: DiscretizationMap, state, rate) -> float:
    """Map-level symplectomorphism residual of a cotangent lift.

    The lift sends (q, p, qdot, pdot) with the tangent-lifted form
    dq ^ dpdot + dqdot ^ dp to point pairs with the difference of canonical
    forms on the two legs; the Jacobian congruence of those forms is checked.
    """
    state = np.asarray(state, dtype=float)
    rate = np.asarray(rate, dtype=float)
    n = state.size // 2

    def as_map(z):
        a, b = lift.forward_arrays(z[:2 * n], z[2 * n:])
        return np.concatenate([a, b])

    z = np.concatenate([state, rate])
    J = flow_jacobian(as_map, z, 1e-6)

    Z = np.zeros((n, n))
    I = np.eye(n)
    # coordinates (q, p, qdot, pdot): dq ^ dpdot + dqdot ^ dp
    W_in = np.block([
        [Z, Z, Z, I],
        [Z, Z, -I, Z],
        [Z, I, Z, Z],
        [-I, Z, Z, Z],
    ])
    w = np.block([[Z, I], [-I, Z]])
    W_out = np.block([[-w, np.zeros((2 * n, 2 * n))], [np.zeros((2 * n, 2 * n)), w]])
    return float(np.max(np.abs(J.T @ W_out @ J - W_in)))


def theta_scheme_step(vortices, theta: float, h: float,
                      cfg: SolverConfig = SolverConfig()) -> Callable:
    """Position-space one-step map for vortices with the theta reconstruction."""
    stab = vortices.reduced_stabilized()
    rd = theta_map(theta)

    def step(q):
        return method2_step(stab, rd, h, q, cfg).next_state

    return step


def theta_counterexample(vortices, theta: float, base_q, h: float = 0.5,
                         cfg: SolverConfig = SolverConfig()) -> float:
    """Preservation residual of the vortex area form under the theta scheme.

    theta = 1/2 preserves the form (residual at finite-difference noise);
    any other theta leaves a residual bounded away from zero.
    """
    form = TwoForm(matrix=vortices.dalpha_form())
    probe = FlowProbe(theta_scheme_step(vortices, theta, h, cfg), base_q)
    return symplectic_check(probe, form)


@dataclass
class DriftSummary:
    series: np.ndarray
    max_abs: float
    slope: float


def energy_drift(traj, energy: Callable | None = None) -> DriftSummary:
    """Per-step H(t) - H(0) series with max deviation and least-squares slope."""
    if energy is not None:
        values = np.array([float(energy(s)) for s in traj.states])
    elif traj.energies is not None:
        values = np.asarray(traj.energies, dtype=float)
    else:
        raise ValueError("trajectory has no recorded energies and no energy function given")
    series = values - values[0]
    t = np.asarray(traj.times, dtype=float)
    if len(t) > 1:
        A = np.vstack([t, np.ones_like(t)]).T
        slope = float(np.linalg.lstsq(A, series, rcond=None)[0][0])
    else:
        slope = 0.0
    return DriftSummary(series, float(np.max(np.abs(series))), slope)


def fit_order(hs: Sequence[float], errors: Sequence[float]):
    """Least-squares slope of log error against log h; flags non-monotone data."""
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if len(hs) < 3:
        raise ValueError("need at least three step sizes")
    if np.any(errors <= 0.0):
        raise ValueError("errors must be positive for a log-log fit")
    order = np.argsort(hs)
    monotone = bool(np.all(np.diff(errors[order]) >= 0.0))
    A = np.vstack([np.log(hs), np.ones_like(hs)]).T
    slope = float(np.linalg.lstsq(A, np.log(errors), rcond=None)[0][0])
    return slope, monotone


def convergence_order(run_for_h: Callable[[float], np.ndarray], reference,
                      hs: Sequence[float]):
    """Observed order from final-state errors against a reference solution."""
    reference = np.asarray(reference, dtype=float)
    errors = [float(np.linalg.norm(np.asarray(run_for_h(h), dtype=float) - reference))
              for h in hs]
    return fit_order(hs, errors)


def theta_map_form_conditions(theta: float, alpha_jacobian: np.ndarray):
    """Constant-coefficient residuals of the three pullback-matching equations
    for the theta reconstruction against a linear one-form.

    Returns the max-norm residuals (position-position, position-rate,
    rate-rate); the last vanishes only at theta = 1/2 when the form has a
    nonzero skew part.
    """
    S = np.asarray(alpha_jacobian, dtype=float)
    skew = 0.5 * (S - S.T)
    # position-position block: the constant derivative cancels between the legs
    r_qq = float(np.max(np.abs(skew - skew)))
    # position-rate block: -theta S - (1-theta) S, antisymmetrized, must match S^T - S
    M = -theta * S - (1.0 - theta) * S
    r_qv = float(np.max(np.abs((M - M.T) - (S.T - S))))
    # rate-rate block: (theta^2 - (1-theta)^2) times the skew part must vanish
    r_vv = float(np.max(np.abs((theta**2 - (1.0 - theta) ** 2) * skew)))
    return r_qq, r_qv, r_vv
