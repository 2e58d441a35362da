"""Constraint algorithm for implicit systems that are affine in multipliers.

An implicit differential equation is presented as

    xdot = drift(x) + ports(x) @ lam,    Phi(x) = 0,

with unknown multipliers lam.  Differentiating the constraints along the
flow produces tangency conditions that either determine multipliers (where
the matrix dPhi @ ports is invertible) or yield new constraints (the
components of dPhi @ drift outside its column space).  Iterating until no
new constraints appear extracts the subset of states from which solutions
can evolve without leaving the constraint set.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

RANK_RTOL = 1e-10
STABILIZE_TOL = 1e-8


class EmptyConstraintSetError(RuntimeError):
    """No feasible point could be found on the current constraint set."""


@dataclass
class ImplicitSystem:
    """Multiplier-affine presentation of an implicit differential equation.

    drift and ports are evaluated at states x in R^dim; each entry of
    `constraints` returns a scalar or a 1-d array of constraint values.
    `constraint_jacobians`, when given, must match `constraints` entry by
    entry and return the corresponding gradient rows; otherwise gradients
    fall back to central differences.
    """

    dim: int
    drift: Callable[[np.ndarray], np.ndarray]
    ports: Callable[[np.ndarray], np.ndarray] | None = None
    n_ports: int = 0
    constraints: Sequence[Callable] = ()
    constraint_jacobians: Sequence[Callable] | None = None
    hamiltonian: Callable[[np.ndarray], float] | None = None
    fd_step: float = 1e-6

    def ports_matrix(self, x) -> np.ndarray:
        if self.ports is None or self.n_ports == 0:
            return np.zeros((self.dim, 0))
        B = np.asarray(self.ports(x), dtype=float)
        return B.reshape(self.dim, self.n_ports)


def constraint_values(constraints: Sequence[Callable], x) -> np.ndarray:
    vals = []
    for c in constraints:
        v = np.atleast_1d(np.asarray(c(x), dtype=float))
        vals.append(v)
    if not vals:
        return np.zeros(0)
    return np.concatenate(vals)


def _fd_jacobian_rows(func, x, fd_step) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    f0 = np.atleast_1d(np.asarray(func(x), dtype=float))
    J = np.zeros((f0.size, x.size))
    for j in range(x.size):
        h = fd_step * max(1.0, abs(x[j]))
        xp, xm = x.copy(), x.copy()
        xp[j] += h
        xm[j] -= h
        J[:, j] = (np.atleast_1d(func(xp)) - np.atleast_1d(func(xm))) / (2 * h)
    return J


def constraint_jacobian(sys: ImplicitSystem, constraints: Sequence[Callable], x,
                        jacobians: Sequence[Callable] | None = None) -> np.ndarray:
    """Stacked gradient rows of the constraint values at x."""
    rows = []
    for i, c in enumerate(constraints):
        if jacobians is not None and i < len(jacobians) and jacobians[i] is not None:
            rows.append(np.atleast_2d(np.asarray(jacobians[i](x), dtype=float)))
        else:
            rows.append(_fd_jacobian_rows(c, x, sys.fd_step))
    if not rows:
        return np.zeros((0, sys.dim))
    return np.vstack(rows)


def project_to_constraints(constraints: Sequence[Callable], seed,
                           jacobian=None, tol: float = 1e-12,
                           max_iter: int = 50, fd_step: float = 1e-6) -> np.ndarray:
    """Gauss-Newton projection of a seed point onto {Phi = 0}."""
    x = np.asarray(seed, dtype=float).copy()
    for _ in range(max_iter):
        r = constraint_values(constraints, x)
        if r.size == 0 or np.linalg.norm(r, np.inf) <= tol:
            return x
        J = jacobian(x) if jacobian is not None else _fd_jacobian_rows(
            lambda y: constraint_values(constraints, y), x, fd_step)
        dx, *_ = np.linalg.lstsq(J, -r, rcond=None)
        x = x + dx
    raise EmptyConstraintSetError("could not project seed onto the constraint set")


@dataclass
class ConstraintLevel:
    """Cumulative constraint description after k tangency passes."""

    index: int
    constraints: list = field(default_factory=list)
    constraint_jacobians: list | None = None
    multiplier_rank: int = 0
    new_constraint_count: int = 0


@dataclass
class StabilizedSystem:
    """Terminal output of the constraint algorithm.

    On the final constraint set the closed-loop field
    drift + ports @ multiplier_map is tangent to it.
    """

    system: ImplicitSystem
    final_constraints: list
    final_jacobians: list | None
    multiplier_map: Callable[[np.ndarray], np.ndarray]
    terminated: bool
    levels: list
    steps_taken: int

    def field(self, x) -> np.ndarray:
        v = np.asarray(self.system.drift(x), dtype=float)
        B = self.system.ports_matrix(x)
        if B.shape[1]:
            v = v + B @ self.multiplier_map(x)
        return v

    def constraint_residual(self, x) -> float:
        vals = constraint_values(self.final_constraints, x)
        return float(np.linalg.norm(vals, np.inf)) if vals.size else 0.0


def _tangency_data(sys: ImplicitSystem, level: ConstraintLevel, x):
    """Return (G, b) with tangency conditions b + G lam = 0 at x."""
    J = constraint_jacobian(sys, level.constraints, x, level.constraint_jacobians)
    b = J @ np.asarray(sys.drift(x), dtype=float)
    G = J @ sys.ports_matrix(x)
    return G, b


def multiplier_from_tangency(sys: ImplicitSystem, level: ConstraintLevel, x) -> np.ndarray:
    """Least-squares multiplier solving the tangency conditions at x."""
    G, b = _tangency_data(sys, level, x)
    if G.shape[1] == 0:
        return np.zeros(0)
    lam, *_ = np.linalg.lstsq(G, -b, rcond=None)
    return lam


def constraint_step(sys: ImplicitSystem, level: ConstraintLevel, samples,
                    rtol: float = RANK_RTOL, stab_tol: float = STABILIZE_TOL) -> ConstraintLevel:
    """One tangency pass: determine multipliers, collect secondary constraints.

    `samples` are feasible points of the current constraint set used for the
    rank decisions.  The returned level appends the multiplier-independent
    tangency residual as a (vector-valued) constraint when it does not vanish.
    """
    if not level.constraints:
        return ConstraintLevel(level.index + 1, [], [], 0, 0)

    if len(samples) == 0:
        raise EmptyConstraintSetError("no feasible samples on the current constraint set")

    ranks = []
    residual_max = 0.0
    for x in samples:
        G, b = _tangency_data(sys, level, x)
        if G.shape[1]:
            s = np.linalg.svd(G, compute_uv=False)
            ranks.append(int(np.sum(s > rtol * s[0])) if s.size and s[0] > 0 else 0)
            lam, *_ = np.linalg.lstsq(G, -b, rcond=None)
            resid = b + G @ lam
        else:
            ranks.append(0)
            resid = b
        if resid.size:
            residual_max = max(residual_max, float(np.linalg.norm(resid, np.inf)))

    if len(set(ranks)) > 1:
        warnings.warn(f"multiplier rank varies across samples: {sorted(set(ranks))}",
                      stacklevel=2)
    rank = max(ranks) if ranks else 0

    new_constraints = []
    new_jacobians = None
    if residual_max > stab_tol:
        def secondary(x, _sys=sys, _level=level):
            G, b = _tangency_data(_sys, _level, x)
            if G.shape[1]:
                lam, *_ = np.linalg.lstsq(G, -b, rcond=None)
                return b + G @ lam
            return b

        new_constraints = [secondary]
        new_jacobians = [None]

    jac = list(level.constraint_jacobians) if level.constraint_jacobians else [None] * len(level.constraints)
    return ConstraintLevel(
        index=level.index + 1,
        constraints=list(level.constraints) + new_constraints,
        constraint_jacobians=jac + (new_jacobians or []),
        multiplier_rank=rank,
        new_constraint_count=len(new_constraints),
    )


def run(sys: ImplicitSystem, max_levels: int = 10, seeds=None,
        rtol: float = RANK_RTOL, stab_tol: float = STABILIZE_TOL) -> StabilizedSystem:
    """Iterate tangency passes until the constraint set stabilizes.

    Returns a StabilizedSystem whose `terminated` flag records whether the
    iteration settled within `max_levels`; a partial result is returned
    otherwise.  Feasible samples are obtained by Gauss-Newton projection of
    the seeds (default: the origin plus a few lattice points).
    """
    if max_levels < 1:
        raise ValueError("max_levels must be at least 1")
    if seeds is None:
        rng = np.random.default_rng(0)
        seeds = [np.zeros(sys.dim)] + [rng.normal(size=sys.dim) for _ in range(4)]

    level = ConstraintLevel(0, list(sys.constraints),
                            list(sys.constraint_jacobians) if sys.constraint_jacobians else None)
    levels = [level]
    terminated = False
    steps = 0

    if not level.constraints:
        # nothing to stabilize; all multipliers stay free
        def free_multiplier(x, m=sys.n_ports):
            return np.zeros(m)

        return StabilizedSystem(sys, [], [], free_multiplier, True, levels, 0)

    for _ in range(max_levels):
        samples = []
        for seed in seeds:
            try:
                samples.append(project_to_constraints(
                    level.constraints, seed,
                    tol=1e-10, fd_step=sys.fd_step))
            except EmptyConstraintSetError:
                continue
        if not samples:
            raise EmptyConstraintSetError("constraint set appears empty: all projections failed")

        nxt = constraint_step(sys, level, samples, rtol=rtol, stab_tol=stab_tol)
        steps += 1
        if nxt.new_constraint_count == 0:
            level = nxt
            terminated = True
            break
        levels.append(nxt)
        level = nxt

    final_level = level

    def multiplier_map(x, _sys=sys, _level=final_level):
        return multiplier_from_tangency(_sys, _level, x)

    return StabilizedSystem(
        system=sys,
        final_constraints=list(final_level.constraints),
        final_jacobians=final_level.constraint_jacobians,
        multiplier_map=multiplier_map,
        terminated=terminated,
        levels=levels + ([final_level] if terminated else []),
        steps_taken=steps,
    )


def multiplier_closed_form_nonholonomic(model) -> Callable[[np.ndarray], np.ndarray]:
    """Closed-form multipliers for mechanical systems with velocity-linear constraints.

    For H = (1/2) g^{ij} p_i p_j + V and constraint rows mu, the multipliers
    that keep the flow tangent to {mu g^{-1} p = 0} are

        lam = C^{-1} (mu g^{-1} dV + (1/2) mu g^{-1} d(g^{-1})[p,p] - d(mu g^{-1})[p] g^{-1} p)

    with C = mu g^{-1} mu^T.  The evaluation reports the conditioning of C
    through numpy's solve; a singular C raises LinAlgError.
    """

    def lam(x):
        n = model.dim_q
        q, p = x[:n], x[n:]
        ginv = model.metric_inverse(q)
        mu = model.mu(q)
        C = mu @ ginv @ mu.T
        dV = model.dV(q)
        dginv = model.metric_inverse_derivative(q)      # (n, n, n): [r, s, k] = d g^{rs} / d q^k
        dmuginv = model.mu_ginv_derivative(q)           # (m, n, n): [a, j, k] = d (mu g^{-1})^a_j / d q^k
        term_v = mu @ ginv @ dV
        term_g = 0.5 * np.einsum("aj,rsj,r,s->a", mu @ ginv, dginv, p, p)
        term_mu = np.einsum("ajk,kl,l,j->a", dmuginv, ginv, p, p)
        return np.linalg.solve(C, term_v + term_g - term_mu)

    return lam
