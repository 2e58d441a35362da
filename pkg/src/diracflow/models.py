"""Concrete systems: planar point vortices, the reduced free rigid body,
open/closed port-Hamiltonian systems, and mechanical systems with
velocity-linear constraints.

Each model exposes its energy, structure matrices and constraints, plus an
`implicit_system()` presentation consumed by the constraint algorithm and
the implicit steppers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import linear_dirac
from .constraints import ImplicitSystem, StabilizedSystem
from .maps import DiscretizationMap, cotangent_lift_midpoint, hat, projected_map

MIN_VORTEX_DISTANCE = 1e-8


class VortexCollisionError(RuntimeError):
    """Two vortices closer than the guard distance."""


# ---------------------------------------------------------------------------
# Point vortices


class VortexSystem:
    """n interacting point vortices in the plane.

    States are q = (x^1..x^n, y^1..y^n); the momenta attached by the singular
    Lagrangian are p = alpha(q) with the linear one-form
    alpha = -(1/2) Gamma_i y^i dx^i + (1/2) Gamma_i x^i dy^i.

    Two energy readings coexist: `energy` is the conventional double-sum
    log interaction (reported in outputs), while `hamiltonian` is its half,
    the generating function whose flow is `field`.  Both are conserved.
    """

    def __init__(self, gamma):
        self.gamma = np.asarray(gamma, dtype=float)
        if np.any(self.gamma == 0.0):
            raise ValueError("all circulations must be nonzero")
        self.n = self.gamma.size

    # -- geometry helpers

    def split(self, q):
        q = np.asarray(q, dtype=float)
        return q[:self.n], q[self.n:]

    def _pair_data(self, q):
        x, y = self.split(q)
        dx = x[:, None] - x[None, :]
        dy = y[:, None] - y[None, :]
        l2 = dx * dx + dy * dy
        off = ~np.eye(self.n, dtype=bool)
        if np.any(l2[off] < MIN_VORTEX_DISTANCE**2):
            raise VortexCollisionError("vortices closer than the guard distance")
        np.fill_diagonal(l2, 1.0)
        return dx, dy, l2, off

    # -- dynamics and energies

    def field(self, q) -> np.ndarray:
        """Velocities (xdot, ydot) of the vortex motion."""
        dx, dy, l2, off = self._pair_data(q)
        w = np.where(off, self.gamma[None, :] / l2, 0.0)
        xdot = -np.sum(w * dy, axis=1) / (2.0 * np.pi)
        ydot = np.sum(w * dx, axis=1) / (2.0 * np.pi)
        return np.concatenate([xdot, ydot])

    def f_complex(self, z) -> np.ndarray:
        """Complex pairwise sum f with conj(zdot) = f(z)."""
        z = np.asarray(z, dtype=complex)
        dz = z[:, None] - z[None, :]
        off = ~np.eye(self.n, dtype=bool)
        terms = np.where(off, self.gamma[None, :] / np.where(off, dz, 1.0), 0.0)
        return terms.sum(axis=1) / (2.0j * np.pi)

    def to_complex(self, q) -> np.ndarray:
        x, y = self.split(q)
        return x + 1j * y

    def energy(self, q) -> float:
        """Log-interaction energy, summed over ordered pairs (reported value)."""
        _, _, l2, off = self._pair_data(q)
        gg = self.gamma[:, None] * self.gamma[None, :]
        return float(np.sum(np.where(off, gg * np.log(l2), 0.0)) / (4.0 * np.pi))

    def hamiltonian(self, q) -> float:
        """Generating function of `field`; half the ordered-pair energy."""
        return 0.5 * self.energy(q)

    def grad_hamiltonian(self, q) -> np.ndarray:
        dx, dy, l2, off = self._pair_data(q)
        w = np.where(off, self.gamma[None, :] / l2, 0.0)
        gx = self.gamma * np.sum(w * dx, axis=1) / (2.0 * np.pi)
        gy = self.gamma * np.sum(w * dy, axis=1) / (2.0 * np.pi)
        return np.concatenate([gx, gy])

    def alpha(self, q) -> np.ndarray:
        x, y = self.split(q)
        return np.concatenate([-0.5 * self.gamma * y, 0.5 * self.gamma * x])

    def alpha_jacobian(self) -> np.ndarray:
        """Constant matrix S with alpha(q) = S q."""
        G = np.diag(self.gamma)
        Z = np.zeros((self.n, self.n))
        return np.block([[Z, -0.5 * G], [0.5 * G, Z]])

    def dalpha_form(self) -> np.ndarray:
        """Matrix of the symplectic two-form on the stabilized set (-d alpha)."""
        S = self.alpha_jacobian()
        return S - S.T

    # -- system presentations

    def implicit_system(self) -> ImplicitSystem:
        """Phase-space presentation on (q, p): kinematics ports carry qdot."""
        d = 2 * self.n
        S = self.alpha_jacobian()

        def drift(xs):
            q = xs[:d]
            return np.concatenate([np.zeros(d), -self.grad_hamiltonian(q)])

        def ports(xs):
            return np.vstack([np.eye(d), S.T])

        def phi(xs):
            return xs[d:] - self.alpha(xs[:d])

        def phi_jac(xs):
            return np.hstack([-S, np.eye(d)])

        return ImplicitSystem(dim=2 * d, drift=drift, ports=ports, n_ports=d,
                              constraints=[phi], constraint_jacobians=[phi_jac],
                              hamiltonian=lambda xs: self.energy(xs[:d]))

    def reduced_system(self) -> ImplicitSystem:
        """Resolved first-order system on positions only."""
        return ImplicitSystem(dim=2 * self.n, drift=self.field,
                              hamiltonian=self.energy)

    def reduced_stabilized(self) -> StabilizedSystem:
        sys = self.reduced_system()
        return StabilizedSystem(sys, [], [], lambda x: np.zeros(0), True, [], 0)

    def lagrangian(self):
        model = self

        class _SingularLagrangian:
            def value(self, q, qdot):
                return float(model.alpha(q) @ qdot - model.hamiltonian(q))

            def d_qdot(self, q, qdot):
                return model.alpha(q)

            def d_q(self, q, qdot):
                return model.alpha_jacobian().T @ qdot - model.grad_hamiltonian(q)

        return _SingularLagrangian()

    def phase_state(self, q) -> np.ndarray:
        """Lift a configuration to (q, alpha(q)) on the momentum constraint set."""
        q = np.asarray(q, dtype=float)
        return np.concatenate([q, self.alpha(q)])

    @classmethod
    def leapfrog_quartet(cls) -> tuple["VortexSystem", np.ndarray]:
        """Two symmetric vortex pairs that leapfrog past each other."""
        sys = cls([1.0, 1.0, -1.0, -1.0])
        q0 = np.array([-1.0, 1.0, -1.0, 1.0, 2.0, 2.0, -2.0, -2.0])
        return sys, q0


# ---------------------------------------------------------------------------
# Reduced free rigid body


class RigidBody:
    """Angular-momentum direction dynamics xi' = xi x I^{-1} xi on the unit sphere."""

    def __init__(self, inertia=(1.0, 2.0, 3.0)):
        self.inertia = np.asarray(inertia, dtype=float)
        if self.inertia.shape != (3,) or np.any(self.inertia <= 0.0):
            raise ValueError("inertia must be three positive principal moments")
        self._inv = 1.0 / self.inertia

    def field(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        return np.cross(xi, self._inv * xi)

    def hamiltonian(self, xi) -> float:
        xi = np.asarray(xi, dtype=float)
        return 0.5 * float(xi @ (self._inv * xi))

    def bivector(self, xi) -> np.ndarray:
        """Linear Poisson bivector; contracted with dH it returns the field."""
        return hat(xi)

    def implicit_system(self) -> ImplicitSystem:
        return ImplicitSystem(dim=3, drift=self.field, hamiltonian=self.hamiltonian)

    def step_residual(self, h, xi_k, xi_next) -> np.ndarray:
        """Simplified chord-midpoint residual; zero at solutions of the scheme."""
        xi_k = np.asarray(xi_k, dtype=float)
        xi_next = np.asarray(xi_next, dtype=float)
        s = xi_k + xi_next
        ns = np.linalg.norm(s)
        if ns < 1e-12:
            raise ValueError("antipodal states: midpoint direction undefined")
        return (xi_next - xi_k) / h - np.cross(0.5 * s, self._inv * (s / ns))

    @staticmethod
    def default_state() -> np.ndarray:
        return np.array([1.0, 1.0, 1.0]) / np.sqrt(3.0)


# ---------------------------------------------------------------------------
# Port-Hamiltonian systems


@dataclass
class PortHamiltonianSystem:
    """x' = J(x) dH(x) + B(x) u with outputs y = B^T(x) dH(x).

    mode "open" treats u as exogenous input; mode "closed" imposes the output
    constraint B^T dH = 0 and turns u into a multiplier.
    """

    n: int
    m: int
    J: Callable[[np.ndarray], np.ndarray]
    B: Callable[[np.ndarray], np.ndarray]
    hamiltonian: Callable[[np.ndarray], float]
    d_hamiltonian: Callable[[np.ndarray], np.ndarray]
    mode: str = "open"

    def __post_init__(self):
        if self.mode not in ("open", "closed"):
            raise ValueError("mode must be 'open' or 'closed'")

    def check_skew(self, x, tol: float = 1e-10) -> float:
        Jm = np.asarray(self.J(x), dtype=float)
        defect = float(np.linalg.norm(Jm + Jm.T))
        if defect > tol:
            raise ValueError(f"structure matrix is not skew at the sample point ({defect:.2e})")
        return defect

    def drift(self, x) -> np.ndarray:
        return np.asarray(self.J(x), dtype=float) @ self.d_hamiltonian(x)

    def output(self, x) -> np.ndarray:
        return np.asarray(self.B(x), dtype=float).reshape(self.n, self.m).T @ self.d_hamiltonian(x)

    def open_residual(self, rd: DiscretizationMap, h, x_k, x_next, u):
        """Discrete open-system residual and output at the reconstruction point."""
        base, vel = rd.inverse_arrays(x_k, x_next)
        u = np.asarray(u, dtype=float).reshape(self.m)
        Bm = np.asarray(self.B(base), dtype=float).reshape(self.n, self.m)
        res = vel - h * Bm @ u - h * self.drift(base)
        return res, Bm.T @ self.d_hamiltonian(base)

    def closed_residual(self, rd: DiscretizationMap, h, x_k, x_next, u):
        res, y = self.open_residual(rd, h, x_k, x_next, u)
        return np.concatenate([res, y])

    def power_identity_residual(self, rd: DiscretizationMap, h, x_k, x_next, u) -> float:
        """|h <y, u> - <dH(base), reconstructed velocity>|; zero on solutions."""
        base, vel = rd.inverse_arrays(x_k, x_next)
        u = np.asarray(u, dtype=float).reshape(self.m)
        Bm = np.asarray(self.B(base), dtype=float).reshape(self.n, self.m)
        y = Bm.T @ self.d_hamiltonian(base)
        return float(abs(h * (y @ u) - self.d_hamiltonian(base) @ vel))

    def implicit_system(self) -> ImplicitSystem:
        constraints = []
        jacobians = None
        if self.mode == "closed":
            constraints = [lambda x: self.output(x)]
        return ImplicitSystem(dim=self.n, drift=self.drift,
                              ports=lambda x: np.asarray(self.B(x), dtype=float).reshape(self.n, self.m),
                              n_ports=self.m, constraints=constraints,
                              constraint_jacobians=jacobians,
                              hamiltonian=self.hamiltonian)

    # -- pointwise structure subspaces for classification

    def port_subspace(self, x) -> linear_dirac.Subspace:
        """Span of {(J a, a)} plus the port directions {(B u, 0)}."""
        Jm = np.asarray(self.J(x), dtype=float)
        Bm = np.asarray(self.B(x), dtype=float).reshape(self.n, self.m)
        cols = [np.concatenate([Jm @ e, e]) for e in np.eye(self.n)]
        cols += [np.concatenate([Bm[:, j], np.zeros(self.n)]) for j in range(self.m)]
        mat = linear_dirac._orth(np.column_stack(cols))
        return linear_dirac.Subspace(mat, self.n)

    def closed_port_subspace(self, x) -> linear_dirac.Subspace:
        """Same span restricted to covectors annihilated by the ports."""
        Jm = np.asarray(self.J(x), dtype=float)
        Bm = np.asarray(self.B(x), dtype=float).reshape(self.n, self.m)
        kerBt = linear_dirac._null(Bm.T)
        cols = [np.concatenate([Jm @ kerBt[:, j], kerBt[:, j]])
                for j in range(kerBt.shape[1])]
        imB = linear_dirac._orth(Bm)
        cols += [np.concatenate([imB[:, j], np.zeros(self.n)]) for j in range(imB.shape[1])]
        mat = linear_dirac._orth(np.column_stack(cols)) if cols else np.zeros((2 * self.n, 0))
        return linear_dirac.Subspace(mat, self.n)


def forced_oscillator(mode: str = "open") -> PortHamiltonianSystem:
    """Unit harmonic oscillator with a force port on the momentum leg."""
    J = np.array([[0.0, 1.0], [-1.0, 0.0]])
    B = np.array([[0.0], [1.0]])
    return PortHamiltonianSystem(
        n=2, m=1,
        J=lambda x: J, B=lambda x: B,
        hamiltonian=lambda x: 0.5 * float(x @ x),
        d_hamiltonian=lambda x: np.asarray(x, dtype=float),
        mode=mode,
    )


# ---------------------------------------------------------------------------
# Mechanical systems with velocity-linear constraints


class NonholonomicSystem:
    """Kinetic-plus-potential mechanics restricted by mu(q) qdot = 0.

    The metric, potential and constraint rows are callables of q; analytic
    derivatives may be supplied, otherwise central differences are used.
    The phase-space state is x = (q, p) with H = (1/2) p^T g^{-1} p + V.
    """

    def __init__(self, dim_q, metric, potential, mu,
                 d_potential=None, d_mu=None, constant_metric=False,
                 fd_step=1e-6):
        self.dim_q = dim_q
        self._metric = metric
        self._V = potential
        self._mu = mu
        self._dV = d_potential
        self._dmu = d_mu
        self.constant_metric = constant_metric
        self.fd_step = fd_step
        self.m = np.atleast_2d(np.asarray(mu(np.zeros(dim_q)), dtype=float)).shape[0]

    # -- metric data

    def metric(self, q) -> np.ndarray:
        return np.asarray(self._metric(q), dtype=float).reshape(self.dim_q, self.dim_q)

    def metric_inverse(self, q) -> np.ndarray:
        return np.linalg.inv(self.metric(q))

    def metric_inverse_derivative(self, q) -> np.ndarray:
        """d g^{rs} / d q^k with index order [r, s, k]."""
        n = self.dim_q
        if self.constant_metric:
            return np.zeros((n, n, n))
        out = np.zeros((n, n, n))
        q = np.asarray(q, dtype=float)
        for k in range(n):
            h = self.fd_step * max(1.0, abs(q[k]))
            qp, qm = q.copy(), q.copy()
            qp[k] += h
            qm[k] -= h
            out[:, :, k] = (self.metric_inverse(qp) - self.metric_inverse(qm)) / (2 * h)
        return out

    def V(self, q) -> float:
        return float(self._V(q))

    def dV(self, q) -> np.ndarray:
        if self._dV is not None:
            return np.asarray(self._dV(q), dtype=float)
        q = np.asarray(q, dtype=float)
        out = np.zeros(self.dim_q)
        for k in range(self.dim_q):
            h = self.fd_step * max(1.0, abs(q[k]))
            qp, qm = q.copy(), q.copy()
            qp[k] += h
            qm[k] -= h
            out[k] = (self.V(qp) - self.V(qm)) / (2 * h)
        return out

    def mu(self, q) -> np.ndarray:
        return np.atleast_2d(np.asarray(self._mu(q), dtype=float))

    def d_mu(self, q) -> np.ndarray:
        """d mu^a_i / d q^k with index order [a, i, k]."""
        if self._dmu is not None:
            return np.asarray(self._dmu(q), dtype=float)
        q = np.asarray(q, dtype=float)
        out = np.zeros((self.m, self.dim_q, self.dim_q))
        for k in range(self.dim_q):
            h = self.fd_step * max(1.0, abs(q[k]))
            qp, qm = q.copy(), q.copy()
            qp[k] += h
            qm[k] -= h
            out[:, :, k] = (self.mu(qp) - self.mu(qm)) / (2 * h)
        return out

    def mu_ginv_derivative(self, q) -> np.ndarray:
        """d (mu g^{-1})^a_j / d q^k with index order [a, j, k]."""
        dmu = self.d_mu(q)
        ginv = self.metric_inverse(q)
        out = np.einsum("aik,ij->ajk", dmu, ginv)
        if not self.constant_metric:
            out = out + np.einsum("ai,ijk->ajk", self.mu(q), self.metric_inverse_derivative(q))
        return out

    # -- energies and constraint data

    def hamiltonian(self, x) -> float:
        n = self.dim_q
        q, p = x[:n], x[n:]
        return 0.5 * float(p @ self.metric_inverse(q) @ p) + self.V(q)

    def dH_q(self, q, p) -> np.ndarray:
        return 0.5 * np.einsum("rsk,r,s->k", self.metric_inverse_derivative(q), p, p) + self.dV(q)

    def drift(self, x) -> np.ndarray:
        n = self.dim_q
        q, p = x[:n], x[n:]
        return np.concatenate([self.metric_inverse(q) @ p, -self.dH_q(q, p)])

    def constraint_value(self, x) -> np.ndarray:
        n = self.dim_q
        q, p = x[:n], x[n:]
        return self.mu(q) @ self.metric_inverse(q) @ p

    def constraint_jacobian_rows(self, x) -> np.ndarray:
        n = self.dim_q
        q, p = x[:n], x[n:]
        A = self.mu(q) @ self.metric_inverse(q)
        dA = self.mu_ginv_derivative(q)
        dq_part = np.einsum("ajk,j->ak", dA, p)
        return np.hstack([dq_part, A])

    def C(self, q) -> np.ndarray:
        A = self.mu(q) @ self.metric_inverse(q)
        return A @ self.mu(q).T

    def C_condition(self, q) -> float:
        return float(np.linalg.cond(self.C(q)))

    def projector_matrix(self, q) -> np.ndarray:
        """Covector projector with image in {mu g^{-1} p = 0}; g^{-1}-orthogonal."""
        mu = self.mu(q)
        ginv = self.metric_inverse(q)
        C = mu @ ginv @ mu.T
        return np.eye(self.dim_q) - mu.T @ np.linalg.solve(C, mu @ ginv)

    def project_covector(self, q, alpha) -> np.ndarray:
        return self.projector_matrix(q) @ np.asarray(alpha, dtype=float)

    def project_state(self, x) -> np.ndarray:
        n = self.dim_q
        q, p = np.asarray(x[:n], dtype=float), np.asarray(x[n:], dtype=float)
        return np.concatenate([q, self.project_covector(q, p)])

    def multiplier_closed_form(self, x) -> np.ndarray:
        from .constraints import multiplier_closed_form_nonholonomic
        return multiplier_closed_form_nonholonomic(self)(x)

    # -- presentations

    def implicit_system(self) -> ImplicitSystem:
        n = self.dim_q

        def ports(x):
            q = x[:n]
            return np.vstack([np.zeros((n, self.m)), self.mu(q).T])

        return ImplicitSystem(dim=2 * n, drift=self.drift, ports=ports,
                              n_ports=self.m,
                              constraints=[self.constraint_value],
                              constraint_jacobians=[self.constraint_jacobian_rows],
                              hamiltonian=self.hamiltonian)

    def stabilized(self, multipliers: str = "closed_form") -> StabilizedSystem:
        """Stabilized presentation with multipliers resolved on the constraint set."""
        sys = self.implicit_system()
        if multipliers == "closed_form":
            lam = self.multiplier_closed_form
        elif multipliers == "algorithm":
            from . import constraints as _ca
            lam = _ca.run(sys, seeds=[self.project_state(np.ones(2 * self.dim_q))]).multiplier_map
        else:
            raise ValueError("multipliers must be 'closed_form' or 'algorithm'")
        return StabilizedSystem(sys, [self.constraint_value],
                                [self.constraint_jacobian_rows],
                                lam, True, [], 1)

    def projected_lift_map(self) -> DiscretizationMap:
        """Midpoint lift followed by the covector projection on both legs."""
        return projected_map(cotangent_lift_midpoint(), self.project_state)

    def resolved_field(self, x) -> np.ndarray:
        """Drift plus constraint forces from the closed-form multipliers."""
        n = self.dim_q
        lam = self.multiplier_closed_form(x)
        forces = self.mu(x[:n]).T @ lam
        return self.drift(x) + np.concatenate([np.zeros(n), forces])

    def method1_residual(self, h, x_k, x_next, lam) -> np.ndarray:
        """Midpoint-lift residual with constraints held at the midpoint."""
        n = self.dim_q
        x_k = np.asarray(x_k, dtype=float)
        x_next = np.asarray(x_next, dtype=float)
        mid = 0.5 * (x_k + x_next)
        q_m, p_m = mid[:n], mid[n:]
        dq = (x_next[:n] - x_k[:n]) / h
        dp = (x_next[n:] - x_k[n:]) / h
        lam = np.asarray(lam, dtype=float).reshape(self.m)
        r1 = dq - self.metric_inverse(q_m) @ p_m
        r2 = dp + self.dH_q(q_m, p_m) - self.mu(q_m).T @ lam
        r3 = self.mu(q_m) @ self.metric_inverse(q_m) @ p_m
        return np.concatenate([r1, r2, r3])

    def as_closed_port_hamiltonian(self) -> PortHamiltonianSystem:
        n = self.dim_q
        Jc = np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])

        def dH(x):
            q, p = x[:n], x[n:]
            return np.concatenate([self.dH_q(q, p), self.metric_inverse(q) @ p])

        return PortHamiltonianSystem(
            n=2 * n, m=self.m,
            J=lambda x: Jc,
            B=lambda x: np.vstack([np.zeros((n, self.m)), self.mu(x[:n]).T]),
            hamiltonian=self.hamiltonian,
            d_hamiltonian=dH,
            mode="closed",
        )


def nonholonomic_particle(potential: str = "none") -> NonholonomicSystem:
    """Particle in R^3 with identity metric and the constraint zdot = y xdot.

    `potential` is "none" (free) or "quadratic" (V = x^2 + y^2).
    """
    if potential == "none":
        V = lambda q: 0.0
        dV = lambda q: np.zeros(3)
    elif potential == "quadratic":
        V = lambda q: float(q[0] ** 2 + q[1] ** 2)
        dV = lambda q: np.array([2.0 * q[0], 2.0 * q[1], 0.0])
    else:
        raise ValueError("potential must be 'none' or 'quadratic'")

    def mu(q):
        return np.array([[-q[1], 0.0, 1.0]])

    def dmu(q):
        out = np.zeros((1, 3, 3))
        out[0, 0, 1] = -1.0
        return out

    return NonholonomicSystem(
        dim_q=3,
        metric=lambda q: np.eye(3),
        potential=V, mu=mu,
        d_potential=dV, d_mu=dmu,
        constant_metric=True,
    )


# ---------------------------------------------------------------------------
# Registry


def build_model(name: str, params: dict | None = None):
    """Construct a bundled model by registry name."""
    params = dict(params or {})
    if name == "vortices":
        gamma = params.get("gamma")
        if gamma is None:
            return VortexSystem.leapfrog_quartet()[0]
        return VortexSystem(gamma)
    if name == "rigid_body":
        return RigidBody(params.get("inertia", (1.0, 2.0, 3.0)))
    if name == "ph_open":
        return forced_oscillator("open")
    if name == "ph_closed":
        mode = params.get("variant", "particle")
        if mode == "oscillator":
            return forced_oscillator("closed")
        return nonholonomic_particle(params.get("potential", "none")).as_closed_port_hamiltonian()
    if name == "nonholonomic_particle":
        return nonholonomic_particle(params.get("potential", "none"))
    raise KeyError(f"unknown model '{name}'")


MODEL_NAMES = ("vortices", "rigid_body", "ph_open", "ph_closed", "nonholonomic_particle")
