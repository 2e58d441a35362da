"""Discretization maps: invertible pairings between tangent vectors and
point pairs.

A discretization map R_d sends a tangent vector v_x to a pair of nearby
points (x1, x2) with two defining properties:

    (D1)  R_d(0_x) = (x, x)
    (D2)  the derivative of R_d^2 - R_d^1 at the zero section is the identity

so that (1/h) R_d^{-1}(x_k, x_{k+1}) is a consistent finite-difference
reading of a velocity.  The module ships the theta-family on R^n, two maps
on the unit sphere, a rotation-group map, and cotangent lifts that turn a
base map on Q into a map on T*Q.  Lifted maps are symplectomorphisms, which
is what makes the resulting one-step schemes symplectic.

All maps are immutable after construction and safe for concurrent use.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class MapDomainError(ValueError):
    """Raised when a map or its inverse is evaluated outside its validity radius."""


@dataclass(frozen=True)
class TangentVector:
    """Base point and velocity, both in ambient coordinates (arrays of equal shape)."""

    base: np.ndarray
    vel: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base", np.asarray(self.base, dtype=float))
        object.__setattr__(self, "vel", np.asarray(self.vel, dtype=float))
        if self.base.shape != self.vel.shape:
            raise ValueError("base and vel must have the same shape")


@dataclass(frozen=True)
class PointPair:
    first: np.ndarray
    second: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "first", np.asarray(self.first, dtype=float))
        object.__setattr__(self, "second", np.asarray(self.second, dtype=float))
        if self.first.shape != self.second.shape:
            raise ValueError("pair members must have the same shape")


@dataclass(frozen=True)
class CotangentState:
    """Point (q, p) of T*Q together with a rate (qdot, pdot)."""

    q: np.ndarray
    p: np.ndarray
    qdot: np.ndarray
    pdot: np.ndarray

    def __post_init__(self):
        for name in ("q", "p", "qdot", "pdot"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        sizes = {getattr(self, name).size for name in ("q", "p", "qdot", "pdot")}
        if len(sizes) != 1:
            raise ValueError("q, p, qdot, pdot must have equal dimension")

    @classmethod
    def from_tangent(cls, tv: TangentVector) -> "CotangentState":
        n = tv.base.size // 2
        return cls(tv.base[:n], tv.base[n:], tv.vel[:n], tv.vel[n:])

    def tangent(self) -> TangentVector:
        return TangentVector(np.concatenate([self.q, self.p]),
                             np.concatenate([self.qdot, self.pdot]))


class DiscretizationMap:
    """Wraps forward/inverse callables on flat array representations."""

    def __init__(self, name, forward, inverse, params=None, jacobian=None):
        self.name = name
        self.params = dict(params or {})
        self._forward = forward
        self._inverse = inverse
        self._jacobian = jacobian

    def __repr__(self):
        extras = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"DiscretizationMap({self.name}{', ' + extras if extras else ''})"

    def forward(self, tv: TangentVector) -> PointPair:
        a, b = self._forward(tv.base, tv.vel)
        return PointPair(a, b)

    def inverse(self, pp: PointPair) -> TangentVector:
        base, vel = self._inverse(pp.first, pp.second)
        return TangentVector(base, vel)

    def forward_arrays(self, base, vel):
        return self._forward(np.asarray(base, dtype=float), np.asarray(vel, dtype=float))

    def inverse_arrays(self, first, second):
        return self._inverse(np.asarray(first, dtype=float), np.asarray(second, dtype=float))

    def forward_jacobian(self, base, vel) -> np.ndarray:
        """Derivative of (R^1, R^2) with respect to (base, vel), shape (2m, 2m).

        Closed form when the map provides one, otherwise central differences
        with step 1e-6 * max(1, |state|).
        """
        base = np.asarray(base, dtype=float)
        vel = np.asarray(vel, dtype=float)
        if self._jacobian is not None:
            return self._jacobian(base, vel)
        if base.ndim != 1:
            raise NotImplementedError("numeric Jacobian only for vector states")
        m = base.size
        z = np.concatenate([base, vel])
        h = 1e-6 * max(1.0, float(np.linalg.norm(z)))
        J = np.zeros((2 * m, 2 * m))
        for j in range(2 * m):
            zp, zm = z.copy(), z.copy()
            zp[j] += h
            zm[j] -= h
            ap, bp = self._forward(zp[:m], zp[m:])
            am, bm = self._forward(zm[:m], zm[m:])
            J[:, j] = np.concatenate([(ap - am), (bp - bm)]) / (2 * h)
        return J


def theta_map(theta: float) -> DiscretizationMap:
    """R_d(x, v) = (x - theta v, x + (1 - theta) v) on R^n.

    theta = 0 is the explicit Euler pairing, theta = 1/2 the midpoint one.
    """
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")

    def fwd(x, v):
        return x - theta * v, x + (1.0 - theta) * v

    def inv(x1, x2):
        d = x2 - x1
        return x1 + theta * d, d

    def jac(x, v):
        m = x.size
        I = np.eye(m)
        return np.block([[I, -theta * I], [I, (1.0 - theta) * I]])

    return DiscretizationMap("theta", fwd, inv, {"theta": theta}, jacobian=jac)


def _unit(x):
    nx = np.linalg.norm(x)
    if nx == 0.0:
        raise MapDomainError("zero vector cannot be normalized")
    return x / nx, nx


def sphere_midpoint_map(antipodal_tol: float = 1e-12) -> DiscretizationMap:
    """Chord midpoint map on the unit sphere.

    Forward rescales x -/+ v/2 back to the sphere; the inverse is singular
    for antipodal point pairs and raises MapDomainError there.
    """

    def fwd(x, v):
        a, _ = _unit(x - 0.5 * v)
        b, _ = _unit(x + 0.5 * v)
        return a, b

    def inv(x1, x2):
        s = x1 + x2
        ns = np.linalg.norm(s)
        if ns <= antipodal_tol:
            raise MapDomainError("antipodal points: chord midpoint undefined")
        return s / ns, 2.0 * (x2 - x1) / ns

    return DiscretizationMap("sphere_midpoint", fwd, inv)


def _sphere_log(x, y, antipodal_tol=1e-12):
    c = float(np.clip(x @ y, -1.0, 1.0))
    d = y - c * x  # component of y tangent at x
    nd = np.linalg.norm(d)
    if nd <= antipodal_tol:
        if c > 0.0:
            return np.zeros_like(x)
        raise MapDomainError("antipodal points: geodesic log undefined")
    return np.arccos(c) * d / nd


def sphere_exp_map() -> DiscretizationMap:
    """Retraction-style map (x, xi) -> (x, exp_x(xi)) using great-circle geodesics."""

    def fwd(x, xi):
        r = np.linalg.norm(xi)
        if r == 0.0:
            return x.copy(), x.copy()
        return x.copy(), np.cos(r) * x + np.sin(r) / r * xi

    def inv(x1, x2):
        return x1.copy(), _sphere_log(x1, x2)

    return DiscretizationMap("sphere_exp", fwd, inv)


def hat(xi) -> np.ndarray:
    """3-vector to skew matrix: hat(xi) w = xi x w."""
    x, y, z = np.asarray(xi, dtype=float)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def so3_exp(xi_hat: np.ndarray) -> np.ndarray:
    """Rodrigues exponential with a series fallback below angle 1e-6."""
    xi = vee(xi_hat)
    t = np.linalg.norm(xi)
    K = xi_hat
    if t < 1e-6:
        return np.eye(3) + K + 0.5 * (K @ K)
    return np.eye(3) + np.sin(t) / t * K + (1.0 - np.cos(t)) / t**2 * (K @ K)


def so3_log(R: np.ndarray, pi_tol: float = 1e-8) -> np.ndarray:
    """Skew matrix logarithm of a rotation; undefined at rotation angle pi."""
    c = np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0)
    t = np.arccos(c)
    if np.pi - t < pi_tol:
        raise MapDomainError("rotation angle at pi: logarithm branch undefined")
    A = 0.5 * (R - R.T)
    if t < 1e-6:
        # log R ~ A (1 + t^2/6) for small angles
        return A * (1.0 + t * t / 6.0)
    return t / np.sin(t) * A


def _check_rotation(g, tol=1e-10):
    if np.linalg.norm(g.T @ g - np.eye(3)) > tol or abs(np.linalg.det(g) - 1.0) > tol:
        raise MapDomainError("base point is not a rotation matrix")


def lie_group_theta_map(theta: float) -> DiscretizationMap:
    """Theta map on SO(3): (g, g xi_hat) -> (g exp(-theta xi_hat), g exp((1-theta) xi_hat)).

    The inverse anchors the reconstructed tangent vector at
    g = g1 exp(theta xi_hat); with theta = 0 that is the first point g1.
    """
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")

    def fwd(g, vg):
        _check_rotation(g)
        xi_hat = g.T @ vg
        return g @ so3_exp(-theta * xi_hat), g @ so3_exp((1.0 - theta) * xi_hat)

    def inv(g1, g2):
        _check_rotation(g1)
        _check_rotation(g2)
        xi_hat = so3_log(g1.T @ g2)
        g = g1 @ so3_exp(theta * xi_hat)
        return g, g @ xi_hat

    return DiscretizationMap("lie_theta", fwd, inv, {"theta": theta})


def cotangent_lift_midpoint() -> DiscretizationMap:
    """Closed-form midpoint map on T*Q for Q = R^n.

    (q, p, qdot, pdot) -> ((q - qdot/2, p - pdot/2), (q + qdot/2, p + pdot/2));
    the inverse returns midpoints as the base point and differences as the rate.
    """

    def fwd(x, v):
        return x - 0.5 * v, x + 0.5 * v

    def inv(x1, x2):
        return 0.5 * (x1 + x2), x2 - x1

    def jac(x, v):
        m = x.size
        I = np.eye(m)
        return np.block([[I, -0.5 * I], [I, 0.5 * I]])

    return DiscretizationMap("cotangent_midpoint", fwd, inv, jacobian=jac)


def cotangent_lift_generic(rd: DiscretizationMap) -> DiscretizationMap:
    """Cotangent lift of a base map on Q, as a map on T*Q.

    Composes three canonical symplectomorphisms: the identification of
    T(T*Q) with T*(TQ) that swaps the roles of rate and momentum,
    the covector pushforward through the base map (transpose-inverse of
    its Jacobian), and a sign flip on the first momentum that matches the
    product symplectic structure on T*Q x T*Q.  For the midpoint base map
    this reproduces `cotangent_lift_midpoint` in closed form.
    """

    def fwd(x, v):
        n = x.size // 2
        q, p = x[:n], x[n:]
        qdot, pdot = v[:n], v[n:]
        qa, qb = rd.forward_arrays(q, qdot)
        J = rd.forward_jacobian(q, qdot)
        mu = np.concatenate([pdot, p])  # covector on TQ at (q, qdot)
        try:
            nu = np.linalg.solve(J.T, mu)
        except np.linalg.LinAlgError as exc:
            raise MapDomainError(f"singular base-map Jacobian: {exc}") from exc
        return (np.concatenate([qa, -nu[:n]]),
                np.concatenate([qb, nu[n:]]))

    def inv(x1, x2):
        n = x1.size // 2
        qa, pa = x1[:n], x1[n:]
        qb, pb = x2[:n], x2[n:]
        q, qdot = rd.inverse_arrays(qa, qb)
        J = rd.forward_jacobian(q, qdot)
        mu = J.T @ np.concatenate([-pa, pb])
        pdot, p = mu[:n], mu[n:]
        return np.concatenate([q, p]), np.concatenate([qdot, pdot])

    return DiscretizationMap(f"cotangent_lift({rd.name})", fwd, inv, dict(rd.params))


def projected_map(rd: DiscretizationMap, projector, tangent_inclusion=None,
                  m0_samples=None, tol: float = 1e-10) -> DiscretizationMap:
    """Restrict a map to a submanifold by projecting both output points.

    `projector` must fix submanifold points; when `m0_samples` is given this
    is checked up front together with idempotency.  The inverse solves the
    forward relation by a Gauss-Newton iteration and raises MapDomainError
    outside its convergence radius.
    """
    if m0_samples is not None:
        for x in m0_samples:
            x = np.asarray(x, dtype=float)
            px = projector(x)
            if np.linalg.norm(px - x) > tol:
                raise ValueError("projector does not fix the provided submanifold samples")
            if np.linalg.norm(projector(px) - px) > tol:
                raise ValueError("projector is not idempotent on the provided samples")

    def fwd(x, v):
        w = tangent_inclusion(x, v) if tangent_inclusion is not None else v
        a, b = rd.forward_arrays(x, w)
        return projector(a), projector(b)

    def inv(x1, x2, max_iter=50, newton_tol=1e-12):
        # Gauss-Newton on (base, vel); consistent overdetermined near the zero section
        m = x1.size
        z = np.concatenate([0.5 * (x1 + x2), x2 - x1])
        target = np.concatenate([x1, x2])

        def res(zz):
            a, b = fwd(zz[:m], zz[m:])
            return np.concatenate([a, b]) - target

        r = res(z)
        for _ in range(max_iter):
            if np.linalg.norm(r, np.inf) <= newton_tol:
                return z[:m], z[m:]
            h = 1e-7 * max(1.0, np.linalg.norm(z))
            J = np.zeros((2 * m, 2 * m))
            for j in range(2 * m):
                zp, zm = z.copy(), z.copy()
                zp[j] += h
                zm[j] -= h
                J[:, j] = (res(zp) - res(zm)) / (2 * h)
            dz, *_ = np.linalg.lstsq(J, -r, rcond=None)
            z = z + dz
            r = res(z)
        raise MapDomainError("projected-map inversion did not converge; "
                             "point pair outside the validity radius")

    return DiscretizationMap(f"projected({rd.name})", fwd, inv, dict(rd.params))


def legendre_interchange(state) -> np.ndarray:
    """Coordinate shuffle (q, p, mu_q, mu_p) -> (q, mu_p, -mu_q, p).

    Identifies covectors on T*Q with covectors on TQ; the map is an
    involution, so it serves as its own inverse.
    """
    state = np.asarray(state, dtype=float)
    if state.size % 4:
        raise ValueError("state length must be divisible by 4")
    n = state.size // 4
    q, p, mq, mp = state[:n], state[n:2 * n], state[2 * n:3 * n], state[3 * n:]
    return np.concatenate([q, mp, -mq, p])


legendre_interchange_inverse = legendre_interchange


def zero_section_defect(rd: DiscretizationMap, base) -> float:
    """Max deviation of R_d(0_x) from (x, x)."""
    base = np.asarray(base, dtype=float)
    a, b = rd.forward_arrays(base, np.zeros_like(base))
    return max(float(np.max(np.abs(a - base))), float(np.max(np.abs(b - base))))


def derivative_defect(rd: DiscretizationMap, base, vel, step: float = 1e-4) -> float:
    """Residual of the identity (D2) along `vel`, by central differences."""
    base = np.asarray(base, dtype=float)
    vel = np.asarray(vel, dtype=float)
    ap, bp = rd.forward_arrays(base, step * vel)
    am, bm = rd.forward_arrays(base, -step * vel)
    deriv = ((bp - ap) - (bm - am)) / (2 * step)
    return float(np.max(np.abs(deriv - vel)))
