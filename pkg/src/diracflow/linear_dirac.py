"""Linear Dirac structures on V = R^n.

Elements of V (+) V* are pairs (v, a) of a vector and a covector.  The
symmetric pairing

    <<(v1, a1), (v2, a2)>> = <a1, v2> + <a2, v1>

turns V (+) V* into a split-signature inner-product space; a Dirac
structure is a subspace equal to its own pairing-orthogonal complement
(equivalently: isotropic of dimension n).

Subspaces are stored as column-stacked bases in R^{2n} (vector on top,
covector below).  Subspace equality and containment are decided by rank
tests on concatenated bases with a relative SVD threshold, which avoids
any canonical-form bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

RANK_RTOL = 1e-10
SKEW_TOL = 1e-12


class SubspaceKind(str, Enum):
    ISOTROPIC = "isotropic"
    COISOTROPIC = "coisotropic"
    DIRAC = "dirac"
    NONE = "none"


@dataclass(frozen=True)
class PairedVector:
    """A vector/covector pair (v, a) in V (+) V*."""

    v: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float))
        if self.v.ndim != 1 or self.a.ndim != 1 or self.v.size != self.a.size:
            raise ValueError("v and a must be 1-d arrays of equal length")
        if self.v.size < 1:
            raise ValueError("ambient dimension must be at least 1")

    @property
    def n(self) -> int:
        return self.v.size

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.v, self.a])


def pairing(p1: PairedVector, p2: PairedVector) -> float:
    """Symmetric pairing <a1, v2> + <a2, v1>."""
    if p1.n != p2.n:
        raise ValueError(f"dimension mismatch: {p1.n} vs {p2.n}")
    return float(p1.a @ p2.v + p2.a @ p1.v)


def pairing_matrix(n: int) -> np.ndarray:
    """Gram matrix of the pairing in stacked coordinates: [[0, I], [I, 0]]."""
    P = np.zeros((2 * n, 2 * n))
    P[:n, n:] = np.eye(n)
    P[n:, :n] = np.eye(n)
    return P


def _as_matrix(columns, rows: int) -> np.ndarray:
    if len(columns) == 0:
        return np.zeros((rows, 0))
    return np.column_stack([np.asarray(c, dtype=float) for c in columns])


def _rank(mat: np.ndarray, rtol: float = RANK_RTOL) -> int:
    if mat.size == 0:
        return 0
    s = np.linalg.svd(mat, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def _orth(mat: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal basis of the column space."""
    if mat.size == 0:
        return np.zeros((mat.shape[0], 0))
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((mat.shape[0], 0))
    r = int(np.sum(s > rtol * s[0]))
    return u[:, :r]


def _null(mat: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal basis of the null space of `mat` (columns)."""
    ncols = mat.shape[1]
    if mat.size == 0 or ncols == 0:
        return np.eye(ncols)
    u, s, vh = np.linalg.svd(mat)
    if s.size == 0 or s[0] == 0.0:
        return np.eye(ncols)[:, :ncols]
    r = int(np.sum(s > rtol * s[0]))
    return vh[r:].T


@dataclass
class Subspace:
    """Subspace of V (+) V* spanned by linearly independent paired vectors."""

    matrix: np.ndarray  # (2n, k), columns stack (v, a)
    ambient_dim: int

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != 2 * self.ambient_dim:
            raise ValueError("basis matrix must have 2n rows")
        if _rank(self.matrix) != self.matrix.shape[1]:
            raise ValueError("basis columns are linearly dependent")

    @classmethod
    def from_vectors(cls, pairs: list[PairedVector], ambient_dim: int | None = None) -> "Subspace":
        if not pairs:
            if ambient_dim is None:
                raise ValueError("ambient_dim required for the zero subspace")
            return cls(np.zeros((2 * ambient_dim, 0)), ambient_dim)
        n = pairs[0].n
        return cls(np.column_stack([p.stacked() for p in pairs]), n)

    @property
    def basis(self) -> list[PairedVector]:
        n = self.ambient_dim
        return [PairedVector(col[:n], col[n:]) for col in self.matrix.T]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def contains(self, other: "Subspace", rtol: float = RANK_RTOL) -> bool:
        if other.ambient_dim != self.ambient_dim:
            raise ValueError("ambient dimension mismatch")
        stacked = np.hstack([self.matrix, other.matrix])
        return _rank(stacked, rtol) == _rank(self.matrix, rtol)

    def same_span(self, other: "Subspace", rtol: float = RANK_RTOL) -> bool:
        return self.contains(other, rtol) and other.contains(self, rtol)


def orthogonal_complement(u: Subspace) -> Subspace:
    """Pairing-orthogonal complement U-perp; dim U + dim U-perp = 2n."""
    n = u.ambient_dim
    gram = u.matrix.T @ pairing_matrix(n)  # (k, 2n); U-perp = null(gram)
    return Subspace(_null(gram), n)


def classify(u: Subspace) -> SubspaceKind:
    """Classify a subspace as isotropic, coisotropic, dirac, or none."""
    perp = orthogonal_complement(u)
    isotropic = perp.contains(u)
    coisotropic = u.contains(perp)
    if isotropic and u.dim == u.ambient_dim:
        return SubspaceKind.DIRAC
    if isotropic:
        return SubspaceKind.ISOTROPIC
    if coisotropic:
        return SubspaceKind.COISOTROPIC
    return SubspaceKind.NONE


@dataclass
class LinearDiracStructure:
    """Maximally isotropic subspace of V (+) V*."""

    subspace: Subspace

    def __post_init__(self):
        if classify(self.subspace) is not SubspaceKind.DIRAC:
            raise ValueError("subspace is not a Dirac structure")

    @property
    def ambient_dim(self) -> int:
        return self.subspace.ambient_dim


def _vectors_as_columns(vectors, length_hint: int | None = None) -> np.ndarray:
    """Stack a sequence of vectors as matrix columns (empty sequence allowed)."""
    vectors = list(vectors)
    if not vectors:
        if length_hint is None:
            raise ValueError("cannot infer dimension from an empty basis")
        return np.zeros((length_hint, 0))
    return np.column_stack([np.asarray(v, dtype=float) for v in vectors])


def annihilator(f_basis: np.ndarray, n: int) -> np.ndarray:
    """Covectors vanishing on the span of the columns of `f_basis`."""
    if f_basis.shape[1] == 0:
        return np.eye(n)
    return _null(f_basis.T)


def from_subspace(f_basis, ambient_dim: int | None = None) -> LinearDiracStructure:
    """Dirac structure F (+) F^o from a subspace F given as a list of vectors."""
    F = _vectors_as_columns(f_basis, ambient_dim)
    n = F.shape[0]
    if F.shape[1] and _rank(F) != F.shape[1]:
        raise ValueError("f_basis vectors are linearly dependent")
    ann = annihilator(F, n)
    cols = []
    for j in range(F.shape[1]):
        cols.append(np.concatenate([F[:, j], np.zeros(n)]))
    for j in range(ann.shape[1]):
        cols.append(np.concatenate([np.zeros(n), ann[:, j]]))
    return LinearDiracStructure(Subspace(_as_matrix(cols, 2 * n), n))


def _require_skew(mat: np.ndarray, name: str) -> np.ndarray:
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{name} must be square")
    if np.linalg.norm(mat + mat.T) > SKEW_TOL * max(1.0, np.linalg.norm(mat)):
        raise ValueError(f"{name} is not skew-symmetric")
    return mat


def from_two_form(omega) -> LinearDiracStructure:
    """Graph {(v, omega v)} of a (pre)symplectic form given by a skew matrix."""
    omega = _require_skew(omega, "omega")
    n = omega.shape[0]
    top = np.eye(n)
    return LinearDiracStructure(Subspace(np.vstack([top, omega]), n))


def from_bivector(lam, codistribution=None) -> LinearDiracStructure:
    """Graph {(lam a, a)} of a bivector, optionally restricted to a codistribution.

    With `codistribution` (columns spanning a subspace of V*), the result is
    the span of {(lam b, b) : b in the codistribution} together with
    {(w, 0) : w annihilated by every covector of the codistribution}.
    """
    lam = _require_skew(lam, "lam")
    n = lam.shape[0]
    if codistribution is None:
        bottom = np.eye(n)
        return LinearDiracStructure(Subspace(np.vstack([lam, bottom]), n))
    cod = _vectors_as_columns(codistribution, n)
    if cod.shape[0] != n:
        raise ValueError("codistribution covectors must have length n")
    cod = _orth(cod)
    ann = _null(cod.T)  # vectors killed by the codistribution
    cols = []
    for j in range(cod.shape[1]):
        cols.append(np.concatenate([lam @ cod[:, j], cod[:, j]]))
    for j in range(ann.shape[1]):
        cols.append(np.concatenate([ann[:, j], np.zeros(n)]))
    return LinearDiracStructure(Subspace(_as_matrix(cols, 2 * n), n))


def from_pair(f_basis, omega_on_f, ambient_dim: int | None = None) -> LinearDiracStructure:
    """Dirac structure determined by a subspace F and a skew form on F.

    `omega_on_f` is the (k, k) skew matrix of the form in the coordinates of
    `f_basis`, with the convention that the covector attached to the i-th
    basis vector pairs against F through the i-th column of the matrix.
    """
    F = _vectors_as_columns(f_basis, ambient_dim)
    n = F.shape[0]
    k = F.shape[1]
    if k and _rank(F) != k:
        raise ValueError("f_basis vectors are linearly dependent")
    W = _require_skew(omega_on_f, "omega_on_f") if k else np.zeros((0, 0))
    if W.shape != (k, k):
        raise ValueError("omega_on_f must be k x k for k basis vectors")
    cols = []
    for i in range(k):
        # particular covector with F^T a = W e_i  (consistent: F^T has full row rank)
        a, *_ = np.linalg.lstsq(F.T, W[:, i], rcond=None)
        cols.append(np.concatenate([F[:, i], a]))
    ann = annihilator(F, n)
    for j in range(ann.shape[1]):
        cols.append(np.concatenate([np.zeros(n), ann[:, j]]))
    return LinearDiracStructure(Subspace(_as_matrix(cols, 2 * n), n))


def recover_pair(d: LinearDiracStructure) -> tuple[np.ndarray, np.ndarray]:
    """Recover (F, omega_on_F) such that from_pair(F, omega_on_F) spans d."""
    n = d.ambient_dim
    mat = d.subspace.matrix
    V, A = mat[:n], mat[n:]
    F = _orth(V)
    k = F.shape[1]
    W = np.zeros((k, k))
    lifts = np.zeros((n, k))
    for i in range(k):
        c, *_ = np.linalg.lstsq(V, F[:, i], rcond=None)
        lifts[:, i] = A @ c
    # W column i holds the pairings of the lift of f_i against the F basis
    W = F.T @ lifts
    W = 0.5 * (W - W.T)  # strip the F^o ambiguity, which is symmetric noise-only
    return F, W
