"""
Fixed-grade exterior algebra over R^n for grades 1, 2 and 3.

Poly-vectors are plain numpy arrays whose number of axes is the grade:

    vector      shape (n,)
    bivector    shape (n, n),     B[j, k] == -B[k, j]
    trivector   shape (n, n, n),  fully antisymmetric

Every constructor here fills the canonical strictly increasing components
and copies them with signs, so antisymmetry holds exactly, not just to
rounding.

Sign convention for the interior product (the single source of sign truth
for the rest of the package):

    (u ⌟ B)_j   = sum_i u_i B_ij
    (u ⌟ T)_jk  = sum_i u_i T_ijk
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, permutations
from math import factorial

import numpy as np

from .errors import NotDecomposable

RANK_TOL = 1e-10
STAR_TOL = 1e-10


def _grade(X):
    X = np.asarray(X)
    if X.ndim not in (1, 2, 3):
        raise ValueError(f"unsupported grade {X.ndim}")
    return X.ndim


def _check_dim(*arrays):
    n = {a.shape[0] for a in arrays}
    if len(n) != 1:
        raise ValueError(f"dimension mismatch: {sorted(n)}")


@lru_cache(maxsize=None)
def _triples(n):
    """Index arrays for j<k<l and the six signed permutations."""
    idx = np.array(list(combinations(range(n), 3)), dtype=int).reshape(-1, 3)
    perms = []
    for p in permutations(range(3)):
        sign = np.linalg.det(np.eye(3)[list(p)])
        perms.append((p, int(round(sign))))
    return idx, perms


def _fill_trivector(n, values):
    idx, perms = _triples(n)
    T = np.zeros((n, n, n))
    for p, sign in perms:
        T[idx[:, p[0]], idx[:, p[1]], idx[:, p[2]]] = sign * values
    return T


def wedge(u, X):
    """Wedge a vector onto a vector or a bivector."""
    u = np.asarray(u, dtype=float)
    X = np.asarray(X, dtype=float)
    if u.ndim != 1:
        raise ValueError("left factor must be a vector")
    _check_dim(u, X)
    g = _grade(X)
    if g == 1:
        P = np.outer(u, X)
        return P - P.T
    if g == 2:
        n = u.shape[0]
        idx, _ = _triples(n)
        j, k, l = idx[:, 0], idx[:, 1], idx[:, 2]
        vals = u[j] * X[k, l] + u[k] * X[l, j] + u[l] * X[j, k]
        return _fill_trivector(n, vals)
    raise ValueError("wedge result would exceed grade 3")


def wedge3(u, v, w):
    return wedge(u, wedge(v, w))


def inner(X, Y) -> float:
    """Extended inner product: sum over increasing index tuples of X*Y.

    On decomposable arguments this is the Gram determinant
    det[u_i . v_j].
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape != Y.shape:
        raise ValueError(f"grade/dimension mismatch: {X.shape} vs {Y.shape}")
    g = _grade(X)
    return float(np.sum(X * Y)) / factorial(g)


def norm(X) -> float:
    return float(np.sqrt(max(inner(X, X), 0.0)))


def contract(u, X):
    """Interior product u ⌟ X, lowering the grade of X by one."""
    u = np.asarray(u, dtype=float)
    X = np.asarray(X, dtype=float)
    _check_dim(u, X)
    g = _grade(X)
    if g == 1:
        raise ValueError("contraction of a vector (grade 0 target) is not supported")
    out = np.tensordot(u, X, axes=(0, 0))
    if g == 3:
        # exact antisymmetry of the result
        out = 0.5 * (out - out.T)
    return out


def gram_inner(us, vs) -> float:
    """Brute-force Gram determinant of two lists of vectors."""
    G = np.array([[np.dot(a, b) for b in vs] for a in us])
    return float(np.linalg.det(G))


@dataclass(frozen=True)
class Frame3:
    """Oriented orthonormal frame of a 3D subspace of R^n."""

    b1: np.ndarray
    b2: np.ndarray
    b3: np.ndarray

    @property
    def basis(self):
        return np.vstack([self.b1, self.b2, self.b3])

    @property
    def orientation(self):
        return wedge3(self.b1, self.b2, self.b3)

    @property
    def projector(self):
        Bm = self.basis
        return Bm.T @ Bm

    def project(self, x):
        """Orthogonal projection of a vector onto the subspace."""
        Bm = self.basis
        return Bm.T @ (Bm @ np.asarray(x, dtype=float))

    def coords(self, x):
        return self.basis @ np.asarray(x, dtype=float)


def subspace_frame(T) -> Frame3:
    """Oriented orthonormal frame of the 3-space [T] of a decomposable T.

    The spanning set is every double contraction e_i ⌟ (e_j ⌟ T), reduced
    by Gram-Schmidt with pivoting on residual norm. The frame is oriented
    so that b1 ∧ b2 ∧ b3 = T / |T|.

    Raises
    ------
    NotDecomposable
        If T is zero or its spanning set does not have rank exactly 3.
    """
    T = np.asarray(T, dtype=float)
    if T.ndim != 3:
        raise ValueError("expected a trivector")
    n = T.shape[0]
    nT = norm(T)
    if not np.isfinite(nT) or nT == 0.0:
        raise NotDecomposable("not a decomposable 3-vector: zero input")
    cand = T.reshape(n * n, n).copy()
    basis = []
    first = None
    for _ in range(4):
        norms = np.linalg.norm(cand, axis=1)
        i = int(np.argmax(norms))
        piv = norms[i]
        if first is None:
            first = piv
        if piv <= RANK_TOL * first:
            break
        if len(basis) == 3:
            raise NotDecomposable("not a decomposable 3-vector: rank exceeds 3")
        b = cand[i] / piv
        basis.append(b)
        cand = cand - np.outer(cand @ b, b)
    if len(basis) != 3:
        raise NotDecomposable(f"not a decomposable 3-vector: rank {len(basis)}")
    # one re-orthogonalization pass
    Q, _ = np.linalg.qr(np.array(basis).T)
    b1, b2, b3 = Q.T
    s = inner(wedge3(b1, b2, b3), T)
    if s < 0:
        b1, b2 = b2, b1
    if abs(abs(s) - nT) > 1e-8 * nT:
        raise NotDecomposable("not a decomposable 3-vector: T is not a 3-blade")
    return Frame3(b1.copy(), b2.copy(), b3.copy())


def project_bivector(B, frame: Frame3):
    """Orthogonal projection of a bivector onto ∧²[frame]."""
    B = np.asarray(B, dtype=float)
    P = frame.projector
    out = P @ B @ P
    return 0.5 * (out - out.T)


def _pairs(frame):
    b1, b2, b3 = frame.b1, frame.b2, frame.b3
    # ⋆(b1∧b2)=b3, ⋆(b2∧b3)=b1, ⋆(b3∧b1)=b2
    return ((wedge(b1, b2), b3), (wedge(b2, b3), b1), (wedge(b3, b1), b2))


def hodge_star(B, frame: Frame3):
    """Hodge dual of a bivector lying in ∧²[frame], as a vector in [frame]."""
    B = np.asarray(B, dtype=float)
    resid = norm(B - project_bivector(B, frame))
    if resid > STAR_TOL * max(norm(B), 1e-300):
        raise ValueError(f"bivector not in the frame's subspace (residual {resid:.2e})")
    return sum(inner(B, E) * e for E, e in _pairs(frame))


def star_inv(v, frame: Frame3):
    """Inverse Hodge dual: vector in [frame] to bivector in ∧²[frame]."""
    v = np.asarray(v, dtype=float)
    resid = np.linalg.norm(v - frame.project(v))
    if resid > STAR_TOL * max(np.linalg.norm(v), 1e-300):
        raise ValueError(f"vector not in the frame's subspace (residual {resid:.2e})")
    return sum(np.dot(v, e) * E for E, e in _pairs(frame))
