"""
Real so(2k): generators, invariant metric, the magnetic orbit O_λ.

Every i·so(2k)-valued object of the theory is carried by its real
counterpart, a skew-symmetric 2k x 2k numpy array. Generator indices
a, b follow the 1-based mathematical convention.
"""

from dataclasses import dataclass

import numpy as np


def skew(X):
    """Exactly antisymmetric part of a square matrix."""
    X = np.asarray(X, dtype=float)
    return 0.5 * (X - X.T)


def generator(a: int, b: int, k: int) -> np.ndarray:
    """M_{a,b}: entry (a, b) is -1, entry (b, a) is +1, 1-based."""
    m = 2 * k
    if a == b or not (1 <= a <= m and 1 <= b <= m):
        raise ValueError(f"invalid generator indices ({a}, {b}) for so({m})")
    M = np.zeros((m, m))
    M[a - 1, b - 1] = -1.0
    M[b - 1, a - 1] = 1.0
    return M


def lie_inner(X, Y) -> float:
    """Invariant metric (1/2) tr(X^T Y); the M_{a,b}, a<b, are orthonormal."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape != Y.shape:
        raise ValueError(f"size mismatch: {X.shape} vs {Y.shape}")
    return 0.5 * float(np.sum(X * Y))


def bracket(X, Y):
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape != Y.shape:
        raise ValueError(f"size mismatch: {X.shape} vs {Y.shape}")
    P = X @ Y
    # XY - YX with exact antisymmetry: (XY)^T = YX for skew X, Y
    return P - P.T


@dataclass(frozen=True)
class OrbitElement:
    xi: np.ndarray
    lam: float
    k: int


def orbit_base(lam: float, k: int) -> OrbitElement:
    """Block-diagonal base point (|λ| M12 + ... + |λ| M_{2k-3,2k-2} + λ M_{2k-1,2k}) / sqrt k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    lam = float(lam)
    m = 2 * k
    xi = np.zeros((m, m))
    c = abs(lam) / np.sqrt(k)
    for i in range(k - 1):
        xi += c * generator(2 * i + 1, 2 * i + 2, k)
    xi += (lam / np.sqrt(k)) * generator(2 * k - 1, 2 * k, k)
    return OrbitElement(xi, lam, k)


def random_rotation(m: int, seed: int) -> np.ndarray:
    """Seeded Haar-distributed element of SO(m).

    QR of a PCG64 Gaussian matrix with the sign of R's diagonal folded
    into Q; the first column is flipped if the determinant is -1.
    """
    rng = np.random.default_rng(seed)
    Q, R = np.linalg.qr(rng.standard_normal((m, m)))
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


def random_orbit_element(lam: float, k: int, seed: int) -> OrbitElement:
    base = orbit_base(lam, k)
    R = random_rotation(2 * k, seed)
    return OrbitElement(skew(R @ base.xi @ R.T), base.lam, k)


def pfaffian(X) -> float:
    """Pfaffian by recursive expansion along the first row.

    Pf([[0, a], [-a, 0]]) = a. Cost grows like (2k-1)!!, which is fine
    up to 12 x 12.
    """
    A = np.asarray(X, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] % 2:
        raise ValueError("pfaffian needs an even-sized square matrix")

    def _pf(idx):
        if not idx:
            return 1.0
        i0 = idx[0]
        total = 0.0
        for pos in range(1, len(idx)):
            j = idx[pos]
            a = A[i0, j]
            if a == 0.0:
                continue
            rest = idx[1:pos] + idx[pos + 1:]
            sign = 1.0 if pos % 2 == 1 else -1.0
            total += sign * a * _pf(rest)
        return total

    return _pf(tuple(range(A.shape[0])))


def orbit_residuals(xi, lam: float, k: int):
    """(max |ξ^T ξ - (λ²/k) I|, |Pf ξ - Pf ξ₀|) for the orbit of charge λ."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (2 * k, 2 * k):
        raise ValueError(f"xi must be {2 * k}x{2 * k}")
    gram = xi.T @ xi - (lam * lam / k) * np.eye(2 * k)
    pf = abs(pfaffian(xi) - pfaffian(orbit_base(lam, k).xi))
    return float(np.max(np.abs(gram))), float(pf)


def orbit_membership(xi, lam: float, k: int, tol: float = 1e-8) -> bool:
    """Test whether ξ lies on O_λ using the two conjugation invariants.

    Skew ξ with ξ^T ξ = (λ²/k) I is a scaled orthogonal complex structure;
    those form two SO(2k)-orbits, told apart by the Pfaffian sign.
    """
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (2 * k, 2 * k):
        raise ValueError(f"xi must be {2 * k}x{2 * k}")
    if np.max(np.abs(xi + xi.T)) > tol * max(1.0, np.max(np.abs(xi))):
        return False
    if lam == 0:
        return bool(np.max(np.abs(xi)) <= tol)
    g, p = orbit_residuals(xi, lam, k)
    return g <= tol * max(1.0, lam * lam) and p <= tol * max(1.0, abs(lam) ** k)


def skew_to_upper(X):
    """Strictly-upper-triangle entries, row major."""
    m = X.shape[0]
    return np.asarray(X)[np.triu_indices(m, 1)]


def upper_to_skew(u, m: int):
    X = np.zeros((m, m))
    iu = np.triu_indices(m, 1)
    X[iu] = u
    return X - X.T
