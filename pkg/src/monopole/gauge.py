"""
Generalized Dirac monopole on R^{2k+1} minus the negative last axis.

Real forms are used throughout: the potential is carried as
𝔞_j = i A_j and the field strength as 𝔉_jk = i F_jk, both skew 2k x 2k
matrices, so that

    𝔉_jk = ∂_j 𝔞_k - ∂_k 𝔞_j + [𝔞_j, 𝔞_k],     ∇_l = ∂_l + [𝔞_l, ·].

Sign conventions (calibrated on k = 1 against r'' = λ r x r' / r^3):

    f_jk     = <ξ, 𝔉_jk>              paired field, antisymmetric n x n
    force_j  = sum_k f_jk v_k
    dξ/dt    = [ξ, 𝔞(v)]              parallel transport, Dξ/dt = 0
"""

from dataclasses import dataclass

import numpy as np

from . import polyvec as pv
from .errors import StringProximity, ZeroRadius
from .liealg import bracket

STRING_EPS = 1e-6
R_MIN = 1e-300


def _k_from_n(n):
    if n < 3 or n % 2 == 0:
        raise ValueError(f"dimension must be odd and >= 3, got {n}")
    return (n - 1) // 2


def _chart(x, string_eps=STRING_EPS, r_min=R_MIN):
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    if not r > r_min:
        raise ZeroRadius(r)
    c = (r + x[-1]) / r
    if c <= string_eps:
        raise StringProximity(c)
    return x, r


def _radial_generators(y):
    """P_b = sum_a y_a M_{a,b} for every b, shape (m, m, m)."""
    m = y.shape[0]
    eye = np.eye(m)
    # M_{a,b} = e_b e_a^T - e_a e_b^T  =>  P_b = e_b y^T - y e_b^T
    return np.einsum("bc,d->bcd", eye, y) - np.einsum("c,bd->bcd", y, eye)


def _all_generators(m):
    """M[a, b] = M_{a+1, b+1} as an (m, m, m, m) array."""
    eye = np.eye(m)
    return np.einsum("bc,ad->abcd", eye, eye) - np.einsum("ac,bd->abcd", eye, eye)


@dataclass(frozen=True)
class PotentialSample:
    a: np.ndarray  # (n, m, m)
    point: np.ndarray

    def along(self, v):
        """𝔞(v) = sum_j v_j 𝔞_j."""
        return np.tensordot(np.asarray(v, dtype=float), self.a, axes=(0, 0))


@dataclass(frozen=True)
class FieldSample:
    f_matrices: np.ndarray  # (n, n, m, m), antisymmetric in the first pair
    point: np.ndarray


@dataclass(frozen=True)
class PairedField:
    f: np.ndarray  # (n, n)
    point: np.ndarray
    xi: np.ndarray

    def as_bivector(self):
        return self.f


def potential(x, k=None, string_eps=STRING_EPS) -> PotentialSample:
    """Gauge potential 𝔞_n = 0, 𝔞_b = -(1 / (r (r + x_n))) sum_a x_a M_ab."""
    x, r = _chart(x, string_eps)
    n = x.shape[0]
    kk = _k_from_n(n)
    if k is not None and k != kk:
        raise ValueError(f"point has dimension {n}, expected {2 * k + 1}")
    m = 2 * kk
    a = np.zeros((n, m, m))
    a[:m] = -_radial_generators(x[:m]) / (r * (r + x[-1]))
    return PotentialSample(a, x.copy())


def field_strength(x, k=None, string_eps=STRING_EPS) -> FieldSample:
    """Field strength in closed form.

    𝔉_nb = (1/r^3) sum_a x_a M_ab,
    𝔉_ab = -(1/r^2) (M_ab + x_a 𝔞_b - x_b 𝔞_a).
    """
    pot = potential(x, k, string_eps)
    x = pot.point
    n = x.shape[0]
    m = n - 1
    r = float(np.linalg.norm(x))
    y = x[:m]
    ab = pot.a[:m]
    F = np.zeros((n, n, m, m))
    xa_ab = np.einsum("a,bcd->abcd", y, ab)
    F[:m, :m] = -(_all_generators(m) + xa_ab - xa_ab.transpose(1, 0, 2, 3)) / r**2
    Fn = _radial_generators(y) / r**3
    F[n - 1, :m] = Fn
    F[:m, n - 1] = -Fn
    return FieldSample(F, x.copy())


def field_strength_fd(x, h=1e-6, string_eps=STRING_EPS):
    """Field strength from its definition with central differences of 𝔞.

    Independent of the closed form; used only for verification.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    pot = potential(x, None, string_eps)
    da = np.empty((n,) + pot.a.shape)  # da[l] = ∂_l 𝔞
    for l in range(n):
        e = np.zeros(n)
        e[l] = h
        da[l] = (potential(x + e, None, string_eps).a - potential(x - e, None, string_eps).a) / (2 * h)
    m = n - 1
    F = np.zeros((n, n, m, m))
    for j in range(n):
        for k in range(n):
            F[j, k] = da[j, k] - da[k, j] + bracket(pot.a[j], pot.a[k])
    return F


def paired_field(xi, x, string_eps=STRING_EPS) -> PairedField:
    """f_jk = <ξ, 𝔉_jk> with the invariant metric (1/2) tr(X^T Y)."""
    xi = np.asarray(getattr(xi, "xi", xi), dtype=float)
    fs = field_strength(x, xi.shape[0] // 2, string_eps)
    f = 0.5 * np.einsum("cd,jkcd->jk", xi, fs.f_matrices)
    return PairedField(0.5 * (f - f.T), fs.point, xi)


def force(xi, x, v, string_eps=STRING_EPS):
    """Acceleration r'' = f v; orthogonal to both x and v."""
    f = paired_field(xi, x, string_eps).f
    return f @ np.asarray(v, dtype=float)


def transport_rate(xi, x, v, string_eps=STRING_EPS):
    """dξ/dt = [ξ, 𝔞(v)], the zero covariant derivative condition."""
    xi = np.asarray(getattr(xi, "xi", xi), dtype=float)
    pot = potential(x, xi.shape[0] // 2, string_eps)
    return bracket(xi, pot.along(v))


def fast_rates(xi, x, v, string_eps=STRING_EPS):
    """(force, dξ/dt) from closed-form contractions, O(k^2) per call.

    With w = ξ y (y the first 2k coordinates) and c = 1 / (r (r + x_n)),
    <ξ, M_ab> = -ξ_ab and <ξ, 𝔞_b> = -c w_b give

        f_nb = w_b / r^3,   f_ab = (ξ_ab + c (y_a w_b - y_b w_a)) / r^2,
        𝔞(v) = -c (u y^T - y u^T),  u the first 2k velocity components.

    Agrees with the matrix route of paired_field / transport_rate.
    """
    x, r = _chart(x, string_eps)
    v = np.asarray(v, dtype=float)
    m = x.shape[0] - 1
    y = x[:m]
    c = 1.0 / (r * (r + x[-1]))
    w = xi @ y
    P = np.outer(y, w)
    f = np.empty((m + 1, m + 1))
    f[:m, :m] = (xi + c * (P - P.T)) / r**2
    f[m, :m] = w / r**3
    f[:m, m] = -f[m, :m]
    f[m, m] = 0.0
    Q = np.outer(v[:m], y)
    A = -c * (Q - Q.T)
    B = xi @ A
    return f @ v, B - B.T


def transport_fd(xi, x, v, h=1e-4, substeps=8):
    """Parallel transport of ξ along the straight segment x + s v, s in [-h, h].

    Each half is integrated with RK4 on the matrix ODE dξ/ds = -[𝔞(v), ξ]
    and the central difference of the endpoints is returned. Used as an
    oracle for transport_rate.
    """
    xi = np.asarray(getattr(xi, "xi", xi), dtype=float)
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)

    def rhs(s, X):
        A = potential(x + s * v).along(v)
        return -(A @ X - X @ A)

    def run(direction):
        X = xi.copy()
        ds = direction * h / substeps
        s = 0.0
        for _ in range(substeps):
            k1 = rhs(s, X)
            k2 = rhs(s + ds / 2, X + ds / 2 * k1)
            k3 = rhs(s + ds / 2, X + ds / 2 * k2)
            k4 = rhs(s + ds, X + ds * k3)
            X = X + ds / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            s += ds
        return X

    return (run(+1.0) - run(-1.0)) / (2 * h)


@dataclass
class IdentityReport:
    """Maximum relative residuals of the gauge-field identities at one point."""

    potential_radial: float
    field_radial: float
    covariant_derivative: float
    pairing_gram: float
    pairing_norm: float
    contraction: float
    force_norm: float

    def as_dict(self):
        return dict(self.__dict__)


def _rel(res, scale):
    return float(res / scale) if scale > 0 else float(res)


def check_identities(x, xi, v, lam=None, fd_step=1e-5) -> IdentityReport:
    """Evaluate every gauge-field identity at (x, v) for ξ on O_λ.

    Parameters
    ----------
    x, v : array_like
        Point in the chart and a velocity.
    xi : OrbitElement or ndarray
        Orbit element; λ is taken from it unless given explicitly.
    fd_step : float
        Central-difference step for the covariant-derivative identity.
    """
    if lam is None:
        lam = xi.lam
    xi_m = np.asarray(getattr(xi, "xi", xi), dtype=float)
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    n = x.shape[0]
    k = _k_from_n(n)
    r = float(np.linalg.norm(x))
    lam2k = lam * lam / k

    pot = potential(x, k)
    fs = field_strength(x, k)
    A, F = pot.a, fs.f_matrices

    # x^k A_k = 0
    s = np.tensordot(x, A, axes=(0, 0))
    scale = np.sum(np.abs(x)[:, None, None] * np.abs(A), axis=0).max()
    res_a = _rel(np.abs(s).max(), scale)

    # x^j F_jk = 0
    s = np.tensordot(x, F, axes=(0, 0))
    scale = np.sum(np.abs(x)[:, None, None, None] * np.abs(F), axis=0).max()
    res_b = _rel(np.abs(s).max(), scale)

    # ∇_l F_jk = (1/r^2)(-x_j F_lk - x_k F_jl - 2 x_l F_jk)
    dF = np.empty((n,) + F.shape)
    for l in range(n):
        e = np.zeros(n)
        e[l] = fd_step
        dF[l] = (field_strength(x + e, k).f_matrices - field_strength(x - e, k).f_matrices) / (2 * fd_step)
    AF = np.einsum("lcd,jkde->ljkce", A, F)
    lhs = dF + AF - np.einsum("jkcd,lde->ljkce", F, A)
    rhs = -(np.einsum("j,lkcd->ljkcd", x, F)
            + np.einsum("k,jlcd->ljkcd", x, F)
            + 2 * np.einsum("l,jkcd->ljkcd", x, F)) / r**2
    res_c = _rel(np.abs(lhs - rhs).max(), max(np.abs(rhs).max(), np.abs(lhs).max()))

    f = paired_field(xi_m, x).f
    # r^4 sum_k f_kj f_kj' = (λ²/k)(δ - x x^T / r^2)
    gram = r**4 * f.T @ f
    target = lam2k * (np.eye(n) - np.outer(x, x) / r**2)
    res_d = _rel(np.abs(gram - target).max(), lam2k)

    # |r^2 f|^2 = λ²
    res_e = _rel(abs(pv.inner(r**2 * f, r**2 * f) - lam * lam), lam * lam)

    # (v ⌟ f) ⌟ (r^2 f) = -(λ²/k) / r * d/dt(x / r)
    vf = pv.contract(v, f)
    lhs_v = pv.contract(vf, r**2 * f)
    rhat_dot = v / r - x * np.dot(x, v) / r**3
    rhs_v = -lam2k / r * rhat_dot
    res_f = _rel(np.abs(lhs_v - rhs_v).max(), lam2k * np.linalg.norm(rhat_dot) / r)

    # |r^2 force|^2 = (λ²/k) |x ∧ v|^2 / r^2
    fv = f @ v
    xv2 = pv.inner(pv.wedge(x, v), pv.wedge(x, v))
    want = lam2k * xv2 / r**2
    res_g = _rel(abs(r**4 * np.dot(fv, fv) - want), want)

    return IdentityReport(res_a, res_b, res_c, res_d, res_e, res_f, res_g)
