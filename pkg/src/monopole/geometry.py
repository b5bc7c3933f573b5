"""
Conserved quantities and the cone on which every orbit is a geodesic.

    L  = r ∧ v + G,           G = -r^2 f
    V  = r ∧ v ∧ r^3 r''
    L̄  = orthogonal projection of L onto ∧²[V]

The cone has axis ⋆(L̄/|L̄|) inside the oriented 3-space [V] and
cos ψ = |λ| / (sqrt(k) |L̄|).
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import gauge
from . import polyvec as pv
from .dynamics import State, Trajectory
from .errors import ConeUndefined, NotDecomposable
from .liealg import orbit_residuals

COLLIDING_TOL = 1e-12


def _rel(res, scale):
    return float(res / scale) if scale > 0 else float(res)


def angular_momentum(s: State):
    r2 = float(np.dot(s.r, s.r))
    f = gauge.paired_field(s.xi, s.r).f
    return pv.wedge(s.r, s.v) - r2 * f


def orbit_trivector(s: State):
    """V = r ∧ v ∧ (r^3 force). Zero for zero charge."""
    r = float(np.linalg.norm(s.r))
    acc = gauge.force(s.xi, s.r, s.v)
    return pv.wedge3(s.r, s.v, r**3 * acc)


def energy(s: State) -> float:
    return float(np.dot(s.v, s.v))


def is_colliding(s: State) -> bool:
    rv = pv.norm(pv.wedge(s.r, s.v))
    return rv <= COLLIDING_TOL * np.linalg.norm(s.r) * np.linalg.norm(s.v)


def _require_cone(s: State, lam):
    if lam == 0:
        raise ConeUndefined("zero charge")
    if is_colliding(s):
        raise ConeUndefined("colliding (radial) orbit")


def orbit_frame(s: State, lam) -> pv.Frame3:
    _require_cone(s, lam)
    try:
        return pv.subspace_frame(orbit_trivector(s))
    except NotDecomposable as exc:
        raise ConeUndefined(str(exc)) from exc


def effective_angular_momentum(s: State, lam, frame: Optional[pv.Frame3] = None):
    """L̄, the projection of L onto ∧²[V]."""
    if frame is None:
        frame = orbit_frame(s, lam)
    return pv.project_bivector(angular_momentum(s), frame)


def effective_angular_momentum_closed_form(s: State, lam):
    """(r - r^4/(|L|^2 - λ^2) r'') ∧ (v - (r·v / r^2) r); cross-check only."""
    _require_cone(s, lam)
    L = angular_momentum(s)
    r2 = float(np.dot(s.r, s.r))
    acc = gauge.force(s.xi, s.r, s.v)
    a = s.r - r2**2 / (pv.inner(L, L) - lam * lam) * acc
    b = s.v - np.dot(s.r, s.v) / r2 * s.r
    return pv.wedge(a, b)


@dataclass(frozen=True)
class ConeSpec:
    axis: np.ndarray
    aperture: float
    frame: pv.Frame3
    e1: np.ndarray  # unit, in [V], orthogonal to axis
    e2: np.ndarray  # completes (e1, e2, axis) to an oriented frame of [V]
    norm_L: float
    norm_Lbar: float
    norm_V: float
    lam: float
    k: int

    def point(self, rho, phi):
        c, s = np.cos(self.aperture), np.sin(self.aperture)
        return rho * (c * self.axis + s * (np.cos(phi) * self.e1 + np.sin(phi) * self.e2))

    def azimuth(self, x):
        x = np.asarray(x, dtype=float)
        return float(np.arctan2(np.dot(x, self.e2), np.dot(x, self.e1)))

    def as_dict(self):
        return {
            "axis": [float(c) for c in self.axis],
            "aperture_rad": float(self.aperture),
            "norm_L": self.norm_L,
            "norm_Lbar": self.norm_Lbar,
            "norm_V": self.norm_V,
        }


def cone_of(s: State, lam, k: Optional[int] = None) -> ConeSpec:
    """Predicted cone for the orbit through ``s``.

    Raises ConeUndefined for zero charge or a radial initial velocity.
    """
    k = s.k if k is None else k
    frame = orbit_frame(s, lam)
    L = angular_momentum(s)
    Lbar = pv.project_bivector(L, frame)
    nLbar = pv.norm(Lbar)
    axis = pv.hodge_star(Lbar / nLbar, frame)
    axis = axis / np.linalg.norm(axis)
    cos_psi = abs(lam) / (np.sqrt(k) * nLbar)
    if not 0.0 < cos_psi < 1.0:
        raise ConeUndefined(f"cos(aperture) = {cos_psi!r} outside (0, 1)")
    # any frame vector not parallel to the axis seeds e1
    cands = frame.basis
    j = int(np.argmin(np.abs(cands @ axis)))
    e1 = cands[j] - np.dot(cands[j], axis) * axis
    e1 /= np.linalg.norm(e1)
    e2 = pv.hodge_star(pv.wedge(axis, e1), frame)
    return ConeSpec(axis, float(np.arccos(cos_psi)), frame, e1, e2,
                    pv.norm(L), nLbar, pv.norm(orbit_trivector(s)), float(lam), k)


def cone_residual(traj: Trajectory, cone: ConeSpec):
    """(max |r̂·axis - cos ψ|, max |r - P_[V] r| / r) over the samples."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    X = traj.positions
    rr = np.linalg.norm(X, axis=1)
    cosang = (X @ cone.axis) / rr
    res_cone = float(np.max(np.abs(cosang - np.cos(cone.aperture))))
    out = X - (X @ cone.frame.projector)
    res_sub = float(np.max(np.linalg.norm(out, axis=1) / rr))
    return res_cone, res_sub


def develop(points, cone: ConeSpec):
    """Planar coordinates (rho cos θ, rho sin θ), θ = φ sin ψ."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    rho = np.linalg.norm(X, axis=1)
    phi = np.unwrap(np.arctan2(X @ cone.e2, X @ cone.e1))
    theta = (phi - phi[0]) * np.sin(cone.aperture)
    return np.column_stack([rho * np.cos(theta), rho * np.sin(theta)])


def collinearity(P) -> float:
    """Max distance from the total-least-squares line, over the radial range."""
    P = np.asarray(P, dtype=float)
    if len(P) < 3:
        return 0.0
    rho = np.linalg.norm(P, axis=1)
    span = max(rho.max() - rho.min(), 1e-300)
    c = P.mean(axis=0)
    _, _, Vt = np.linalg.svd(P - c)
    normal = Vt[-1]
    return float(np.max(np.abs((P - c) @ normal)) / span)


def unroll(traj: Trajectory, cone: ConeSpec, tol: float = 1e-6):
    """Develop the trajectory onto the plane and measure its straightness.

    Consecutive samples must differ in azimuth by less than π/2 for the
    unwrapping to be unambiguous.

    Returns
    -------
    points : ndarray, shape (N, 2)
    collinearity : float
    """
    res_cone, _ = cone_residual(traj, cone)
    if res_cone > 10 * tol:
        raise ValueError(f"samples off the cone by {res_cone:.2e}")
    P = develop(traj.positions, cone)
    return P, collinearity(P)


def analytic_geodesic(init: State, cone: ConeSpec, times, tol: float = 1e-6):
    """Closed-form constant-speed cone geodesic through ``init``.

    The geodesic is a straight line p0 + t q in the development with
    |p0| = r0, |q| = |v0| and p0·q = r0·v0; it is mapped back with
    φ = θ / sin ψ around the axis.
    """
    times = np.asarray(times, dtype=float) - init.t
    r0v = np.asarray(init.r, dtype=float)
    v0v = np.asarray(init.v, dtype=float)
    r0 = float(np.linalg.norm(r0v))
    if abs(np.dot(r0v, cone.axis) / r0 - np.cos(cone.aperture)) > tol:
        raise ValueError("initial point is not on the cone")
    speed = float(np.linalg.norm(v0v))
    rdot = float(np.dot(r0v, v0v)) / r0
    q_perp = np.sqrt(max(speed**2 - rdot**2, 0.0))
    if q_perp <= COLLIDING_TOL * max(speed, 1e-300):
        # radial velocity: the geodesic is a ray
        return np.array([(1.0 + t * rdot / r0) * r0v for t in times])
    # rotation sense of v0 about the axis
    w = v0v - np.dot(v0v, cone.axis) * cone.axis
    u = r0v - np.dot(r0v, cone.axis) * cone.axis
    sense = np.sign(np.dot(np.cross(cone.frame.coords(u), cone.frame.coords(w)),
                           cone.frame.coords(cone.axis)))
    sense = 1.0 if sense == 0 else sense
    px = r0 + times * rdot
    py = times * q_perp
    rho = np.hypot(px, py)
    theta = np.arctan2(py, px)
    phi0 = cone.azimuth(r0v)
    phi = phi0 + sense * theta / np.sin(cone.aperture)
    return np.array([cone.point(rh, ph) for rh, ph in zip(rho, phi)])


@dataclass
class ConservationReport:
    maxdrift_L: float
    maxdrift_Lbar: Optional[float]
    maxdrift_absV: float
    maxdrift_energy: float
    maxdrift_orbit: float
    identity_Lmu: float
    identity_Vnorm: float
    identity_Lbar: Optional[float]
    cone_residual: Optional[float]
    subspace_residual: Optional[float]
    collinearity_residual: Optional[float]
    cone_undefined: Optional[str] = None

    def as_dict(self):
        return dict(self.__dict__)


def conservation_report(traj: Trajectory, k: int, lam: float) -> ConservationReport:
    """Drifts of L, L̄, |V|, |v|^2 and of ξ's orbit invariants along ``traj``.

    Drifts are maxima over samples, relative to the initial norm. For zero
    charge L̄ = L and V = 0; the cone fields are None with the reason in
    ``cone_undefined``.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    samples = traj.samples
    lam2 = lam * lam
    L = np.array([angular_momentum(s) for s in samples])
    nL0 = pv.norm(L[0])
    dL = max(np.max(np.abs(Li - L[0])) for Li in L) / max(nL0, 1e-300)

    V = [orbit_trivector(s) for s in samples]
    nV = np.array([pv.norm(Vi) for Vi in V])
    dV = _rel(np.max(np.abs(nV - nV[0])), nV[0])

    E = np.array([energy(s) for s in samples])
    dE = _rel(np.max(np.abs(E - E[0])), E[0])

    orb = max(orbit_residuals(s.xi, lam, k)[0] for s in samples) / max(1.0, lam2)

    rv2 = np.array([pv.inner(pv.wedge(s.r, s.v), pv.wedge(s.r, s.v)) for s in samples])
    nL2 = np.array([pv.inner(Li, Li) for Li in L])
    id_lmu = _rel(np.max(np.abs(nL2 - rv2 - lam2)), lam2 if lam2 > 0 else np.max(nL2))
    pred_V2 = lam2 / k * (nL2 - lam2) ** 2
    if lam2 == 0:
        id_v = float(np.max(nV))
    else:
        id_v = float(np.max(np.abs(nV**2 - pred_V2) / pred_V2))

    dLbar = id_lbar = cres = sres = coll = None
    reason = None
    try:
        cone = cone_of(samples[0], lam, k)
    except ConeUndefined as exc:
        reason = str(exc)
        if lam == 0:
            dLbar = dL
    else:
        Lb = []
        lb_id = 0.0
        for s, Li, n2 in zip(samples, L, nL2):
            fr = pv.subspace_frame(orbit_trivector(s))
            Lbi = pv.project_bivector(Li, fr)
            Lb.append(Lbi)
            want = n2 - lam2 + lam2 / k
            lb_id = max(lb_id, abs(pv.inner(Lbi, Lbi) - want) / want)
        dLbar = max(np.max(np.abs(x - Lb[0])) for x in Lb) / pv.norm(Lb[0])
        id_lbar = lb_id
        cres, sres = cone_residual(traj, cone)
        _, coll = unroll(traj, cone, tol=max(cres, 1e-6))
    return ConservationReport(float(dL), None if dLbar is None else float(dLbar), float(dV),
                              float(dE), float(orb), id_lmu, id_v, id_lbar, cres, sres,
                              coll, reason)
