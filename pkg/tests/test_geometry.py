import numpy as np
import pytest

from monopole import geometry as geo
from monopole import polyvec as pv
from monopole.dynamics import IntegratorConfig, State, Trajectory, integrate, make_state
from monopole.errors import ConeUndefined
from monopole.liealg import orbit_base, random_orbit_element

from conftest import scenario_run


def dual3(B):
    return np.array([B[1, 2], B[2, 0], B[0, 1]])


def synthetic_traj(points):
    xi = np.zeros((points.shape[1] - 1,) * 2)
    samples = [State(float(i), p, np.zeros_like(p), xi) for i, p in enumerate(points)]
    return Trajectory(samples, {"energy": [0.0] * len(samples)})


def random_state(rng, k, lam, seed):
    n = 2 * k + 1
    r = rng.standard_normal(n)
    r[-1] = abs(r[-1]) + 0.3
    return make_state(r, rng.standard_normal(n), random_orbit_element(lam, k, seed))


class TestAngularMomentum:
    def test_k1_dual_vector(self, rng):
        for _ in range(10):
            lam = rng.uniform(-2, 2)
            s = random_state(rng, 1, lam, 0)
            s = make_state(s.r, s.v, orbit_base(lam, 1))
            want = np.cross(s.r, s.v) + lam * s.r / np.linalg.norm(s.r)
            np.testing.assert_allclose(dual3(geo.angular_momentum(s)), want, rtol=1e-12, atol=1e-14)

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_norm_identities(self, k, rng):
        lam = 1.3
        for seed in range(10):
            s = random_state(rng, k, lam, seed)
            L = geo.angular_momentum(s)
            rv = pv.wedge(s.r, s.v)
            nL2 = pv.inner(L, L)
            assert nL2 == pytest.approx(pv.inner(rv, rv) + lam**2, rel=1e-12)
            V = geo.orbit_trivector(s)
            assert pv.inner(V, V) == pytest.approx(lam**2 / k * (nL2 - lam**2) ** 2, rel=1e-10)
            Lb = geo.effective_angular_momentum(s, lam)
            assert pv.inner(Lb, Lb) == pytest.approx(nL2 - lam**2 + lam**2 / k, rel=1e-10)

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_effective_closed_form(self, k, rng):
        for seed in range(10):
            s = random_state(rng, k, 0.9, seed)
            a = geo.effective_angular_momentum(s, 0.9)
            b = geo.effective_angular_momentum_closed_form(s, 0.9)
            assert np.abs(a - b).max() <= 1e-11 * pv.norm(a)

    def test_zero_charge_trivector(self, rng):
        s = make_state(rng.standard_normal(5), rng.standard_normal(5), orbit_base(0.0, 2))
        assert np.all(geo.orbit_trivector(s) == 0)


class TestCone:
    def test_k1_poincare_cone(self, rng):
        lam = 0.8
        s = make_state([0.3, -0.2, 1.0], [0.5, 0.7, -0.1], orbit_base(lam, 1))
        cone = geo.cone_of(s, lam)
        J = dual3(geo.angular_momentum(s))
        assert np.cos(cone.aperture) == pytest.approx(lam / np.linalg.norm(J), rel=1e-13)
        assert abs(abs(cone.axis @ J) / np.linalg.norm(J) - 1) <= 1e-13
        rhat = s.r / np.linalg.norm(s.r)
        assert rhat @ cone.axis == pytest.approx(np.cos(cone.aperture), abs=1e-13)

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_initial_point_on_cone(self, k, rng):
        for seed in range(10):
            s = random_state(rng, k, 1.1, seed)
            cone = geo.cone_of(s, 1.1)
            rhat = s.r / np.linalg.norm(s.r)
            assert rhat @ cone.axis == pytest.approx(np.cos(cone.aperture), abs=1e-12)
            assert np.linalg.norm(s.r - cone.frame.project(s.r)) <= 1e-12 * np.linalg.norm(s.r)
            B = np.stack([cone.e1, cone.e2, cone.axis])
            np.testing.assert_allclose(B @ B.T, np.eye(3), atol=1e-13)

    def test_point_and_azimuth(self, rng):
        cone = geo.cone_of(random_state(rng, 2, 1.0, 1), 1.0)
        p = cone.point(2.0, 0.4)
        assert np.linalg.norm(p) == pytest.approx(2.0)
        assert cone.azimuth(p) == pytest.approx(0.4)

    @pytest.mark.parametrize("name", ["A", "B", "C"])
    def test_constant_along_orbit(self, name):
        cfg, init, traj = scenario_run(name)
        c0 = geo.cone_of(init, cfg.lam, cfg.k)
        for s in traj.samples[:: max(1, len(traj) // 20)]:
            c = geo.cone_of(s, cfg.lam, cfg.k)
            assert np.abs(c.axis - c0.axis).max() <= 1e-8
            assert abs(c.aperture - c0.aperture) <= 1e-8

    def test_undefined_cases(self, rng):
        with pytest.raises(ConeUndefined, match="zero charge"):
            geo.cone_of(make_state([1.0, 0, 0], [0, 1.0, 0], orbit_base(0.0, 1)), 0.0)
        with pytest.raises(ConeUndefined, match="colliding"):
            geo.cone_of(make_state([1.0, 0, 1.0], [2.0, 0, 2.0], orbit_base(1.0, 1)), 1.0)


class TestResiduals:
    def test_synthetic_geodesic_on_cone(self, rng):
        s = random_state(rng, 2, 1.2, 5)
        cone = geo.cone_of(s, 1.2)
        X = geo.analytic_geodesic(s, cone, np.linspace(0, 10, 300))
        traj = synthetic_traj(X)
        cres, sres = geo.cone_residual(traj, cone)
        assert cres <= 1e-12 and sres <= 1e-12
        P, coll = geo.unroll(traj, cone)
        assert coll <= 1e-12
        assert np.linalg.norm(P, axis=1) == pytest.approx(np.linalg.norm(X, axis=1), rel=1e-12)

    def test_off_cone_curve_not_collinear(self, rng):
        s = random_state(rng, 2, 1.2, 5)
        cone = geo.cone_of(s, 1.2)
        phi = np.linspace(0, 2.0, 100)
        X = np.array([cone.point(1.0 + 0.5 * p, p) for p in phi])
        _, coll = geo.unroll(synthetic_traj(X), cone)
        assert coll > 1e-2

    def test_unroll_rejects_off_cone(self, rng):
        cone = geo.cone_of(random_state(rng, 1, 1.0, 0), 1.0)
        with pytest.raises(ValueError):
            geo.unroll(synthetic_traj(np.array([cone.axis, -cone.axis, cone.axis])), cone)

    def test_flat_cone_unrolls_to_itself(self):
        # ψ = π/2: the cone is a plane and the development is the identity
        frame = pv.subspace_frame(pv.wedge3(*np.eye(3)))
        cone = geo.ConeSpec(np.array([0, 0, 1.0]), np.pi / 2, frame, np.array([1.0, 0, 0]),
                            np.array([0, 1.0, 0]), 1.0, 1.0, 0.0, 1.0, 1)
        t = np.linspace(-3, 3, 50)
        X = np.column_stack([1.0 + 0 * t, t, 0 * t])
        P, coll = geo.unroll(synthetic_traj(X), cone)
        assert coll <= 1e-14
        np.testing.assert_allclose(np.linalg.norm(P, axis=1), np.linalg.norm(X, axis=1))

    def test_collinearity_short_inputs(self):
        assert geo.collinearity(np.zeros((2, 2))) == 0.0


class TestAnalyticGeodesic:
    def test_initial_data(self, rng):
        s = random_state(rng, 3, 0.6, 2)
        cone = geo.cone_of(s, 0.6)
        h = 1e-5
        X = geo.analytic_geodesic(s, cone, [-h, 0.0, h])
        np.testing.assert_allclose(X[1], s.r, atol=1e-13)
        np.testing.assert_allclose((X[2] - X[0]) / (2 * h), s.v, atol=1e-7)

    def test_matches_integration_k1(self):
        s = make_state([0.0, 0.0, 1.0], [1.0, 0.0, 0.2], orbit_base(1.0, 1))
        cone = geo.cone_of(s, 1.0)
        times = np.linspace(0, 8, 50)
        traj = integrate(s, IntegratorConfig(t_end=8.0), 1, 1.0, sample_times=times)
        Y = geo.analytic_geodesic(s, cone, traj.times)
        assert np.abs(traj.positions - Y).max() <= 1e-8

    def test_ray(self, rng):
        s = random_state(rng, 1, 1.0, 0)
        cone = geo.cone_of(s, 1.0)
        ray = make_state(s.r, 0.7 * s.r, s.xi)
        X = geo.analytic_geodesic(ray, cone, [0.0, 1.0, 2.0])
        np.testing.assert_allclose(X, [s.r, 1.7 * s.r, 2.4 * s.r], rtol=1e-14)

    def test_rejects_off_cone_start(self, rng):
        s = random_state(rng, 1, 1.0, 0)
        cone = geo.cone_of(s, 1.0)
        with pytest.raises(ValueError):
            geo.analytic_geodesic(make_state(cone.axis, s.v, s.xi), cone, [0.0])


class TestConservationReport:
    @pytest.mark.parametrize("name", ["A", "B", "C"])
    def test_scenarios(self, name):
        cfg, _, traj = scenario_run(name)
        rep = geo.conservation_report(traj, cfg.k, cfg.lam)
        assert rep.cone_undefined is None
        for key in ("maxdrift_L", "maxdrift_Lbar", "maxdrift_absV", "maxdrift_energy",
                    "maxdrift_orbit", "cone_residual", "subspace_residual"):
            assert getattr(rep, key) <= 1e-7, key
        for key in ("identity_Lmu", "identity_Vnorm", "identity_Lbar"):
            assert getattr(rep, key) <= 1e-9, key
        assert rep.collinearity_residual <= 1e-6

    def test_zero_charge(self):
        s = make_state([1.0, 0, 0, 0, 0.2], [0, 1.0, 0.1, 0, 0], orbit_base(0.0, 2))
        traj = integrate(s, IntegratorConfig(t_end=3.0), 2, 0.0)
        rep = geo.conservation_report(traj, 2, 0.0)
        assert rep.cone_undefined == "zero charge"
        assert rep.maxdrift_Lbar == rep.maxdrift_L <= 1e-12
        assert rep.cone_residual is None and rep.identity_Vnorm == 0.0
