from dataclasses import replace

import numpy as np
import pytest

import biltrack as bt
from biltrack import (
    DimensionError,
    ObserverCertificate,
    drift_matrix,
    gyro_of_input,
    gyro_of_state,
    input_matrix,
    output,
    state_derivative,
    trajectory_residual,
    verify_observer_certificate,
    verify_passivity_certificate,
    verify_regressor_decomposition,
)

from conftest import G_TRUE, random_certified_plant, state_deriv_oracle


class TestGyroMaps:
    def test_pfp_unit_input(self, pfp_plant, params):
        expect = np.array([[0.0, -1.0 / params.l_ind], [1.0 / params.c_cap, 0.0]])
        np.testing.assert_allclose(gyro_of_input(pfp_plant, [1.0]), expect)

    def test_zero_input_gives_zero(self, pfp_plant):
        np.testing.assert_allclose(gyro_of_input(pfp_plant, [0.0]), np.zeros((2, 2)))

    def test_scaling(self, pfp_plant):
        np.testing.assert_allclose(
            gyro_of_input(pfp_plant, [2.0]), 2.0 * gyro_of_input(pfp_plant, [1.0])
        )

    def test_pfp_state_column(self, pfp_plant, params):
        x = np.array([3.0, 7.0])
        expect = np.array([[-7.0 / params.l_ind], [3.0 / params.c_cap]])
        np.testing.assert_allclose(gyro_of_state(pfp_plant, x), expect)

    def test_zero_state(self, pfp_plant):
        np.testing.assert_allclose(gyro_of_state(pfp_plant, np.zeros(2)), np.zeros((2, 1)))

    def test_exchange_identity_random(self, rng):
        # gyro_of_input(u) x == gyro_of_state(x) u for 1000 samples
        plant, _ = random_certified_plant(rng)
        scale = max(np.linalg.norm(j) for j in plant.j_list)
        for _ in range(1000):
            x = rng.normal(size=plant.n)
            u = rng.normal(size=plant.m)
            lhs = gyro_of_input(plant, u) @ x
            rhs = gyro_of_state(plant, x) @ u
            bound = 1e-13 * max(scale * np.linalg.norm(x) * np.linalg.norm(u), 1.0)
            assert np.linalg.norm(lhs - rhs) <= bound

    def test_linearity(self, pfp_plant, rng):
        u1, u2, a = rng.normal(size=1), rng.normal(size=1), 1.7
        np.testing.assert_allclose(
            gyro_of_input(pfp_plant, a * u1 + u2),
            a * gyro_of_input(pfp_plant, u1) + gyro_of_input(pfp_plant, u2),
            rtol=0.0,
            atol=1e-12,
        )

    def test_dimension_errors(self, pfp_plant):
        with pytest.raises(DimensionError):
            gyro_of_input(pfp_plant, [1.0, 2.0])
        with pytest.raises(DimensionError):
            gyro_of_state(pfp_plant, [1.0])


class TestCoefficientMatrices:
    def test_pfp_drift(self, pfp_plant, params):
        u0 = 0.37
        expect = u0 * np.array([[0.0, -1.0 / params.l_ind], [1.0 / params.c_cap, 0.0]])
        np.testing.assert_allclose(drift_matrix(pfp_plant, [u0]), expect)

    def test_zero_drift(self, pfp_plant):
        np.testing.assert_allclose(drift_matrix(pfp_plant, [0.0]), np.zeros((2, 2)))

    def test_pfp_input_matrix(self, pfp_plant, params):
        x = np.array([2.0, 5.0])
        expect = np.array([[-5.0 / params.l_ind], [2.0 / params.c_cap]])
        np.testing.assert_allclose(input_matrix(pfp_plant, x, [0.3]), expect)


class TestStateDerivative:
    def test_rest_state(self, rng):
        plant, _ = random_certified_plant(rng)
        plant_zero_source = bt.BilinearPlant(
            a0=plant.a0,
            j_list=plant.j_list,
            d=plant.d,
            b0=plant.b0,
            e=np.zeros_like(plant.e),
            c=plant.c,
            s_signal=lambda t: np.zeros(plant.q),
            l=plant.l,
            q=plant.q,
        )
        np.testing.assert_allclose(
            state_derivative(plant_zero_source, np.zeros(plant.n), np.zeros(plant.m), 0.0),
            np.zeros(plant.n),
        )

    def test_pfp_zero_current(self, pfp_plant, params):
        # at x = [0, v]: L di/dt = -u v + E sin(wt), C dv/dt = -G v
        v, u, t = 123.0, 0.4, 0.0071
        dx = state_derivative(pfp_plant, [0.0, v], [u], t)
        assert dx[0] * params.l_ind == pytest.approx(-u * v + params.e_amp * np.sin(params.omega * t))
        assert dx[1] * params.c_cap == pytest.approx(-params.g_load * v)

    def test_against_term_by_term_oracle(self, rng):
        plant, _ = random_certified_plant(rng, n=4, m=3, l=2, q=2)
        for _ in range(50):
            x = rng.normal(size=4)
            u = rng.normal(size=3)
            t = rng.uniform(0.0, 1.0)
            np.testing.assert_allclose(
                state_derivative(plant, x, u, t), state_deriv_oracle(plant, x, u, t), rtol=1e-12, atol=1e-12
            )


class TestOutput:
    def test_pfp_measures_voltage(self, pfp_plant):
        np.testing.assert_allclose(output(pfp_plant, [3.2, 180.5], [0.1]), [180.5])

    def test_zero_state(self, pfp_plant):
        np.testing.assert_allclose(output(pfp_plant, np.zeros(2), [0.0]), [0.0])

    def test_random_matches_product(self, rng):
        plant, _ = random_certified_plant(rng, l=3)
        x = rng.normal(size=plant.n)
        u = rng.normal(size=plant.m)
        cmat = np.asarray(plant.c(u))
        np.testing.assert_allclose(output(plant, x, u), cmat.T @ x)


class TestPassivityVerifier:
    def test_pfp_certificate_passes(self, pfp_plant_ideal, pfp_certs, rng):
        cert, _, _ = pfp_certs
        us = [np.array([v]) for v in rng.uniform(-1, 1, 20)]
        xs = [rng.normal(size=2) * 100 for _ in range(20)]
        assert verify_passivity_certificate(pfp_plant_ideal, cert, us, xs).passed

    def test_skew_plant_with_identity_p(self, rng):
        s = rng.normal(size=(3, 3))
        j1 = s - s.T
        plant = bt.BilinearPlant(
            a0=np.zeros((3, 3)),
            j_list=[j1],
            d=np.zeros((3, 3)),
            b0=lambda s_: np.zeros((3, 1)),
            e=np.zeros((3, 1)),
            c=lambda u: np.eye(3)[:, :1],
            s_signal=lambda t: np.zeros(1),
            l=1,
            q=1,
        )
        cert = bt.PassivityCertificate(p=np.eye(3), dfrak=np.zeros((3, 1)))
        us = [np.array([v]) for v in np.linspace(-2, 2, 9)]
        xs = [rng.normal(size=3) for _ in range(9)]
        assert verify_passivity_certificate(plant, cert, us, xs).passed

    def test_perturbed_p_fails_on_skew_identity(self, pfp_plant_ideal, params, rng):
        cert = bt.PassivityCertificate(
            p=np.diag([2.0 * params.l_ind, params.c_cap]),
            dfrak=np.diag([0.0, np.sqrt(params.g_load)]),
        )
        us = [np.array([v]) for v in rng.uniform(-1, 1, 10)]
        xs = [rng.normal(size=2) for _ in range(10)]
        rep = verify_passivity_certificate(pfp_plant_ideal, cert, us, xs)
        assert not rep.passed
        assert "input-skew" in rep.failures

    def test_fact1_orthogonality_random_certified(self, rng):
        plant, cert = random_certified_plant(rng)
        for _ in range(1000):
            x = rng.normal(size=plant.n)
            val = np.linalg.norm(x @ cert.p @ gyro_of_state(plant, x))
            scale = np.linalg.norm(cert.p) * np.linalg.norm(x) ** 2 * max(
                np.linalg.norm(j) for j in plant.j_list
            )
            assert val <= 1e-12 * max(scale, 1.0)

    def test_skew_residual_scales_with_input(self, rng):
        # passing per-coupling certificate bounds the residual at any u
        plant, cert = random_certified_plant(rng)
        base = [np.zeros(plant.m)] + [np.eye(plant.m)[k] for k in range(plant.m)]
        rep = verify_passivity_certificate(plant, cert, base, [])
        assert rep.passed
        for _ in range(100):
            u = rng.normal(size=plant.m)
            a = drift_matrix(plant, u)
            res = np.linalg.norm(cert.p @ a + a.T @ cert.p)
            scale = np.linalg.norm(cert.p @ a)
            assert res <= (1.0 + np.abs(u).sum()) * 1e-9 * max(scale, 1.0)


class TestObserverVerifier:
    def test_pfp_passes_both_dflags(self, pfp_plant_ideal, params_ideal, gains, rng):
        us = [np.array([v]) for v in rng.uniform(-1, 1, 20)]
        for dflag in (0, 1):
            _, ocert, _ = bt.pfp_certificates(params_ideal, gains, dflag=dflag)
            assert verify_observer_certificate(pfp_plant_ideal, ocert, us).passed

    def test_zero_gamma1_passes(self, pfp_plant_ideal, params_ideal, gains, rng):
        g2 = gains.gamma2
        _, ocert, _ = bt.pfp_certificates(
            params_ideal, replace(gains, gamma1=0.0, gamma2=g2), dflag=1
        )
        us = [np.array([v]) for v in rng.uniform(-1, 1, 20)]
        assert verify_observer_certificate(pfp_plant_ideal, ocert, us).passed

    def test_negative_gamma2_fails(self, pfp_plant_ideal, params_ideal, rng):
        # gamma2 = -1 makes the injected dissipation indefinite; with a zero
        # d_sigma the combined identity carries the full residual
        g1 = 0.0
        g2 = -1.0
        ocert = ObserverCertificate(
            gamma=lambda u: np.array([[g1 * float(u[0])], [g2]]),
            p_sigma=np.diag([params_ideal.l_ind, params_ideal.c_cap]),
            d_sigma=np.zeros((1, 1)),
            dflag=0,
        )
        us = [np.array([v]) for v in rng.uniform(-1, 1, 10)]
        rep = verify_observer_certificate(pfp_plant_ideal, ocert, us)
        assert not rep.passed


class TestRegressorVerifier:
    def test_pfp_decomposition_passes(self, pfp_plant_ideal, pfp_certs, rng):
        _, _, decomp = pfp_certs
        samples = [
            (rng.normal(size=2) * 50, np.array([rng.uniform(-1, 1)]), rng.uniform(0, 0.04))
            for _ in range(40)
        ]
        assert verify_regressor_decomposition(pfp_plant_ideal, decomp, samples).passed

    def test_trivial_zero_system(self, rng):
        plant = bt.BilinearPlant(
            a0=np.zeros((2, 2)),
            j_list=[np.array([[0.0, 1.0], [-1.0, 0.0]])],
            d=np.zeros((2, 2)),
            b0=lambda s: np.zeros((2, 1)),
            e=np.zeros((2, 1)),
            c=lambda u: np.array([[1.0], [0.0]]),
            s_signal=lambda t: np.zeros(1),
            l=1,
            q=1,
        )
        decomp = bt.RegressorDecomposition(
            bfrak=lambda y, u, s: np.zeros(2),
            omega=lambda y, u, s: np.zeros((2, 1)),
            p=1,
            theta_true=np.zeros(1),
        )
        samples = [(rng.normal(size=2), rng.normal(size=1), 0.0) for _ in range(5)]
        assert verify_regressor_decomposition(plant, decomp, samples).passed

    def test_flipped_sign_fails(self, pfp_plant_ideal, params_ideal, gains):
        _, _, decomp = bt.pfp_certificates(params_ideal, gains, omega_sign=-1.0)
        x = np.array([1.0, 150.0])
        rep = verify_regressor_decomposition(pfp_plant_ideal, decomp, [(x, np.array([0.5]), 0.01)])
        assert not rep.passed
        # residual is exactly 2 G y / C in the voltage row
        expected = 2.0 * params_ideal.g_load * 150.0 / params_ideal.c_cap
        assert rep.checks[0].residual == pytest.approx(expected, rel=1e-9)


class TestTrajectoryResidual:
    def test_pfp_exact_path(self, pfp_plant_ideal, pfp_traj):
        ts = np.linspace(0.0, 0.06, 61)
        rep = trajectory_residual(pfp_plant_ideal, pfp_traj, ts)
        assert rep.passed
        dyn, out = rep.checks
        assert dyn.residual <= 1e-9 * max(dyn.scale, 1.0)
        # the output defect is the neglected double-frequency ripple: nonzero,
        # reported, close to its closed-form amplitude
        assert 2.0 < out.residual < 4.0

    def test_constant_equilibrium_of_linear_reduction(self):
        # no gyration terms: a stable linear system resting at the origin
        plant = bt.BilinearPlant(
            a0=np.array([[0.0, 1.0], [-2.0, -3.0]]),
            j_list=[np.zeros((2, 2))],
            d=np.zeros((2, 2)),
            b0=lambda s: np.zeros((2, 1)),
            e=np.zeros((2, 1)),
            c=lambda u: np.array([[1.0], [0.0]]),
            s_signal=lambda t: np.zeros(1),
            l=1,
            q=1,
        )
        zero2 = lambda t: np.zeros(2)
        traj = bt.AdmissibleTrajectory(
            x_d=zero2, x_d_dot=zero2, u_d=lambda t: np.zeros(1), y_d=lambda t: np.zeros(1)
        )
        rep = trajectory_residual(plant, traj, np.linspace(0, 1, 11))
        assert rep.checks[0].residual == 0.0

    def test_perturbed_input_fails(self, pfp_plant_ideal, params_ideal):
        base = bt.pfp_admissible_trajectory(params_ideal)
        bad = bt.AdmissibleTrajectory(
            x_d=base.x_d,
            x_d_dot=base.x_d_dot,
            u_d=lambda t: base.u_d(t) + 0.05,
            y_d=base.y_d,
        )
        rep = trajectory_residual(pfp_plant_ideal, bad, np.linspace(0.0, 0.04, 17))
        assert not rep.passed


def test_lipschitz_spot_check(pfp_plant, rng):
    s_samples = rng.uniform(-1.0, 1.0, size=(50, 1))
    u_samples = rng.uniform(-1.0, 1.0, size=(50, 1))
    assert pfp_plant.lipschitz_quotients(s_samples, pfp_plant.b0) == 0.0
    assert pfp_plant.lipschitz_quotients(u_samples, pfp_plant.c) == 0.0


def test_plant_validation_errors():
    with pytest.raises(DimensionError):
        bt.BilinearPlant(
            a0=np.zeros((2, 3)),
            j_list=[np.zeros((2, 2))],
            d=np.zeros((2, 2)),
            b0=lambda s: np.zeros((2, 1)),
            e=np.zeros((2, 1)),
            c=lambda u: np.zeros((2, 1)),
            s_signal=lambda t: np.zeros(1),
            l=1,
            q=1,
        )
