from dataclasses import replace

import numpy as np
import pytest

import biltrack as bt
from biltrack import (
    ControllerContext,
    adaptive_control,
    clamp_input,
    full_info_control,
    gyro_of_state,
    output_feedback_control,
)

from conftest import G_TRUE, random_certified_plant


@pytest.fixture()
def pfp_ctx(pfp_plant_ideal, params_ideal, gains, pfp_certs, pfp_traj):
    cert, _, _ = pfp_certs
    return ControllerContext(
        plant=pfp_plant_ideal,
        cert=cert,
        k_gain=np.array([[gains.k_gain]]),
        traj=pfp_traj,
        u_min=np.array([-1.0]),
        u_max=np.array([1.0]),
    )


class TestFullInformation:
    def test_on_reference_returns_feedforward(self, pfp_ctx, pfp_traj):
        for t in (0.0, 0.0063, 0.011):
            u = full_info_control(pfp_ctx, pfp_traj.x_d(t), t)
            np.testing.assert_allclose(u, pfp_traj.u_d(t), rtol=0.0, atol=1e-12)

    def test_zero_gain_returns_feedforward(self, pfp_ctx, pfp_traj, rng):
        ctx0 = replace(pfp_ctx, k_gain=np.array([[0.0]]))
        for _ in range(5):
            x = rng.normal(size=2) * 100
            t = rng.uniform(0, 0.02)
            np.testing.assert_allclose(full_info_control(ctx0, x, t), pfp_traj.u_d(t))

    def test_benchmark_values_at_zero_state(self, pfp_ctx, params_ideal):
        # I0 = 2 G V^2 / E and u_d(0) from the reference formulas
        i0 = params_ideal.i_ref_amplitude
        assert i0 == pytest.approx(6.130268, abs=1e-6)
        u = full_info_control(pfp_ctx, np.zeros(2), 0.0)
        # at x = 0 the feedback term contracts to K B(x_d)^T P x_d = 0
        assert u[0] == pytest.approx(-0.0205, abs=1e-4)
        u_d0 = -params_ideal.l_ind * i0 * params_ideal.omega / pfp_ctx.traj.x_d(0.0)[1]
        assert u[0] == pytest.approx(u_d0, rel=1e-12)

    def test_two_forms_agree_on_pfp(self, pfp_ctx, pfp_plant_ideal, pfp_traj, rng):
        # direct form vs error form: u_d + K B(x_d,s)^T P (x_d - x)
        cert = pfp_ctx.cert
        k = pfp_ctx.k_gain
        for _ in range(1000):
            x = rng.normal(size=2) * np.array([20.0, 300.0])
            t = rng.uniform(0.0, 0.04)
            s = pfp_plant_ideal.s_signal(t)
            x_d = pfp_traj.x_d(t)
            b_ref = np.asarray(pfp_plant_ideal.b0(s)) + gyro_of_state(pfp_plant_ideal, x_d)
            u_err_form = pfp_traj.u_d(t) + k @ (b_ref.T @ cert.p @ (x_d - x))
            u_direct = full_info_control(pfp_ctx, x, t)
            scale = max(np.abs(u_direct).max(), np.abs(u_err_form).max(), 1.0)
            assert np.abs(u_direct - u_err_form).max() <= 1e-12 * scale

    def test_two_forms_agree_on_random_certified(self, rng):
        plant, cert = random_certified_plant(rng, n=4, m=2)
        k = np.diag(rng.uniform(0.1, 1.0, 2))
        x_ref = rng.normal(size=4)
        u_ref = rng.normal(size=2)
        traj = bt.AdmissibleTrajectory(
            x_d=lambda t: x_ref, x_d_dot=lambda t: np.zeros(4), u_d=lambda t: u_ref, y_d=lambda t: np.zeros(1)
        )
        ctx = ControllerContext(plant=plant, cert=cert, k_gain=k, traj=traj)
        for _ in range(200):
            x = rng.normal(size=4)
            t = rng.uniform(0.0, 1.0)
            s = plant.s_signal(t)
            b_ref = np.asarray(plant.b0(s)) + gyro_of_state(plant, x_ref)
            u1 = full_info_control(ctx, x, t)
            u2 = u_ref + k @ (b_ref.T @ cert.p @ (x_ref - x))
            scale = max(np.abs(u1).max(), np.abs(u2).max(), 1.0)
            assert np.abs(u1 - u2).max() <= 1e-12 * scale

    def test_analytic_loop_derivative_nonpositive(self, pfp_ctx, pfp_plant_ideal, pfp_traj, rng):
        cert, k = pfp_ctx.cert, pfp_ctx.k_gain
        for _ in range(10_000):
            x_tilde = rng.normal(size=2) * np.array([30.0, 300.0])
            t = rng.uniform(0.0, 0.02)
            s = pfp_plant_ideal.s_signal(t)
            val = bt.v_c_dot_analytic(cert, k, pfp_plant_ideal, x_tilde, pfp_traj.x_d(t), s)
            assert val <= 0.0


class TestOutputFeedback:
    def test_reference_estimate_returns_feedforward(self, pfp_ctx, pfp_traj):
        t = 0.004
        np.testing.assert_allclose(
            output_feedback_control(pfp_ctx, pfp_traj.x_d(t), t), pfp_traj.u_d(t), atol=1e-12
        )

    def test_identical_to_full_information_bitwise(self, pfp_ctx, rng):
        for _ in range(20):
            x = rng.normal(size=2) * 100
            t = rng.uniform(0, 0.02)
            u_fi = full_info_control(pfp_ctx, x, t)
            u_of = output_feedback_control(pfp_ctx, x, t)
            assert (u_fi == u_of).all()


class TestAdaptive:
    def test_true_parameter_collapses_to_full_information(self, params_ideal, gains, rng):
        builder = bt.pfp.PfpContextBuilder(params_ideal, gains)
        theta = np.array([G_TRUE])
        ctx_true = builder(theta)
        for _ in range(20):
            x = rng.normal(size=2) * 100
            t = rng.uniform(0, 0.02)
            # z_hat + Y theta = x with Y = 0
            u_ad = adaptive_control(builder, x, np.zeros((2, 1)), theta, t)
            u_fi = full_info_control(ctx_true, x, t)
            assert (u_ad == u_fi).all()

    def test_zero_filter_uses_z_hat(self, params_ideal, gains, rng):
        builder = bt.pfp.PfpContextBuilder(params_ideal, gains)
        theta = np.array([0.7 * G_TRUE])
        z = rng.normal(size=2) * 50
        u1 = adaptive_control(builder, z, np.zeros((2, 1)), theta, 0.003)
        u2 = full_info_control(builder(theta), z, 0.003)
        assert (u1 == u2).all()

    def test_estimate_rebuilds_reference(self, params_ideal, gains):
        builder = bt.pfp.PfpContextBuilder(params_ideal, gains)
        g_hat = 1.0 / 87.0
        theta = np.array([g_hat])
        ctx = builder(theta)
        traj = bt.pfp_admissible_trajectory(params_ideal, g_effective=g_hat)
        t = 0.0
        u = adaptive_control(builder, ctx.traj.x_d(t), np.zeros((2, 1)), theta, t)
        np.testing.assert_allclose(u, traj.u_d(t), atol=1e-12)

    def test_estimate_floor(self, params_ideal, gains):
        builder = bt.pfp.PfpContextBuilder(params_ideal, gains)
        ctx = builder(np.array([0.0]))  # clamped to the conductance floor
        assert ctx.traj.x_d(0.0)[1] == pytest.approx(params_ideal.v_target, rel=1e-6)
        assert abs(ctx.traj.x_d(0.0025)[0]) < 1e-3

    def test_nonfinite_estimate_rejected(self, params_ideal, gains):
        builder = bt.pfp.PfpContextBuilder(params_ideal, gains)
        with pytest.raises(bt.DimensionError):
            adaptive_control(builder, np.zeros(2), np.zeros((2, 1)), np.array([np.nan]), 0.0)


class TestClamp:
    @pytest.mark.parametrize(
        "raw,expect", [(0.5, 0.5), (1.7, 1.0), (-3.0, -1.0)]
    )
    def test_examples(self, raw, expect):
        bounds = (np.array([-1.0]), np.array([1.0]))
        assert clamp_input(np.array([raw]), bounds)[0] == pytest.approx(expect)

    def test_no_bounds_is_identity(self):
        np.testing.assert_allclose(clamp_input(np.array([42.0]), None), [42.0])


def test_context_validation(pfp_plant_ideal, pfp_certs, pfp_traj):
    cert, _, _ = pfp_certs
    with pytest.raises(bt.CertificateError):
        ControllerContext(
            plant=pfp_plant_ideal,
            cert=cert,
            k_gain=np.array([[-1.0]]),
            traj=pfp_traj,
        )
    with pytest.raises(bt.CertificateError):
        ControllerContext(
            plant=pfp_plant_ideal,
            cert=cert,
            k_gain=np.array([[1.0]]),
            traj=pfp_traj,
            u_min=np.array([1.0]),
            u_max=np.array([-1.0]),
        )
