"""Tracking control laws: full-information, output-feedback, adaptive.

The full-information law is

    u = u_d(t) + K [B0(s)^T P x_d - B(x_d, s)^T P x]

which, by the state-gyration orthogonality of the passivity certificate,
equals u_d + K B(x_d,s)^T P (x_d - x).  The output-feedback and adaptive
variants are certainty-equivalent: they evaluate the same law at the state
estimate, the adaptive one additionally rebuilding every
parameter-dependent piece of the context from the current estimate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import CertificateError, DimensionError
from .model import AdmissibleTrajectory, BilinearPlant, PassivityCertificate, gyro_of_state
from .observers import reconstruct_state

__all__ = [
    "ControllerContext",
    "full_info_control",
    "output_feedback_control",
    "adaptive_control",
    "clamp_input",
    "FullInfoController",
    "OutputFeedbackController",
    "AdaptiveController",
]


@dataclass
class ControllerContext:
    """Everything the full-information law needs at one parameter setting."""

    plant: BilinearPlant
    cert: PassivityCertificate
    k_gain: np.ndarray
    traj: AdmissibleTrajectory
    u_min: np.ndarray | None = None
    u_max: np.ndarray | None = None

    def __post_init__(self):
        self.k_gain = np.atleast_2d(np.asarray(self.k_gain, dtype=float))
        m = self.plant.m
        if self.k_gain.shape != (m, m):
            raise DimensionError(f"controller: k_gain must be {m}-by-{m}")
        if np.linalg.norm(self.k_gain - self.k_gain.T) > 1e-12 * max(np.linalg.norm(self.k_gain), 1.0):
            raise CertificateError("controller: k_gain must be symmetric")
        if np.any(np.linalg.eigvalsh(self.k_gain) < 0.0):
            raise CertificateError("controller: k_gain must be positive semidefinite")
        if self.u_min is not None:
            self.u_min = np.broadcast_to(np.asarray(self.u_min, dtype=float), (m,)).copy()
        if self.u_max is not None:
            self.u_max = np.broadcast_to(np.asarray(self.u_max, dtype=float), (m,)).copy()
        if self.u_min is not None and self.u_max is not None and np.any(self.u_min >= self.u_max):
            raise CertificateError("controller: u_min must be below u_max")

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray] | None:
        if self.u_min is None or self.u_max is None:
            return None
        return self.u_min, self.u_max


def full_info_control(ctx: ControllerContext, x, t: float) -> np.ndarray:
    """Full-information tracking law evaluated at the true state."""
    plant = ctx.plant
    x = np.asarray(x, dtype=float)
    if x.shape != (plant.n,):
        raise DimensionError(f"full_info_control: state must have length {plant.n}")
    s = np.atleast_1d(np.asarray(plant.s_signal(t), dtype=float))
    x_d = np.asarray(ctx.traj.x_d(t), dtype=float)
    u_d = np.atleast_1d(np.asarray(ctx.traj.u_d(t), dtype=float))
    p = ctx.cert.p
    b0 = np.asarray(plant.b0(s), dtype=float)
    b_ref = b0 + gyro_of_state(plant, x_d)
    return u_d + ctx.k_gain @ (b0.T @ (p @ x_d) - b_ref.T @ (p @ x))


def output_feedback_control(ctx: ControllerContext, x_hat, t: float) -> np.ndarray:
    """Certainty-equivalent law at a model-based observer estimate."""
    return full_info_control(ctx, x_hat, t)


def adaptive_control(
    ctx_builder: Callable[[np.ndarray], ControllerContext],
    z_hat,
    y_filter,
    theta_hat,
    t: float,
) -> np.ndarray:
    """Certainty-equivalent law at the filtered-observer reconstruction.

    Reconstructs x_hat = z_hat + Y theta_hat, rebuilds the
    parameter-dependent context (reference trajectory, certificate entries)
    from theta_hat, and evaluates the full-information law there.
    """
    theta_hat = np.atleast_1d(np.asarray(theta_hat, dtype=float))
    if not np.all(np.isfinite(theta_hat)):
        raise DimensionError("adaptive_control: parameter estimate is not finite")
    x_hat = reconstruct_state(z_hat, y_filter, theta_hat)
    ctx = ctx_builder(theta_hat)
    return full_info_control(ctx, x_hat, t)


def clamp_input(u, bounds: tuple[np.ndarray, np.ndarray] | None) -> np.ndarray:
    """Per-channel saturation; identity when bounds are absent."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if bounds is None:
        return u
    lo, hi = bounds
    return np.clip(u, lo, hi)


class FullInfoController:
    """Sim wiring for the full-information mode."""

    mode = "full-info"

    def __init__(self, ctx: ControllerContext):
        self.ctx = ctx

    @property
    def bounds(self):
        return self.ctx.bounds

    def command(self, t: float, x) -> np.ndarray:
        return full_info_control(self.ctx, x, t)


class OutputFeedbackController:
    """Sim wiring for the model-based output-feedback mode."""

    mode = "output-feedback"

    def __init__(self, ctx: ControllerContext):
        self.ctx = ctx

    @property
    def bounds(self):
        return self.ctx.bounds

    def command(self, t: float, x_hat) -> np.ndarray:
        return output_feedback_control(self.ctx, x_hat, t)


class AdaptiveController:
    """Sim wiring for the adaptive output-feedback mode."""

    mode = "adaptive"

    def __init__(self, ctx_builder: Callable[[np.ndarray], ControllerContext], bounds=None):
        self.ctx_builder = ctx_builder
        self.bounds = bounds

    def command(self, t: float, z_hat, y_filter, theta_hat) -> np.ndarray:
        return adaptive_control(self.ctx_builder, z_hat, y_filter, theta_hat, t)

    def context(self, theta_hat) -> ControllerContext:
        return self.ctx_builder(np.atleast_1d(np.asarray(theta_hat, dtype=float)))
