"""Model-based and filtered-regression observers.

The model-based observer copies the plant with output injection and needs
every plant parameter.  The filtered-regression observer removes the
parameter-affine part of the dynamics through the transformation
z = x - Y(t) theta, runs a state filter for z together with the regressor
filter Y, then mixes the scalar regression through a pair of first-order
filters (mix_vec, mix_mat) and updates the parameter estimate with an
adjugate-based law that decouples each parameter channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .model import BilinearPlant, ObserverCertificate, RegressorDecomposition, drift_matrix
from .numerics import adjugate

__all__ = [
    "KalmanLikeState",
    "DremObserverState",
    "DremGains",
    "kalman_deriv",
    "drem_z_deriv",
    "drem_y_filter_deriv",
    "drem_mixing_derivs",
    "drem_theta_deriv",
    "reconstruct_state",
    "consistency_residual",
    "KalmanObserver",
    "DremObserver",
]


@dataclass
class KalmanLikeState:
    x_hat: np.ndarray

    def __post_init__(self):
        self.x_hat = np.atleast_1d(np.asarray(self.x_hat, dtype=float))
        if not np.all(np.isfinite(self.x_hat)):
            raise DimensionError("observer state must be finite")


@dataclass
class DremObserverState:
    z_hat: np.ndarray
    y_filter: np.ndarray
    mix_vec: np.ndarray
    mix_mat: np.ndarray
    theta_hat: np.ndarray

    def __post_init__(self):
        self.z_hat = np.atleast_1d(np.asarray(self.z_hat, dtype=float))
        self.y_filter = np.atleast_2d(np.asarray(self.y_filter, dtype=float))
        self.mix_vec = np.atleast_1d(np.asarray(self.mix_vec, dtype=float))
        self.mix_mat = np.atleast_2d(np.asarray(self.mix_mat, dtype=float))
        self.theta_hat = np.atleast_1d(np.asarray(self.theta_hat, dtype=float))
        p = self.theta_hat.shape[0]
        if self.y_filter.shape[1] != p or self.mix_vec.shape != (p,) or self.mix_mat.shape != (p, p):
            raise DimensionError("drem state: inconsistent parameter dimension")


@dataclass
class DremGains:
    """Diagonal positive gain matrices for the estimator and mixing filters."""

    lam: np.ndarray
    t_filter: np.ndarray

    def __post_init__(self):
        self.lam = np.atleast_2d(np.asarray(self.lam, dtype=float))
        self.t_filter = np.atleast_2d(np.asarray(self.t_filter, dtype=float))
        for name, mat in (("lam", self.lam), ("t_filter", self.t_filter)):
            if mat.shape[0] != mat.shape[1]:
                raise DimensionError(f"drem gains: {name} must be square")
            if np.count_nonzero(mat - np.diag(np.diagonal(mat))) != 0:
                raise DimensionError(f"drem gains: {name} must be diagonal")
            if np.any(np.diagonal(mat) <= 0.0):
                raise DimensionError(f"drem gains: {name} must have positive diagonal")

    @property
    def p(self) -> int:
        return self.lam.shape[0]


def kalman_deriv(plant: BilinearPlant, ocert: ObserverCertificate, x_hat, y, u, t: float) -> np.ndarray:
    """Model-based observer vector field (needs the true plant parameters)."""
    x_hat = np.asarray(x_hat, dtype=float)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    s = np.atleast_1d(np.asarray(plant.s_signal(t), dtype=float))
    gam = np.asarray(ocert.gamma(u), dtype=float)
    cu = np.asarray(plant.c(u), dtype=float)
    a = drift_matrix(plant, u)
    dx = (a - plant.d - gam @ cu.T) @ x_hat
    dx += gam @ y + np.asarray(plant.b0(s), dtype=float) @ u + plant.e @ s
    return dx


def drem_z_deriv(
    plant: BilinearPlant,
    ocert: ObserverCertificate,
    decomp: RegressorDecomposition,
    z_hat,
    y,
    u,
    t: float,
) -> np.ndarray:
    """State-filter vector field of the filtered-regression observer."""
    z_hat = np.asarray(z_hat, dtype=float)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    s = np.atleast_1d(np.asarray(plant.s_signal(t), dtype=float))
    gam = np.asarray(ocert.gamma(u), dtype=float)
    cu = np.asarray(plant.c(u), dtype=float)
    a = drift_matrix(plant, u)
    return (a - gam @ cu.T) @ z_hat + gam @ y + np.asarray(decomp.bfrak(y, u, s), dtype=float)


def drem_y_filter_deriv(
    plant: BilinearPlant,
    ocert: ObserverCertificate,
    decomp: RegressorDecomposition,
    y_filter,
    y,
    u,
    t: float,
) -> np.ndarray:
    """Regressor-filter vector field, sharing the state filter's dynamics matrix."""
    y_filter = np.atleast_2d(np.asarray(y_filter, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    s = np.atleast_1d(np.asarray(plant.s_signal(t), dtype=float))
    gam = np.asarray(ocert.gamma(u), dtype=float)
    cu = np.asarray(plant.c(u), dtype=float)
    a = drift_matrix(plant, u)
    return (a - gam @ cu.T) @ y_filter + np.asarray(decomp.omega(y, u, s), dtype=float)


def drem_mixing_derivs(
    y_filter,
    mix_vec,
    mix_mat,
    plant: BilinearPlant,
    z_hat,
    y,
    u,
    gains: DremGains,
) -> tuple[np.ndarray, np.ndarray]:
    """Vector fields of the mixed regression pair.

    mix_vec tracks the filtered product Y^T C (y - C^T z_hat); mix_mat the
    filtered Gram Y^T C C^T Y.  Both decay through the same diagonal filter.
    """
    y_filter = np.atleast_2d(np.asarray(y_filter, dtype=float))
    mix_vec = np.atleast_1d(np.asarray(mix_vec, dtype=float))
    mix_mat = np.atleast_2d(np.asarray(mix_mat, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    z_hat = np.asarray(z_hat, dtype=float)
    cu = np.asarray(plant.c(u), dtype=float)
    yc = y_filter.T @ cu
    innov = y - cu.T @ z_hat
    d_vec = -gains.t_filter @ mix_vec + yc @ innov
    d_mat = -gains.t_filter @ mix_mat + yc @ yc.T
    return d_vec, d_mat


def drem_theta_deriv(mix_vec, mix_mat, theta_hat, gains: DremGains) -> np.ndarray:
    """Adjugate-based parameter update; polynomial in mix_mat, never divides."""
    mix_vec = np.atleast_1d(np.asarray(mix_vec, dtype=float))
    mix_mat = np.atleast_2d(np.asarray(mix_mat, dtype=float))
    theta_hat = np.atleast_1d(np.asarray(theta_hat, dtype=float))
    if mix_mat.shape != (theta_hat.shape[0],) * 2 or mix_vec.shape != theta_hat.shape:
        raise DimensionError("drem_theta_deriv: inconsistent parameter dimension")
    mixer = adjugate(mix_mat.T @ mix_mat) @ mix_mat.T
    return gains.lam @ (mixer @ (mix_vec - mix_mat @ theta_hat))


def reconstruct_state(z_hat, y_filter, theta_hat) -> np.ndarray:
    """State estimate from the filtered transformation: x_hat = z_hat + Y theta_hat."""
    z_hat = np.atleast_1d(np.asarray(z_hat, dtype=float))
    y_filter = np.atleast_2d(np.asarray(y_filter, dtype=float))
    theta_hat = np.atleast_1d(np.asarray(theta_hat, dtype=float))
    if y_filter.shape != (z_hat.shape[0], theta_hat.shape[0]):
        raise DimensionError("reconstruct_state: filter shape mismatch")
    return z_hat + y_filter @ theta_hat


def consistency_residual(mix_vec, mix_mat, theta_true) -> np.ndarray:
    """Test-only residual of the mixed regression at the true parameters."""
    mix_vec = np.atleast_1d(np.asarray(mix_vec, dtype=float))
    mix_mat = np.atleast_2d(np.asarray(mix_mat, dtype=float))
    theta_true = np.atleast_1d(np.asarray(theta_true, dtype=float))
    return mix_vec - mix_mat @ theta_true


class KalmanObserver:
    """Sim wiring of the model-based observer: owns its packed state layout.

    Binds the design model at construction; plant-side parameter drifts never
    reach the observer.
    """

    kind = "kalman"

    def __init__(self, ocert: ObserverCertificate, model_plant: BilinearPlant, x_hat0=None):
        self.ocert = ocert
        self.model_plant = model_plant
        self.n = model_plant.n
        self._x0 = np.zeros(self.n) if x_hat0 is None else np.atleast_1d(np.asarray(x_hat0, dtype=float))

    @property
    def state_size(self) -> int:
        return self.n

    def init_state(self) -> np.ndarray:
        return self._x0.copy()

    def deriv(self, t: float, obs_state, y, u) -> np.ndarray:
        return kalman_deriv(self.model_plant, self.ocert, obs_state, y, u, t)

    def estimate(self, obs_state) -> np.ndarray:
        return np.asarray(obs_state, dtype=float)


class DremObserver:
    """Sim wiring of the filtered-regression observer.

    Packed layout: [z_hat (n), Y (n*p, row-major), mix_vec (p), mix_mat (p*p),
    theta_hat (p)].  mix_mat is initialised to phi0 * I, which must be
    positive for the estimator theory; zero is accepted for open-loop filter
    experiments.
    """

    kind = "drem"

    def __init__(
        self,
        ocert: ObserverCertificate,
        decomp: RegressorDecomposition,
        gains: DremGains,
        model_plant: BilinearPlant,
        phi0: float = 1e-6,
        z_hat0=None,
        y_filter0=None,
        theta_hat0=None,
    ):
        if gains.p != decomp.p:
            raise DimensionError("drem observer: gains and decomposition disagree on p")
        self.ocert = ocert
        self.decomp = decomp
        self.gains = gains
        self.model_plant = model_plant
        self.n = model_plant.n
        self.p = decomp.p
        n = self.n
        self._z0 = np.zeros(n) if z_hat0 is None else np.atleast_1d(np.asarray(z_hat0, dtype=float))
        self._y0 = (
            np.zeros((n, self.p))
            if y_filter0 is None
            else np.atleast_2d(np.asarray(y_filter0, dtype=float))
        )
        self._th0 = (
            np.zeros(self.p) if theta_hat0 is None else np.atleast_1d(np.asarray(theta_hat0, dtype=float))
        )
        self.phi0 = float(phi0)

    @property
    def state_size(self) -> int:
        n, p = self.n, self.p
        return n + n * p + p + p * p + p

    def init_state(self) -> np.ndarray:
        n, p = self.n, self.p
        return np.concatenate(
            [self._z0, self._y0.ravel(), np.zeros(p), (self.phi0 * np.eye(p)).ravel(), self._th0]
        )

    def unpack(self, obs_state) -> DremObserverState:
        n, p = self.n, self.p
        obs_state = np.asarray(obs_state, dtype=float)
        z = obs_state[:n]
        yf = obs_state[n : n + n * p].reshape(n, p)
        mv = obs_state[n + n * p : n + n * p + p]
        mm = obs_state[n + n * p + p : n + n * p + p + p * p].reshape(p, p)
        th = obs_state[n + n * p + p + p * p :]
        return DremObserverState(z, yf, mv, mm, th)

    def deriv(self, t: float, obs_state, y, u) -> np.ndarray:
        plant = self.model_plant
        st = self.unpack(obs_state)
        dz = drem_z_deriv(plant, self.ocert, self.decomp, st.z_hat, y, u, t)
        dy = drem_y_filter_deriv(plant, self.ocert, self.decomp, st.y_filter, y, u, t)
        dmv, dmm = drem_mixing_derivs(st.y_filter, st.mix_vec, st.mix_mat, plant, st.z_hat, y, u, self.gains)
        dth = drem_theta_deriv(st.mix_vec, st.mix_mat, st.theta_hat, self.gains)
        return np.concatenate([dz, dy.ravel(), dmv, dmm.ravel(), dth])

    def estimate(self, obs_state) -> np.ndarray:
        st = self.unpack(obs_state)
        return reconstruct_state(st.z_hat, st.y_filter, st.theta_hat)
