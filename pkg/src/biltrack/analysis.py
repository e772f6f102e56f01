"""Excitation and Lyapunov diagnostics.

The damping Gram of the tracking loop, windowed persistency-of-excitation
levels, the tracking/observer Lyapunov functionals with their analytic
derivatives, and the running integral used to monitor the mixing
determinant's non-square-integrability surrogate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .model import BilinearPlant, ObserverCertificate, PassivityCertificate, input_matrix
from .numerics import spd_sqrt, sym_max_eig, sym_min_eig

__all__ = [
    "PeReport",
    "LyapunovTrace",
    "q_gram",
    "pe_level",
    "v_c",
    "v_c_dot_analytic",
    "v_o",
    "v_o_dot_analytic",
    "det_sq_integral",
    "mixing_divergence_surrogate",
    "detectability_probe",
    "certainty_equivalence_gap",
    "lyapunov_trace_from_arrays",
]


@dataclass
class PeReport:
    """Windowed-Gram excitation levels over a grid of window starts."""

    window: float
    alpha: float
    beta: float
    grid: np.ndarray

    @property
    def is_pe(self) -> bool:
        return self.alpha > 0.0

    def __str__(self) -> str:
        status = "PE" if self.is_pe else "not PE"
        return (
            f"window T={self.window:g}s over {len(self.grid)} starts: "
            f"alpha={self.alpha:.6e}, beta={self.beta:.6e} ({status})"
        )


@dataclass
class LyapunovTrace:
    """Aligned diagnostic series extracted from a simulation log."""

    times: np.ndarray
    v_c: np.ndarray
    v_c_dot_analytic: np.ndarray
    v_o: np.ndarray
    det_phi: np.ndarray
    det_sq_integral: np.ndarray


def q_gram(cert: PassivityCertificate, k_gain, plant: BilinearPlant, x_d, s) -> np.ndarray:
    """Damping Gram of the closed tracking loop at one reference sample.

    Returns Dfrak Dfrak^T + P B(x_d, s) K B(x_d, s)^T P; the negative of the
    tracking Lyapunov derivative is the quadratic form of this matrix.  The
    Gram's square-root factor is never materialised.
    """
    k_gain = np.atleast_2d(np.asarray(k_gain, dtype=float))
    p = cert.p
    b = input_matrix(plant, x_d, s)
    pb = p @ b
    return cert.dfrak @ cert.dfrak.T + pb @ k_gain @ pb.T


def pe_level(
    gram_series: np.ndarray,
    dt: float,
    window: float,
    grid: np.ndarray | None = None,
) -> PeReport:
    """Windowed integral bounds of a uniformly sampled Gram series.

    alpha is the smallest eigenvalue of the trapezoidal window integral,
    minimised over window starts; beta the largest eigenvalue, maximised.
    The default grid steps the window start by window/4 across the covered
    span.  Excitation holds when alpha > 0.
    """
    gram_series = np.asarray(gram_series, dtype=float)
    if gram_series.ndim == 1:
        gram_series = gram_series[:, None, None]
    if gram_series.ndim != 3 or gram_series.shape[1] != gram_series.shape[2]:
        raise DimensionError("pe_level: gram_series must be (N, n, n)")
    n_samples = gram_series.shape[0]
    if dt <= 0.0 or window <= 0.0:
        raise DimensionError("pe_level: dt and window must be positive")
    span = (n_samples - 1) * dt
    win_steps = int(round(window / dt))
    if win_steps < 1 or win_steps > n_samples - 1:
        raise DimensionError(
            f"pe_level: window {window:g}s not resolvable within the series span {span:g}s"
        )
    if grid is None:
        step = max(win_steps // 4, 1)
        starts = np.arange(0, n_samples - win_steps, step, dtype=int)
    else:
        starts = np.asarray(np.round(np.asarray(grid, dtype=float) / dt), dtype=int)
        if np.any(starts < 0) or np.any(starts + win_steps > n_samples - 1 + 1):
            raise DimensionError("pe_level: grid window exceeds series coverage")
    if len(starts) == 0:
        starts = np.array([0])

    # cumulative trapezoid once, windows by subtraction
    mids = 0.5 * (gram_series[1:] + gram_series[:-1]) * dt
    cum = np.concatenate([np.zeros((1, *gram_series.shape[1:])), np.cumsum(mids, axis=0)])
    alpha = np.inf
    beta = -np.inf
    for i0 in starts:
        itg = cum[i0 + win_steps] - cum[i0]
        itg = 0.5 * (itg + itg.T)
        alpha = min(alpha, sym_min_eig(itg))
        beta = max(beta, sym_max_eig(itg))
    return PeReport(window=window, alpha=float(alpha), beta=float(beta), grid=starts * dt)


def v_c(cert: PassivityCertificate, x_tilde) -> float:
    """Tracking Lyapunov function 0.5 * x_tilde^T P x_tilde."""
    x_tilde = np.atleast_1d(np.asarray(x_tilde, dtype=float))
    return 0.5 * float(x_tilde @ cert.p @ x_tilde)


def v_c_dot_analytic(
    cert: PassivityCertificate,
    k_gain,
    plant: BilinearPlant,
    x_tilde,
    x_d,
    s,
) -> float:
    """Analytic derivative of the tracking Lyapunov function (always <= 0).

    Equals -(|Dfrak^T x_tilde|^2 + |Kroot^T B(x_d,s)^T P x_tilde|^2), i.e.
    the negative quadratic form of the damping Gram.
    """
    x_tilde = np.atleast_1d(np.asarray(x_tilde, dtype=float))
    k_gain = np.atleast_2d(np.asarray(k_gain, dtype=float))
    kroot = spd_sqrt(k_gain) if np.any(k_gain) else np.zeros_like(k_gain)
    b = input_matrix(plant, x_d, s)
    term_d = cert.dfrak.T @ x_tilde
    term_b = kroot.T @ (b.T @ (cert.p @ x_tilde))
    return -float(term_d @ term_d) - float(term_b @ term_b)


def v_o(ocert: ObserverCertificate, err) -> float:
    """Observer Lyapunov function 0.5 * err^T P_sigma err."""
    err = np.atleast_1d(np.asarray(err, dtype=float))
    if err.shape[0] != ocert.p_sigma.shape[0]:
        raise DimensionError("v_o: error dimension mismatch")
    return 0.5 * float(err @ ocert.p_sigma @ err)


def v_o_dot_analytic(ocert: ObserverCertificate, plant: BilinearPlant, err, u) -> float:
    """Analytic derivative of v_o along the observer error flow (always <= 0)."""
    err = np.atleast_1d(np.asarray(err, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    cu = np.asarray(plant.c(u), dtype=float)
    w = ocert.d_sigma.T @ (cu.T @ err)
    return -float(w @ w)


def det_sq_integral(det_series, dt: float) -> np.ndarray:
    """Cumulative trapezoidal integral of det^2; same length as the input, non-decreasing."""
    det_series = np.atleast_1d(np.asarray(det_series, dtype=float))
    sq = det_series**2
    steps = 0.5 * (sq[1:] + sq[:-1]) * dt
    return np.concatenate([[0.0], np.cumsum(steps)])


def mixing_divergence_surrogate(
    det_series,
    dt: float,
    ratio_threshold: float = 100.0,
    early_fraction: float = 0.01,
) -> tuple[float, bool]:
    """Finite-horizon surrogate for non-square-integrability of det(Phi).

    No finite-time test can prove the integral of det^2 diverges; this
    heuristic compares the full-horizon integral with the integral over the
    first `early_fraction` of the horizon and reports (ratio, ratio >=
    threshold).  Diagnostic only, never asserted by the estimator.
    """
    integral = det_sq_integral(det_series, dt)
    k_early = max(int(round(early_fraction * (len(integral) - 1))), 1)
    early = integral[k_early]
    if early <= 0.0:
        return (np.inf if integral[-1] > 0.0 else 0.0), integral[-1] > 0.0
    ratio = float(integral[-1] / early)
    return ratio, ratio >= ratio_threshold


def detectability_probe(
    cert: PassivityCertificate,
    plant: BilinearPlant,
    x_d_samples,
    s_samples,
) -> float:
    """Smallest singular value of the stacked damping channels over a window.

    Stacks [Dfrak^T; B(x_d,s)^T P] at each sample; a strictly positive
    minimum supports (without proving) the detectability hypothesis that
    vanishing damping channels force the tracking error to zero.
    """
    worst = np.inf
    for x_d, s in zip(x_d_samples, s_samples):
        b = input_matrix(plant, x_d, s)
        stacked = np.vstack([cert.dfrak.T, b.T @ cert.p])
        worst = min(worst, float(np.linalg.svd(stacked, compute_uv=False)[-1]))
    return worst


def certainty_equivalence_gap(log, ctx_true) -> np.ndarray:
    """Diagnostic gap between the applied command and the true-parameter law.

    Evaluates the full-information law with the true state and parameters at
    every logged sample and returns ||u_true - u_cmd||.  Reported only: the
    theory bounds this gap by estimation errors with non-constructive
    constants, so nothing is asserted against it.
    """
    from .controllers import full_info_control

    out = np.zeros(len(log.t))
    for k, t in enumerate(log.t):
        u_true = full_info_control(ctx_true, log.x[k], float(t))
        out[k] = np.linalg.norm(u_true - log.u_cmd[k])
    return out


def lyapunov_trace_from_arrays(
    times: np.ndarray,
    v_c_values: np.ndarray,
    v_c_dots: np.ndarray,
    v_o_values: np.ndarray,
    det_phi: np.ndarray,
    dt: float,
) -> LyapunovTrace:
    """Bundle logged diagnostics, deriving the running determinant integral."""
    return LyapunovTrace(
        times=np.asarray(times, dtype=float),
        v_c=np.asarray(v_c_values, dtype=float),
        v_c_dot_analytic=np.asarray(v_c_dots, dtype=float),
        v_o=np.asarray(v_o_values, dtype=float),
        det_phi=np.asarray(det_phi, dtype=float),
        det_sq_integral=det_sq_integral(det_phi, dt),
    )
