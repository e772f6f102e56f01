"""Bilinear plant class, structural mappings, and certificate verifiers.

The plant is

    dx/dt = [A0 + sum_i Ji*u_i - D] x + B0(s) u + E s,      y = C(u)^T x

with constant A0, Ji, D, E and globally Lipschitz B0, C.  Admissible
reference trajectories satisfy the same dynamics exactly.  The verifiers
check, by sampling, the algebraic identities behind the passivity
certificate (P, Dfrak), the observer certificate (Gamma, P_sigma, D_sigma,
dflag) and the regressor decomposition (bfrak, omega, theta).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionError

__all__ = [
    "BilinearPlant",
    "PassivityCertificate",
    "ObserverCertificate",
    "RegressorDecomposition",
    "AdmissibleTrajectory",
    "CheckResult",
    "VerificationReport",
    "gyro_of_input",
    "gyro_of_state",
    "drift_matrix",
    "input_matrix",
    "state_derivative",
    "output",
    "verify_passivity_certificate",
    "verify_observer_certificate",
    "verify_regressor_decomposition",
    "trajectory_residual",
]

CERT_RTOL = 1e-9


def _vec(x, dim: int, who: str) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (dim,):
        raise DimensionError(f"{who}: expected a vector of length {dim}, got shape {x.shape}")
    return x


@dataclass
class BilinearPlant:
    """Container for the plant matrices and maps.

    Treat instances as immutable after construction; every operation below is
    a pure function of (plant, arguments).
    """

    a0: np.ndarray
    j_list: Sequence[np.ndarray]
    d: np.ndarray
    b0: Callable[[np.ndarray], np.ndarray]
    e: np.ndarray
    c: Callable[[np.ndarray], np.ndarray]
    s_signal: Callable[[float], np.ndarray]
    l: int
    q: int

    n: int = field(init=False)
    m: int = field(init=False)

    def __post_init__(self):
        self.a0 = np.asarray(self.a0, dtype=float)
        self.d = np.asarray(self.d, dtype=float)
        self.e = np.asarray(self.e, dtype=float)
        self.j_list = tuple(np.asarray(j, dtype=float) for j in self.j_list)
        n = self.a0.shape[0]
        m = len(self.j_list)
        if self.a0.shape != (n, n) or self.d.shape != (n, n):
            raise DimensionError("plant: a0 and d must be n-by-n")
        for j in self.j_list:
            if j.shape != (n, n):
                raise DimensionError("plant: each input-coupling matrix must be n-by-n")
        if m > n:
            raise DimensionError("plant: input dimension may not exceed state dimension")
        if self.e.shape != (n, self.q):
            raise DimensionError(f"plant: e must be {n}-by-{self.q}")
        self.n = n
        self.m = m
        b0_probe = np.asarray(self.b0(np.zeros(self.q)), dtype=float)
        if b0_probe.shape != (n, m):
            raise DimensionError(f"plant: b0(s) must return {n}-by-{m}")
        c_probe = np.asarray(self.c(np.zeros(m)), dtype=float)
        if c_probe.shape != (n, self.l):
            raise DimensionError(f"plant: c(u) must return {n}-by-{self.l}")
        for mat in (self.a0, self.d, self.e, *self.j_list):
            if not np.all(np.isfinite(mat)):
                raise DimensionError("plant: matrices must be finite")

    def lipschitz_quotients(self, samples: np.ndarray, probe: Callable) -> float:
        """Max sampled difference quotient of a matrix-valued map.

        A finite spot check of the Lipschitz assumption on b0 and c; returns
        the largest ||f(a) - f(b)|| / |a - b| over consecutive sample pairs.
        """
        worst = 0.0
        for a, b in zip(samples[:-1], samples[1:]):
            gap = np.linalg.norm(np.atleast_1d(a) - np.atleast_1d(b))
            if gap == 0.0:
                continue
            worst = max(worst, np.linalg.norm(np.asarray(probe(a)) - np.asarray(probe(b))) / gap)
        return worst


@dataclass
class PassivityCertificate:
    """(P, Dfrak) certifying the drift-dissipation and input-skew identities."""

    p: np.ndarray
    dfrak: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        self.dfrak = np.asarray(self.dfrak, dtype=float)
        if self.p.ndim != 2 or self.p.shape[0] != self.p.shape[1]:
            raise DimensionError("certificate: p must be square")
        if self.dfrak.ndim != 2 or self.dfrak.shape[0] != self.p.shape[0]:
            raise DimensionError("certificate: dfrak row count must match p")


@dataclass
class ObserverCertificate:
    """Output-injection certificate: gain map Gamma plus (P_sigma, D_sigma, dflag)."""

    gamma: Callable[[np.ndarray], np.ndarray]
    p_sigma: np.ndarray
    d_sigma: np.ndarray
    dflag: int = 0

    def __post_init__(self):
        self.p_sigma = np.asarray(self.p_sigma, dtype=float)
        self.d_sigma = np.asarray(self.d_sigma, dtype=float)
        if self.dflag not in (0, 1):
            raise DimensionError("certificate: dflag must be 0 or 1")
        if self.p_sigma.ndim != 2 or self.p_sigma.shape[0] != self.p_sigma.shape[1]:
            raise DimensionError("certificate: p_sigma must be square")
        if self.d_sigma.ndim != 2:
            raise DimensionError("certificate: d_sigma must be a matrix")


@dataclass
class RegressorDecomposition:
    """Known maps (bfrak, omega) splitting the parameter-affine part of the dynamics.

    theta_true is carried only for verifiers and test oracles; runtime
    estimators never read it.
    """

    bfrak: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    omega: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    p: int
    theta_true: np.ndarray

    def __post_init__(self):
        self.theta_true = np.atleast_1d(np.asarray(self.theta_true, dtype=float))
        if self.theta_true.shape != (self.p,):
            raise DimensionError("decomposition: theta_true length must equal p")


@dataclass
class AdmissibleTrajectory:
    """Reference (x_d, u_d, y_d) with the time derivative of x_d available."""

    x_d: Callable[[float], np.ndarray]
    x_d_dot: Callable[[float], np.ndarray]
    u_d: Callable[[float], np.ndarray]
    y_d: Callable[[float], np.ndarray]


@dataclass
class CheckResult:
    name: str
    residual: float
    scale: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tol


@dataclass
class VerificationReport:
    name: str
    checks: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            out.append(f"{self.name} {c.name}: residual {c.residual:.3e} (tol {c.tol:.3e}) -> {status}")
        return out


def gyro_of_input(plant: BilinearPlant, u) -> np.ndarray:
    """State-coupling matrix of an input vector: sum_i Ji * u_i (linear in u)."""
    u = _vec(u, plant.m, "gyro_of_input")
    out = np.zeros((plant.n, plant.n))
    for ji, ui in zip(plant.j_list, u):
        out += ji * ui
    return out


def gyro_of_state(plant: BilinearPlant, x) -> np.ndarray:
    """Column-stacked [J1 x, ..., Jm x]; satisfies gyro_of_input(u) @ x = gyro_of_state(x) @ u."""
    x = _vec(x, plant.n, "gyro_of_state")
    return np.column_stack([ji @ x for ji in plant.j_list])


def drift_matrix(plant: BilinearPlant, u) -> np.ndarray:
    """A(u) = A0 + sum_i Ji u_i."""
    return plant.a0 + gyro_of_input(plant, u)


def input_matrix(plant: BilinearPlant, x, s) -> np.ndarray:
    """B(x, s) = B0(s) + [J1 x, ..., Jm x]."""
    s = _vec(s, plant.q, "input_matrix")
    return np.asarray(plant.b0(s), dtype=float) + gyro_of_state(plant, x)


def state_derivative(plant: BilinearPlant, x, u, t: float) -> np.ndarray:
    """Plant vector field at (x, u, t)."""
    x = _vec(x, plant.n, "state_derivative")
    u = _vec(u, plant.m, "state_derivative")
    s = _vec(plant.s_signal(t), plant.q, "state_derivative")
    dx = (plant.a0 + gyro_of_input(plant, u) - plant.d) @ x
    dx += np.asarray(plant.b0(s), dtype=float) @ u + plant.e @ s
    return dx


def output(plant: BilinearPlant, x, u) -> np.ndarray:
    """Measured output y = C(u)^T x."""
    x = _vec(x, plant.n, "output")
    u = _vec(u, plant.m, "output")
    return np.asarray(plant.c(u), dtype=float).T @ x


def _tol(scale: float) -> float:
    return CERT_RTOL * max(scale, 1.0)


def verify_passivity_certificate(
    plant: BilinearPlant,
    cert: PassivityCertificate,
    u_samples: Sequence[np.ndarray],
    x_samples: Sequence[np.ndarray],
) -> VerificationReport:
    """Residuals of the three passivity identities over sampled inputs/states.

    Checks P D + D^T P = 2 Dfrak Dfrak^T, the skew identity
    P A(u) = -A(u)^T P at each u sample, and the state-gyration
    orthogonality x^T P J(x) = 0 at each x sample.
    """
    p, dfrak = cert.p, cert.dfrak
    if p.shape != (plant.n, plant.n):
        raise DimensionError("verify_passivity_certificate: p must match the plant dimension")

    gram = dfrak @ dfrak.T
    res_drift = np.linalg.norm(p @ plant.d + plant.d.T @ p - 2.0 * gram)
    scale_drift = max(np.linalg.norm(p @ plant.d), np.linalg.norm(gram))

    res_skew = 0.0
    scale_skew = 0.0
    for u in u_samples:
        a = drift_matrix(plant, u)
        res_skew = max(res_skew, np.linalg.norm(p @ a + a.T @ p))
        scale_skew = max(scale_skew, np.linalg.norm(p @ a))

    res_orth = 0.0
    scale_orth = 0.0
    for x in x_samples:
        jx = gyro_of_state(plant, x)
        res_orth = max(res_orth, np.linalg.norm(np.asarray(x) @ p @ jx))
        scale_orth = max(scale_orth, np.linalg.norm(p @ jx) * np.linalg.norm(x))

    return VerificationReport(
        "assumption-1",
        [
            CheckResult("drift-dissipation", res_drift, scale_drift, _tol(scale_drift)),
            CheckResult("input-skew", res_skew, scale_skew, _tol(scale_skew)),
            CheckResult("state-gyration-orthogonality", res_orth, scale_orth, _tol(scale_orth)),
        ],
    )


def verify_observer_certificate(
    plant: BilinearPlant,
    ocert: ObserverCertificate,
    u_samples: Sequence[np.ndarray],
) -> VerificationReport:
    """Residual of the combined output-injection dissipation identity.

    With M(u) = A(u) - dflag*D - Gamma(u) C(u)^T the certificate requires
    P_sigma M(u) + M(u)^T P_sigma = -2 C(u) D_sigma D_sigma^T C(u)^T at every
    sampled u.
    """
    ps = ocert.p_sigma
    if ps.shape != (plant.n, plant.n):
        raise DimensionError("verify_observer_certificate: p_sigma must match the plant dimension")
    dsds = ocert.d_sigma @ ocert.d_sigma.T

    res = 0.0
    scale = 0.0
    for u in u_samples:
        u = _vec(u, plant.m, "verify_observer_certificate")
        cu = np.asarray(plant.c(u), dtype=float)
        m = drift_matrix(plant, u) - ocert.dflag * plant.d - np.asarray(ocert.gamma(u), dtype=float) @ cu.T
        rhs = cu @ dsds @ cu.T
        res = max(res, np.linalg.norm(ps @ m + m.T @ ps + 2.0 * rhs))
        scale = max(scale, np.linalg.norm(ps @ m), np.linalg.norm(rhs))

    return VerificationReport(
        "assumption-2",
        [CheckResult("output-injection-dissipation", res, scale, _tol(scale))],
    )


def verify_regressor_decomposition(
    plant: BilinearPlant,
    decomp: RegressorDecomposition,
    samples: Sequence[tuple[np.ndarray, np.ndarray, float]],
) -> VerificationReport:
    """Residual of B0(s)u + E s - D x = bfrak(y,u,s) + omega(y,u,s) theta over samples."""
    res = 0.0
    scale = 0.0
    for x, u, t in samples:
        x = _vec(x, plant.n, "verify_regressor_decomposition")
        u = _vec(u, plant.m, "verify_regressor_decomposition")
        s = _vec(plant.s_signal(t), plant.q, "verify_regressor_decomposition")
        y = output(plant, x, u)
        lhs = np.asarray(plant.b0(s), dtype=float) @ u + plant.e @ s - plant.d @ x
        rhs = np.asarray(decomp.bfrak(y, u, s), dtype=float) + (
            np.asarray(decomp.omega(y, u, s), dtype=float) @ decomp.theta_true
        )
        res = max(res, np.linalg.norm(lhs - rhs))
        scale = max(scale, np.linalg.norm(lhs), np.linalg.norm(rhs))

    return VerificationReport(
        "assumption-4",
        [CheckResult("regressor-decomposition", res, scale, _tol(scale))],
    )


def trajectory_residual(
    plant: BilinearPlant,
    traj: AdmissibleTrajectory,
    t_samples: Sequence[float],
) -> VerificationReport:
    """Defects of the admissibility conditions along sampled times.

    The dynamics defect must vanish for an admissible pair; the output defect
    is reported but not failed, since reference outputs routinely neglect
    small ripple terms.
    """
    res_dyn = 0.0
    scale_dyn = 0.0
    res_out = 0.0
    scale_out = 0.0
    for t in t_samples:
        xd = _vec(traj.x_d(t), plant.n, "trajectory_residual")
        ud = _vec(traj.u_d(t), plant.m, "trajectory_residual")
        xdd = _vec(traj.x_d_dot(t), plant.n, "trajectory_residual")
        f = state_derivative(plant, xd, ud, t)
        res_dyn = max(res_dyn, np.linalg.norm(xdd - f))
        scale_dyn = max(scale_dyn, np.linalg.norm(xdd), np.linalg.norm(f))
        yd = _vec(traj.y_d(t), plant.l, "trajectory_residual")
        ymodel = output(plant, xd, ud)
        res_out = max(res_out, np.linalg.norm(yd - ymodel))
        scale_out = max(scale_out, np.linalg.norm(yd), np.linalg.norm(ymodel))

    dyn = CheckResult("dynamics-defect", res_dyn, scale_dyn, _tol(scale_dyn))
    # informational: tolerance set to infinity so ripple never fails the report
    out = CheckResult("output-defect", res_out, scale_out, np.inf)
    return VerificationReport("trajectory", [dyn, out])
