"""Boost power-factor-precompensator case study.

Averaged model of a single-phase full-bridge boost rectifier driven by an AC
source, controlled so the drawn current stays in phase with the source while
the output voltage regulates to a DC target.  State x = [i, v] with

    L di/dt = -u v + v_i(t) - r_source i,      C dv/dt = u i - G v,

v_i = E sin(wt), u in [-1, 1].  Only v is measured; G is the unknown
parameter estimated online.  This module builds the plant, the exact
admissible reference (including the closed-form double-frequency voltage
ripple that the constant-target approximation neglects), the structural
certificates, the PWM comparator, the power-factor metric, and the wiring
that the simulation engine consumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import cos, pi, sin, sqrt

import numpy as np

from .controllers import (
    AdaptiveController,
    ControllerContext,
    FullInfoController,
    OutputFeedbackController,
)
from .errors import CertificateError, ConfigError
from .model import (
    AdmissibleTrajectory,
    BilinearPlant,
    ObserverCertificate,
    PassivityCertificate,
    RegressorDecomposition,
)
from .observers import DremGains, DremObserver, KalmanObserver
from .sim import Event, Scenario, SimLog, simulate

__all__ = [
    "PfpParams",
    "PfpGains",
    "build_pfp_plant",
    "pfp_admissible_trajectory",
    "pfp_certificates",
    "pwm_switch",
    "power_factor",
    "power_factor_of_log",
    "PfpContextBuilder",
    "CaseStudy",
    "study_events",
    "nominal_scenario",
    "full_study_scenario",
]

G_FLOOR = 1e-6  # adaptive reference degenerates at zero conductance


@dataclass(frozen=True)
class PfpParams:
    """Physical parameters; defaults are the benchmark converter values."""

    e_amp: float = 150.0
    omega: float = 100.0 * pi
    l_ind: float = 2.13e-3
    c_cap: float = 1100e-6
    g_load: float = 1.0 / 87.0
    v_target: float = 200.0
    r_source: float = 0.02
    f_sw: float = 20e3

    def __post_init__(self):
        for name in ("e_amp", "l_ind", "c_cap", "v_target", "f_sw"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"pfp params: {name} must be positive")
        # g_load = 0 (lossless) and omega = 0 (DC source) are admitted for the
        # plant itself; reference generation still demands a positive load.
        if self.g_load < 0.0 or self.omega < 0.0 or self.r_source < 0.0:
            raise ConfigError("pfp params: g_load, omega, r_source may not be negative")

    @property
    def i_ref_amplitude(self) -> float:
        """Reference current amplitude carrying the load power at unity PF."""
        return 2.0 * self.g_load * self.v_target**2 / self.e_amp


@dataclass(frozen=True)
class PfpGains:
    """Controller/estimator gains; defaults derive from the plant values."""

    k_gain: float = 3e-5
    gamma1: float = 0.0
    gamma2: float = 0.0
    lam: float = 0.0
    t_filter: float = 100.0
    dflag: int = 0
    u_min: float = -1.0
    u_max: float = 1.0

    @staticmethod
    def from_params(params: PfpParams, **overrides) -> "PfpGains":
        defaults = dict(
            k_gain=3e-5,
            gamma1=3.0 * (1.0 / params.c_cap - 1.0 / params.l_ind),
            gamma2=2.0 / params.c_cap,
            lam=200.0 * params.c_cap,
            t_filter=100.0,
            dflag=0,
            u_min=-1.0,
            u_max=1.0,
        )
        defaults.update(overrides)
        return PfpGains(**defaults)

    def validate(self, params: PfpParams) -> None:
        if self.gamma2 <= 0.0:
            raise CertificateError("pfp gains: gamma2 must be positive")
        if self.gamma1 <= -1.0 / params.l_ind:
            raise CertificateError("pfp gains: gamma1 must exceed -1/L")
        if self.k_gain <= 0.0:
            raise CertificateError("pfp gains: k_gain must be positive")
        if self.lam <= 0.0 or self.t_filter <= 0.0:
            raise CertificateError("pfp gains: estimator filters must be positive")


def build_pfp_plant(params: PfpParams) -> BilinearPlant:
    """Bilinear-form plant for the converter.

    The source resistance enters the drift-damping matrix, equivalent to
    replacing the source term by (E sin(wt) - r_source i)/L.
    """
    l, c = params.l_ind, params.c_cap
    j1 = np.array([[0.0, -1.0 / l], [1.0 / c, 0.0]])
    d = np.array([[params.r_source / l, 0.0], [0.0, params.g_load / c]])
    e = np.array([[params.e_amp / l], [0.0]])
    omega = params.omega
    return BilinearPlant(
        a0=np.zeros((2, 2)),
        j_list=(j1,),
        d=d,
        b0=lambda s: np.zeros((2, 1)),
        e=e,
        c=lambda u: np.array([[0.0], [1.0]]),
        s_signal=lambda t: np.array([sin(omega * t)]),
        l=1,
        q=1,
    )


def _ripple_coefficients(params: PfpParams, g_effective: float, v_target: float) -> tuple[float, float, float]:
    """Closed-form double-frequency component of the squared reference voltage.

    With w = x_d2^2 the reference voltage dynamics become linear,
    (C/2) dw/dt + G w = E I0 sin^2(wt) - (L I0^2 omega / 2) sin(2wt),
    whose periodic solution is w = V^2 + A cos(2wt) + B sin(2wt).
    """
    i0 = 2.0 * g_effective * v_target**2 / params.e_amp
    g, cc, ll, om = g_effective, params.c_cap, params.l_ind, params.omega
    den = g**2 + (cc * om) ** 2
    a = (i0 / 2.0) * (cc * ll * i0 * om**2 - g * params.e_amp) / den
    b = -(i0 * om / 2.0) * (g * ll * i0 + cc * params.e_amp) / den
    return i0, a, b


def pfp_admissible_trajectory(
    params: PfpParams,
    g_effective: float | None = None,
    v_target: float | None = None,
    exact_ripple: bool = True,
) -> AdmissibleTrajectory:
    """Reference path drawing a unity-power-factor current.

    The current reference is I0 sin(wt) with I0 = 2 G V^2 / E.  With
    exact_ripple the voltage reference carries its closed-form
    double-frequency ripple and the pair satisfies the ideal (lossless,
    zero source resistance) dynamics exactly; otherwise the voltage is held
    at the constant target, the commonly displayed approximation.  The
    declared output target y_d stays at the constant V either way, so the
    output defect reported by trajectory_residual is exactly the neglected
    ripple.
    """
    g_eff = params.g_load if g_effective is None else g_effective
    v_tgt = params.v_target if v_target is None else v_target
    if g_eff <= 0.0:
        raise ConfigError("pfp trajectory: effective conductance must be positive")
    i0, a, b = _ripple_coefficients(params, g_eff, v_tgt)
    om = params.omega
    e_amp, l_ind = params.e_amp, params.l_ind
    v_sq = v_tgt**2
    w_floor = (0.01 * v_tgt) ** 2

    if not exact_ripple:
        a = 0.0
        b = 0.0

    def w(t: float) -> float:
        return max(v_sq + a * cos(2.0 * om * t) + b * sin(2.0 * om * t), w_floor)

    def x_d(t: float) -> np.ndarray:
        return np.array([i0 * sin(om * t), sqrt(w(t))])

    def x_d_dot(t: float) -> np.ndarray:
        wd = 2.0 * om * (b * cos(2.0 * om * t) - a * sin(2.0 * om * t))
        return np.array([i0 * om * cos(om * t), wd / (2.0 * sqrt(w(t)))])

    def u_d(t: float) -> np.ndarray:
        return np.array([(e_amp * sin(om * t) - l_ind * i0 * om * cos(om * t)) / sqrt(w(t))])

    def y_d(t: float) -> np.ndarray:
        return np.array([v_tgt])

    return AdmissibleTrajectory(x_d=x_d, x_d_dot=x_d_dot, u_d=u_d, y_d=y_d)


def pfp_certificates(
    params: PfpParams,
    gains: PfpGains,
    dflag: int | None = None,
    p11_scale: float = 1.0,
    omega_sign: float = 1.0,
) -> tuple[PassivityCertificate, ObserverCertificate, RegressorDecomposition]:
    """Structural certificates of the converter.

    p11_scale and omega_sign are verification-tamper knobs (defaults are the
    honest values); they let the assumption checker demonstrate its failure
    diagnostics end to end.
    """
    gains.validate(params)
    dfl = gains.dflag if dflag is None else dflag
    l, c, g = params.l_ind, params.c_cap, params.g_load
    g1, g2 = gains.gamma1, gains.gamma2

    p = np.diag([p11_scale * l, c])
    dfrak = np.diag([0.0, sqrt(g)])
    passivity = PassivityCertificate(p=p, dfrak=dfrak)

    d_sigma_sq = dfl * g + c * g2
    if d_sigma_sq <= 0.0:
        raise CertificateError("pfp certificates: output-injection dissipation is not positive")
    observer = ObserverCertificate(
        gamma=lambda u: np.array([[g1 * float(u[0])], [g2]]),
        p_sigma=np.diag([l / (1.0 + g1 * l), c]),
        d_sigma=np.array([[sqrt(d_sigma_sq)]]),
        dflag=dfl,
    )

    e_amp = params.e_amp

    def bfrak(y, u, s):
        return np.array([e_amp * float(s[0]) / l, 0.0])

    def omega(y, u, s):
        return omega_sign * np.array([[0.0], [-float(y[0]) / c]])

    decomp = RegressorDecomposition(bfrak=bfrak, omega=omega, p=1, theta_true=np.array([g]))
    return passivity, observer, decomp


def pwm_switch(u_avg: float, t: float, f_sw: float) -> float:
    """Two-level comparator against a unit triangle carrier.

    Duty (u_avg + 1)/2 is compared to the carrier; returns +1 or -1 so that
    the one-period average reproduces u_avg up to carrier quantisation.
    """
    duty = 0.5 * (min(max(u_avg, -1.0), 1.0) + 1.0)
    phase = (t * f_sw) % 1.0
    carrier = 2.0 * phase if phase < 0.5 else 2.0 * (1.0 - phase)
    return 1.0 if duty > carrier else -1.0


def power_factor(
    v_i: np.ndarray,
    i: np.ndarray,
    sample_dt: float,
    window: float,
    min_rms: float = 1e-9,
) -> np.ndarray:
    """Sliding-window power factor mean(v_i*i) / (rms(v_i) rms(i)).

    Returns one value per sample, aligned with the window END; entries whose
    window is not yet covered, or where the current RMS is below min_rms,
    are NaN (reported as absent downstream).
    """
    v_i = np.asarray(v_i, dtype=float)
    i = np.asarray(i, dtype=float)
    n = len(v_i)
    steps = int(round(window / sample_dt))
    if steps < 1 or steps >= n:
        raise ConfigError("power_factor: window not covered by the log")
    out = np.full(n, np.nan)
    cs_p = np.concatenate([[0.0], np.cumsum(v_i * i)])
    cs_v2 = np.concatenate([[0.0], np.cumsum(v_i * v_i)])
    cs_i2 = np.concatenate([[0.0], np.cumsum(i * i)])
    for k in range(steps, n):
        cnt = steps + 1
        mean_p = (cs_p[k + 1] - cs_p[k - steps]) / cnt
        rms_v = sqrt((cs_v2[k + 1] - cs_v2[k - steps]) / cnt)
        rms_i = sqrt((cs_i2[k + 1] - cs_i2[k - steps]) / cnt)
        if rms_i > min_rms and rms_v > min_rms:
            out[k] = mean_p / (rms_v * rms_i)
    return out


def power_factor_of_log(log, params: PfpParams, window: float | None = None) -> np.ndarray:
    """Sliding-window power factor of a logged run, one value per log row."""
    if window is None:
        if params.omega <= 0.0:
            raise ConfigError("power_factor_of_log: need a positive line frequency or explicit window")
        window = 2.0 * pi / params.omega
    return power_factor(params.e_amp * log.source, log.x[:, 0], log.sample_dt, window)


class PfpContextBuilder:
    """Rebuilds the parameter-dependent control context from an estimate.

    The design plant and gain stay fixed; the conductance estimate (clamped
    below) regenerates the reference trajectory and the load-dependent
    certificate entry.  The voltage target is mutable so setpoint events can
    retarget the reference, which is commanded and therefore known.
    """

    def __init__(self, design_params: PfpParams, gains: PfpGains, exact_ripple: bool = True):
        self.design_params = replace(design_params, r_source=0.0)
        self.gains = gains
        self.v_target = design_params.v_target
        self.exact_ripple = exact_ripple
        self.design_plant = build_pfp_plant(self.design_params)
        self._k = np.array([[gains.k_gain]])
        self._bounds = (np.array([gains.u_min]), np.array([gains.u_max]))

    @property
    def bounds(self):
        return self._bounds

    def __call__(self, theta_hat) -> ControllerContext:
        g_eff = max(float(np.atleast_1d(theta_hat)[0]), G_FLOOR)
        traj = pfp_admissible_trajectory(
            self.design_params, g_effective=g_eff, v_target=self.v_target, exact_ripple=self.exact_ripple
        )
        cert = PassivityCertificate(
            p=np.diag([self.design_params.l_ind, self.design_params.c_cap]),
            dfrak=np.diag([0.0, sqrt(g_eff)]),
        )
        return ControllerContext(
            plant=self.design_plant,
            cert=cert,
            k_gain=self._k,
            traj=traj,
            u_min=self._bounds[0],
            u_max=self._bounds[1],
        )


@dataclass
class CaseStudy:
    """Wiring of plant, controller, and observer for one experiment family.

    Controller and observer are built once from the design parameters; the
    plant is rebuilt whenever an event changes the physical parameters, and
    setpoint events additionally retarget the controller's reference.
    """

    design_params: PfpParams
    gains: PfpGains
    mode: str = "adaptive"
    exact_ripple: bool = True
    phi0: float = 1e-6

    controller: object = field(init=False)
    observer: object = field(init=False)
    _builder: PfpContextBuilder | None = field(init=False, default=None)

    def __post_init__(self):
        self.gains.validate(self.design_params)
        design = self.design_params
        _, ocert_drem, decomp = pfp_certificates(design, self.gains, dflag=0)
        _, ocert_kalman, _ = pfp_certificates(design, self.gains, dflag=1)
        design_ideal = replace(design, r_source=0.0)
        if self.mode == "adaptive":
            self._builder = PfpContextBuilder(design, self.gains, exact_ripple=self.exact_ripple)
            self.controller = AdaptiveController(self._builder, bounds=self._builder.bounds)
            drem_gains = DremGains(
                lam=np.array([[self.gains.lam]]), t_filter=np.array([[self.gains.t_filter]])
            )
            model_plant = build_pfp_plant(design_ideal)
            self.observer = DremObserver(ocert_drem, decomp, drem_gains, model_plant, phi0=self.phi0)
        else:
            ctx = self._fixed_context(design_ideal, design.v_target)
            if self.mode == "full-info":
                self.controller = FullInfoController(ctx)
                self.observer = None
            elif self.mode == "output-feedback":
                self.controller = OutputFeedbackController(ctx)
                self.observer = KalmanObserver(ocert_kalman, build_pfp_plant(design_ideal))
            else:
                raise ConfigError(f"case study: unknown mode {self.mode!r}")

    def _fixed_context(self, design_ideal: PfpParams, v_target: float) -> ControllerContext:
        traj = pfp_admissible_trajectory(
            design_ideal, v_target=v_target, exact_ripple=self.exact_ripple
        )
        cert, _, _ = pfp_certificates(design_ideal, self.gains, dflag=self.gains.dflag)
        return ControllerContext(
            plant=build_pfp_plant(design_ideal),
            cert=cert,
            k_gain=np.array([[self.gains.k_gain]]),
            traj=traj,
            u_min=np.array([self.gains.u_min]),
            u_max=np.array([self.gains.u_max]),
        )

    def initial_params(self) -> dict:
        d = self.design_params
        return {"g_load": d.g_load, "l_ind": d.l_ind, "c_cap": d.c_cap, "v_target": d.v_target}

    def rebuild(self, current: dict):
        """(plant, controller) for the current parameter dict.

        The plant tracks every physical drift; the controller keeps its
        design values except for the commanded voltage target.
        """
        plant = build_pfp_plant(
            replace(
                self.design_params,
                g_load=current["g_load"],
                l_ind=current["l_ind"],
                c_cap=current["c_cap"],
            )
        )
        v_tgt = current["v_target"]
        if self.mode == "adaptive":
            self._builder.v_target = v_tgt
        elif v_tgt != self.controller.ctx.traj.y_d(0.0)[0]:
            design_ideal = replace(self.design_params, r_source=0.0)
            ctx = self._fixed_context(design_ideal, v_tgt)
            self.controller = type(self.controller)(ctx)
        return plant, self.controller

    def run(self, scenario: Scenario) -> SimLog:
        plant = build_pfp_plant(self.design_params)
        return simulate(
            plant,
            self.controller,
            self.observer,
            scenario,
            params=self.initial_params(),
            rebuild=self.rebuild,
            f_sw=self.design_params.f_sw,
        )

    def theta_true(self) -> float:
        return self.design_params.g_load


def study_events(
    params: PfpParams,
    fraction: float = 0.25,
    v_step: float = 210.0,
) -> tuple[Event, ...]:
    """The benchmark uncertainty schedule.

    Each physical parameter steps up by `fraction` at the interval start and
    restores its nominal value at the end: G over [0.05, 0.1], L over
    [0.15, 0.2], C over [0.25, 0.3]; the voltage target rises to v_step over
    [0.35, 0.4].
    """
    g, l, c, vd = params.g_load, params.l_ind, params.c_cap, params.v_target
    return (
        Event(0.05, "g_load", (1.0 + fraction) * g),
        Event(0.10, "g_load", g),
        Event(0.15, "l_ind", (1.0 + fraction) * l),
        Event(0.20, "l_ind", l),
        Event(0.25, "c_cap", (1.0 + fraction) * c),
        Event(0.30, "c_cap", c),
        Event(0.35, "v_target", v_step),
        Event(0.40, "v_target", vd),
    )


def _default_x0(params: PfpParams) -> np.ndarray:
    return np.zeros(2)


def nominal_scenario(
    params: PfpParams,
    mode: str = "adaptive",
    pwm: str = "averaged",
    t_end: float = 0.05,
    dt: float | None = None,
    log_decimation: int | None = None,
    x0: np.ndarray | None = None,
) -> Scenario:
    """Event-free benchmark run from zero plant and estimator state."""
    if dt is None:
        dt = 1e-5 if pwm == "averaged" else 1e-6
    if log_decimation is None:
        log_decimation = 10 if pwm == "averaged" else 100
    return Scenario(
        t_end=t_end,
        dt=dt,
        mode=mode,
        pwm=pwm,
        log_decimation=log_decimation,
        x0=_default_x0(params) if x0 is None else x0,
    )


def full_study_scenario(
    params: PfpParams,
    mode: str = "adaptive",
    pwm: str = "averaged",
    dt: float | None = None,
    log_decimation: int | None = None,
) -> Scenario:
    """The 0.45 s uncertainty-schedule run."""
    if dt is None:
        dt = 1e-5 if pwm == "averaged" else 1e-6
    if log_decimation is None:
        log_decimation = 10 if pwm == "averaged" else 100
    return Scenario(
        t_end=0.45,
        dt=dt,
        mode=mode,
        pwm=pwm,
        events=study_events(params),
        log_decimation=log_decimation,
        x0=_default_x0(params),
    )
