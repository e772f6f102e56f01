"""Deterministic fixed-step integration of the closed loop.

One simulation owns a monolithic stacked state (plant state plus observer
filters) advanced by classical RK4.  Scheduled events mutate plant-side
parameters at step boundaries; the controller and observer keep their design
values except that setpoint retargets are passed through, since the
commanded setpoint is known to the controller while plant drifts are not.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .controllers import clamp_input
from .errors import ConfigError, DimensionError, SimulationDiverged
from .model import BilinearPlant, output, state_derivative

__all__ = ["Event", "Scenario", "SimLog", "rk4_step", "simulate", "apply_event", "EVENT_KEYS"]

MODES = ("full-info", "output-feedback", "adaptive")
PWM_MODES = ("averaged", "switched")
BLOWUP_NORM = 1e9

EVENT_KEYS = ("g_load", "l_ind", "c_cap", "v_target")
_EVENT_ALIASES = {"G": "g_load", "L": "l_ind", "C": "c_cap", "V_d": "v_target", "Vd": "v_target"}


@dataclass(frozen=True)
class Event:
    """A plant-parameter step applied at the first step boundary >= time."""

    time: float
    key: str
    value: float

    def normalized(self) -> "Event":
        key = _EVENT_ALIASES.get(self.key, self.key)
        if key not in EVENT_KEYS:
            raise ConfigError(f"event: unknown parameter key {self.key!r}")
        return Event(self.time, key, float(self.value))


@dataclass
class Scenario:
    """Timeline and integration settings for one run."""

    t_end: float
    dt: float
    mode: str = "full-info"
    pwm: str = "averaged"
    events: tuple[Event, ...] = ()
    log_decimation: int = 1
    x0: np.ndarray | None = None
    hold_steps: int = 0  # 0: control follows every RK4 stage; N>0: zero-order hold over N steps

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ConfigError("scenario: dt must be positive")
        if self.t_end <= 0.0:
            raise ConfigError("scenario: t_end must be positive")
        if self.mode not in MODES:
            raise ConfigError(f"scenario: mode must be one of {MODES}")
        if self.pwm not in PWM_MODES:
            raise ConfigError(f"scenario: pwm must be one of {PWM_MODES}")
        if self.log_decimation < 1:
            raise ConfigError("scenario: log_decimation must be >= 1")
        if self.hold_steps < 0:
            raise ConfigError("scenario: hold_steps may not be negative")
        self.events = tuple(ev.normalized() for ev in self.events)
        times = [ev.time for ev in self.events]
        if times != sorted(times):
            raise ConfigError("scenario: events must be sorted by time")
        if times and (times[0] < 0.0 or times[-1] > self.t_end):
            raise ConfigError("scenario: event times must lie within [0, t_end]")
        if self.x0 is not None:
            self.x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))


@dataclass
class SimLog:
    """Uniformly decimated record of one run.

    `source` holds the raw exogenous sample s(t)[0]; case studies scale it to
    physical units when exporting.
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    x_hat: np.ndarray
    theta_hat: np.ndarray
    y_filter: np.ndarray
    mix_vec: np.ndarray
    mix_mat: np.ndarray
    u_cmd: np.ndarray
    u_applied: np.ndarray
    u_ref: np.ndarray
    x_ref: np.ndarray
    source: np.ndarray
    failed: bool = False
    failure_time: float | None = None
    mode: str = "full-info"
    dt: float = 0.0
    decimation: int = 1

    _ARRAYS = (
        "t",
        "x",
        "y",
        "x_hat",
        "theta_hat",
        "y_filter",
        "mix_vec",
        "mix_mat",
        "u_cmd",
        "u_applied",
        "u_ref",
        "x_ref",
        "source",
    )

    @property
    def sample_dt(self) -> float:
        return self.dt * self.decimation

    def truncate(self, count: int) -> "SimLog":
        return replace(self, **{name: getattr(self, name)[:count] for name in self._ARRAYS})


def rk4_step(f: Callable[[float, np.ndarray], np.ndarray], t: float, state: np.ndarray, dt: float) -> np.ndarray:
    """One classical 4th-order Runge-Kutta update."""
    k1 = f(t, state)
    k2 = f(t + 0.5 * dt, state + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, state + 0.5 * dt * k2)
    k4 = f(t + dt, state + dt * k3)
    out = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise SimulationDiverged("non-finite state after integration step", t=t)
    return out


def apply_event(plant_params: dict, event: Event) -> dict:
    """Pure parameter update; unknown keys are rejected.

    Setpoint events retarget the reference generator downstream (the caller's
    rebuild hook handles that); load/inductance/capacitance events reach only
    the plant.
    """
    ev = event.normalized()
    if ev.key not in plant_params:
        raise ConfigError(f"apply_event: parameter {ev.key!r} absent from the parameter set")
    out = dict(plant_params)
    out[ev.key] = ev.value
    return out


class _PwmCarrier:
    """Unit triangle carrier comparator for switched-input runs."""

    def __init__(self, f_sw: float):
        if f_sw <= 0.0:
            raise ConfigError("pwm: switching frequency must be positive")
        self.f_sw = f_sw

    def switch(self, u_avg: float, t: float) -> float:
        duty = 0.5 * (min(max(u_avg, -1.0), 1.0) + 1.0)
        phase = (t * self.f_sw) % 1.0
        carrier = 2.0 * phase if phase < 0.5 else 2.0 * (1.0 - phase)
        return 1.0 if duty > carrier else -1.0


def simulate(
    plant: BilinearPlant,
    controller,
    observer,
    scenario: Scenario,
    *,
    params: dict | None = None,
    rebuild: Callable[[dict], tuple[BilinearPlant, object]] | None = None,
    f_sw: float | None = None,
) -> SimLog:
    """Integrate the closed loop and return the decimated log.

    The control command is re-evaluated at every RK4 stage in averaged mode
    (continuous-control idealisation); in switched mode the continuous
    command is held over the step and the PWM comparator is evaluated per
    stage.  Events fire atomically at the first step boundary at or past
    their timestamp, mutating the plant parameters through `rebuild`.
    """
    if scenario.mode != "full-info" and observer is None:
        raise ConfigError(f"simulate: mode {scenario.mode!r} needs an observer")
    if scenario.events and (params is None or rebuild is None):
        raise ConfigError("simulate: events need params and a rebuild hook")
    if scenario.pwm == "switched" and f_sw is None:
        raise ConfigError("simulate: switched mode needs a switching frequency")

    n = plant.n
    x0 = np.zeros(n) if scenario.x0 is None else scenario.x0
    if x0.shape != (n,):
        raise DimensionError(f"simulate: x0 must have length {n}")

    obs_size = observer.state_size if observer is not None else 0
    state = np.concatenate([x0, observer.init_state()]) if observer is not None else x0.copy()

    n_steps = int(round(scenario.t_end / scenario.dt))
    dec = scenario.log_decimation
    n_logged = n_steps // dec + 1
    p_dim = getattr(observer, "p", 1) if observer is not None else 1
    m = plant.m

    log = SimLog(
        t=np.zeros(n_logged),
        x=np.zeros((n_logged, n)),
        y=np.zeros((n_logged, plant.l)),
        x_hat=np.zeros((n_logged, n)),
        theta_hat=np.zeros((n_logged, p_dim)),
        y_filter=np.zeros((n_logged, n, p_dim)),
        mix_vec=np.zeros((n_logged, p_dim)),
        mix_mat=np.zeros((n_logged, p_dim, p_dim)),
        u_cmd=np.zeros((n_logged, m)),
        u_applied=np.zeros((n_logged, m)),
        u_ref=np.zeros((n_logged, m)),
        x_ref=np.zeros((n_logged, n)),
        source=np.zeros(n_logged),
        mode=scenario.mode,
        dt=scenario.dt,
        decimation=dec,
    )

    carrier = _PwmCarrier(f_sw) if scenario.pwm == "switched" else None
    mode = scenario.mode
    cur_params = dict(params) if params is not None else None
    pending = list(scenario.events)
    is_drem = observer is not None and getattr(observer, "kind", "") == "drem"

    def command(t: float, full_state: np.ndarray) -> np.ndarray:
        if mode == "full-info":
            return np.atleast_1d(controller.command(t, full_state[:n]))
        obs_state = full_state[n : n + obs_size]
        if mode == "output-feedback":
            return np.atleast_1d(controller.command(t, observer.estimate(obs_state)))
        st = observer.unpack(obs_state)
        return np.atleast_1d(controller.command(t, st.z_hat, st.y_filter, st.theta_hat))

    held_u: np.ndarray | None = None  # switched mode holds the command over the step

    def deriv(t: float, full_state: np.ndarray) -> np.ndarray:
        x = full_state[:n]
        u_cmd = held_u if held_u is not None else clamp_input(command(t, full_state), controller.bounds)
        u_app = u_cmd
        if carrier is not None:
            u_app = np.array([carrier.switch(float(u_cmd[0]), t)])
        y = output(plant, x, u_app)
        dx = state_derivative(plant, x, u_app, t)
        if observer is None:
            return dx
        dobs = observer.deriv(t, full_state[n : n + obs_size], y, u_app)
        return np.concatenate([dx, dobs])

    def record(idx: int, t: float, full_state: np.ndarray) -> None:
        x = full_state[:n]
        u_raw = command(t, full_state)
        u_cmd = clamp_input(u_raw, controller.bounds)
        log.t[idx] = t
        log.x[idx] = x
        log.u_cmd[idx] = u_raw
        log.u_applied[idx] = u_cmd
        log.y[idx] = output(plant, x, u_cmd)
        s = np.atleast_1d(np.asarray(plant.s_signal(t), dtype=float))
        log.source[idx] = float(s[0]) if s.size else 0.0
        ctx = None
        if observer is None:
            log.x_hat[idx] = x
        else:
            obs_state = full_state[n : n + obs_size]
            log.x_hat[idx] = observer.estimate(obs_state)
            if is_drem:
                st = observer.unpack(obs_state)
                log.theta_hat[idx] = st.theta_hat
                log.y_filter[idx] = st.y_filter
                log.mix_vec[idx] = st.mix_vec
                log.mix_mat[idx] = st.mix_mat
                if mode == "adaptive" and hasattr(controller, "context"):
                    ctx = controller.context(st.theta_hat)
        if ctx is None:
            ctx = getattr(controller, "ctx", None)
        if ctx is not None:
            log.x_ref[idx] = np.asarray(ctx.traj.x_d(t), dtype=float)
            log.u_ref[idx] = np.atleast_1d(np.asarray(ctx.traj.u_d(t), dtype=float))

    logged = 0
    t = 0.0
    try:
        for step in range(n_steps + 1):
            t = step * scenario.dt
            while pending and pending[0].time <= t + 1e-12:
                ev = pending.pop(0)
                cur_params = apply_event(cur_params, ev)
                plant, controller = rebuild(cur_params)
            if step % dec == 0:
                record(logged, t, state)
                logged += 1
            if step == n_steps:
                break
            if np.linalg.norm(state) > BLOWUP_NORM:
                raise SimulationDiverged("state norm exceeded blow-up threshold", t=t)
            if carrier is not None:
                held_u = clamp_input(command(t, state), controller.bounds)
            elif scenario.hold_steps > 0:
                if step % scenario.hold_steps == 0 or held_u is None:
                    held_u = clamp_input(command(t, state), controller.bounds)
            state = rk4_step(deriv, t, state, scenario.dt)
            if carrier is not None:
                held_u = None
    except SimulationDiverged as exc:
        log = log.truncate(logged)
        log.failed = True
        log.failure_time = exc.t if exc.t is not None else t
        return log

    return log.truncate(logged)
