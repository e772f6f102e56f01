"""Command-line front end: simulate, verify, pe-check, repro.

Exit codes are part of the public contract: 0 success, 1 configuration or
verification failure, 2 numeric blow-up (a truncated log is still written).
The simulate CSV schema is fixed: columns
t, v_i, i, v, i_hat, v_hat, g_hat, u, u_d, duty, pf, v_c, v_o, det_phi, eps
in that order, floats printed with 9 significant digits, absent diagnostics
(power factor before one full window, estimator columns outside adaptive
mode) left empty.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace

import numpy as np

from . import analysis
from .config import RunConfig, dump_config, load_config
from .errors import BiltrackError, ConfigError
from .model import trajectory_residual, verify_observer_certificate
from .model import verify_passivity_certificate, verify_regressor_decomposition
from .pfp import (
    CaseStudy,
    build_pfp_plant,
    pfp_admissible_trajectory,
    pfp_certificates,
    power_factor,
    study_events,
)
from .sim import Scenario, SimLog

CSV_COLUMNS = (
    "t",
    "v_i",
    "i",
    "v",
    "i_hat",
    "v_hat",
    "g_hat",
    "u",
    "u_d",
    "duty",
    "pf",
    "v_c",
    "v_o",
    "det_phi",
    "eps",
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2


def _fmt(value: float) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return f"{value:.9g}"


def run_case_study(cfg: RunConfig) -> tuple[CaseStudy, SimLog]:
    study = CaseStudy(
        cfg.params,
        cfg.gains,
        mode=cfg.mode,
        exact_ripple=cfg.exact_ripple,
        phi0=cfg.phi0,
    )
    scenario = Scenario(
        t_end=cfg.t_end,
        dt=cfg.dt,
        mode=cfg.mode,
        pwm=cfg.pwm,
        events=cfg.events,
        log_decimation=cfg.decimation,
        x0=np.asarray(cfg.x0, dtype=float),
    )
    return study, study.run(scenario)


def log_to_rows(cfg: RunConfig, log: SimLog) -> list[list[str]]:
    """Flatten a SimLog into the fixed CSV schema."""
    params = cfg.params
    n_rows = len(log.t)
    v_i = params.e_amp * log.source
    i = log.x[:, 0]
    v = log.x[:, 1]
    window = 2.0 * math.pi / params.omega
    try:
        pf = power_factor(v_i, i, log.sample_dt, window)
    except BiltrackError:
        pf = np.full(n_rows, np.nan)

    cert, ocert_drem, decomp = pfp_certificates(replace(params, r_source=0.0), cfg.gains, dflag=0)
    _, ocert_kalman, _ = pfp_certificates(replace(params, r_source=0.0), cfg.gains, dflag=1)
    adaptive = cfg.mode == "adaptive"
    theta_true = params.g_load

    duty = 0.5 * (log.u_applied[:, 0] + 1.0)
    x_tilde = log.x_ref - log.x
    v_c_vals = 0.5 * np.einsum("ij,jk,ik->i", x_tilde, cert.p, x_tilde)

    rows = []
    for k in range(n_rows):
        if adaptive:
            g_hat = log.theta_hat[k, 0]
            det_phi = float(np.linalg.det(log.mix_mat[k]))
            eps = float(log.mix_vec[k, 0] - log.mix_mat[k, 0, 0] * theta_true)
            z_hat = log.x_hat[k] - log.y_filter[k] @ log.theta_hat[k]
            z_true = log.x[k] - log.y_filter[k] @ np.array([theta_true])
            v_o_val = analysis.v_o(ocert_drem, z_true - z_hat)
        else:
            g_hat = theta_true
            det_phi = math.nan
            eps = math.nan
            if cfg.mode == "output-feedback":
                v_o_val = analysis.v_o(ocert_kalman, log.x[k] - log.x_hat[k])
            else:
                v_o_val = math.nan
        rows.append(
            [
                _fmt(log.t[k]),
                _fmt(v_i[k]),
                _fmt(i[k]),
                _fmt(v[k]),
                _fmt(log.x_hat[k, 0]),
                _fmt(log.x_hat[k, 1]),
                _fmt(g_hat),
                _fmt(log.u_applied[k, 0]),
                _fmt(log.u_ref[k, 0]),
                _fmt(duty[k]),
                _fmt(pf[k]),
                _fmt(v_c_vals[k]),
                _fmt(v_o_val),
                _fmt(det_phi),
                _fmt(eps),
            ]
        )
    return rows


def write_csv(path: str, header: tuple[str, ...], rows: list[list[str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def cmd_simulate(args) -> int:
    cfg = load_config(args.config, overrides=vars(args))
    _, log = run_case_study(cfg)
    rows = log_to_rows(cfg, log)
    write_csv(cfg.out_path, CSV_COLUMNS, rows)
    if log.failed:
        print(f"numeric blow-up at t={log.failure_time:.6g}s; truncated log in {cfg.out_path}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"wrote {len(rows)} rows to {cfg.out_path}")
    return EXIT_OK


def _verification_reports(cfg: RunConfig):
    params_ideal = replace(cfg.params, r_source=0.0)
    plant = build_pfp_plant(params_ideal)
    cert, ocert, decomp = pfp_certificates(
        params_ideal, cfg.gains, p11_scale=cfg.p11_scale, omega_sign=cfg.omega_sign
    )
    rng = np.random.default_rng(0)
    u_samples = [np.array([u]) for u in rng.uniform(-1.0, 1.0, 25)]
    x_samples = [rng.uniform(-1.0, 1.0, 2) * np.array([10.0, 300.0]) for _ in range(25)]
    t_samples = np.linspace(0.0, 0.04, 41)
    xut = [
        (rng.uniform(-1.0, 1.0, 2) * np.array([10.0, 300.0]), np.array([rng.uniform(-1.0, 1.0)]), t)
        for t in t_samples
    ]
    traj = pfp_admissible_trajectory(params_ideal)
    return [
        verify_passivity_certificate(plant, cert, u_samples, x_samples),
        verify_observer_certificate(plant, ocert, u_samples),
        verify_regressor_decomposition(plant, decomp, xut),
        trajectory_residual(plant, traj, t_samples),
    ]


def cmd_verify(args) -> int:
    cfg = load_config(args.config, overrides=vars(args))
    try:
        reports = _verification_reports(cfg)
    except BiltrackError as exc:
        print(f"assumption-2 (gain bounds): FAIL - {exc}", file=sys.stderr)
        return EXIT_CONFIG
    ok = True
    for rep in reports:
        for line in rep.lines():
            print(line)
        if not rep.passed:
            ok = False
            print(f"FAILED: {rep.name} -> {', '.join(rep.failures)}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_CONFIG


def cmd_pe_check(args) -> int:
    cfg = load_config(args.config, overrides=vars(args))
    params_ideal = replace(cfg.params, r_source=0.0)
    plant = build_pfp_plant(params_ideal)
    cert, _, _ = pfp_certificates(params_ideal, cfg.gains)
    traj = pfp_admissible_trajectory(params_ideal)
    horizon = cfg.t_end
    window = 2.0 * math.pi / cfg.params.omega if cfg.params.omega > 0.0 else horizon / 3.0
    dt = min(cfg.dt, 1e-4)
    if window >= horizon:
        raise ConfigError("pe-check: window exceeds the configured horizon")
    ts = np.arange(0.0, horizon + dt, dt)
    k = np.array([[cfg.gains.k_gain]])
    grams = np.stack(
        [q_gram_at(cert, k, plant, traj, t, cfg.params.omega) for t in ts]
    )
    rep_gram = analysis.pe_level(grams, dt, window)
    print(f"tracking-gram: {rep_gram}")
    u_series = np.stack([np.outer(traj.u_d(t), traj.u_d(t)) for t in ts])
    rep_u = analysis.pe_level(u_series, dt, window)
    print(f"desired-input: {rep_u}")
    if args.regressor:
        study, log = run_case_study(cfg)
        if cfg.mode != "adaptive":
            raise ConfigError("pe-check --regressor needs an adaptive-mode configuration")
        cu = np.array([[0.0], [1.0]])
        series = np.stack([yf.T @ cu @ cu.T @ yf for yf in log.y_filter])
        rep_reg = analysis.pe_level(series, log.sample_dt, window)
        print(f"regressor: {rep_reg}")
    return EXIT_OK if rep_gram.is_pe else EXIT_CONFIG


def q_gram_at(cert, k, plant, traj, t, omega):
    return analysis.q_gram(cert, k, plant, traj.x_d(t), np.array([math.sin(omega * t)]))


FIGURE_SETS = {
    "fig2": ("t", "v", "i", "i_hat", "g_hat", "pf"),
    "fig3": ("t", "v"),
    "fig4": ("t", "v_i", "i", "i_hat"),
    "fig5": ("t", "g_hat"),
    "fig6": ("t", "pf"),
}


def cmd_repro(args) -> int:
    import os

    cfg = load_config(args.config, overrides=vars(args)) if args.config else RunConfig()
    cfg = replace(cfg, mode="adaptive", t_end=0.45, events=study_events(cfg.params))
    os.makedirs(args.out_dir, exist_ok=True)
    _, log = run_case_study(cfg)
    rows = log_to_rows(cfg, log)
    col_index = {name: k for k, name in enumerate(CSV_COLUMNS)}
    start_rows = [r for r in rows if float(r[0]) <= 0.05]
    for name, cols in FIGURE_SETS.items():
        subset = start_rows if name == "fig2" else rows
        out_rows = [[row[col_index[c]] for c in cols] for row in subset]
        write_csv(os.path.join(args.out_dir, f"{name}.csv"), cols, out_rows)
    if log.failed:
        print(f"numeric blow-up at t={log.failure_time:.6g}s", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"wrote {', '.join(sorted(FIGURE_SETS))} to {args.out_dir}")
    return EXIT_OK


def cmd_dump_config(args) -> int:
    cfg = load_config(args.config, overrides=vars(args)) if args.config else RunConfig()
    sys.stdout.write(dump_config(cfg))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="biltrack",
        description="Adaptive output-feedback tracking of a boost power-factor precompensator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="path to the run configuration")
        p.add_argument("--out", default=None, help="override output.path")
        p.add_argument("--dt", type=float, default=None, help="override scenario.dt")
        p.add_argument("--mode", default=None, choices=["full-info", "output-feedback", "adaptive"])
        p.add_argument("--pwm", default=None, choices=["averaged", "switched"])

    p_sim = sub.add_parser("simulate", help="integrate the configured scenario and write the CSV log")
    common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_ver = sub.add_parser("verify", help="check the structural certificates numerically")
    common(p_ver)
    p_ver.set_defaults(func=cmd_verify)

    p_pe = sub.add_parser("pe-check", help="windowed excitation levels of the configured reference")
    common(p_pe)
    p_pe.add_argument("--regressor", action="store_true", help="also simulate and report regressor excitation")
    p_pe.set_defaults(func=cmd_pe_check)

    p_rep = sub.add_parser("repro", help="run the benchmark study and emit fig2..fig6 CSV sets")
    common(p_rep, config_required=False)
    p_rep.add_argument("--out-dir", required=True, help="directory for the figure CSVs")
    p_rep.set_defaults(func=cmd_repro)

    p_dump = sub.add_parser("dump-config", help="print the effective configuration")
    common(p_dump, config_required=False)
    p_dump.set_defaults(func=cmd_dump_config)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BiltrackError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
