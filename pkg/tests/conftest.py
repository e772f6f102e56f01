"""Shared fixtures: benchmark parameters, certified random plants, cached runs."""

from dataclasses import replace

import numpy as np
import pytest

import biltrack as bt

G_TRUE = 1.0 / 87.0


@pytest.fixture(scope="session")
def params():
    return bt.PfpParams()


@pytest.fixture(scope="session")
def params_ideal(params):
    return replace(params, r_source=0.0)


@pytest.fixture(scope="session")
def gains(params):
    return bt.PfpGains.from_params(params)


@pytest.fixture(scope="session")
def pfp_plant(params):
    return bt.build_pfp_plant(params)


@pytest.fixture(scope="session")
def pfp_plant_ideal(params_ideal):
    return bt.build_pfp_plant(params_ideal)


@pytest.fixture(scope="session")
def pfp_certs(params_ideal, gains):
    return bt.pfp_certificates(params_ideal, gains)


@pytest.fixture(scope="session")
def pfp_traj(params_ideal):
    return bt.pfp_admissible_trajectory(params_ideal)


def random_certified_plant(rng, n=3, m=2, r=2, l=1, q=1):
    """Plant constructed so the passivity certificate holds by algebra.

    P is a random SPD matrix; the drift and couplings are P^{-1} times skew
    matrices, the damping P^{-1} Dfrak Dfrak^T.
    """
    a = rng.normal(size=(n, n))
    p = a @ a.T + n * np.eye(n)
    pinv = np.linalg.inv(p)

    def skew():
        s = rng.normal(size=(n, n))
        return s - s.T

    a0 = pinv @ skew()
    j_list = [pinv @ skew() for _ in range(m)]
    dfrak = rng.normal(size=(n, r))
    d = pinv @ (dfrak @ dfrak.T)
    b0c = rng.normal(size=(n, m))
    e = rng.normal(size=(n, q))
    cmat = rng.normal(size=(n, l))
    plant = bt.BilinearPlant(
        a0=a0,
        j_list=j_list,
        d=d,
        b0=lambda s: b0c,
        e=e,
        c=lambda u: cmat,
        s_signal=lambda t: np.full(q, np.sin(t)),
        l=l,
        q=q,
    )
    return plant, bt.PassivityCertificate(p=p, dfrak=dfrak)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def nominal_log(params, gains):
    study = bt.CaseStudy(params, gains, mode="adaptive")
    return study.run(bt.nominal_scenario(params, t_end=0.05))


@pytest.fixture(scope="session")
def study_run(params, gains):
    """Full benchmark study; returns (log, wall_seconds)."""
    import time

    study = bt.CaseStudy(params, gains, mode="adaptive")
    t0 = time.perf_counter()
    log = study.run(bt.full_study_scenario(params))
    return log, time.perf_counter() - t0


@pytest.fixture(scope="session")
def switched_run(params, gains):
    """Nominal switched-model run; returns (log, wall_seconds)."""
    import time

    study = bt.CaseStudy(params, gains, mode="adaptive")
    t0 = time.perf_counter()
    log = study.run(bt.nominal_scenario(params, pwm="switched", t_end=0.05))
    return log, time.perf_counter() - t0


@pytest.fixture(scope="session")
def fine_adaptive_log(params, gains):
    """Short high-resolution adaptive run for derivative-identity checks."""
    study = bt.CaseStudy(params, gains, mode="adaptive")
    sc = bt.Scenario(t_end=0.005, dt=1e-6, mode="adaptive", log_decimation=1, x0=np.zeros(2))
    return study.run(sc)


@pytest.fixture(scope="session")
def repro_dir(tmp_path_factory):
    from biltrack.cli import main

    out = tmp_path_factory.mktemp("repro")
    code = main(["repro", "--out-dir", str(out)])
    assert code == 0
    return out


def state_deriv_oracle(plant, x, u, t):
    """Independent term-by-term expansion of the plant vector field."""
    s = np.atleast_1d(np.asarray(plant.s_signal(t), dtype=float))
    b0 = np.asarray(plant.b0(s), dtype=float)
    dx = np.zeros(plant.n)
    for i in range(plant.n):
        acc = 0.0
        for j in range(plant.n):
            aij = plant.a0[i, j] - plant.d[i, j]
            for k in range(plant.m):
                aij += plant.j_list[k][i, j] * u[k]
            acc += aij * x[j]
        for k in range(plant.m):
            acc += b0[i, k] * u[k]
        for k in range(plant.q):
            acc += plant.e[i, k] * s[k]
        dx[i] = acc
    return dx


def det_laplace(m):
    """Cofactor-expansion determinant, the independent oracle for adjugates."""
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    if n == 1:
        return m[0, 0]
    total = 0.0
    for j in range(n):
        minor = np.delete(np.delete(m, 0, axis=0), j, axis=1)
        total += (-1.0) ** j * m[0, j] * det_laplace(minor)
    return total
