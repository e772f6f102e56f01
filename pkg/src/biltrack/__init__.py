"""Adaptive output-feedback trajectory tracking for bilinear systems."""

from .analysis import (
    PeReport,
    det_sq_integral,
    detectability_probe,
    pe_level,
    q_gram,
    v_c,
    v_c_dot_analytic,
    v_o,
    v_o_dot_analytic,
)
from .controllers import (
    AdaptiveController,
    ControllerContext,
    FullInfoController,
    OutputFeedbackController,
    adaptive_control,
    clamp_input,
    full_info_control,
    output_feedback_control,
)
from .errors import (
    BiltrackError,
    CertificateError,
    ConfigError,
    DimensionError,
    SimulationDiverged,
)
from .model import (
    AdmissibleTrajectory,
    BilinearPlant,
    ObserverCertificate,
    PassivityCertificate,
    RegressorDecomposition,
    VerificationReport,
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
from .numerics import adjugate, determinant, spd_sqrt, sym_min_eig
from .observers import (
    DremGains,
    DremObserver,
    DremObserverState,
    KalmanObserver,
    consistency_residual,
    drem_mixing_derivs,
    drem_theta_deriv,
    drem_y_filter_deriv,
    drem_z_deriv,
    kalman_deriv,
    reconstruct_state,
)
from .pfp import (
    CaseStudy,
    PfpGains,
    PfpParams,
    build_pfp_plant,
    full_study_scenario,
    nominal_scenario,
    pfp_admissible_trajectory,
    pfp_certificates,
    power_factor,
    pwm_switch,
    study_events,
)
from .sim import Event, Scenario, SimLog, apply_event, rk4_step, simulate

__version__ = "0.1.0"
