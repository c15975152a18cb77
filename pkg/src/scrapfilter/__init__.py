"""State-space estimation of scrap composition in steelmaking.

Linear (steel-only elements, Kalman filter) and nonlinear (steel/slag
partitioning elements, unscented Kalman filter) models, a synthetic heat
simulator, and a sensitivity harness for measurement noise.
"""

__version__ = "0.1.0"

from .kalman import FilterOutput, GaussianBelief, kf_predict, kf_update, run_kf
from .model_core import (
    PPM,
    ElementKind,
    HeatRecord,
    InfeasibleMomentsError,
    ModelParams,
    NoiseSpec,
    ScrapState,
    beta_params_from_moments,
    observe_linear,
    observe_nonlinear,
    sample_state_noise,
    state_transition,
)
from .sensitivity import (
    ErrorStats,
    SweepResult,
    error_stats,
    prediction_errors,
    run_scenario,
    scrap_tracking_rmse,
    sweep,
)
from .synth_data import Dataset, ScenarioConfig, build_dataset
from .ukf import SigmaSet, UkfParams, run_ukf, sigma_points, ukf_predict, ukf_update
