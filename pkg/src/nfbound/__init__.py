"""Near-field / far-field boundary analysis for MIMO antenna arrays.

Builds channel matrices under spherical and planar wavefront models,
computes effective degrees of freedom and capacity, evaluates closed-form
boundary benchmarks, solves for threshold-crossing boundary distances
numerically, and reproduces the preset sweep studies as CSV.
"""

from .analysis import (
    EdofReport,
    capacity,
    capacity_error,
    covariance,
    edof,
    edof_ratio,
    edof_report,
    eigen_ratio_db,
)
from .boundary import (
    BoundaryResult,
    CalibrationResult,
    CapacityRatioObjective,
    EdofRatioObjective,
    EigenRatioObjective,
    FitDiverged,
    benchmark_distances,
    bjornson_distance,
    calibrate_aux,
    capacity_threshold_distance,
    critical_distance,
    ebd_closed_form_prefactor,
    ebd_closed_form_ula_ula,
    ebd_closed_form_ura_ula,
    effective_rayleigh_distance,
    eigen_threshold_distance,
    equi_power_distance,
    fit_aux,
    mimo_ard,
    rayleigh,
    solve_numerical,
    uniform_power_distance,
)
from .channel import (
    ChannelMatrix,
    composite_channel,
    free_space_gain,
    los_channel_pwm,
    los_channel_swm,
    sample_scatterer_set,
    scattered_channel,
)
from .experiments import (
    EXPERIMENT_IDS,
    ExperimentConfig,
    run_experiment,
    ura_to_ula_scene,
    wavelength_for_ghz,
)
from .geometry import (
    ArraySpec,
    LinkScene,
    ScattererSet,
    UlaToUla,
    UraToUla,
    bs_element_positions,
    half_wavelength_ula,
    half_wavelength_ura,
    normalize_angle,
    scene_positions,
    user_element_positions,
)

__version__ = "0.1.0"
