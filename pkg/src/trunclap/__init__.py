"""Failure-free truncated discrete Laplace perturbation, with exact
distributions, calibrated privacy, plaintext samplers, and a simulated
semi-honest two-party realization."""

from .grids import FieldConfig, GridError, GridSpec, field_for_mechanism, quantize
from .mechanisms import (
    CalibrationResult,
    ExactPmf,
    MechanismParams,
    calibrate,
    centered_clap_pmf,
    centered_dlap_pmf,
    find_kstar,
    kstar_calibration,
    lambda_clap,
    lambda_dlap,
    lambda_lap,
    max_privacy_ratio,
    moments_lap,
    moments_lap_exact,
    moments_tcl,
    moments_tdl,
    pmf_tcl,
    pmf_tdl,
)
from .sampling import (
    GeoSamplerParams,
    NoisePair,
    noise_c,
    noise_d,
    perturb_c,
    perturb_d,
    sample_clap_centered,
    sample_dlap_centered,
    sample_geometric_bitwise,
    sample_tcl,
    sample_tdl,
    sample_tdl_batch,
)
from .tape import RandomTape
from .validation import (
    FitReport,
    Histogram,
    empirical_moments,
    empirical_privacy_ratio,
    fit_report,
    table1_report,
    tv_distance,
)

__version__ = "0.1.0"

__all__ = [
    "CalibrationResult",
    "ExactPmf",
    "FieldConfig",
    "FitReport",
    "GeoSamplerParams",
    "GridError",
    "GridSpec",
    "Histogram",
    "MechanismParams",
    "NoisePair",
    "RandomTape",
    "calibrate",
    "centered_clap_pmf",
    "centered_dlap_pmf",
    "empirical_moments",
    "empirical_privacy_ratio",
    "field_for_mechanism",
    "find_kstar",
    "fit_report",
    "kstar_calibration",
    "lambda_clap",
    "lambda_dlap",
    "lambda_lap",
    "max_privacy_ratio",
    "moments_lap",
    "moments_lap_exact",
    "moments_tcl",
    "moments_tdl",
    "noise_c",
    "noise_d",
    "perturb_c",
    "perturb_d",
    "pmf_tcl",
    "pmf_tdl",
    "quantize",
    "sample_clap_centered",
    "sample_dlap_centered",
    "sample_geometric_bitwise",
    "sample_tcl",
    "sample_tdl",
    "sample_tdl_batch",
    "table1_report",
    "tv_distance",
]
