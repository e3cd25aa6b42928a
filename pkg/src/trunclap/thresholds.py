"""Acceptance thresholds, centralized so tolerance changes never touch
test or harness code.

The sampling tolerances are sized from binomial error propagation at the
stated draw counts; the exact-arithmetic tolerances are pure float64
headroom.
"""

THRESHOLDS = {
    # analytic reproduction of the reference accuracy table
    "table1_theory_abs": 0.01,
    "table1_empirical_n": 500_000,
    "table1_mean_abs": 0.5,
    "table1_mse_rel": 0.02,
    # distribution overlay
    "overlay_n": 500_000,
    "overlay_tv": 0.01,
    # calibration reference point
    "calibration_sigma_lo": 49.2,
    "calibration_sigma_hi": 49.3,
    # exact certificates
    "ratio_tol": 1e-10,
    "enum_pointwise_tol": 1e-12,
    "lambda_rel_tol": 1e-10,
    "normalization_tol": 1e-12,
    "moment_oracle_rel_tol": 1e-9,
    # sampler statistics
    "sampler_tv_1e6": 0.003,
    "clap_tv_1e6": 0.01,
    # secure-protocol statistics
    "mpc_equiv_sessions": 10_000,
    "mpc_tv_sessions": 100_000,
    "mpc_tv_d": 0.005,
    "mpc_tv_c": 0.01,
    "dp_cert_sessions": 1_000_000,
    "dp_cert_min_count": 100,
    "dp_cert_rel_se": 3.0,
}
