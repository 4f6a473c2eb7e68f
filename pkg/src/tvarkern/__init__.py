"""Simulation and estimation toolkit for the time-varying first-order
autoregression y_k = S(k/n) y_{k-1} + xi_k: windowed kernel estimation
of S at a point with a truncated denominator, coefficient and noise
fixtures, smoothness-class checks, and a deterministic Monte Carlo
harness for risk, rate, efficiency, and diagnostic studies."""
from .classes import (BumpShape, BumpSpec, HolderSpec, WeakHolderSpec,
                      bump_function, check_stability, check_weak_membership,
                      holder_constant, inv_stationary_var, mollified_indicator,
                      quartic_shape, shape_curvature_max, shape_integral,
                      window_deviation_integral)
from .engine import CHUNK_ELEMS, WeightedSum, fourth_moment_profile, window_sums
from .estimator import (DECOMPOSITION_RTOL, KERNEL_IDS, EstimateResult,
                        KernelSpec, LanResult, Schedule, decompose,
                        decomposition_residual, design_window, estimate,
                        get_kernel, lan_statistics, make_schedule,
                        validate_kernel)
from .mc import (EFFICIENCY_TARGET, CltReport, EfficiencyReport,
                 ExperimentConfig, LanConfig, LanRow, LemmaReport, RateFit,
                 RiskReport, RiskRow, cell_label, cell_seeds, clt_diagnostic,
                 efficiency, lan_study, lemma_checks, mc_risk, rate_fit,
                 validate_config)
from .model import (COEF_IDS, CoefFunction, NoiseDensity, Trajectory,
                    fourth_moment_bound, load_trajectory, make_coef,
                    noise_by_id, noise_panel, replay, replay_error,
                    save_trajectory, simulate, verify_coef)
from .rng import label_hash, mix64, replication_seed, stream
from .util import ENV_THREADS, LaneKahan, kahan_sum, thread_count

__version__ = "0.1.0"

__all__ = [
    "BumpShape", "BumpSpec", "HolderSpec", "WeakHolderSpec", "bump_function",
    "check_stability", "check_weak_membership", "holder_constant",
    "inv_stationary_var", "mollified_indicator", "quartic_shape",
    "shape_curvature_max", "shape_integral", "window_deviation_integral",
    "CHUNK_ELEMS", "WeightedSum", "fourth_moment_profile", "window_sums",
    "DECOMPOSITION_RTOL", "KERNEL_IDS", "EstimateResult", "KernelSpec",
    "LanResult", "Schedule", "decompose", "decomposition_residual",
    "design_window", "estimate", "get_kernel", "lan_statistics",
    "make_schedule", "validate_kernel",
    "EFFICIENCY_TARGET", "CltReport", "EfficiencyReport", "ExperimentConfig",
    "LanConfig", "LanRow", "LemmaReport", "RateFit", "RiskReport", "RiskRow",
    "cell_label", "cell_seeds", "clt_diagnostic", "efficiency", "lan_study",
    "lemma_checks", "mc_risk", "rate_fit", "validate_config",
    "COEF_IDS", "CoefFunction", "NoiseDensity", "Trajectory",
    "fourth_moment_bound", "load_trajectory", "make_coef", "noise_by_id",
    "noise_panel", "replay", "replay_error", "save_trajectory", "simulate",
    "verify_coef",
    "label_hash", "mix64", "replication_seed", "stream",
    "ENV_THREADS", "LaneKahan", "kahan_sum", "thread_count",
    "__version__",
]
