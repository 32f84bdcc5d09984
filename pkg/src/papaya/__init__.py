"""Memory/throughput cost models for deciding when memory-saving training methods pay off."""

__version__ = "0.1.0"

from .core import (FragmentationConfig, PapayaVerdict, ThroughputPrediction, papaya_point,
                   papaya_score, predict_max, throughput_at, throughput_derivative, verdict,
                   verdict_fragmented, verdict_general)
from .errors import (ConsistencyError, FitError, InfeasibleError, KneeDetectionError, PapayaError,
                     ProfileFormatError, SingularFitError, UndefinedPointError)
from .fitting import FitConfig, detect_knee, fit_cost_model, fit_linear
from .profiles import (CostModel, LatencyModel, LinearFit, MemoryModel, ProfilePoint, ProfileSeries,
                       load_profile, parse_profile, serialize_profile, validate_series)
from .scaling import (DepthLaw, MultiGpuLaw, WidthLaw, crossover_depth, crossover_width,
                      scale_depth, scale_width, sweep_gpus)
from .simulator import (MomTransform, WorkloadSpec, apply_mom, brute_force_max_throughput,
                        empirical_max_batch, generate_profile, simulate_step)

__all__ = [
    "FragmentationConfig", "PapayaVerdict", "ThroughputPrediction", "papaya_point", "papaya_score",
    "predict_max", "throughput_at", "throughput_derivative", "verdict", "verdict_fragmented",
    "verdict_general",
    "ConsistencyError", "FitError", "InfeasibleError", "KneeDetectionError", "PapayaError",
    "ProfileFormatError", "SingularFitError", "UndefinedPointError",
    "FitConfig", "detect_knee", "fit_cost_model", "fit_linear",
    "CostModel", "LatencyModel", "LinearFit", "MemoryModel", "ProfilePoint", "ProfileSeries",
    "load_profile", "parse_profile", "serialize_profile", "validate_series",
    "DepthLaw", "MultiGpuLaw", "WidthLaw", "crossover_depth", "crossover_width", "scale_depth",
    "scale_width", "sweep_gpus",
    "MomTransform", "WorkloadSpec", "apply_mom", "brute_force_max_throughput", "empirical_max_batch",
    "generate_profile", "simulate_step",
]
