"""
Fitting cost models to a training profile
=========================================

A synthetic workload stands in for a GPU run: peak memory grows linearly
with batch size from the start, while step latency stays flat until the
device is busy enough (here batch 16) and grows linearly after that.
"""

import numpy as np

from papaya import FitConfig, WorkloadSpec, fit_cost_model, generate_profile, validate_series

spec = WorkloadSpec(alpha=0.10, beta=2.0, gamma=0.01, delta=0.5, device_memory=16.0,
                    utilization_floor=16, noise_sigma=0.01, rng_seed=7)
series = generate_profile(spec, range(4, 161, 4))

print(f"{len(series.points)} batches profiled, {len(series.measured)} fit in memory")
print("largest batch that ran:", series.largest_measured_batch)

# Noisy memory readings are not always monotone; that is a warning, not an error.
for w in validate_series(series):
    print("warning:", w)

###############################################################################
# Memory uses every measured batch. Latency drops the under-utilized prefix,
# found as the first batch from which the remaining points are a straight line.

model = fit_cost_model(series, FitConfig(knee_r2_threshold=0.97))
print(f"\nlatency knee at batch {model.knee_batch}")
for name, got, true in [("alpha (GB/record)", model.alpha, spec.alpha), ("beta (GB)", model.beta, spec.beta),
                        ("gamma (s/record)", model.gamma, spec.gamma), ("delta (s)", model.delta, spec.delta)]:
    print(f"  {name:<18} fitted {got:.5f}   true {true:.5f}   error {100 * (got / true - 1):+.2f}%")
print(f"  r^2 memory {model.memory.fit.r_squared:.4f}, latency {model.latency.fit.r_squared:.4f}")

###############################################################################
# The fit uses only a fifth of the points (plus both ends). Refitting with
# other sampling seeds shows how much that choice moves the coefficients.

gammas = [fit_cost_model(series, FitConfig(knee_r2_threshold=0.97, rng_seed=s)).gamma for s in range(20)]
print(f"\ngamma over 20 sampling seeds: {np.mean(gammas):.5f} +- {np.std(gammas):.5f}")
