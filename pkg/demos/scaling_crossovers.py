"""
When a memory optimization starts to pay off
============================================

Deeper models keep the score fixed and shrink the point; wider models
shrink both, the point faster; more data-parallel GPUs add synchronization
time and shrink the point. Each gives a size past which the MOM wins.
"""

from papaya import (CostModel, DepthLaw, MultiGpuLaw, WidthLaw, crossover_depth, crossover_width,
                    scale_depth, sweep_gpus, verdict)
from papaya.scaling import gpu_flip_point

###############################################################################
# Depth: per-record costs scale with the layer count, so the score stays at 20
# while fixed memory eats into the budget.

depth_laws = (DepthLaw(0.002, 2e-4, 0.05, 1.0, 0.5, 16.0), DepthLaw(0.0008, 2.6e-4, 0.05, 1.0, 0.5, 16.0))
for d in (25, 50, 100, 150):
    v = verdict(*scale_depth(depth_laws, d))
    print(f"depth {d:>4}: score {v.score:6.2f}  point {v.point:6.2f}  beneficial={v.beneficial}")
print("smallest beneficial depth:", crossover_depth(depth_laws, 280).smallest)

###############################################################################
# Width: fixed memory grows with the square of the width, so the original
# model runs out of room for even one record before the score catches the point.

width_laws = (WidthLaw(0.002, 1e-6, 1e-6, 1e-7, 16.0), WidthLaw(0.001, 1.5e-6, 1e-6, 1e-7, 16.0))
c = crossover_width(width_laws, 10_000)
print(f"\nsmallest beneficial width: {c.smallest} (MOM feasible up to {c.search_limit})")

###############################################################################
# GPUs: every extra replica adds 0.25 s of synchronization to each step.

base = CostModel.from_coefficients(0.10, 2.0, 0.010, 0.5, 16.0, "original")
mom = CostModel.from_coefficients(0.04, 2.0, 0.013, 0.5, 16.0, "mom-a")
law = MultiGpuLaw(0.5, 0.25, 8)
print()
for row in sweep_gpus(base, mom, law):
    print(f"{row.gpus} GPUs: point {row.point:6.3f}  beneficial={row.verdict.beneficial}  "
          f"aggregate {row.aggregate_throughput_baseline:7.2f} -> {row.aggregate_throughput_mom:7.2f} rec/s")
print(f"point drops to the score at n = {gpu_flip_point(base, mom, law):.2f}")
