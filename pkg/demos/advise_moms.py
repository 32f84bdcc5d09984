"""
Does a memory optimization raise maximum throughput?
====================================================

Two hypothetical memory optimization methods (MOMs) are compared with the
original training. MOM-A cuts per-record memory by 60% for 30% more
per-record time; MOM-B cuts 80% for 20% more. Both let the batch grow a lot,
but only one of them trains faster.
"""

from papaya import (CostModel, FragmentationConfig, MomTransform, WorkloadSpec, apply_mom,
                    brute_force_max_throughput, verdict, verdict_fragmented)

base_spec = WorkloadSpec(alpha=0.10, beta=2.0, gamma=0.01, delta=0.5, device_memory=16.0)
specs = {"original": base_spec,
         "mom-a": apply_mom(base_spec, MomTransform("mom-a", 0.4, 0.3)),
         "mom-b": apply_mom(base_spec, MomTransform("mom-b", 0.2, 0.2))}
models = {k: CostModel.from_coefficients(s.alpha, s.beta, s.gamma, s.delta, s.device_memory, k)
          for k, s in specs.items()}

###############################################################################
# The score is memory saved per unit of added time; the point is what the
# baseline's spare memory and fixed time demand. The MOM wins when score >= point.

for name in ("mom-a", "mom-b"):
    v = verdict(models["original"], models[name])
    print(f"{name}: score {v.score:.1f} vs point {v.point:.1f} -> "
          f"{'beneficial' if v.beneficial else 'not beneficial'}")
    print(f"   max batch {v.baseline_prediction.max_batch_integer} -> {v.mom_prediction.max_batch_integer}, "
          f"max throughput {v.baseline_prediction.max_throughput:.3f} -> {v.mom_prediction.max_throughput:.3f} "
          f"rec/s ({v.normalized_max_throughput:.4f}x)")

###############################################################################
# The simulator brute-forces every feasible batch and agrees.

for name, spec in specs.items():
    best, tput = brute_force_max_throughput(spec)
    print(f"oracle {name:<8} best batch {best:>4}  {tput:.3f} rec/s")

###############################################################################
# With fragmentation only part of device memory is usable. Give the original
# 90% and MOM-B 80% of the device.

v = verdict_fragmented(models["original"], models["mom-b"], FragmentationConfig(0.9, 0.8))
print(f"\nfragmented: {v.baseline_prediction.max_throughput:.3f} vs {v.mom_prediction.max_throughput:.3f} rec/s, "
      f"beneficial={v.beneficial}")
