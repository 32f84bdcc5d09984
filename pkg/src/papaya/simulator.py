"""
Synthetic training workloads with known cost coefficients.

The simulator is the ground truth the analytic predictions are checked
against: it produces profiles (optionally noisy, with an under-utilization
knee and allocator fragmentation) and brute-forces the best batch size.
"""

from __future__ import annotations

import dataclasses
import json
import zlib
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InfeasibleError
from .profiles import GB, ProfilePoint, ProfileSeries

SEED_MASK = (1 << 64) - 1
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class WorkloadSpec:
    """Ground-truth coefficients. Memory in GB, time in seconds."""

    alpha: float
    beta: float
    gamma: float
    delta: float
    device_memory: float
    utilization_floor: int = 1
    effective_memory_ratio: float = 1.0
    noise_sigma: float = 0.0
    rng_seed: int = 0
    method: str = "original"
    model: str = "synthetic"

    def __post_init__(self):
        if not (self.alpha > 0 and self.gamma > 0):
            raise ValueError("alpha and gamma must be positive")
        if self.beta < 0 or self.delta < 0:
            raise ValueError("beta and delta must be non-negative")
        if self.utilization_floor < 1:
            raise ValueError("utilization_floor must be >= 1")
        if not 0 < self.effective_memory_ratio <= 1:
            raise ValueError("effective_memory_ratio must be in (0, 1]")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if not self.device_memory > 0:
            raise ValueError("device_memory must be positive")

    @property
    def budget(self) -> float:
        return self.device_memory * self.effective_memory_ratio

    def memory(self, batch):
        return self.alpha * batch + self.beta

    def latency(self, batch):
        return self.gamma * np.maximum(batch, self.utilization_floor) + self.delta

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "WorkloadSpec":
        return cls(**d)


@dataclass(frozen=True)
class MomTransform:
    """Cost signature of a memory optimization method relative to the baseline."""

    name: str
    memory_slope_factor: float = 1.0
    latency_slope_overhead: float = 0.0
    fixed_memory_delta: float = 0.0
    fixed_latency_delta: float = 0.0
    effective_memory_ratio_override: Optional[float] = None

    def __post_init__(self):
        for f in ("memory_slope_factor", "latency_slope_overhead",
                  "fixed_memory_delta", "fixed_latency_delta"):
            if callable(getattr(self, f)):
                # batch-dependent eviction (DTR-style) has no linear cost signature
                raise TypeError(f"{f} must be a constant, not a function of batch size")
        if not 0 < self.memory_slope_factor <= 1:
            raise ValueError("memory_slope_factor must be in (0, 1]")
        if self.latency_slope_overhead < -1:
            raise ValueError("latency_slope_overhead must be >= -1")

    @classmethod
    def checkpointing(cls, memory_slope_factor=0.4, latency_slope_overhead=0.3, **kw):
        return cls("checkpointing", memory_slope_factor, latency_slope_overhead, **kw)

    @classmethod
    def quantization(cls, memory_slope_factor=0.25, latency_slope_overhead=0.5, **kw):
        return cls("quantization", memory_slope_factor, latency_slope_overhead, **kw)

    @classmethod
    def swapping(cls, memory_slope_factor=0.2, latency_slope_overhead=1.0, **kw):
        return cls("swapping", memory_slope_factor, latency_slope_overhead, **kw)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "MomTransform":
        return cls(**d)


def _within(memory_gb: float, budget_gb: float) -> bool:
    # allocators count whole bytes
    return round(memory_gb * GB) <= round(budget_gb * GB)


def _noise(spec: WorkloadSpec, batch: int) -> tuple[float, float]:
    if spec.noise_sigma == 0:
        return 0.0, 0.0
    rng = np.random.default_rng([spec.rng_seed & SEED_MASK, int(batch)])
    eps_m, eps_t = rng.normal(0.0, spec.noise_sigma, size=2)
    return float(eps_m), float(eps_t)


def simulate_step(spec: WorkloadSpec, batch: int) -> Optional[tuple[float, float]]:
    """(peak memory GB, latency s) of one step, or None on out-of-memory."""
    if batch < 1:
        raise ValueError("batch must be >= 1")
    eps_m, eps_t = _noise(spec, batch)
    memory = spec.memory(batch) * (1 + eps_m)
    if not _within(memory, spec.budget):
        return None
    latency = float(spec.latency(batch)) * (1 + eps_t)
    return memory, latency


def generate_profile(spec: WorkloadSpec, batches: Sequence[int]) -> ProfileSeries:
    batches = sorted(set(int(b) for b in batches))
    if not batches:
        raise ValueError("batch list must be non-empty")
    points = []
    for b in batches:
        step = simulate_step(spec, b)
        if step is None:
            points.append(ProfilePoint(b, oom=True))
        else:
            points.append(ProfilePoint(b, step[0], step[1]))
    # the consumer sees the nominal device memory, not the fragmented budget
    return ProfileSeries(spec.model, spec.method, spec.device_memory, tuple(points))


def apply_mom(spec: WorkloadSpec, transform: MomTransform) -> WorkloadSpec:
    f = transform.effective_memory_ratio_override
    return dataclasses.replace(
        spec,
        alpha=spec.alpha * transform.memory_slope_factor,
        gamma=spec.gamma * (1 + transform.latency_slope_overhead),
        beta=spec.beta + transform.fixed_memory_delta,
        delta=spec.delta + transform.fixed_latency_delta,
        effective_memory_ratio=spec.effective_memory_ratio if f is None else f,
        rng_seed=(spec.rng_seed + zlib.crc32(transform.name.encode())) & SEED_MASK,
        method=transform.name,
    )


def _fits(spec: WorkloadSpec, batch: int) -> bool:
    return _within(spec.memory(batch), spec.budget)


def empirical_max_batch(spec: WorkloadSpec) -> int:
    """Largest batch whose noiseless peak memory fits the effective budget."""
    if not _fits(spec, 1):
        raise InfeasibleError(
            f"{spec.method}: batch size 1 needs {spec.memory(1):.3f} GB, budget is {spec.budget:.3f} GB")
    lo, hi = 1, 2
    while _fits(spec, hi):
        lo, hi = hi, hi * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _fits(spec, mid):
            lo = mid
        else:
            hi = mid
    return lo


def brute_force_max_throughput(spec: WorkloadSpec) -> tuple[int, float]:
    """Scan every feasible integer batch; ties go to the largest batch.

    Throughputs within TIE_RTOL of the maximum count as ties, so a flat
    curve (zero fixed latency) is not decided by float round-off.
    """
    top = empirical_max_batch(spec)
    batches = np.arange(1, top + 1)
    tput = batches / spec.latency(batches)
    best = int(batches[tput >= tput.max() * (1 - TIE_RTOL)][-1])
    return best, float(tput[best - 1])


def load_spec(path) -> WorkloadSpec:
    with open(path) as fh:
        return WorkloadSpec.from_dict(json.load(fh))


def load_transform(path) -> MomTransform:
    with open(path) as fh:
        return MomTransform.from_dict(json.load(fh))
