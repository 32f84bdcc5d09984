"""
How verdicts move with model depth, model width and data-parallel GPU count.

Depth multiplies both per-record slopes, so the score is unchanged while
fixed memory grows and the point falls. Width grows memory slope linearly
but latency slope and both fixed costs quadratically, so the score decays as
1/W while the point decays faster. More GPUs add synchronization time to the
fixed latency, which lowers the point. Each of these gives a single
crossover size beyond which the MOM wins; the crossover searches below find
it by bisection.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, Optional

from scipy.optimize import brentq

from .core import PapayaVerdict, papaya_score, verdict
from .errors import ConsistencyError, InfeasibleError
from .profiles import CostModel


@dataclass(frozen=True)
class DepthLaw:
    """alpha = c1_mem*D, gamma = c2_lat*D, beta = beta_base + beta_per_layer*D."""

    c1_mem: float
    c2_lat: float
    beta_per_layer: float
    beta_base: float
    delta: float
    device_memory: float
    delta_per_layer: float = 0.0

    def __post_init__(self):
        if min(self.c1_mem, self.c2_lat, self.beta_per_layer, self.delta, self.device_memory) <= 0:
            raise ValueError("DepthLaw coefficients must be positive")
        if self.beta_base < 0 or self.delta_per_layer < 0:
            raise ValueError("beta_base and delta_per_layer must be non-negative")

    def model(self, depth: float, method_id: str) -> CostModel:
        return CostModel.from_coefficients(
            self.c1_mem * depth, self.beta_base + self.beta_per_layer * depth,
            self.c2_lat * depth, self.delta + self.delta_per_layer * depth,
            self.device_memory, method_id)


@dataclass(frozen=True)
class WidthLaw:
    """alpha = c1_mem*W, gamma = c2_lat*W^2, beta = c1p_fixed_mem*W^2, delta = c2p_fixed_lat*W^2."""

    c1_mem: float
    c2_lat: float
    c1p_fixed_mem: float
    c2p_fixed_lat: float
    device_memory: float

    def __post_init__(self):
        if min(self.c1_mem, self.c2_lat, self.c1p_fixed_mem, self.c2p_fixed_lat, self.device_memory) <= 0:
            raise ValueError("WidthLaw coefficients must be positive")

    def model(self, width: float, method_id: str) -> CostModel:
        w2 = width * width
        return CostModel.from_coefficients(
            self.c1_mem * width, self.c1p_fixed_mem * w2,
            self.c2_lat * w2, self.c2p_fixed_lat * w2,
            self.device_memory, method_id)


@dataclass(frozen=True)
class MultiGpuLaw:
    delta_single: float
    delta_per_extra_gpu: float = 0.0
    gpu_count: int = 8

    def __post_init__(self):
        if self.delta_single < 0 or self.delta_per_extra_gpu < 0:
            raise ValueError("fixed latencies must be non-negative")
        if self.gpu_count < 1:
            raise ValueError("gpu_count must be >= 1")

    def delta(self, n: int) -> float:
        return self.delta_single + self.delta_per_extra_gpu * (n - 1)


@dataclass(frozen=True)
class Crossover:
    """Smallest integer size with a beneficial verdict, plus the real-valued root."""

    smallest: Optional[int]
    continuous: Optional[float] = None
    search_limit: int = 0


@dataclass(frozen=True)
class GpuVerdict:
    gpus: int
    delta: float
    point: float
    verdict: PapayaVerdict
    aggregate_throughput_baseline: Optional[float]
    aggregate_throughput_mom: Optional[float]


def _pair(laws, size, method_ids):
    base, mom = laws
    b = base.model(size, method_ids[0])
    m = mom.model(size, method_ids[1])
    if b.beta >= b.device_memory and m.beta >= m.device_memory:
        raise InfeasibleError(f"fixed memory exceeds the device for both methods at size {size}")
    return b, m


def scale_depth(laws: tuple[DepthLaw, DepthLaw], depth: int,
                method_ids=("original", "mom")) -> tuple[CostModel, CostModel]:
    if depth < 1:
        raise ValueError("depth must be >= 1")
    return _pair(laws, depth, method_ids)


def scale_width(laws: tuple[WidthLaw, WidthLaw], width: int,
                method_ids=("original", "mom")) -> tuple[CostModel, CostModel]:
    if width < 1:
        raise ValueError("width must be >= 1")
    return _pair(laws, width, method_ids)


def _largest_true(pred: Callable[[int], bool], lo: int, hi: int) -> int:
    """Largest n in [lo, hi] with pred(n), for pred true on a prefix; lo-1 if none."""
    if not pred(lo):
        return lo - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if pred(mid):
            lo = mid
        else:
            hi = mid - 1
    return lo


def _crossover(laws, max_size: int, scale) -> Crossover:
    if max_size < 1:
        raise ValueError("max size must be >= 1")
    mom_law = laws[1]

    # beyond this size even the MOM cannot hold one record; verdicts stop being meaningful
    def mom_runs(n):
        return not mom_law.model(n, "mom").infeasible

    hi = _largest_true(mom_runs, 1, max_size)
    if hi < 1:
        return Crossover(None, None, max_size)

    def beneficial(n):
        return verdict(*scale(laws, n)).beneficial

    if beneficial(1):
        return Crossover(1, None, hi)
    if not beneficial(hi):
        return Crossover(None, None, hi)
    lo, top = 1, hi  # invariant: not beneficial(lo), beneficial(top)
    while top - lo > 1:
        mid = (lo + top) // 2
        if beneficial(mid):
            top = mid
        else:
            lo = mid
    if beneficial(top - 1) or not beneficial(top):
        raise ConsistencyError(f"verdict is not monotone around size {top}")
    return Crossover(top, _continuous_root(laws, top - 1, top), hi)


def _continuous_root(laws, lo, hi) -> Optional[float]:
    """Real size where both maximum throughputs coincide, within [lo, hi]."""
    base, mom = laws

    def gap(s):
        b, m = base.model(s, "original"), mom.model(s, "mom")
        if b.infeasible:
            return 1.0
        xb = (b.device_memory - b.beta) / b.alpha
        xm = (m.device_memory - m.beta) / m.alpha
        return xm / (m.gamma * xm + m.delta) - xb / (b.gamma * xb + b.delta)

    g_lo, g_hi = gap(lo), gap(hi)
    if g_hi == 0:
        return float(hi)
    if g_lo >= 0 or g_hi < 0:
        return None
    return brentq(gap, lo, hi, xtol=1e-12, rtol=1e-14)


def crossover_depth(laws: tuple[DepthLaw, DepthLaw], max_depth: int) -> Crossover:
    """Smallest depth in [1, max_depth] at which the MOM is beneficial."""
    return _crossover(laws, max_depth, scale_depth)


def crossover_width(laws: tuple[WidthLaw, WidthLaw], max_width: int) -> Crossover:
    """Smallest width in [1, max_width] at which the MOM is beneficial."""
    return _crossover(laws, max_width, scale_width)


def sweep_gpus(baseline: CostModel, mom: CostModel, law: MultiGpuLaw,
               max_gpus: Optional[int] = None,
               growth: Optional[Callable[[int], float]] = None) -> list[GpuVerdict]:
    """Verdict for 1..max_gpus data-parallel replicas.

    ``growth(n)`` gives the fixed latency with n GPUs and defaults to the
    law's linear model. It replaces delta in both models; per-device memory
    is unchanged because every replica holds the whole model.
    """
    max_gpus = law.gpu_count if max_gpus is None else max_gpus
    if max_gpus < 1:
        raise ValueError("max_gpus must be >= 1")
    growth = growth or law.delta
    out = []
    for n in range(1, max_gpus + 1):
        d = growth(n)
        b = dataclasses.replace(baseline, latency=dataclasses.replace(baseline.latency, delta=d, fit=None))
        m = dataclasses.replace(mom, latency=dataclasses.replace(mom.latency, delta=d, fit=None))
        v = verdict(b, m)
        point = v.point
        agg_b = n * v.baseline_prediction.max_throughput if v.baseline_prediction else None
        agg_m = n * v.mom_prediction.max_throughput if v.mom_prediction else None
        out.append(GpuVerdict(n, d, point, v, agg_b, agg_m))
    return out


def first_beneficial_gpu_count(sweep: list[GpuVerdict]) -> Optional[int]:
    for row in sweep:
        if row.verdict.beneficial:
            return row.gpus
    return None


def gpu_flip_point(baseline: CostModel, mom: CostModel, law: MultiGpuLaw) -> Optional[float]:
    """Real GPU count where the point drops to the score under the linear law."""
    score, defined = papaya_score(baseline, mom)
    if not defined or score <= 0:
        return None
    needed = (baseline.device_memory - baseline.beta) / score
    if law.delta_per_extra_gpu == 0:
        return 1.0 if law.delta_single >= needed else None
    return max(1.0, 1.0 + (needed - law.delta_single) / law.delta_per_extra_gpu)
