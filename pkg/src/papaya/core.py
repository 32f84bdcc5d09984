"""
Maximum-throughput predictions and MOM beneficiality verdicts.

Throughput v(x) = x / (gamma*x + delta) grows monotonically with batch size,
so each method's best throughput sits at the largest batch its memory model
allows. A MOM is worth using when its best throughput is at least the
baseline's.

The score (alpha0 - alpha_mom) / (gamma_mom - gamma0) is memory saved per
unit of added per-record latency; the point (M - beta) / delta is the
threshold it must reach. With shared beta and delta, score >= point is
equivalent to the MOM winning.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Optional

from .errors import ConsistencyError, InfeasibleError, UndefinedPointError
from .profiles import GB, CostModel

# relative beta/delta mismatch above which the shared-fixed-cost assumption is flagged
ASSUMPTION_TOLERANCE = 0.10
# score/point and throughput gaps below this are round-off ties
_TIE_RTOL = 1e-9


@dataclass(frozen=True)
class ThroughputPrediction:
    max_batch_continuous: float
    max_batch_integer: int
    max_throughput: float
    at_latency: float
    integer_throughput: float


@dataclass(frozen=True)
class FragmentationConfig:
    f_original: float = 1.0
    f_mom: float = 1.0

    def __post_init__(self):
        for f in (self.f_original, self.f_mom):
            if not 0 < f <= 1:
                raise ValueError("effective memory ratios must be in (0, 1]")


@dataclass(frozen=True)
class PapayaVerdict:
    score: float
    point: float
    score_defined: bool
    beneficial: bool
    baseline_prediction: Optional[ThroughputPrediction]
    mom_prediction: Optional[ThroughputPrediction]
    normalized_max_throughput: Optional[float]
    normalized_score: Optional[float]
    by_necessity: bool = False
    dominating: bool = False
    inequality_lhs: Optional[float] = None
    inequality_rhs: Optional[float] = None
    inequality_fallback: bool = False
    warnings: tuple[str, ...] = ()

    def core(self) -> "PapayaVerdict":
        """Copy without the inequality diagnostics, for comparing verdict flavours."""
        return dataclasses.replace(self, inequality_lhs=None, inequality_rhs=None,
                                   inequality_fallback=False, warnings=())


def is_infeasible(model: CostModel) -> bool:
    """True when not even one record fits in the model's device memory."""
    return not _fits(model.alpha, model.beta, model.device_memory, 1)


def throughput_at(model: CostModel, batch: float) -> float:
    """Records per second at the given batch size."""
    return batch / (model.gamma * batch + model.delta)


def throughput_derivative(model: CostModel, batch: float) -> float:
    """d(throughput)/d(batch) = delta / (gamma*batch + delta)^2."""
    return model.delta / (model.gamma * batch + model.delta) ** 2


def _fits(alpha, beta, budget, batch) -> bool:
    # compared in whole bytes so that 0.1*0.4 GB/record does not lose a batch to round-off
    return round((alpha * batch + beta) * GB) <= round(budget * GB)


def max_feasible_batch(alpha: float, beta: float, budget: float) -> int:
    """Largest integer batch whose peak memory fits the budget (0 if none)."""
    b = max(0, math.floor((budget - beta) / alpha))
    while b >= 1 and not _fits(alpha, beta, budget, b):
        b -= 1
    while _fits(alpha, beta, budget, b + 1):
        b += 1
    return b


def predict_max(model: CostModel) -> ThroughputPrediction:
    if is_infeasible(model):
        raise InfeasibleError(
            f"{model.method_id}: fails to run even with batch size 1 "
            f"(needs {model.alpha + model.beta:.3f} GB of {model.device_memory:.3f} GB)")
    x = (model.device_memory - model.beta) / model.alpha
    xi = max(1, max_feasible_batch(model.alpha, model.beta, model.device_memory))
    return ThroughputPrediction(
        max_batch_continuous=x,
        max_batch_integer=xi,
        max_throughput=throughput_at(model, x),
        at_latency=model.gamma * x + model.delta,
        integer_throughput=throughput_at(model, xi),
    )


def _score(alpha0, alpha_mom, gamma0, gamma_mom) -> tuple[float, bool]:
    saving = alpha0 - alpha_mom
    overhead = gamma_mom - gamma0
    if overhead > 0:
        return saving / overhead, True
    return (math.inf if saving > 0 else -math.inf), False


def papaya_score(baseline: CostModel, mom: CostModel) -> tuple[float, bool]:
    """Memory saving per unit latency overhead, and whether it is finite/defined.

    When the MOM adds no per-record latency the ratio is undefined; it is
    reported as +inf if the MOM still saves memory (it dominates) and -inf
    otherwise.
    """
    return _score(baseline.alpha, mom.alpha, baseline.gamma, mom.gamma)


def papaya_point(baseline: CostModel) -> float:
    """Threshold (M - beta) / delta the score must reach."""
    if is_infeasible(baseline):
        raise InfeasibleError(f"{baseline.method_id}: baseline cannot run at batch size 1")
    if baseline.delta == 0:
        raise UndefinedPointError("fixed latency is zero; throughput is flat in batch size")
    return (baseline.device_memory - baseline.beta) / baseline.delta


def _rel_gap(a, b) -> float:
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale else 0.0


def _assumption_warnings(baseline: CostModel, mom: CostModel) -> list[str]:
    out = []
    for name, a, b in (("fixed memory (beta)", baseline.beta, mom.beta),
                       ("fixed latency (delta)", baseline.delta, mom.delta)):
        if _rel_gap(a, b) > ASSUMPTION_TOLERANCE:
            out.append(f"{mom.method_id}: {name} differs from baseline by {100 * _rel_gap(a, b):.1f}%; "
                       "score/point assume it is shared, consider verdict_general")
    return out


def _check_devices(baseline: CostModel, mom: CostModel):
    if baseline.device_memory != mom.device_memory:
        raise ValueError(
            f"device memory mismatch: {baseline.device_memory} vs {mom.device_memory} GB")


def _assemble(baseline: CostModel, mom: CostModel, score, defined, point,
              extra_warnings=()) -> PapayaVerdict:
    if is_infeasible(baseline) and is_infeasible(mom):
        raise InfeasibleError("neither the baseline nor the MOM fits a single record in memory")

    warnings = list(extra_warnings)
    if is_infeasible(baseline):
        mp = predict_max(mom)
        return PapayaVerdict(score, point, defined, True, None, mp, None, None,
                             by_necessity=True, dominating=defined is False and score > 0,
                             warnings=tuple(warnings))
    bp = predict_max(baseline)
    if is_infeasible(mom):
        return PapayaVerdict(score, point, defined, False, bp, None, 0.0, None,
                             warnings=tuple(warnings))
    mp = predict_max(mom)
    beneficial = mp.max_throughput >= bp.max_throughput
    normalized_score = score / point if defined and math.isfinite(point) and point > 0 else None
    return PapayaVerdict(
        score=score, point=point, score_defined=defined, beneficial=beneficial,
        baseline_prediction=bp, mom_prediction=mp,
        normalized_max_throughput=mp.max_throughput / bp.max_throughput,
        normalized_score=normalized_score,
        dominating=not defined and score > 0,
        warnings=tuple(warnings),
    )


def _point_or_inf(budget, beta, delta) -> float:
    if delta == 0:
        return math.inf
    return (budget - beta) / delta


def verdict(baseline: CostModel, mom: CostModel) -> PapayaVerdict:
    """Decide whether the MOM raises maximum throughput.

    The decision is a direct comparison of predicted maximum throughputs;
    score and point ride along as the explanation. Ties are beneficial.
    """
    _check_devices(baseline, mom)
    score, defined = papaya_score(baseline, mom)
    point = _point_or_inf(baseline.device_memory, baseline.beta, baseline.delta)
    v = _assemble(baseline, mom, score, defined, point, _assumption_warnings(baseline, mom))

    if (defined and not is_infeasible(baseline) and not is_infeasible(mom)
            and baseline.beta == mom.beta and baseline.delta == mom.delta
            and (score >= point) != v.beneficial
            and _rel_gap(score, point) > _TIE_RTOL
            and _rel_gap(v.mom_prediction.max_throughput, v.baseline_prediction.max_throughput) > _TIE_RTOL):
        raise ConsistencyError(
            f"score/point ({score} vs {point}) disagrees with throughput comparison")
    return v


def verdict_general(baseline: CostModel, mom: CostModel) -> PapayaVerdict:
    """Verdict using each method's own fixed costs (no shared beta/delta assumption).

    Evaluates delta_m*alpha_m / ((gamma0-gamma_m)(M-beta0) + delta0*alpha0)
    <= (M-beta_m)/(M-beta0). If the left denominator is not positive the
    inequality cannot be rearranged this way and only the direct comparison
    is used (``inequality_fallback``).
    """
    _check_devices(baseline, mom)
    M = baseline.device_memory
    score, defined = papaya_score(baseline, mom)
    point = _point_or_inf(M, baseline.beta, baseline.delta)
    v = _assemble(baseline, mom, score, defined, point)

    denom = (baseline.gamma - mom.gamma) * (M - baseline.beta) + baseline.delta * baseline.alpha
    if denom <= 0 or M - baseline.beta <= 0:
        return dataclasses.replace(v, inequality_fallback=True)
    lhs = mom.delta * mom.alpha / denom
    rhs = (M - mom.beta) / (M - baseline.beta)
    warnings = list(v.warnings)
    if (lhs <= rhs) != v.beneficial and _rel_gap(lhs, rhs) > _TIE_RTOL:
        warnings.append("general inequality disagrees with direct throughput comparison")
    return dataclasses.replace(v, inequality_lhs=lhs, inequality_rhs=rhs, warnings=tuple(warnings))


def verdict_fragmented(baseline: CostModel, mom: CostModel,
                       frag: FragmentationConfig) -> PapayaVerdict:
    """Verdict when only a fraction f of device memory is usable by each method.

    Predictions use the effective budgets M*f. With usable memory
    M0 = M*f0 - beta and Mm = M*f_mom - beta, the MOM wins when
    (alpha0*Mm - alpha_mom*M0) / (gamma_mom - gamma0) >= M0*Mm / delta, i.e. the
    ordinary score with alpha_mom scaled by M0/Mm against the point M0/delta;
    those are the reported score and point.

    ``inequality_lhs``/``inequality_rhs`` carry the commonly quoted form
    (alpha0*M0 - alpha_mom*Mm)/(gamma_mom - gamma0) vs M0*Mm/delta. It pairs each
    slope with its own budget and agrees with the exact condition only when
    f0 == f_mom; a warning is attached when the two disagree.
    """
    _check_devices(baseline, mom)
    M, beta, delta = baseline.device_memory, baseline.beta, baseline.delta
    m0 = M * frag.f_original - beta
    mm = M * frag.f_mom - beta
    if m0 <= 0 or mm <= 0:
        raise InfeasibleError(
            f"effective memory after fragmentation leaves no room for activations "
            f"(M0={m0:.3f} GB, Mmom={mm:.3f} GB)")
    eff_base = dataclasses.replace(baseline, device_memory=M * frag.f_original)
    eff_mom = dataclasses.replace(mom, device_memory=M * frag.f_mom)

    score, defined = _score(baseline.alpha, mom.alpha * (m0 / mm), baseline.gamma, mom.gamma)
    point = m0 / delta if delta > 0 else math.inf
    v = _assemble(eff_base, eff_mom, score, defined, point, _assumption_warnings(baseline, mom))

    warnings = list(v.warnings)
    overhead = mom.gamma - baseline.gamma
    if overhead <= 0 or delta == 0:
        return dataclasses.replace(v, inequality_fallback=True, warnings=tuple(warnings))
    lhs = (baseline.alpha * m0 - mom.alpha * mm) / overhead
    rhs = m0 * mm / delta
    if (lhs >= rhs) != v.beneficial and _rel_gap(lhs, rhs) > _TIE_RTOL:
        warnings.append("quoted fragmentation inequality disagrees with direct throughput comparison")
    return dataclasses.replace(v, inequality_lhs=lhs, inequality_rhs=rhs, warnings=tuple(warnings))
