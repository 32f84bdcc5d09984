"""Advisory report assembly, JSON schema and text rendering."""

from __future__ import annotations

import json
import math
from importlib import resources
from typing import Optional, Sequence

from . import __version__
from .core import (FragmentationConfig, PapayaVerdict, ThroughputPrediction, predict_max,
                   is_infeasible, verdict, verdict_fragmented, verdict_general)
from .profiles import CostModel

SCHEMA_VERSION = "1.0"


def load_schema() -> dict:
    return json.loads(resources.files("papaya").joinpath("report_schema.json").read_text())


def _num(x: Optional[float]):
    """JSON-safe number: infinities become the strings '+inf' / '-inf'."""
    if x is None:
        return None
    if math.isinf(x):
        return "+inf" if x > 0 else "-inf"
    if math.isnan(x):
        return None
    return x


def _prediction(p: Optional[ThroughputPrediction]) -> Optional[dict]:
    if p is None:
        return None
    return {
        "max_batch_continuous": p.max_batch_continuous,
        "max_batch_integer": p.max_batch_integer,
        "max_throughput": p.max_throughput,
        "integer_throughput": p.integer_throughput,
        "at_latency_s": p.at_latency,
    }


def _model_summary(m: CostModel) -> dict:
    d = {
        "method": m.method_id,
        "model": m.model_id,
        "alpha_gb": m.alpha,
        "beta_gb": m.beta,
        "gamma_s": m.gamma,
        "delta_s": m.delta,
        "infeasible_at_batch_1": is_infeasible(m),
        "knee_batch": m.knee_batch,
        "memory_r_squared": m.memory.fit.r_squared if m.memory.fit else None,
        "latency_r_squared": m.latency.fit.r_squared if m.latency.fit else None,
        "memory_fit_range": list(m.memory.fit.fit_range) if m.memory.fit else None,
        "latency_fit_range": list(m.latency.fit.fit_range) if m.latency.fit else None,
    }
    return d


def _verdict_entry(mom: CostModel, kind: str, v: PapayaVerdict) -> dict:
    return {
        "method": mom.method_id,
        "kind": kind,
        "score": _num(v.score),
        "point": _num(v.point),
        "score_defined": v.score_defined,
        "beneficial": v.beneficial,
        "by_necessity": v.by_necessity,
        "dominating": v.dominating,
        "normalized_score": _num(v.normalized_score),
        "normalized_max_throughput": _num(v.normalized_max_throughput),
        "mom_prediction": _prediction(v.mom_prediction),
        "inequality_lhs": _num(v.inequality_lhs),
        "inequality_rhs": _num(v.inequality_rhs),
        "inequality_fallback": v.inequality_fallback,
    }


def build_report(baseline: CostModel, moms: Sequence[CostModel],
                 frag: Optional[FragmentationConfig] = None,
                 provenance: Optional[dict] = None,
                 warnings: Sequence[str] = ()) -> dict:
    """Run every applicable verdict for each MOM against the baseline."""
    warnings = list(warnings)
    for m in (baseline, *moms):
        for name, f in (("memory", m.memory.fit), ("latency", m.latency.fit)):
            if f is not None and f.r_squared < 0.97:
                warnings.append(f"{m.method_id}: {name} fit r^2 = {f.r_squared:.3f} is below 0.97")

    baseline_pred = None if is_infeasible(baseline) else predict_max(baseline)
    verdicts = []
    for mom in moms:
        v = verdict(baseline, mom)
        warnings.extend(v.warnings)
        verdicts.append(_verdict_entry(mom, "shared_fixed_costs", v))
        if v.dominating:
            warnings.append(f"{mom.method_id}: saves memory without per-record overhead (dominating MOM)")
        if v.warnings:
            g = verdict_general(baseline, mom)
            verdicts.append(_verdict_entry(mom, "general", g))
            warnings.extend(w for w in g.warnings if w not in v.warnings)
        if frag is not None:
            fv = verdict_fragmented(baseline, mom, frag)
            verdicts.append(_verdict_entry(mom, "fragmented", fv))
            warnings.extend(w for w in fv.warnings if w not in v.warnings)
    if frag is not None:
        warnings.append(f"fragmentation: effective memory ratio {frag.f_original} (baseline), "
                        f"{frag.f_mom} (MOM)")

    return {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "provenance": provenance or {},
        "models": [_model_summary(m) for m in (baseline, *moms)],
        "baseline": {"method": baseline.method_id, "prediction": _prediction(baseline_pred)},
        "verdicts": verdicts,
        "warnings": list(dict.fromkeys(warnings)),
    }


def _fmt(x, spec=".3f"):
    if x is None:
        return "-"
    if isinstance(x, str):
        return x
    return format(x, spec)


def render_table(report: dict) -> str:
    lines = ["method          alpha(GB)  beta(GB)  gamma(s)   delta(s)  r2(mem) r2(lat) knee"]
    for m in report["models"]:
        lines.append(
            f"{m['method']:<15} {m['alpha_gb']:9.4f} {m['beta_gb']:9.3f} {m['gamma_s']:9.5f} "
            f"{m['delta_s']:9.4f} {_fmt(m['memory_r_squared'], '7.4f')} "
            f"{_fmt(m['latency_r_squared'], '7.4f')} {_fmt(m['knee_batch'], '')}")
    bp = report["baseline"]["prediction"]
    lines.append("")
    if bp:
        lines.append(f"baseline max batch {bp['max_batch_continuous']:.1f}, "
                     f"max throughput {bp['max_throughput']:.3f} rec/s")
    else:
        lines.append("baseline cannot run at batch size 1")
    lines.append("")
    lines.append("method          verdict             score     point  norm.score  norm.tput  beneficial")
    for v in report["verdicts"]:
        lines.append(
            f"{v['method']:<15} {v['kind']:<18} {_fmt(v['score'], '9.3f'):>9} {_fmt(v['point'], '9.3f'):>9} "
            f"{_fmt(v['normalized_score'], '10.4f'):>10} {_fmt(v['normalized_max_throughput'], '10.4f'):>10}  "
            f"{'YES' if v['beneficial'] else 'no'}{' (necessity)' if v['by_necessity'] else ''}")
    if report["warnings"]:
        lines.append("")
        lines.extend(f"warning: {w}" for w in report["warnings"])
    return "\n".join(lines) + "\n"
