"""
Command-line front end.

    papaya fit       PROFILE... [--out DIR]
    papaya advise    --baseline FILE --mom FILE [--mom FILE ...] [--frag-original F --frag-mom F]
    papaya simulate  --spec SPEC.json [--transform T.json ...] --batches 4:128:4 --out DIR
    papaya crossover --laws LAWS.json --mode depth|width|gpus
    papaya plotdata  --model MODEL.json [--profile PROFILE ...] --out DIR

Exit codes: 0 success, 1 input error, 2 analysis infeasible or fit failure.
Every flag may also be given in the ``--config`` JSON file (key = flag name
with dashes as underscores); flags on the command line win.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import __version__
from .core import FragmentationConfig, is_infeasible, predict_max, throughput_at, verdict
from .errors import (ConsistencyError, FitError, InfeasibleError, PapayaError, ProfileFormatError,
                     UndefinedPointError)
from .fitting import FitConfig, fit_cost_model
from .profiles import CostModel, load_profile, serialize_profile, validate_series
from .report import build_report, render_table
from .scaling import (DepthLaw, MultiGpuLaw, WidthLaw, crossover_depth, crossover_width,
                      first_beneficial_gpu_count, gpu_flip_point, scale_depth, scale_width, sweep_gpus)
from .simulator import MomTransform, WorkloadSpec, apply_mom, generate_profile

EXIT_OK, EXIT_INPUT, EXIT_ANALYSIS = 0, 1, 2

DEFAULTS = {
    "seed": 0,
    "sample_fraction": 0.2,
    "knee_r2": 0.99,
    "min_points": 4,
    "format": None,
    "out": None,
    "frag_original": None,
    "frag_mom": None,
}


class InputError(Exception):
    pass


def _err(msg):
    print(f"error: {msg}", file=sys.stderr)


def _load_config(args) -> dict:
    if not args.config:
        return {}
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"cannot read config {args.config}: {e}") from None
    if not isinstance(cfg, dict):
        raise InputError("config file must hold a JSON object")
    return cfg


def _resolve(args):
    """Fill unset flags from the config file, then from built-in defaults."""
    cfg = _load_config(args)
    if "seed" in cfg:
        args.seed_given = True
    for key, value in list(vars(args).items()):
        if value is None or value == []:
            if key in cfg:
                setattr(args, key, cfg[key])
            elif key in DEFAULTS:
                setattr(args, key, DEFAULTS[key])
    return args


def _fit_config(args) -> FitConfig:
    try:
        return FitConfig(sample_fraction=float(args.sample_fraction),
                         knee_r2_threshold=float(args.knee_r2),
                         min_points=int(args.min_points), rng_seed=int(args.seed))
    except ValueError as e:
        raise InputError(str(e)) from None


def _read_series(path):
    try:
        return load_profile(path)
    except OSError as e:
        raise InputError(f"{path}: {e.strerror or e}") from None
    except ProfileFormatError as e:
        raise InputError(f"{path}: {e}") from None


def _load_model_or_profile(path, config: FitConfig):
    """Fitted-model JSON is used as is; anything else is parsed as a profile and fitted."""
    if str(path).endswith(".json"):
        try:
            obj = json.loads(Path(path).read_text())
        except OSError as e:
            raise InputError(f"{path}: {e.strerror or e}") from None
        except json.JSONDecodeError as e:
            raise InputError(f"{path}: line {e.lineno}: invalid JSON") from None
        if isinstance(obj, dict) and "alpha_gb" in obj:
            try:
                return CostModel.from_dict(obj), []
            except (KeyError, TypeError, ValueError) as e:
                raise InputError(f"{path}: invalid model file: {e}") from None
    series = _read_series(path)
    return fit_cost_model(series, config), [f"{path}: {w}" for w in validate_series(series)]


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _parse_batches(text) -> list[int]:
    if isinstance(text, list):
        return [int(b) for b in text]
    out = []
    try:
        for part in str(text).split(","):
            part = part.strip()
            if not part:
                continue
            if ":" in part:
                fields = [int(f) for f in part.split(":")]
                start, stop = fields[0], fields[1]
                step = fields[2] if len(fields) > 2 else 1
                out.extend(range(start, stop + 1, step))
            else:
                out.append(int(part))
    except ValueError:
        raise InputError(f"invalid batch list {text!r}") from None
    if not out or min(out) < 1:
        raise InputError("batch list must contain positive integers")
    return out


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------

def cmd_fit(args) -> int:
    config = _fit_config(args)
    out = Path(args.out or ".")
    rows = []
    for path in args.profiles:
        series = _read_series(path)
        for w in validate_series(series, config.min_points):
            print(f"warning: {path}: {w}", file=sys.stderr)
        try:
            model = fit_cost_model(series, config)
        except FitError as e:
            _err(f"{path}: {e}")
            return EXIT_ANALYSIS
        stem = f"{series.model_id or 'model'}_{series.method_id}"
        _write(out / f"{stem}.model.json", json.dumps(model.to_dict(), indent=2) + "\n")
        excluded = [b for b, _ in series.latency_points() if b < model.knee_batch]
        rows.append((model, excluded))

    print("method          alpha(GB)  beta(GB)  gamma(s)   delta(s)  r2(mem) r2(lat) knee  latency-excluded")
    for m, excluded in rows:
        excl = f"{excluded[0]}-{excluded[-1]}" if excluded else "none"
        flag = "  INFEASIBLE@1" if is_infeasible(m) else ""
        print(f"{m.method_id:<15} {m.alpha:9.4f} {m.beta:9.3f} {m.gamma:9.5f} {m.delta:9.4f} "
              f"{m.memory.fit.r_squared:7.4f} {m.latency.fit.r_squared:7.4f} {m.knee_batch:>4}  {excl}{flag}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# advise
# ---------------------------------------------------------------------------

def cmd_advise(args) -> int:
    config = _fit_config(args)
    if not args.baseline or not args.mom:
        raise InputError("advise needs --baseline and at least one --mom")
    warnings = []
    try:
        baseline, w = _load_model_or_profile(args.baseline, config)
        warnings += w
        moms = []
        for path in args.mom:
            m, w = _load_model_or_profile(path, config)
            moms.append(m)
            warnings += w
    except FitError as e:
        _err(str(e))
        return EXIT_ANALYSIS

    for m in moms:
        if m.device_memory != baseline.device_memory:
            _err(f"device memory of {m.method_id} ({m.device_memory} GB) differs from baseline "
                 f"({baseline.device_memory} GB)")
            return EXIT_ANALYSIS
        if m.model_id and baseline.model_id and m.model_id != baseline.model_id:
            warnings.append(f"{m.method_id}: model id {m.model_id!r} differs from baseline {baseline.model_id!r}")

    frag = None
    if args.frag_original is not None or args.frag_mom is not None:
        try:
            frag = FragmentationConfig(float(args.frag_original or 1.0), float(args.frag_mom or 1.0))
        except ValueError as e:
            raise InputError(str(e)) from None

    provenance = {
        "inputs": [str(args.baseline), *map(str, args.mom)],
        "config": {"sample_fraction": config.sample_fraction, "knee_r2": config.knee_r2_threshold,
                   "min_points": config.min_points, "seed": config.rng_seed,
                   "frag_original": args.frag_original, "frag_mom": args.frag_mom},
        "tool_version": __version__,
    }
    try:
        report = build_report(baseline, moms, frag, provenance, warnings)
    except (InfeasibleError, ConsistencyError) as e:
        _err(str(e))
        return EXIT_ANALYSIS

    sys.stdout.write(render_table(report))
    if args.out:
        _write(Path(args.out) / "advisory_report.json", json.dumps(report, indent=2) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _load_json_file(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as e:
        raise InputError(f"{path}: {e.strerror or e}") from None
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: line {e.lineno}: invalid JSON") from None


def cmd_simulate(args) -> int:
    if not args.spec:
        raise InputError("simulate needs --spec")
    try:
        spec = WorkloadSpec.from_dict(_load_json_file(args.spec))
        transforms = [MomTransform.from_dict(_load_json_file(p)) for p in (args.transform or [])]
    except (TypeError, ValueError) as e:
        raise InputError(f"invalid workload spec or transform: {e}") from None
    if args.seed_given:
        spec = WorkloadSpec.from_dict({**spec.to_dict(), "rng_seed": int(args.seed)})
    batches = _parse_batches(args.batches or "1:256")
    fmt = args.format or "csv"
    out = Path(args.out or ".")
    specs = [spec]
    for t in transforms:
        try:
            specs.append(apply_mom(spec, t))
        except ValueError as e:
            raise InputError(f"transform {t.name}: {e}") from None
    for s in specs:
        series = generate_profile(s, batches)
        path = out / f"{s.model}_{s.method}.{fmt}"
        _write(path, serialize_profile(series, fmt))
        largest = series.largest_measured_batch
        print(f"{path}: {len(series.points)} batches, largest non-OOM batch {largest}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# crossover
# ---------------------------------------------------------------------------

def _sweep_rows(laws, scale, limit, crossover):
    sizes = sorted({1, limit, *range(1, limit + 1, max(1, limit // 10))}
                   | ({crossover - 1, crossover} - {0} if crossover else set()))
    rows = []
    for n in sizes:
        b, m = scale(laws, n)
        v = verdict(b, m)
        rows.append((n, v.score, v.point, v.beneficial, v.by_necessity))
    return rows


def cmd_crossover(args) -> int:
    if not args.laws:
        raise InputError("crossover needs --laws")
    cfg = _load_json_file(args.laws)
    mode = args.mode or cfg.get("mode")
    if mode not in ("depth", "width", "gpus"):
        raise InputError("--mode must be depth, width or gpus")
    try:
        if mode in ("depth", "width"):
            law_cls = DepthLaw if mode == "depth" else WidthLaw
            laws = (law_cls(**cfg["baseline"]), law_cls(**cfg["mom"]))
            limit = int(args.max or cfg.get(f"max_{mode}", 1000 if mode == "depth" else 10000))
        else:
            baseline = CostModel.from_dict(cfg["baseline"])
            mom = CostModel.from_dict(cfg["mom"])
            law = MultiGpuLaw(**cfg["law"])
            limit = int(args.max or cfg.get("max_gpus", law.gpu_count))
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"invalid law config: {e}") from None

    try:
        if mode in ("depth", "width"):
            search = crossover_depth if mode == "depth" else crossover_width
            scale = scale_depth if mode == "depth" else scale_width
            result = search(laws, limit)
            if result.smallest is None:
                print(f"no beneficial {mode} up to {limit}")
            else:
                root = f" (continuous root {result.continuous:.4f})" if result.continuous is not None else ""
                print(f"smallest beneficial {mode}: {result.smallest}{root}")
            print(f"{mode:>8} {'score':>10} {'point':>10} beneficial")
            for n, score, point, ben, nec in _sweep_rows(laws, scale, result.search_limit, result.smallest):
                print(f"{n:>8} {score:10.4f} {point:10.4f} {'YES' if ben else 'no'}{' (necessity)' if nec else ''}")
        else:
            rows = sweep_gpus(baseline, mom, law, limit)
            flip = first_beneficial_gpu_count(rows)
            root = gpu_flip_point(baseline, mom, law)
            if flip is None:
                print(f"no beneficial GPU count up to {limit}")
            else:
                extra = f" (continuous flip {root:.4f})" if root is not None else ""
                print(f"MOM becomes beneficial at {flip} GPUs{extra}")
            print(f"{'gpus':>5} {'delta(s)':>9} {'point':>10} {'norm.tput':>10} beneficial")
            for r in rows:
                nt = r.verdict.normalized_max_throughput
                print(f"{r.gpus:>5} {r.delta:9.4f} {r.point:10.4f} {nt if nt is not None else float('nan'):10.4f} "
                      f"{'YES' if r.verdict.beneficial else 'no'}")
    except (InfeasibleError, ConsistencyError, UndefinedPointError) as e:
        _err(str(e))
        return EXIT_ANALYSIS
    return EXIT_OK


# ---------------------------------------------------------------------------
# plotdata
# ---------------------------------------------------------------------------

def plot_rows(model: CostModel, series=None) -> list[dict]:
    """Flat rows (series, method, batch, measured, predicted, is_max) for one method."""
    rows = []
    if series is not None:
        for p in series.measured:
            rows.append({"series": "memory_gb", "method": model.method_id, "batch": p.batch_size,
                         "measured": p.peak_memory, "predicted": model.memory(p.batch_size), "is_max": False})
        for p in series.measured:
            rows.append({"series": "latency_s", "method": model.method_id, "batch": p.batch_size,
                         "measured": p.batch_latency, "predicted": model.latency(p.batch_size),
                         "is_max": False})
    if not is_infeasible(model):
        pred = predict_max(model)
        for b in range(1, pred.max_batch_integer + 1):
            rows.append({"series": "throughput", "method": model.method_id, "batch": b, "measured": None,
                         "predicted": throughput_at(model, b), "is_max": b == pred.max_batch_integer})
    return rows


def cmd_plotdata(args) -> int:
    if not args.model:
        raise InputError("plotdata needs at least one --model")
    config = _fit_config(args)
    profiles = {}
    for path in args.profile or []:
        s = _read_series(path)
        profiles[s.method_id] = s
    rows = []
    try:
        for path in args.model:
            model, _ = _load_model_or_profile(path, config)
            rows.extend(plot_rows(model, profiles.get(model.method_id)))
    except FitError as e:
        _err(str(e))
        return EXIT_ANALYSIS
    fmt = args.format or "csv"
    out = Path(args.out or ".")
    if fmt == "json":
        _write(out / "plotdata.json", json.dumps(rows, indent=1) + "\n")
    else:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["series", "method", "batch", "measured", "predicted", "is_max"],
                           lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        _write(out / "plotdata.csv", buf.getvalue())
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with default values for any flag")
    common.add_argument("--seed", type=int, help="RNG seed for fit sampling / simulation noise")
    common.add_argument("--sample-fraction", type=float, help="fraction of points used per fit (default 0.2)")
    common.add_argument("--knee-r2", type=float, help="r^2 a latency suffix must reach (default 0.99)")
    common.add_argument("--min-points", type=int, help="minimum points for a fit (default 4)")
    common.add_argument("--frag-original", type=float, help="effective memory ratio of the baseline")
    common.add_argument("--frag-mom", type=float, help="effective memory ratio of the MOMs")
    common.add_argument("--format", choices=["csv", "json"], help="output file format")
    common.add_argument("--out", help="output directory")

    p = argparse.ArgumentParser(prog="papaya", description=__doc__.split("\n\n")[0].strip())
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", parents=[common], help="fit memory/latency models to profiles")
    f.add_argument("profiles", nargs="+")
    f.set_defaults(func=cmd_fit)

    a = sub.add_parser("advise", parents=[common], help="decide whether MOMs raise max throughput")
    a.add_argument("--baseline", help="baseline model JSON or profile")
    a.add_argument("--mom", action="append", default=[], help="MOM model JSON or profile (repeatable)")
    a.set_defaults(func=cmd_advise)

    s = sub.add_parser("simulate", parents=[common], help="generate synthetic profiles")
    s.add_argument("--spec", help="WorkloadSpec JSON")
    s.add_argument("--transform", action="append", default=[], help="MomTransform JSON (repeatable)")
    s.add_argument("--batches", help="batch list, e.g. '4:128:4' or '1,2,4,8'")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("crossover", parents=[common], help="find the size where a MOM starts to pay off")
    c.add_argument("--laws", help="law config JSON")
    c.add_argument("--mode", choices=["depth", "width", "gpus"])
    c.add_argument("--max", type=int, help="largest depth/width/GPU count to search")
    c.set_defaults(func=cmd_crossover)

    d = sub.add_parser("plotdata", parents=[common], help="emit measured vs predicted curves")
    d.add_argument("--model", action="append", default=[], help="model JSON or profile (repeatable)")
    d.add_argument("--profile", action="append", default=[], help="profile with measurements (repeatable)")
    d.set_defaults(func=cmd_plotdata)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.seed_given = args.seed is not None
    try:
        _resolve(args)
        return args.func(args)
    except InputError as e:
        _err(str(e))
        return EXIT_INPUT
    except (InfeasibleError, ConsistencyError) as e:
        _err(str(e))
        return EXIT_ANALYSIS
    except PapayaError as e:
        _err(str(e))
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
