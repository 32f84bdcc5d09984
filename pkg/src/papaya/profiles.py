"""
Profile and cost-model data types, plus profile file I/O.

Memory is held in GB (1e9 bytes) and latency in seconds. Files store
integer bytes and milliseconds; the conversion happens only at the file
boundary.

CSV layout (one series per file)::

    # model=bert method=original device_memory_bytes=16000000000
    batch_size,peak_memory_bytes,latency_ms,oom
    16,6000000000,660.0,false
    512,,,true
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import IO, Optional, Union

from .errors import ProfileFormatError

GB = 1e9
MS = 1e-3

CSV_COLUMNS = ("batch_size", "peak_memory_bytes", "latency_ms", "oom")


@dataclass(frozen=True)
class ProfilePoint:
    """One measured training step: batch size, peak memory (GB), latency (s)."""

    batch_size: int
    peak_memory: Optional[float] = None
    batch_latency: Optional[float] = None
    oom: bool = False

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.oom:
            if self.peak_memory is None or not self.peak_memory > 0:
                raise ValueError(f"batch {self.batch_size}: peak memory must be positive")
            if self.batch_latency is None or not self.batch_latency > 0:
                raise ValueError(f"batch {self.batch_size}: latency must be positive")


@dataclass(frozen=True)
class ProfileSeries:
    """Profile of one (model, method, device) combination."""

    model_id: str
    method_id: str
    device_memory: float
    points: tuple[ProfilePoint, ...]

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if not self.device_memory > 0:
            raise ValueError("device_memory must be positive")
        batches = [p.batch_size for p in self.points]
        for a, b in zip(batches, batches[1:]):
            if b == a:
                raise ValueError(f"duplicate batch size {a}")
            if b < a:
                raise ValueError("points must be sorted by strictly increasing batch size")

    @property
    def measured(self) -> list[ProfilePoint]:
        return [p for p in self.points if not p.oom]

    def memory_points(self) -> list[tuple[int, float]]:
        return [(p.batch_size, p.peak_memory) for p in self.measured]

    def latency_points(self) -> list[tuple[int, float]]:
        return [(p.batch_size, p.batch_latency) for p in self.measured]

    @property
    def largest_measured_batch(self) -> Optional[int]:
        measured = self.measured
        return measured[-1].batch_size if measured else None


@dataclass(frozen=True)
class LinearFit:
    """Result of an ordinary least squares fit y = slope * x + intercept."""

    slope: float
    intercept: float
    r_squared: float
    pearson_r: float
    fit_range: tuple[int, int]
    n_points_used: int

    def __call__(self, x):
        return self.slope * x + self.intercept


@dataclass(frozen=True)
class MemoryModel:
    """Peak memory m(x) = alpha * x + beta, in GB."""

    alpha: float
    beta: float
    fit: Optional[LinearFit] = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.beta < 0:
            raise ValueError(f"beta must be non-negative, got {self.beta}")

    def __call__(self, batch):
        return self.alpha * batch + self.beta


@dataclass(frozen=True)
class LatencyModel:
    """Batch latency t(x) = gamma * x + delta, in seconds."""

    gamma: float
    delta: float
    fit: Optional[LinearFit] = None

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.delta < 0:
            raise ValueError(f"delta must be non-negative, got {self.delta}")

    def __call__(self, batch):
        return self.gamma * batch + self.delta


@dataclass(frozen=True)
class CostModel:
    """Paired memory and latency models for one method on one device."""

    method_id: str
    memory: MemoryModel
    latency: LatencyModel
    device_memory: float
    model_id: str = ""
    knee_batch: Optional[int] = None

    @classmethod
    def from_coefficients(cls, alpha, beta, gamma, delta, device_memory,
                          method_id="original", model_id=""):
        return cls(method_id, MemoryModel(alpha, beta), LatencyModel(gamma, delta),
                   device_memory, model_id)

    @property
    def alpha(self) -> float:
        return self.memory.alpha

    @property
    def beta(self) -> float:
        return self.memory.beta

    @property
    def gamma(self) -> float:
        return self.latency.gamma

    @property
    def delta(self) -> float:
        return self.latency.delta

    @property
    def infeasible(self) -> bool:
        """True when a single record does not fit in device memory."""
        return round((self.alpha + self.beta) * GB) > round(self.device_memory * GB)

    def to_dict(self) -> dict:
        d = {
            "model": self.model_id,
            "method": self.method_id,
            "device_memory_bytes": int(round(self.device_memory * GB)),
            "alpha_gb": self.alpha,
            "beta_gb": self.beta,
            "gamma_s": self.gamma,
            "delta_s": self.delta,
            "infeasible_at_batch_1": self.infeasible,
            "knee_batch": self.knee_batch,
        }
        for name, f in (("memory_fit", self.memory.fit), ("latency_fit", self.latency.fit)):
            if f is not None:
                d[name] = {
                    "r_squared": f.r_squared,
                    "pearson_r": f.pearson_r,
                    "fit_range": list(f.fit_range),
                    "n_points_used": f.n_points_used,
                }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CostModel":
        def _fit(key, slope, intercept):
            f = d.get(key)
            if not f:
                return None
            return LinearFit(slope, intercept, f["r_squared"], f["pearson_r"],
                             tuple(f["fit_range"]), f["n_points_used"])

        a, b, g, dl = d["alpha_gb"], d["beta_gb"], d["gamma_s"], d["delta_s"]
        return cls(
            method_id=d.get("method", "original"),
            memory=MemoryModel(a, b, _fit("memory_fit", a, b)),
            latency=LatencyModel(g, dl, _fit("latency_fit", g, dl)),
            device_memory=d["device_memory_bytes"] / GB,
            model_id=d.get("model", ""),
            knee_batch=d.get("knee_batch"),
        )


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

Source = Union[bytes, str, IO]


def _read_text(source: Source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def _parse_bool(text, line):
    t = text.strip().lower()
    if t in ("true", "1", "yes"):
        return True
    if t in ("false", "0", "no", ""):
        return False
    raise ProfileFormatError(f"invalid oom flag {text!r}", line)


def _make_point(batch, mem_bytes, lat_ms, oom, line) -> ProfilePoint:
    try:
        batch = int(batch)
    except (TypeError, ValueError):
        raise ProfileFormatError(f"invalid batch size {batch!r}", line) from None
    if batch < 1:
        raise ProfileFormatError(f"batch size must be >= 1, got {batch}", line)
    if oom:
        return ProfilePoint(batch, oom=True)
    if mem_bytes in (None, "") or lat_ms in (None, ""):
        raise ProfileFormatError("memory and latency are required for non-OOM rows", line)
    try:
        try:
            mem = int(mem_bytes)
        except ValueError:
            mem = float(mem_bytes)
        lat = float(lat_ms)
    except (TypeError, ValueError):
        raise ProfileFormatError("non-numeric memory or latency", line) from None
    if not (mem > 0 and math.isfinite(mem)):
        raise ProfileFormatError(f"peak memory must be positive, got {mem_bytes}", line)
    if not (lat > 0 and math.isfinite(lat)):
        raise ProfileFormatError(f"latency must be positive, got {lat_ms}", line)
    return ProfilePoint(batch, mem / GB, lat * MS, False)


def _build_series(model, method, device_bytes, rows) -> ProfileSeries:
    """rows: list of (line, ProfilePoint)."""
    seen = {}
    for line, p in rows:
        if p.batch_size in seen:
            raise ProfileFormatError(
                f"duplicate batch size {p.batch_size} (first seen on line {seen[p.batch_size]})", line)
        seen[p.batch_size] = line
    points = sorted((p for _, p in rows), key=lambda p: p.batch_size)
    return ProfileSeries(model, method, device_bytes / GB, tuple(points))


def _parse_csv(text: str) -> ProfileSeries:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ProfileFormatError("missing '# model=... method=... device_memory_bytes=...' header", 1)
    meta = {}
    for tok in lines[0].lstrip("#").split():
        if "=" not in tok:
            raise ProfileFormatError(f"malformed header token {tok!r}", 1)
        k, v = tok.split("=", 1)
        meta[k] = v
    if "device_memory_bytes" not in meta:
        raise ProfileFormatError("missing device_memory_bytes in header", 1)
    try:
        device = int(meta["device_memory_bytes"])
    except ValueError:
        raise ProfileFormatError("device_memory_bytes must be an integer", 1) from None
    if device <= 0:
        raise ProfileFormatError("device_memory_bytes must be positive", 1)

    reader = csv.reader(lines[1:])
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != CSV_COLUMNS:
        raise ProfileFormatError(f"expected column header {','.join(CSV_COLUMNS)}", 2)
    rows = []
    for i, row in enumerate(reader, start=3):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 4:
            raise ProfileFormatError(f"expected 4 fields, got {len(row)}", i)
        b, m, t, o = (c.strip() for c in row)
        rows.append((i, _make_point(b, m, t, _parse_bool(o, i), i)))
    return _build_series(meta.get("model", ""), meta.get("method", "original"), device, rows)


def _parse_json(text: str) -> ProfileSeries:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProfileFormatError(f"invalid JSON: {e.msg}", e.lineno) from None
    if not isinstance(obj, dict):
        raise ProfileFormatError("top-level JSON value must be an object")
    if "device_memory_bytes" not in obj:
        raise ProfileFormatError("missing device_memory_bytes")
    device = obj["device_memory_bytes"]
    if not isinstance(device, int) or device <= 0:
        raise ProfileFormatError("device_memory_bytes must be a positive integer")
    rows = []
    for i, p in enumerate(obj.get("points", [])):
        oom = bool(p.get("oom", False))
        rows.append((None, _make_point(p.get("batch_size"), p.get("peak_memory_bytes"),
                                       p.get("latency_ms"), oom, None)))
    try:
        return _build_series(obj.get("model", ""), obj.get("method", "original"), device, rows)
    except ProfileFormatError:
        raise
    except ValueError as e:
        raise ProfileFormatError(str(e)) from None


def parse_profile(source: Source, format: str = "csv") -> ProfileSeries:
    """Parse a CSV or JSON profile into a validated ProfileSeries."""
    text = _read_text(source)
    if format == "csv":
        return _parse_csv(text)
    if format == "json":
        return _parse_json(text)
    raise ValueError(f"unknown profile format {format!r}")


def load_profile(path) -> ProfileSeries:
    path = str(path)
    fmt = "json" if path.endswith(".json") else "csv"
    with open(path, "rb") as fh:
        return parse_profile(fh, fmt)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _mem_bytes(gb: float) -> int:
    return int(round(gb * GB))


def _lat_ms(seconds: float) -> str:
    return repr(seconds / MS)


def series_to_csv(series: ProfileSeries) -> str:
    buf = io.StringIO()
    buf.write(f"# model={series.model_id or 'unknown'} method={series.method_id} "
              f"device_memory_bytes={_mem_bytes(series.device_memory)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for p in series.points:
        if p.oom:
            writer.writerow([p.batch_size, "", "", "true"])
        else:
            writer.writerow([p.batch_size, _mem_bytes(p.peak_memory), _lat_ms(p.batch_latency), "false"])
    return buf.getvalue()


def series_to_json(series: ProfileSeries) -> str:
    points = []
    for p in series.points:
        if p.oom:
            points.append({"batch_size": p.batch_size, "peak_memory_bytes": None,
                           "latency_ms": None, "oom": True})
        else:
            points.append({"batch_size": p.batch_size,
                           "peak_memory_bytes": _mem_bytes(p.peak_memory),
                           "latency_ms": p.batch_latency / MS, "oom": False})
    obj = {"model": series.model_id or "unknown", "method": series.method_id,
           "device_memory_bytes": _mem_bytes(series.device_memory), "points": points}
    return json.dumps(obj, indent=2) + "\n"


def serialize_profile(series: ProfileSeries, format: str = "csv") -> str:
    if format == "csv":
        return series_to_csv(series)
    if format == "json":
        return series_to_json(series)
    raise ValueError(f"unknown profile format {format!r}")


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def validate_series(series: ProfileSeries, min_points: int = 4) -> list[str]:
    """Return human-readable warnings about a parsed series (never raises)."""
    warnings = []
    measured = series.measured
    if len(measured) < min_points:
        warnings.append(
            f"insufficient points for robust fit: {len(measured)} measured, {min_points} recommended")
    drops = [(a, b) for a, b in zip(measured, measured[1:]) if b.peak_memory < a.peak_memory]
    if drops:
        a, b = drops[0]
        more = f" (and {len(drops) - 1} more)" if len(drops) > 1 else ""
        warnings.append(f"non-monotone peak memory: batch {b.batch_size} uses less memory than "
                        f"batch {a.batch_size}{more}")
    for p in measured:
        if p.peak_memory > series.device_memory:
            warnings.append(
                f"batch {p.batch_size}: peak memory {p.peak_memory:.3f} GB exceeds device memory "
                f"{series.device_memory:.3f} GB")
    return warnings
