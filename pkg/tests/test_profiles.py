import io
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from papaya import (CostModel, ProfileFormatError, ProfilePoint, ProfileSeries, parse_profile,
                    serialize_profile, validate_series)
from papaya.profiles import GB

HEADER = "# model=resnet method=original device_memory_bytes=16000000000\n" \
         "batch_size,peak_memory_bytes,latency_ms,oom\n"


def test_parse_two_rows():
    text = HEADER + "8,4000000000,580.0,false\n16,6000000000,660.0,false\n"
    s = parse_profile(text)
    assert s.model_id == "resnet" and s.method_id == "original"
    assert s.device_memory == 16.0
    assert [p.batch_size for p in s.points] == [8, 16]
    assert s.points[1].peak_memory == 6.0
    assert s.points[1].batch_latency == pytest.approx(0.66)


def test_parse_sorts_rows():
    s = parse_profile(HEADER + "16,6000000000,660.0,false\n8,4000000000,580.0,false\n")
    assert [p.batch_size for p in s.points] == [8, 16]


def test_parse_accepts_bytes_stream():
    data = (HEADER + "8,4000000000,580.0,false\n").encode()
    assert len(parse_profile(io.BytesIO(data)).points) == 1


def test_oom_row():
    s = parse_profile(HEADER + "8,4000000000,580.0,false\n512,,,true\n")
    p = s.points[-1]
    assert p.oom and p.peak_memory is None and p.batch_latency is None
    assert len(s.measured) == 1


@pytest.mark.parametrize("body, needle", [
    ("8,4000000000,580.0,false\n8,4100000000,590.0,false\n", "duplicate"),
    ("8,0,580.0,false\n", "positive"),
    ("8,4000000000,-1,false\n", "positive"),
    ("8,4000000000\n", "line 3"),
    ("x,4000000000,580.0,false\n", "line 3"),
    ("8,4000000000,580.0,maybe\n", "line 3"),
    ("0,4000000000,580.0,false\n", "line 3"),
])
def test_malformed_rows(body, needle):
    with pytest.raises(ProfileFormatError, match=needle):
        parse_profile(HEADER + body)


def test_error_reports_line_number():
    with pytest.raises(ProfileFormatError) as info:
        parse_profile(HEADER + "8,4000000000,580.0,false\n16,abc,660.0,false\n")
    assert info.value.line == 4


def test_missing_device_memory_header():
    with pytest.raises(ProfileFormatError, match="device_memory"):
        parse_profile("# model=a method=b\nbatch_size,peak_memory_bytes,latency_ms,oom\n8,1,1,false\n")


def test_json_format():
    doc = {"model": "bert", "method": "ckpt", "device_memory_bytes": 16_000_000_000,
           "points": [{"batch_size": 4, "peak_memory_bytes": 3_000_000_000, "latency_ms": 540.0, "oom": False},
                      {"batch_size": 600, "oom": True}]}
    s = parse_profile(json.dumps(doc), format="json")
    assert s.method_id == "ckpt" and s.points[-1].oom
    assert parse_profile(serialize_profile(s, "json"), format="json") == s


def test_json_missing_device_memory():
    with pytest.raises(ProfileFormatError, match="device_memory"):
        parse_profile(json.dumps({"model": "a", "method": "b", "points": []}), format="json")


def test_unknown_format():
    with pytest.raises(ValueError):
        parse_profile(HEADER, format="xml")


def test_series_rejects_unsorted_points():
    with pytest.raises(ValueError):
        ProfileSeries("m", "o", 16.0, (ProfilePoint(16, 1.0, 0.1), ProfilePoint(8, 1.0, 0.1)))


def test_point_invariants():
    with pytest.raises(ValueError):
        ProfilePoint(0, 1.0, 0.1)
    with pytest.raises(ValueError):
        ProfilePoint(4, None, 0.1)


def _series(mems, device=16.0):
    pts = tuple(ProfilePoint(8 * (i + 1), m, 0.5 + 0.01 * i) for i, m in enumerate(mems))
    return ProfileSeries("m", "original", device, pts)


@pytest.mark.parametrize("mems, expected", [
    ([2.0, 3.0], ["insufficient points for robust fit"]),
    ([2.0, 3.0, 2.5, 4.0, 5.0], ["non-monotone"]),
    ([2.0 + 0.8 * i for i in range(10)], []),
    ([2.0, 3.0, 4.0, 17.0], ["exceeds device memory"]),
])
def test_validate_series(mems, expected):
    warnings = validate_series(_series(mems))
    assert len(warnings) == len(expected)
    for w, e in zip(warnings, expected):
        assert e in w


def test_cost_model_roundtrip_and_infeasible():
    m = CostModel.from_coefficients(0.1, 17.0, 0.01, 0.5, 16.0, "original", "gpt")
    assert m.infeasible
    d = m.to_dict()
    assert d["infeasible_at_batch_1"] is True
    assert CostModel.from_dict(json.loads(json.dumps(d))) == m


point_rows = st.lists(
    st.tuples(st.integers(1, 4096), st.integers(1, 15_999_999_999),
              st.floats(0.001, 1e6, allow_nan=False, allow_infinity=False), st.booleans()),
    min_size=1, max_size=30, unique_by=lambda r: r[0])


@settings(max_examples=200, deadline=None)
@given(rows=point_rows, fmt=st.sampled_from(["csv", "json"]))
def test_roundtrip(rows, fmt):
    pts = []
    for b, mem, lat_ms, oom in sorted(rows):
        pts.append(ProfilePoint(b, oom=True) if oom else ProfilePoint(b, mem / GB, lat_ms * 1e-3))
    series = ProfileSeries("model", "method", 16.0, tuple(pts))
    once = parse_profile(serialize_profile(series, fmt), format=fmt)
    twice = parse_profile(serialize_profile(once, fmt), format=fmt)
    assert once == twice
    assert [p.batch_size for p in once.points] == [p.batch_size for p in series.points]
    assert serialize_profile(once, fmt) == serialize_profile(twice, fmt)
