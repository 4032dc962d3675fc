import numpy as np
import pytest

from visifilter.sim import metrics
from visifilter.trace_io import (
    _fmt,
    csv_columns,
    read_csv,
    read_metrics,
    write_csv,
    write_metrics,
)


def test_float_format_round_trips_doubles():
    # 17 significant digits round-trip any IEEE double.
    for x in (0.1, 1.0 / 3.0, np.pi, 1e-300, -2.5e17, 0.0):
        assert float(_fmt(x)) == x


def test_round_trip_is_bit_exact(example3_run, tmp_path):
    trace, _ = example3_run
    path = tmp_path / "trace.csv"
    header = write_csv(trace, str(path))
    cols = csv_columns(trace)
    assert header == list(cols)
    back = read_csv(str(path))
    assert list(back) == header
    for name in header:
        ours, theirs = cols[name], back[name]
        both_nan = np.isnan(ours) & np.isnan(theirs)
        assert np.all(both_nan | (ours == theirs)), name


def test_angles_wrap_only_at_the_boundary(example3_run, tmp_path):
    trace, _ = example3_run
    raw = trace.columns()["qtheta"]
    wrapped = csv_columns(trace)["qtheta"]
    assert np.all(wrapped > -np.pi) and np.all(wrapped <= np.pi)
    # The in-memory trajectory is continuous, so it must leave the principal
    # interval at some point on a full circle; wrapping happens only on write.
    assert np.any(np.abs(raw) > np.pi)
    assert np.allclose(np.cos(raw), np.cos(wrapped)) and np.allclose(np.sin(raw), np.sin(wrapped))


def test_int_columns_have_no_decimal_point(example3_run, tmp_path):
    trace, _ = example3_run
    path = tmp_path / "trace.csv"
    header = write_csv(trace, str(path))
    lines = path.read_text().splitlines()
    event_j, iters_j = header.index("event"), header.index("iters")
    for line in lines[1:]:
        cells = line.split(",")
        assert "." not in cells[event_j]
        assert "." not in cells[iters_j]


def test_read_csv_rejects_bad_files(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(ValueError, match="empty trace file"):
        read_csv(str(empty))
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("a,b\n1.0,2.0\n3.0\n")
    with pytest.raises(ValueError, match="ragged row"):
        read_csv(str(ragged))


def test_metrics_replay_from_file(example3_run, tmp_path):
    # The replay contract: metrics recomputed from the written file equal the
    # metrics written at run time, not just approximately.
    trace, _ = example3_run
    csv_path, json_path = tmp_path / "trace.csv", tmp_path / "metrics.json"
    write_csv(trace, str(csv_path))
    computed = metrics(csv_columns(trace), trace.dt, trace.eps_num)
    write_metrics(computed, str(json_path))
    replayed = metrics(read_csv(str(csv_path)), trace.dt, trace.eps_num)
    assert replayed == read_metrics(str(json_path))
