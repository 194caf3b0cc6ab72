import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from photongun import tsfile
from photongun.errors import TimestampFormatError
from photongun.simulator import PHOTON_DTYPE


def make(ts, origins=None, channels=None):
    s = np.zeros(len(ts), dtype=PHOTON_DTYPE)
    s["t"] = ts
    if origins is not None:
        s["origin"] = origins
    if channels is not None:
        s["channel"] = channels
    return s


def test_header_layout():
    data = tsfile.to_bytes(make([5, 7], channels=[0, 1]))
    assert len(data) == 16 + 2 * 16
    assert struct.unpack("<4sHHII", data[:16]) == (b"PGUN", 1, 2, 1, 0)
    t, origin, channel = struct.unpack_from("<QBB6x", data, 16 + 16)
    assert (t, origin, channel) == (7, 0, 1)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 2**64 - 1), st.integers(0, 1), st.integers(0, 255)), max_size=50))
def test_binary_and_csv_roundtrip(tmp_path_factory, rows):
    rows = sorted(rows)
    s = make([r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows])
    d = tmp_path_factory.mktemp("rt")
    tsfile.write_binary(d / "a.pgun", s)
    b = tsfile.read_binary(d / "a.pgun")
    tsfile.write_csv(d / "a.csv", b)
    c = tsfile.read_csv(d / "a.csv")
    tsfile.write_any(d / "b.pgun", c)
    assert b.tobytes() == s.tobytes()
    assert c.tobytes() == s.tobytes()
    assert (d / "b.pgun").read_bytes() == (d / "a.pgun").read_bytes()


def test_csv_format(tmp_path):
    tsfile.write_csv(tmp_path / "s.csv", make([1, 2], [0, 1]))
    assert (tmp_path / "s.csv").read_text() == "t_ps,origin,channel\n1,molecule,0\n2,background,0\n"
    (tmp_path / "n.csv").write_text("t_ps,origin,channel\n3,1,2\n")
    assert tsfile.read_any(tmp_path / "n.csv")[0].tolist() == (3, 1, 2)


def test_empty_roundtrip():
    assert tsfile.from_bytes(tsfile.to_bytes(make([]))).size == 0


@pytest.mark.parametrize("mutate,fragment", [
    (lambda d: d[:10], "truncated header"),
    (lambda d: b"XGUN" + d[4:], "bad magic"),
    (lambda d: d[:4] + struct.pack("<H", 9) + d[6:], "unsupported version"),
    (lambda d: d[:-5], "byte offset 48"),
    (lambda d: d[:16 + 8] + b"\x07" + d[16 + 9:], "unknown origin"),
    (lambda d: d[:16] + d[32:48] + d[16:32] + d[48:], "decrease"),
])
def test_corrupt_files_rejected(mutate, fragment):
    data = tsfile.to_bytes(make([1, 2, 3]))
    with pytest.raises(TimestampFormatError, match=fragment):
        tsfile.from_bytes(mutate(data))


def test_truncation_offset_reported():
    data = tsfile.to_bytes(make([1, 2, 3]))
    with pytest.raises(TimestampFormatError) as info:
        tsfile.from_bytes(data[:-1])
    assert info.value.offset == 16 + 2 * 16


@pytest.mark.parametrize("body", ["t,origin,channel\n1,0,0\n", "t_ps,origin,channel\n1,photon,0\n",
                                  "t_ps,origin,channel\nx,0,0\n", "t_ps,origin,channel\n-1,0,0\n",
                                  "t_ps,origin,channel\n1,0\n"])
def test_bad_csv(tmp_path, body):
    (tmp_path / "bad.csv").write_text(body)
    with pytest.raises(TimestampFormatError):
        tsfile.read_csv(tmp_path / "bad.csv")
