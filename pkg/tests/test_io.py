import numpy as np
import pytest

from tensorlda import io


def test_tensor_roundtrip(tmp_path, rng):
    X = rng.standard_normal((3, 4, 2))
    io.write_tensor(tmp_path / "x.tlda", X)
    Y, kind = io.read(tmp_path / "x.tlda")
    assert kind == "f64"
    assert np.array_equal(X, Y)


def test_header_and_column_major_payload(tmp_path):
    X = np.arange(6.0).reshape(2, 3)
    io.write_tensor(tmp_path / "x.tlda", X)
    raw = (tmp_path / "x.tlda").read_bytes()
    header, payload = raw.split(b"\n", 1)
    assert header == b"TLDA1 2 2 3 f64"
    assert np.array_equal(np.frombuffer(payload, "<f8"), X.ravel(order="F"))


def test_mask_roundtrip_bitwise(tmp_path, rng):
    S = rng.random((4, 3, 5)) < 0.5
    io.write_mask(tmp_path / "s.tlda", S)
    T = io.read_mask(tmp_path / "s.tlda")
    assert T.dtype == bool and np.array_equal(S, T)
    io.write_mask(tmp_path / "t.tlda", T)
    assert (tmp_path / "s.tlda").read_bytes() == (tmp_path / "t.tlda").read_bytes()


@pytest.mark.parametrize(
    "content",
    [b"", b"NOPE 1 2 f64\n" + bytes(16), b"TLDA1 1 2 f32\n" + bytes(8), b"TLDA1 1 2 f64\n" + bytes(15), b"TLDA1 x f64\n"],
)
def test_malformed(tmp_path, content):
    p = tmp_path / "bad.tlda"
    p.write_bytes(content)
    with pytest.raises(io.FormatError):
        io.read(p)


def test_kind_mismatch_and_bad_values(tmp_path):
    io.write_mask(tmp_path / "s.tlda", np.ones((2, 2)))
    with pytest.raises(io.FormatError):
        io.read_tensor(tmp_path / "s.tlda")
    with pytest.raises(io.FormatError):
        io.write_tensor(tmp_path / "n.tlda", np.array([np.nan]))
    with pytest.raises(io.FormatError):
        io.write_mask(tmp_path / "m.tlda", np.array([2]))
    (tmp_path / "m.tlda").write_bytes(b"TLDA1 1 2 u8\n\x00\x02")
    with pytest.raises(io.FormatError):
        io.read_mask(tmp_path / "m.tlda")


def test_kv_roundtrip(tmp_path):
    io.write_kv(tmp_path / "a.txt", {"dims": (4, 5), "eps": 0.3, "name": "x"})
    assert io.read_kv(tmp_path / "a.txt") == {"dims": "4,5", "eps": "0.3", "name": "x"}
    (tmp_path / "b.txt").write_text("# comment\nk = v  # trailing\n\n")
    assert io.read_kv(tmp_path / "b.txt") == {"k": "v"}
    (tmp_path / "c.txt").write_text("novalue\n")
    with pytest.raises(io.FormatError):
        io.read_kv(tmp_path / "c.txt")
