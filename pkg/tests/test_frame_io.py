import numpy as np
import pytest

from mrpart.frame_io import (
    FrameFormatError,
    LumaFrame,
    load_frame,
    pad_to_ctu_grid,
    save_pgm,
    synth_frame,
)


def test_load_pgm_2x2(tmp_path):
    p = tmp_path / "a.pgm"
    p.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 255, 128, 64]))
    f = load_frame(p)
    assert f.samples.ravel().tolist() == [0, 255, 128, 64]
    assert (f.width, f.height, f.origin_width, f.origin_height) == (2, 2, 2, 2)


def test_load_pgm_with_comment(tmp_path):
    p = tmp_path / "c.pgm"
    p.write_bytes(b"P5\n# made by hand\n3 1\n255\n" + bytes([1, 2, 3]))
    assert load_frame(p).samples.tolist() == [[1, 2, 3]]


def test_pgm_roundtrip_256(tmp_path):
    f = synth_frame("noise", 256, 256, 3)
    save_pgm(f, tmp_path / "n.pgm")
    g = load_frame(tmp_path / "n.pgm")
    assert g == f
    assert (g.origin_width, g.origin_height) == (256, 256)


@pytest.mark.parametrize(
    "payload",
    [b"P2\n2 2\n255\n0 0 0 0", b"P5\n2 x\n255\n0000", b"P5\n2 2\n65535\n" + bytes(8), b"P5\n2"],
)
def test_malformed_pgm(tmp_path, payload):
    p = tmp_path / "bad.pgm"
    p.write_bytes(payload)
    with pytest.raises(FrameFormatError):
        load_frame(p)


def test_truncated_pgm(tmp_path):
    p = tmp_path / "t.pgm"
    p.write_bytes(b"P5\n4 4\n255\n" + bytes(15))
    with pytest.raises(FrameFormatError, match="truncated"):
        load_frame(p)


def test_raw8_truncation(tmp_path):
    p = tmp_path / "r.raw"
    p.write_bytes(bytes(255))
    with pytest.raises(FrameFormatError):
        load_frame(p, "raw8", 16, 16)
    p.write_bytes(bytes(range(256)))
    f = load_frame(p, "raw8", 16, 16)
    assert f.samples[15, 15] == 255


def test_raw8_needs_dimensions(tmp_path):
    p = tmp_path / "r.raw"
    p.write_bytes(bytes(16))
    with pytest.raises(ValueError):
        load_frame(p, "raw8")


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_frame(tmp_path / "nope.pgm")


def test_synth_flat():
    assert np.all(synth_frame("flat", 16, 16, 99).samples == 128)


def test_synth_hgrad_endpoints():
    f = synth_frame("hgrad", 256, 1)
    assert f.samples[0, 0] == 0 and f.samples[0, 255] == 255
    assert np.all(np.diff(f.samples[0].astype(int)) >= 0)


def test_synth_checker_tiles():
    f = synth_frame("checker", 32, 32)
    assert f.samples[0, 0] == 0 and f.samples[0, 8] == 255 and f.samples[8, 8] == 0
    assert np.all(f.samples[:8, :8] == 0)


@pytest.mark.parametrize("kind", ["noise", "smooth", "pink", "leaves", "fineleaves"])
def test_synth_deterministic(kind):
    a = synth_frame(kind, 64, 64, 7)
    b = synth_frame(kind, 64, 64, 7)
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, synth_frame(kind, 64, 64, 8).samples)


@pytest.mark.parametrize("w,h", [(0, 16), (16, 0)])
def test_synth_rejects_zero(w, h):
    with pytest.raises(ValueError):
        synth_frame("flat", w, h)


def test_synth_rejects_unknown_kind():
    with pytest.raises(ValueError):
        synth_frame("stripes", 8, 8)


def test_pad_250_to_256():
    f = synth_frame("noise", 250, 250, 1)
    p = pad_to_ctu_grid(f, 128)
    assert (p.width, p.height, p.origin_width, p.origin_height) == (256, 256, 250, 250)
    assert np.array_equal(p.samples[:250, :250], f.samples)
    # edge replication
    assert np.array_equal(p.samples[:250, 255], f.samples[:, 249])
    assert np.array_equal(p.samples[255, :250], f.samples[249, :])


def test_pad_identity():
    f = synth_frame("noise", 256, 256, 1)
    assert pad_to_ctu_grid(f, 128) == f


def test_pad_single_pixel():
    f = LumaFrame(np.array([[42]], dtype=np.uint8))
    p = pad_to_ctu_grid(f, 16)
    assert p.samples.shape == (16, 16) and np.all(p.samples == 42)
    assert (p.origin_width, p.origin_height) == (1, 1)


@pytest.mark.parametrize("ctu", [16, 32, 64, 128])
def test_pad_idempotent(ctu):
    f = synth_frame("noise", 37, 91, 5)
    once = pad_to_ctu_grid(f, ctu)
    assert pad_to_ctu_grid(once, ctu) == once
    assert once.width % ctu == 0 and once.height % ctu == 0


def test_pad_rejects_ctu():
    with pytest.raises(ValueError):
        pad_to_ctu_grid(synth_frame("flat", 8, 8), 8)


def test_frame_is_immutable():
    f = synth_frame("flat", 8, 8)
    with pytest.raises(ValueError):
        f.samples[0, 0] = 1
