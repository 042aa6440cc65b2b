import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mrpart.toy_codec import HEADER_BITS, code_block, dct2d, idct2d, qp_params
from mrpart.frame_io import synth_frame


def direct_dct(block):
    """O(N^2 M^2) orthonormal DCT-II by direct summation."""
    n, m = block.shape
    out = np.zeros((n, m))
    for u in range(n):
        for v in range(m):
            au = math.sqrt(1 / n) if u == 0 else math.sqrt(2 / n)
            av = math.sqrt(1 / m) if v == 0 else math.sqrt(2 / m)
            s = 0.0
            for i in range(n):
                for j in range(m):
                    s += (
                        block[i, j]
                        * math.cos(math.pi * (2 * i + 1) * u / (2 * n))
                        * math.cos(math.pi * (2 * j + 1) * v / (2 * m))
                    )
            out[u, v] = au * av * s
    return out


def reference_code(block, qp):
    """Straight-line re-implementation of the leaf coding pipeline."""
    qstep = 2 ** ((qp - 4) / 6)
    c = direct_dct(block.astype(float) - 128)
    levels = np.zeros(c.shape, dtype=int)
    for idx, v in np.ndenumerate(c):
        levels[idx] = int(math.copysign(math.floor(abs(v) / qstep + 0.5), v))
    deq = levels * qstep
    n, m = block.shape
    rec = np.zeros(block.shape)
    for i in range(n):
        for j in range(m):
            s = 0.0
            for u in range(n):
                for v in range(m):
                    au = math.sqrt(1 / n) if u == 0 else math.sqrt(2 / n)
                    av = math.sqrt(1 / m) if v == 0 else math.sqrt(2 / m)
                    s += (
                        au * av * deq[u, v]
                        * math.cos(math.pi * (2 * i + 1) * u / (2 * n))
                        * math.cos(math.pi * (2 * j + 1) * v / (2 * m))
                    )
            rec[i, j] = min(255, max(0, round(s + 128)))
    dist = int(((block.astype(int) - rec.astype(int)) ** 2).sum())
    bits = 4
    for lv in levels.ravel():
        if lv:
            bits += 2 * int(math.floor(math.log2(abs(lv) + 1))) + 1 + 1
    return dist, bits, rec


def test_qp_params_values():
    assert qp_params(4).qstep == 1.0
    assert qp_params(22).lam == pytest.approx(5.7452, abs=1e-4)
    assert qp_params(37).qstep == pytest.approx(45.2548, abs=1e-4)


@pytest.mark.parametrize("qp", [-1, 52, 2.5, True])
def test_qp_params_range(qp):
    with pytest.raises(ValueError):
        qp_params(qp)


def test_dct_flat_block_is_zero():
    c = dct2d(np.full((8, 8), 128.0) - 128)
    assert np.all(c == 0)


def test_dct_parseval_impulse():
    b = np.zeros((16, 8))
    b[3, 5] = 200.0
    c = dct2d(b)
    assert np.sum(c**2) == pytest.approx(np.sum(b**2), rel=1e-12)


def test_dct_matches_direct_sum():
    b = np.random.default_rng(8).integers(0, 256, (8, 8)).astype(float) - 128
    assert np.max(np.abs(dct2d(b) - direct_dct(b))) < 1e-9


def test_dct_rectangular_matches_direct_sum():
    b = np.random.default_rng(9).integers(0, 256, (4, 16)).astype(float) - 128
    assert np.max(np.abs(dct2d(b) - direct_dct(b))) < 1e-9


@pytest.mark.parametrize("shape", [(4, 4), (8, 32), (64, 16), (128, 128)])
def test_dct_roundtrip(shape):
    b = np.random.default_rng(1).integers(0, 256, shape).astype(float) - 128
    assert np.max(np.abs(idct2d(dct2d(b)) - b)) < 1e-9


@pytest.mark.parametrize("shape", [(3, 4), (4, 6), (256, 4)])
def test_dct_rejects_shape(shape):
    with pytest.raises(ValueError):
        dct2d(np.zeros(shape))


@pytest.mark.parametrize("qp", [0, 22, 37, 51])
def test_flat_block_costs_header_only(qp):
    cb = code_block(np.full((16, 16), 128, np.uint8), qp_params(qp))
    assert cb.distortion == 0
    assert cb.rate_bits == HEADER_BITS


def test_checker_rate_monotone():
    blk = synth_frame("checker", 8, 8).samples
    assert code_block(blk, qp_params(22)).rate_bits >= code_block(blk, qp_params(37)).rate_bits


@pytest.mark.parametrize("shape,seed", [((16, 16), 5), ((4, 8), 6), ((8, 4), 7)])
def test_code_block_matches_reference_pipeline(shape, seed):
    blk = np.random.default_rng(seed).integers(0, 256, shape).astype(np.uint8)
    dist, bits, rec = reference_code(blk, 27)
    cb = code_block(blk, qp_params(27))
    assert cb.distortion == dist
    assert cb.rate_bits == bits
    assert np.array_equal(cb.reconstruction, rec.astype(np.uint8))


def test_code_block_deterministic():
    blk = np.random.default_rng(3).integers(0, 256, (32, 8)).astype(np.uint8)
    a, b = code_block(blk, qp_params(30)), code_block(blk, qp_params(30))
    assert (a.distortion, a.rate_bits) == (b.distortion, b.rate_bits)
    assert np.array_equal(a.reconstruction, b.reconstruction)


def test_distortion_identity():
    blk = np.random.default_rng(4).integers(0, 256, (16, 32)).astype(np.uint8)
    cb = code_block(blk, qp_params(32))
    assert cb.distortion == int(((blk.astype(int) - cb.reconstruction.astype(int)) ** 2).sum())


sides = st.sampled_from([4, 8, 16, 32])


@settings(max_examples=60, deadline=None)
@given(h=sides, w=sides, seed=st.integers(0, 2**32 - 1), qp=st.integers(0, 51))
def test_reconstruction_in_range_and_rate_floor(h, w, seed, qp):
    blk = np.random.default_rng(seed).integers(0, 256, (h, w)).astype(np.uint8)
    cb = code_block(blk, qp_params(qp))
    assert cb.reconstruction.dtype == np.uint8
    assert cb.reconstruction.shape == (h, w)
    assert cb.rate_bits >= HEADER_BITS


@settings(max_examples=60, deadline=None)
@given(h=sides, w=sides, seed=st.integers(0, 2**32 - 1))
def test_rate_non_increasing_over_ladder(h, w, seed):
    blk = np.random.default_rng(seed).integers(0, 256, (h, w)).astype(np.uint8)
    rates = [code_block(blk, qp_params(q)).rate_bits for q in (22, 27, 32, 37)]
    assert rates == sorted(rates, reverse=True)


@pytest.mark.parametrize("seed", range(40))
def test_distortion_non_decreasing_over_ladder(seed):
    rng = np.random.default_rng(seed)
    h, w = rng.choice([8, 16, 32], size=2)
    blk = rng.integers(0, 256, (h, w)).astype(np.uint8)
    d = [code_block(blk, qp_params(q)).distortion for q in (22, 27, 32, 37)]
    assert d == sorted(d)
