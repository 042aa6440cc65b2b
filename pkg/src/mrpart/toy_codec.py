"""Deterministic transform-quantization cost model for a single unsplit CU.

A CU is coded as: subtract 128, orthonormal 2-D DCT-II, uniform scalar
quantization, dequantization, inverse DCT, add 128, round and clamp to 8 bits.
The rate is an exp-Golomb length proxy, not an entropy coder.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np

BLOCK_SIDES = (4, 8, 16, 32, 64, 128)
HEADER_BITS = 4
LAMBDA_SCALE = 0.57


@dataclass(frozen=True)
class QpParams:
    qp: int
    qstep: float
    lam: float


@dataclass(frozen=True, eq=False)
class CodedBlock:
    distortion: int
    rate_bits: float
    reconstruction: np.ndarray
    nonzero: int = 0


def qp_params(qp: int) -> QpParams:
    """Quantizer step and Lagrange multiplier for ``qp`` in [0, 51]."""
    if isinstance(qp, bool) or not isinstance(qp, (int, np.integer)) or not 0 <= qp <= 51:
        raise ValueError(f"qp must be an integer in [0, 51], got {qp!r}")
    qp = int(qp)
    return QpParams(qp, 2.0 ** ((qp - 4) / 6), LAMBDA_SCALE * 2.0 ** ((qp - 12) / 3))


def rd_cost(distortion: float, rate_bits: float, lam: float) -> float:
    return distortion + lam * rate_bits


@lru_cache(maxsize=None)
def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II basis, rows are frequencies."""
    if n not in BLOCK_SIDES:
        raise ValueError(f"unsupported transform size {n}; expected one of {BLOCK_SIDES}")
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    m = np.cos(math.pi * (2 * i + 1) * k / (2 * n)) * math.sqrt(2.0 / n)
    m[0, :] = math.sqrt(1.0 / n)
    m.setflags(write=False)
    return m


def _check_shape(block: np.ndarray) -> tuple[int, int]:
    if block.ndim != 2 or block.shape[0] not in BLOCK_SIDES or block.shape[1] not in BLOCK_SIDES:
        raise ValueError(f"unsupported block shape {block.shape}; sides must be in {BLOCK_SIDES}")
    return block.shape


def dct2d(block: np.ndarray) -> np.ndarray:
    """Forward transform of an already centered block."""
    h, w = _check_shape(np.asarray(block))
    return dct_matrix(h) @ np.asarray(block, dtype=np.float64) @ dct_matrix(w).T


def idct2d(coeffs: np.ndarray) -> np.ndarray:
    h, w = _check_shape(np.asarray(coeffs))
    return dct_matrix(h).T @ np.asarray(coeffs, dtype=np.float64) @ dct_matrix(w)


def quantize(coeffs: np.ndarray, qstep: float) -> np.ndarray:
    return (np.sign(coeffs) * np.floor(np.abs(coeffs) / qstep + 0.5)).astype(np.int64)


def code_block(block: np.ndarray, params: QpParams) -> CodedBlock:
    """Code ``block`` as one leaf CU and report distortion, rate and reconstruction."""
    block = np.asarray(block)
    h, w = _check_shape(block)
    ch, cw = dct_matrix(h), dct_matrix(w)
    orig = block.astype(np.float64)
    coeffs = ch @ (orig - 128.0) @ cw.T
    mags = np.floor(np.abs(coeffs) / params.qstep + 0.5)
    nz = mags[mags > 0]
    if nz.size:
        _, exp = np.frexp(nz + 1.0)
        # 2*floor(log2(m+1)) + 1 for the value plus 1 position bit = 2*exp
        bits = 2 * int(np.sum(exp))
        recon_f = ch.T @ (np.copysign(mags, coeffs) * params.qstep) @ cw + 128.0
    else:
        bits = 0
        recon_f = np.full((h, w), 128.0)
    recon_f = np.clip(np.rint(recon_f), 0.0, 255.0)
    err = (orig - recon_f).ravel()
    distortion = int(err @ err)
    return CodedBlock(distortion, float(HEADER_BITS + bits), recon_f.astype(np.uint8), int(nz.size))
