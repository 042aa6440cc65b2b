"""Single-channel 8-bit frames: loading, synthesis and CTU-grid padding."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SYNTH_KINDS = ("flat", "hgrad", "checker", "noise", "smooth", "pink", "leaves", "fineleaves")
CTU_SIZES = (16, 32, 64, 128)


class FrameFormatError(ValueError):
    """Malformed or truncated frame file."""


@dataclass(frozen=True, eq=False)
class LumaFrame:
    """Row-major grid of 8-bit luma samples.

    ``origin_width``/``origin_height`` keep the dimensions before padding so
    quality metrics can ignore replicated border samples.
    """

    samples: np.ndarray
    origin_width: int = field(default=-1)
    origin_height: int = field(default=-1)

    def __post_init__(self) -> None:
        s = np.ascontiguousarray(self.samples, dtype=np.uint8)
        if s.ndim != 2 or s.size == 0:
            raise ValueError(f"samples must be a non-empty 2-D grid, got shape {s.shape}")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        if self.origin_width < 0:
            object.__setattr__(self, "origin_width", s.shape[1])
        if self.origin_height < 0:
            object.__setattr__(self, "origin_height", s.shape[0])
        if not (0 < self.origin_width <= self.width and 0 < self.origin_height <= self.height):
            raise ValueError("origin dimensions must lie within the sample grid")

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def origin(self) -> np.ndarray:
        """View of the pre-padding region."""
        return self.samples[: self.origin_height, : self.origin_width]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LumaFrame):
            return NotImplemented
        return (
            self.origin_width == other.origin_width
            and self.origin_height == other.origin_height
            and np.array_equal(self.samples, other.samples)
        )

    __hash__ = None  # type: ignore[assignment]


def _read_pgm(data: bytes) -> LumaFrame:
    # Header: magic, width, height, maxval separated by whitespace; '#' comments.
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FrameFormatError("PGM header ended early")
        tokens.append(data[start:pos])
    if tokens[0] != b"P5":
        raise FrameFormatError(f"unsupported PGM magic {tokens[0]!r}; only binary P5 is accepted")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise FrameFormatError(f"non-numeric PGM header field: {exc}") from None
    if width <= 0 or height <= 0:
        raise FrameFormatError(f"bad PGM dimensions {width}x{height}")
    if maxval != 255:
        raise FrameFormatError(f"only maxval 255 is supported, got {maxval}")
    pos += 1  # single whitespace byte after maxval
    payload = data[pos:]
    if len(payload) < width * height:
        raise FrameFormatError(
            f"PGM payload truncated: expected {width * height} bytes, got {len(payload)}"
        )
    arr = np.frombuffer(payload[: width * height], dtype=np.uint8).reshape(height, width)
    return LumaFrame(arr.copy())


def load_frame(
    path: str | Path, format: str = "pgm", width: int | None = None, height: int | None = None
) -> LumaFrame:
    """Read a P5 PGM or a headerless raw 8-bit file.

    Raw input needs ``width`` and ``height``; a byte count that does not match
    them exactly raises :class:`FrameFormatError`.
    """
    data = Path(path).read_bytes()
    if format == "pgm":
        return _read_pgm(data)
    if format == "raw8":
        if not width or not height or width <= 0 or height <= 0:
            raise ValueError("raw8 input requires positive width and height")
        if len(data) != width * height:
            raise FrameFormatError(
                f"raw8 size mismatch: {width}x{height} needs {width * height} bytes, got {len(data)}"
            )
        return LumaFrame(np.frombuffer(data, dtype=np.uint8).reshape(height, width).copy())
    raise ValueError(f"unknown frame format {format!r}")


def save_pgm(frame: LumaFrame, path: str | Path) -> None:
    header = f"P5\n{frame.width} {frame.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + frame.samples.tobytes())


def synth_frame(kind: str, width: int, height: int, seed: int = 0) -> LumaFrame:
    """Deterministic synthetic test frame.

    ``flat`` is constant 128, ``hgrad`` ramps 0..255 left to right,
    ``checker`` alternates 8x8 tiles of 0 and 255, ``noise`` is seeded
    uniform integers.

    The remaining kinds imitate natural content: ``smooth`` and ``pink`` are
    random fields with 1/f^3 and 1/f^2 power spectra, ``leaves`` and
    ``fineleaves`` are dead-leaves images (occluding discs with power-law
    radii) with large and small discs, both with mild sensor noise.
    """
    if width <= 0 or height <= 0:
        raise ValueError(f"frame dimensions must be positive, got {width}x{height}")
    if kind == "flat":
        arr = np.full((height, width), 128, dtype=np.uint8)
    elif kind == "hgrad":
        x = np.arange(width)
        row = (255 * x) // (width - 1) if width > 1 else np.zeros(1, dtype=np.int64)
        arr = np.broadcast_to(row.astype(np.uint8), (height, width)).copy()
    elif kind == "checker":
        yy, xx = np.indices((height, width))
        arr = np.where(((yy // 8) + (xx // 8)) % 2 == 0, 0, 255).astype(np.uint8)
    elif kind == "noise":
        rng = np.random.default_rng(seed)
        arr = rng.integers(0, 256, size=(height, width), dtype=np.uint8)
    elif kind == "smooth":
        arr = _power_law_field(width, height, 3.0, 40.0, seed)
    elif kind == "pink":
        arr = _power_law_field(width, height, 2.0, 40.0, seed)
    elif kind == "leaves":
        arr = _dead_leaves(width, height, 8.0, 128.0, seed)
    elif kind == "fineleaves":
        arr = _dead_leaves(width, height, 2.0, 32.0, seed)
    else:
        raise ValueError(f"unknown synth kind {kind!r}; expected one of {SYNTH_KINDS}")
    return LumaFrame(arr)


def _power_law_field(width: int, height: int, beta: float, std: float, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    fy = np.fft.fftfreq(height)[:, None]
    fx = np.fft.fftfreq(width)[None, :]
    f = np.hypot(fx, fy)
    f[0, 0] = 1.0
    spec = (rng.normal(size=(height, width)) + 1j * rng.normal(size=(height, width))) / f ** (beta / 2)
    spec[0, 0] = 0.0
    z = np.real(np.fft.ifft2(spec))
    sd = z.std()
    z = z / sd * std if sd > 0 else z
    return np.clip(np.rint(z + 128.0), 0, 255).astype(np.uint8)


def _dead_leaves(width: int, height: int, rmin: float, rmax: float, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    out = np.full((height, width), -1.0)
    yy, xx = np.indices((height, width))
    a, b = rmin**-2, rmax**-2
    # Radii with density ~ r^-3 between rmin and rmax; later discs lie underneath.
    while (out < 0).any():
        cx = rng.uniform(-rmax, width + rmax)
        cy = rng.uniform(-rmax, height + rmax)
        r = (a - rng.uniform() * (a - b)) ** -0.5
        x0, x1 = max(int(cx - r), 0), min(int(cx + r) + 1, width)
        y0, y1 = max(int(cy - r), 0), min(int(cy + r) + 1, height)
        level = float(rng.integers(0, 256))
        if x0 >= x1 or y0 >= y1:
            continue
        sub = out[y0:y1, x0:x1]
        m = ((xx[y0:y1, x0:x1] - cx) ** 2 + (yy[y0:y1, x0:x1] - cy) ** 2 < r * r) & (sub < 0)
        sub[m] = level
    out += rng.normal(0.0, 2.0, size=out.shape)
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def pad_to_ctu_grid(frame: LumaFrame, ctu: int) -> LumaFrame:
    """Round dimensions up to multiples of ``ctu`` by replicating the edges."""
    if ctu not in CTU_SIZES:
        raise ValueError(f"ctu must be one of {CTU_SIZES}, got {ctu}")
    pad_h = -frame.height % ctu
    pad_w = -frame.width % ctu
    if pad_h == 0 and pad_w == 0:
        return frame
    padded = np.pad(frame.samples, ((0, pad_h), (0, pad_w)), mode="edge")
    return LumaFrame(padded, frame.origin_width, frame.origin_height)
