"""Per-CTU maps of leaf CU dimensions at 4x4 granularity.

Every 4x4 sub-block of a CTU records the width and height of the leaf CU
that covers it. The maps are what a reference encoding hands over to the
dependent encodings.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .partition import CuGeom, PartitionTree, TreeIntegrityError

GRANULARITY = 4
MAGIC = b"SZMP"
VERSION = 1
_HEADER = struct.Struct("<4sBHHH")


class SizeMapFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SizeMap:
    ctu_x: int
    ctu_y: int
    ctu_size: int
    widths: np.ndarray
    heights: np.ndarray
    granularity: int = GRANULARITY

    def __post_init__(self) -> None:
        g = self.grid
        for name in ("widths", "heights"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.uint16)
            if arr.shape != (g, g):
                raise ValueError(f"{name} must be {g}x{g}, got {arr.shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        sides = np.maximum(self.widths, self.heights)
        sides.setflags(write=False)
        object.__setattr__(self, "_sides", sides)

    @property
    def grid(self) -> int:
        return self.ctu_size // self.granularity

    @property
    def origin(self) -> tuple[int, int]:
        return self.ctu_x * self.ctu_size, self.ctu_y * self.ctu_size

    def entry(self, gx: int, gy: int) -> tuple[int, int]:
        return int(self.widths[gy, gx]), int(self.heights[gy, gx])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SizeMap):
            return NotImplemented
        return (
            self.ctu_x == other.ctu_x
            and self.ctu_y == other.ctu_y
            and self.ctu_size == other.ctu_size
            and self.granularity == other.granularity
            and np.array_equal(self.widths, other.widths)
            and np.array_equal(self.heights, other.heights)
        )

    __hash__ = None  # type: ignore[assignment]

    def to_csv(self) -> str:
        rows = ["gy,gx,width,height"]
        g = self.grid
        for gy in range(g):
            for gx in range(g):
                rows.append(f"{gy},{gx},{self.widths[gy, gx]},{self.heights[gy, gx]}")
        return "\n".join(rows) + "\n"


def extract_size_map(tree: PartitionTree) -> SizeMap:
    """Size map of a complete CTU tree; raises if its leaves do not tile the CTU."""
    root = tree.geom
    if root.width != root.height or root.x % root.width or root.y % root.height:
        raise TreeIntegrityError(f"tree root {root} is not a CTU")
    n = root.width
    g = n // GRANULARITY
    widths = np.zeros((g, g), dtype=np.uint16)
    heights = np.zeros((g, g), dtype=np.uint16)
    written = np.zeros((g, g), dtype=np.int32)
    for lf in tree.leaves():
        lg = lf.geom
        x0 = (lg.x - root.x) // GRANULARITY
        y0 = (lg.y - root.y) // GRANULARITY
        x1 = x0 + lg.width // GRANULARITY
        y1 = y0 + lg.height // GRANULARITY
        if x0 < 0 or y0 < 0 or x1 > g or y1 > g:
            raise TreeIntegrityError(f"leaf {lg} lies outside CTU {root}")
        widths[y0:y1, x0:x1] = lg.width
        heights[y0:y1, x0:x1] = lg.height
        written[y0:y1, x0:x1] += 1
    if not np.all(written == 1):
        raise TreeIntegrityError("tree leaves overlap or leave gaps")
    return SizeMap(root.x // n, root.y // n, n, widths, heights)


def _region_slices(m: SizeMap, region: CuGeom) -> tuple[slice, slice]:
    ox, oy = m.origin
    x, y = region.x - ox, region.y - oy
    gr = m.granularity
    if (
        x < 0
        or y < 0
        or x + region.width > m.ctu_size
        or y + region.height > m.ctu_size
        or x % gr
        or y % gr
        or region.width % gr
        or region.height % gr
        or region.width <= 0
        or region.height <= 0
    ):
        raise ValueError(f"region {region} is not a 4-aligned area inside CTU at {m.origin}")
    return slice(y // gr, (y + region.height) // gr), slice(x // gr, (x + region.width) // gr)


def max_size_in_region(m: SizeMap, region: CuGeom) -> int:
    """Largest side length recorded anywhere inside ``region`` (``max_sz``)."""
    ys, xs = _region_slices(m, region)
    return int(m._sides[ys, xs].max())


def max_dims_in_region(m: SizeMap, region: CuGeom) -> tuple[int, int]:
    """Largest recorded width and largest recorded height inside ``region``."""
    ys, xs = _region_slices(m, region)
    return int(m.widths[ys, xs].max()), int(m.heights[ys, xs].max())


def serialize(m: SizeMap) -> bytes:
    """``SZMP`` binary form: header then row-major little-endian (width, height) u16 pairs.

    The CTU position is not part of the payload.
    """
    header = _HEADER.pack(MAGIC, VERSION, m.ctu_size, m.granularity, m.grid)
    pairs = np.empty((m.grid, m.grid, 2), dtype="<u2")
    pairs[..., 0] = m.widths
    pairs[..., 1] = m.heights
    return header + pairs.tobytes()


def deserialize(data: bytes, ctu_x: int = 0, ctu_y: int = 0) -> SizeMap:
    if len(data) < _HEADER.size:
        raise SizeMapFormatError(f"size map truncated: {len(data)} bytes is shorter than the header")
    magic, version, ctu_size, gran, grid = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SizeMapFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise SizeMapFormatError(f"unsupported version {version}")
    if gran == 0 or ctu_size % gran or ctu_size // gran != grid:
        raise SizeMapFormatError(f"inconsistent geometry: ctu {ctu_size}, granularity {gran}, grid {grid}")
    expected = _HEADER.size + grid * grid * 4
    if len(data) != expected:
        raise SizeMapFormatError(f"size map payload has {len(data)} bytes, expected {expected}")
    pairs = np.frombuffer(data, dtype="<u2", offset=_HEADER.size).reshape(grid, grid, 2)
    return SizeMap(ctu_x, ctu_y, ctu_size, pairs[..., 0].copy(), pairs[..., 1].copy(), gran)
