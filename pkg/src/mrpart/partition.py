"""Multi-type-tree (QT/BT/TT) partition search for one CTU.

``rdo_search`` is an exact dynamic program over split states; the
``exhaustive_oracle`` enumerates every legal tree and is only usable for
small CTUs, where it serves as an independent check of the DP.
"""

from __future__ import annotations

import enum
import itertools
import math
import time
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterator, Optional, Sequence

import numpy as np

from .frame_io import LumaFrame
from .toy_codec import CodedBlock, QpParams, code_block, qp_params, rd_cost

if TYPE_CHECKING:
    from .multirate import SkipGuide

CU_SIDES = (4, 8, 16, 32, 64, 128)


class SplitType(enum.IntEnum):
    # Integer order doubles as the tie-breaking order.
    NS = 0
    QT = 1
    HBT = 2
    VBT = 3
    HTT = 4
    VTT = 5


class SearchSpaceTooLarge(RuntimeError):
    pass


class TreeIntegrityError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class CuGeom:
    x: int
    y: int
    width: int
    height: int
    qt_depth: int = 0
    mtt_depth: int = 0
    inside_mtt: bool = False

    @property
    def area(self) -> int:
        return self.width * self.height


@dataclass(frozen=True)
class PartitionConstraints:
    ctu_size: int = 64
    min_cu: int = 4
    min_qt_size: int = 8
    max_mtt_depth: int = 3
    max_bt_size: int = 32
    max_tt_size: int = 32
    qt_disabled_below: Optional[int] = None

    def __post_init__(self) -> None:
        if self.ctu_size not in (16, 32, 64, 128):
            raise ValueError(f"ctu_size must be 16, 32, 64 or 128, got {self.ctu_size}")
        if self.min_cu != 4:
            raise ValueError("min_cu is fixed at 4")
        if self.min_qt_size < self.min_cu:
            raise ValueError("min_qt_size must be >= min_cu")
        if self.max_mtt_depth < 0:
            raise ValueError("max_mtt_depth must be non-negative")

    @classmethod
    def small16(cls) -> "PartitionConstraints":
        """16x16 CTU, QT only at the root, at most three binary/ternary levels."""
        return cls(
            ctu_size=16,
            min_qt_size=8,
            max_mtt_depth=3,
            max_bt_size=16,
            max_tt_size=16,
            qt_disabled_below=8,
        )


@dataclass(frozen=True, eq=False)
class PartitionTree:
    """Chosen split at one node plus the subtree below it.

    ``distortion`` and ``rate_bits`` are subtree totals; ``rate_bits``
    includes split signaling at every node of the subtree.
    """

    geom: CuGeom
    split: SplitType
    children: tuple["PartitionTree", ...] = ()
    leaf: Optional[CodedBlock] = None
    signal_bits: int = 0
    distortion: int = 0
    rate_bits: float = 0.0

    def cost(self, lam: float) -> float:
        return rd_cost(self.distortion, self.rate_bits, lam)

    def leaves(self) -> Iterator["PartitionTree"]:
        if self.split is SplitType.NS:
            yield self
        else:
            for c in self.children:
                yield from c.leaves()

    def nodes(self) -> Iterator["PartitionTree"]:
        yield self
        for c in self.children:
            yield from c.nodes()

    def code(self) -> tuple[int, ...]:
        """Preorder split sequence; lexicographic order on it breaks cost ties."""
        return tuple(int(n.split) for n in self.nodes())

    def same_shape(self, other: "PartitionTree") -> bool:
        return self.geom == other.geom and self.code() == other.code()


@dataclass
class RdStats:
    ns_evaluations: int = 0
    nodes_visited: int = 0
    ns_skipped_by_guide: int = 0
    # Samples of all CUs coded as NS; larger CUs cost proportionally more.
    ns_samples: int = 0
    total_rate_bits: float = 0.0
    total_distortion: float = 0.0
    wall_time: float = 0.0

    def __add__(self, other: "RdStats") -> "RdStats":
        return RdStats(
            self.ns_evaluations + other.ns_evaluations,
            self.nodes_visited + other.nodes_visited,
            self.ns_skipped_by_guide + other.ns_skipped_by_guide,
            self.ns_samples + other.ns_samples,
            self.total_rate_bits + other.total_rate_bits,
            self.total_distortion + other.total_distortion,
            self.wall_time + other.wall_time,
        )

    @classmethod
    def merged(cls, parts: Sequence["RdStats"]) -> "RdStats":
        out = cls()
        for p in parts:
            out = out + p
        return out


def legal_splits(geom: CuGeom, constraints: PartitionConstraints) -> tuple[SplitType, ...]:
    """Split types allowed at ``geom``, NS first, in tie-breaking order."""
    c = constraints
    w, h = geom.width, geom.height
    out = [SplitType.NS]
    if (
        w == h
        and w >= 2 * c.min_qt_size
        and not geom.inside_mtt
        and (c.qt_disabled_below is None or w > c.qt_disabled_below)
    ):
        out.append(SplitType.QT)
    mtt_ok = geom.mtt_depth < c.max_mtt_depth
    longest = max(w, h)
    if mtt_ok and longest <= c.max_bt_size:
        if h >= 2 * c.min_cu:
            out.append(SplitType.HBT)
        if w >= 2 * c.min_cu:
            out.append(SplitType.VBT)
    if mtt_ok and longest <= c.max_tt_size:
        if h >= 4 * c.min_cu:
            out.append(SplitType.HTT)
        if w >= 4 * c.min_cu:
            out.append(SplitType.VTT)
    return tuple(out)


def signal_bits(n_choices: int) -> int:
    return math.ceil(math.log2(n_choices)) if n_choices > 1 else 0


def split_children(
    geom: CuGeom, split: SplitType, constraints: Optional[PartitionConstraints] = None
) -> list[CuGeom]:
    """Child geometries in coding order (top-to-bottom, left-to-right).

    With ``constraints`` given, the split is also checked for legality.
    """
    if constraints is not None and split not in legal_splits(geom, constraints):
        raise ValueError(f"{split.name} is not legal for {geom}")
    x, y, w, h = geom.x, geom.y, geom.width, geom.height
    if split is SplitType.QT:
        if w != h or w < 8:
            raise ValueError(f"QT needs a square CU of side >= 8, got {w}x{h}")
        hw = w // 2
        q = geom.qt_depth + 1
        return [CuGeom(x + dx, y + dy, hw, hw, q, 0, False) for dy in (0, hw) for dx in (0, hw)]
    if split is SplitType.NS:
        raise ValueError("NS has no children")
    m = geom.mtt_depth + 1
    q = geom.qt_depth
    if split is SplitType.HBT:
        if h < 8:
            raise ValueError(f"HBT needs height >= 8, got {h}")
        return [CuGeom(x, y, w, h // 2, q, m, True), CuGeom(x, y + h // 2, w, h // 2, q, m, True)]
    if split is SplitType.VBT:
        if w < 8:
            raise ValueError(f"VBT needs width >= 8, got {w}")
        return [CuGeom(x, y, w // 2, h, q, m, True), CuGeom(x + w // 2, y, w // 2, h, q, m, True)]
    if split is SplitType.HTT:
        if h < 16:
            raise ValueError(f"HTT needs height >= 16, got {h}")
        a = h // 4
        return [
            CuGeom(x, y, w, a, q, m, True),
            CuGeom(x, y + a, w, 2 * a, q, m, True),
            CuGeom(x, y + 3 * a, w, a, q, m, True),
        ]
    if split is SplitType.VTT:
        if w < 16:
            raise ValueError(f"VTT needs width >= 16, got {w}")
        a = w // 4
        return [
            CuGeom(x, y, a, h, q, m, True),
            CuGeom(x + a, y, 2 * a, h, q, m, True),
            CuGeom(x + 3 * a, y, a, h, q, m, True),
        ]
    raise ValueError(f"unknown split {split!r}")


def _ctu_root(frame: LumaFrame, ctu_origin: tuple[int, int], constraints: PartitionConstraints) -> CuGeom:
    x0, y0 = ctu_origin
    n = constraints.ctu_size
    if x0 % n or y0 % n or x0 < 0 or y0 < 0 or x0 + n > frame.width or y0 + n > frame.height:
        raise ValueError(f"CTU origin {ctu_origin} is not on the {n}-pixel grid of a {frame.width}x{frame.height} frame")
    return CuGeom(x0, y0, n, n)


def _as_params(qp: QpParams | int) -> QpParams:
    return qp if isinstance(qp, QpParams) else qp_params(qp)


class _Search:
    def __init__(self, samples, params, constraints, guide):
        self.samples = samples
        self.params = params
        self.lam = params.lam
        self.c = constraints
        self.guide = guide
        self.memo: dict[CuGeom, PartitionTree] = {}
        self.stats = RdStats()

    def solve(self, geom: CuGeom) -> PartitionTree:
        hit = self.memo.get(geom)
        if hit is not None:
            return hit
        st = self.stats
        st.nodes_visited += 1
        legal = legal_splits(geom, self.c)
        sig = signal_bits(len(legal))
        lam = self.lam
        best: Optional[PartitionTree] = None
        best_j = math.inf
        if self.guide is not None and len(legal) > 1 and self.guide.excludes_ns(geom, legal):
            st.ns_skipped_by_guide += 1
        else:
            st.ns_evaluations += 1
            st.ns_samples += geom.width * geom.height
            blk = self.samples[geom.y : geom.y + geom.height, geom.x : geom.x + geom.width]
            coded = code_block(blk, self.params)
            best = PartitionTree(
                geom, SplitType.NS, (), coded, sig, coded.distortion, coded.rate_bits + sig
            )
            best_j = best.cost(lam)
        for split in legal[1:]:
            kids = tuple(self.solve(g) for g in split_children(geom, split))
            d = sum(k.distortion for k in kids)
            r = sum(k.rate_bits for k in kids) + sig
            j = rd_cost(d, r, lam)
            if j < best_j:
                best_j = j
                best = PartitionTree(geom, split, kids, None, sig, d, r)
        assert best is not None
        self.memo[geom] = best
        return best


def rdo_search(
    frame: LumaFrame,
    ctu_origin: tuple[int, int],
    qp: QpParams | int,
    constraints: PartitionConstraints,
    guide: Optional["SkipGuide"] = None,
) -> tuple[PartitionTree, RdStats]:
    """Minimum-cost partition of the CTU at ``ctu_origin``.

    With a ``guide``, NS is not evaluated at nodes the guide excludes, so the
    result is optimal only over the restricted space.
    """
    params = _as_params(qp)
    root = _ctu_root(frame, ctu_origin, constraints)
    if guide is not None:
        guide.check_compatible(frame, constraints)
    t0 = time.perf_counter()
    s = _Search(frame.samples, params, constraints, guide)
    tree = s.solve(root)
    s.stats.wall_time = time.perf_counter() - t0
    s.stats.total_rate_bits = float(tree.rate_bits)
    s.stats.total_distortion = float(tree.distortion)
    return tree, s.stats


def count_trees(geom: CuGeom, constraints: PartitionConstraints) -> int:
    """Number of distinct legal partition trees rooted at ``geom``."""
    memo: dict[CuGeom, int] = {}

    def count(g: CuGeom) -> int:
        if g in memo:
            return memo[g]
        total = 1
        for split in legal_splits(g, constraints)[1:]:
            total += math.prod(count(ch) for ch in split_children(g, split))
        memo[g] = total
        return total

    return count(geom)


ORACLE_TREE_LIMIT = 10**7


def exhaustive_oracle(
    frame: LumaFrame,
    ctu_origin: tuple[int, int],
    qp: QpParams | int,
    constraints: PartitionConstraints,
    limit: int = ORACLE_TREE_LIMIT,
) -> tuple[PartitionTree, float]:
    """Enumerate every legal tree and return the cheapest one and its cost.

    Ties go to the lexicographically smallest preorder split code. Leaf
    codings are shared between trees, subtree optima are not.
    """
    params = _as_params(qp)
    root = _ctu_root(frame, ctu_origin, constraints)
    n_trees = count_trees(root, constraints)
    if n_trees >= limit:
        raise SearchSpaceTooLarge(f"search space has {n_trees} trees, limit is {limit}")
    samples = frame.samples
    leaf_cache: dict[tuple[int, int, int, int], CodedBlock] = {}

    def leaf(g: CuGeom) -> CodedBlock:
        key = (g.x, g.y, g.width, g.height)
        cb = leaf_cache.get(key)
        if cb is None:
            cb = code_block(samples[g.y : g.y + g.height, g.x : g.x + g.width], params)
            leaf_cache[key] = cb
        return cb

    # Each candidate is (distortion, rate, preorder code, builder args).
    def enumerate_trees(g: CuGeom) -> list[tuple[int, float, tuple[int, ...], object]]:
        legal = legal_splits(g, constraints)
        sig = signal_bits(len(legal))
        cb = leaf(g)
        out = [(cb.distortion, cb.rate_bits + sig, (0,), (g, SplitType.NS, (), sig))]
        for split in legal[1:]:
            per_child = [enumerate_trees(ch) for ch in split_children(g, split)]
            for combo in itertools.product(*per_child):
                d = 0
                r = sig
                code: tuple[int, ...] = (int(split),)
                for cd, cr, cc, _ in combo:
                    d += cd
                    r += cr
                    code += cc
                out.append((d, r, code, (g, split, combo, sig)))
        return out

    lam = params.lam
    best = min(enumerate_trees(root), key=lambda t: (rd_cost(t[0], t[1], lam), t[2]))

    def build(t) -> PartitionTree:
        d, r, _, (g, split, combo, sig) = t
        if split is SplitType.NS:
            return PartitionTree(g, split, (), leaf(g), sig, d, r)
        return PartitionTree(g, split, tuple(build(c) for c in combo), None, sig, d, r)

    tree = build(best)
    return tree, tree.cost(lam)


def check_tiling(tree: PartitionTree) -> None:
    """Raise :class:`TreeIntegrityError` unless the NS leaves tile the root exactly."""
    g = tree.geom
    cover = np.zeros((g.height, g.width), dtype=np.int32)
    for lf in tree.leaves():
        lg = lf.geom
        x, y = lg.x - g.x, lg.y - g.y
        if x < 0 or y < 0 or x + lg.width > g.width or y + lg.height > g.height:
            raise TreeIntegrityError(f"leaf {lg} lies outside root {g}")
        cover[y : y + lg.height, x : x + lg.width] += 1
    if not np.all(cover == 1):
        raise TreeIntegrityError("leaves overlap or leave gaps")


def reconstruct_into(tree: PartitionTree, canvas: np.ndarray) -> None:
    for lf in tree.leaves():
        g = lf.geom
        canvas[g.y : g.y + g.height, g.x : g.x + g.width] = lf.leaf.reconstruction


# ---- text form -------------------------------------------------------------

def format_tree(tree: PartitionTree) -> str:
    """One line per node: ``SPLIT x y w h qt_depth mtt_depth``, two-space indent per level."""
    lines: list[str] = []

    def walk(t: PartitionTree, depth: int) -> None:
        g = t.geom
        lines.append(
            f"{'  ' * depth}{t.split.name} {g.x} {g.y} {g.width} {g.height} {g.qt_depth} {g.mtt_depth}"
        )
        for c in t.children:
            walk(c, depth + 1)

    walk(tree, 0)
    return "\n".join(lines) + "\n"


def parse_tree(text: str) -> PartitionTree:
    """Inverse of :func:`format_tree` for the shape only (no leaf codings)."""
    rows = []
    for raw in text.splitlines():
        if not raw.strip():
            continue
        indent = len(raw) - len(raw.lstrip(" "))
        if indent % 2:
            raise ValueError(f"bad indentation: {raw!r}")
        name, *nums = raw.split()
        x, y, w, h, qd, md = (int(v) for v in nums)
        rows.append((indent // 2, SplitType[name], x, y, w, h, qd, md))
    pos = 0

    def take(depth: int, inside: bool) -> PartitionTree:
        nonlocal pos
        if pos >= len(rows) or rows[pos][0] != depth:
            raise ValueError("tree text structure is inconsistent")
        _, split, x, y, w, h, qd, md = rows[pos]
        pos += 1
        geom = CuGeom(x, y, w, h, qd, md, inside)
        if split is SplitType.NS:
            return PartitionTree(geom, split)
        expected = split_children(geom, split)
        kids = []
        for eg in expected:
            kid = take(depth + 1, eg.inside_mtt)
            if kid.geom != eg:
                raise ValueError(f"child {kid.geom} does not match {split.name} of {geom}")
            kids.append(kid)
        return PartitionTree(geom, split, tuple(kids))

    tree = take(0, False)
    if pos != len(rows):
        raise ValueError("trailing lines after root subtree")
    return tree

