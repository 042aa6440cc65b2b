"""The fixed desk corpus used by the ladder experiments and acceptance tests."""

from __future__ import annotations

from .frame_io import LumaFrame, synth_frame

# Four content clusters, three frames each: smooth, large-structure edges,
# fine texture, fine edges. Seeds are fixed so every run sees identical frames.
DESK_CORPUS = (
    ("smooth", [("flat", 0), ("hgrad", 0), ("smooth", 11)]),
    ("edges", [("leaves", 21), ("leaves", 22), ("leaves", 23)]),
    ("texture", [("pink", 31), ("pink", 32), ("noise", 33)]),
    ("fine", [("checker", 0), ("fineleaves", 41), ("fineleaves", 42)]),
)


def desk_corpus(size: int = 256, seed_offset: int = 0) -> list[tuple[str, LumaFrame]]:
    """Named frames of the desk corpus; ``seed_offset`` shifts every seed."""
    out = []
    for cluster, members in DESK_CORPUS:
        for kind, seed in members:
            s = seed + seed_offset
            out.append((f"{cluster}/{kind}-{s}", synth_frame(kind, size, size, s)))
    return out
