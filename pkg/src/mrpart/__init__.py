"""Multi-type-tree partition search with reference-guided multi-rate encoding."""

from .analytics import RdCurve, SimilarityReport, bd_delta, psnr, reduction_report, similarity_stats
from .frame_io import LumaFrame, load_frame, pad_to_ctu_grid, save_pgm, synth_frame
from .multirate import (
    EncodeResult,
    LadderReport,
    SkipDecision,
    SkipGuide,
    encode_representation,
    run_ladder,
    skip_decision,
)
from .partition import (
    CuGeom,
    PartitionConstraints,
    PartitionTree,
    RdStats,
    SplitType,
    count_trees,
    exhaustive_oracle,
    format_tree,
    legal_splits,
    parse_tree,
    rdo_search,
    split_children,
)
from .size_map import SizeMap, deserialize, extract_size_map, max_size_in_region, serialize
from .toy_codec import CodedBlock, QpParams, code_block, dct2d, idct2d, qp_params

__version__ = "0.1.0"
