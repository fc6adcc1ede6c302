"""分析: 精确互信息、Hamming 上界、线性区域与扫描"""

from .mutual_info import (
    MAX_ENUM_DIM,
    BoundCheck,
    Codebook,
    MiEstimate,
    all_messages,
    exact_mi,
    hamming_bound_check,
    mc_mi_bound,
    optimal_logits,
    random_codebook,
)
from .regions import (
    RegionMap,
    build_region_map,
    count_distinct_codes,
    exact_region_count,
    grid_points,
    is_locally_affine,
    region_statistics,
)
from .render import code_color, render_region_svg
from .sweep import compare_methods, flip_sweep, write_report

__all__ = [
    "MAX_ENUM_DIM",
    "BoundCheck",
    "Codebook",
    "MiEstimate",
    "RegionMap",
    "all_messages",
    "build_region_map",
    "code_color",
    "compare_methods",
    "count_distinct_codes",
    "exact_mi",
    "exact_region_count",
    "flip_sweep",
    "grid_points",
    "hamming_bound_check",
    "is_locally_affine",
    "mc_mi_bound",
    "optimal_logits",
    "random_codebook",
    "region_statistics",
    "render_region_svg",
    "write_report",
]
