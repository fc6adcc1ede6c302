"""区域图的 SVG 渲染 (matplotlib, 确定性输出)"""

import hashlib
import logging
from pathlib import Path
from typing import Optional, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.collections import LineCollection, PolyCollection  # noqa: E402

from .regions import RegionMap, true_runs  # noqa: E402

logger = logging.getLogger(__name__)

# 固定 SVG 内部 id 的随机盐, 同一输入得到逐字节相同的文件
_HASH_SALT = "nac-lab"


def code_color(code: np.ndarray) -> tuple[float, float, float]:
    """由编码内容确定的浅色"""
    digest = hashlib.sha256(np.asarray(code, dtype=np.int8).tobytes()).digest()
    rgb = np.frombuffer(digest[:3], dtype=np.uint8) / 255.0
    return tuple(float(v) for v in 0.35 + 0.6 * rgb)


def _region_rectangles(region_map: RegionMap) -> dict[int, list[np.ndarray]]:
    """每个区域拆成按行的水平矩形条"""
    xmin, _, ymin, _ = region_map.bbox
    dx, dy = region_map.cell_size
    rects: dict[int, list[np.ndarray]] = {}
    cells = region_map.cell_code
    for i in range(cells.shape[0]):
        row = cells[i]
        y0, y1 = ymin + i * dy, ymin + (i + 1) * dy
        for k in np.unique(row):
            for start, stop in true_runs(row == k):
                x0, x1 = xmin + start * dx, xmin + stop * dx
                rects.setdefault(int(k), []).append(np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]]))
    return rects


def render_region_svg(
    region_map: RegionMap,
    path: Union[str, Path],
    title: Optional[str] = None,
    size_inches: float = 6.0,
) -> Path:
    """
    写出区域图

    每个区域为一个 id="region-k" 的组, 颜色由编码哈希决定;
    激活边界为 id="activation-boundaries" 的折线组 (单区域时不输出);
    数据点为 id="data-points"。
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context({"svg.hashsalt": _HASH_SALT, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(size_inches, size_inches))
        try:
            xmin, xmax, ymin, ymax = region_map.bbox
            for k, polys in sorted(_region_rectangles(region_map).items()):
                color = code_color(region_map.code_table[k])
                collection = PolyCollection(polys, facecolors=[color], edgecolors="none", linewidths=0)
                collection.set_gid(f"region-{k}")
                ax.add_collection(collection)

            if region_map.boundaries:
                lines = LineCollection(region_map.boundaries, colors="black", linewidths=0.6)
                lines.set_gid("activation-boundaries")
                ax.add_collection(lines)

            if region_map.points is not None:
                labels = region_map.point_labels
                style = {"c": "black"} if labels is None else {"c": labels, "cmap": "tab10", "vmin": 0, "vmax": 9}
                scatter = ax.scatter(region_map.points[:, 0], region_map.points[:, 1], s=4, linewidths=0, **style)
                scatter.set_gid("data-points")

            ax.set_xlim(xmin, xmax)
            ax.set_ylim(ymin, ymax)
            ax.set_aspect("equal")
            ax.set_axis_off()
            if title:
                ax.set_title(title)
            fig.savefig(path, format="svg", metadata={"Date": None}, bbox_inches="tight")
        finally:
            plt.close(fig)

    logger.info(f"区域图已写出: {path} ({region_map.distinct} 个区域)")
    return path
