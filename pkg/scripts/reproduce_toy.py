#!/usr/bin/env python3
"""二维玩具实验的完整复现: 生成数据, 训练, 评估, 区域图与翻转概率扫描"""

import logging
import sys
from pathlib import Path

# 添加 src 目录到路径
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from nac_lab.analysis import (  # noqa: E402
    build_region_map,
    compare_methods,
    flip_sweep,
    hamming_bound_check,
    random_codebook,
    region_statistics,
    render_region_svg,
    write_report,
)
from nac_lab.coding import ChannelSpec  # noqa: E402
from nac_lab.config import TrainConfig  # noqa: E402
from nac_lab.data import save_csv, synth  # noqa: E402
from nac_lab.errors import NacError  # noqa: E402
from nac_lab.evaluation import evaluate_model  # noqa: E402
from nac_lab.model import init_model, save_checkpoint  # noqa: E402
from nac_lab.training import train  # noqa: E402
from nac_lab.utils import Stream, make_rng  # noqa: E402

ROOT = Path(__file__).parent.parent
OUT = ROOT / "output" / "toy"

# 配置日志
(ROOT / "logs").mkdir(exist_ok=True)
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    handlers=[
        logging.StreamHandler(),
        logging.FileHandler(ROOT / "logs" / "reproduce.log", encoding="utf-8"),
    ],
)
logger = logging.getLogger(__name__)


def run() -> None:
    config = TrainConfig.load(ROOT / "config" / "reference.conf")
    dataset = synth("moons", 1000, 0.1, seed=config.seed)
    save_csv(dataset, OUT / "moons.csv")

    logger.info("=== 训练 NAC ===")
    result = train(config, dataset.features, OUT / "train_log.csv")
    save_checkpoint(result.model, OUT / "nac.json", config.dumps())

    report = evaluate_model(result.model, dataset, config.probe, config.dumps())
    report.save(OUT / "eval.json")
    logger.info(f"探针准确率 {report.probe_accuracy}, mAP {report.map}, 不同编码 {report.distinct_codes}")

    logger.info("=== 线性区域 ===")
    bbox = dataset.bbox()
    initial = init_model(result.model.dims, result.model.seed)
    for name, model in (("init", initial), ("trained", result.model)):
        region_map = build_region_map(model, bbox, 256, dataset.features, dataset.labels)
        render_region_svg(region_map, OUT / f"regions_{name}.svg", title=name)
        logger.info(f"{name}: {region_map.distinct} 个激活模式")
    stats = region_statistics(result.model, dataset.features, [16, 32, 64, 128, 256], bbox)
    write_report(stats, OUT / "regions.csv")

    logger.info("=== Hamming 上界 (随机码本) ===")
    rng = make_rng(config.seed, Stream.EVAL)
    for trial in range(20):
        n = int(rng.integers(2, 9))
        d = int(rng.integers(1, 11))
        p = float(rng.uniform(0.01, 0.49))
        check = hamming_bound_check(random_codebook(rng, n, d), ChannelSpec(p))
        logger.info(f"[{trial}] N={n} D={d} p={p:.3f}: lhs={check.lhs:.4f} rhs={check.rhs:.4f} holds={check.holds}")

    logger.info("=== 翻转概率扫描 ===")
    sweep = flip_sweep(config, dataset, [0.01, 0.05, 0.1, 0.2, 0.3, 0.4])
    write_report(sweep, OUT / "sweep.csv")

    logger.info("=== 方法对比 ===")
    write_report(compare_methods(config, dataset), OUT / "compare.csv")

    logger.info(f"全部结果已写入 {OUT}")


def main():
    try:
        run()
    except NacError as e:
        logger.error(f"复现失败: {e}")
        sys.exit(2)


if __name__ == "__main__":
    main()
