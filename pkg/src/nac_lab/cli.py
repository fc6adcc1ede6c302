"""命令行界面"""

import dataclasses
import logging
import os
import sys
from typing import Optional, Sequence

import click
import numpy as np
from rich import box
from rich.console import Console
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table
from rich.text import Text

from . import __version__
from .analysis import (
    Codebook,
    build_region_map,
    compare_methods,
    exact_mi,
    flip_sweep,
    hamming_bound_check,
    mc_mi_bound,
    random_codebook,
    region_statistics,
    render_region_svg,
    write_report,
)
from .coding import ChannelSpec, HashIndex, sign_codes
from .config import TrainConfig, text_hash
from .data import KINDS, load_csv, save_csv, synth
from .errors import NacError
from .evaluation import EvalReport, eval_retrieval, extract_features, train_linear_probe
from .model import init_model, load_checkpoint, save_checkpoint
from .training import gradcheck_suite, train
from .utils import Stream, make_rng

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
logger = logging.getLogger(__name__)

console = Console()


def _setup_logging(debug: bool) -> None:
    """日志写到 stderr; --debug 优先于 NAC_LAB_LOG_LEVEL"""
    level_name = "DEBUG" if debug else os.environ.get("NAC_LAB_LOG_LEVEL", "INFO").upper()
    level = logging.getLevelName(level_name)
    if not isinstance(level, int):
        raise click.UsageError(f"NAC_LAB_LOG_LEVEL 取值非法: {level_name}")
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr)
    logging.getLogger().setLevel(level)


def _load_config(ctx: click.Context, path: Optional[str]) -> TrainConfig:
    """读取配置文件, 全局 --seed 覆盖其中的 seed"""
    config = TrainConfig.load(path)
    seed = ctx.obj.get("seed")
    if seed is not None:
        config = dataclasses.replace(config, seed=seed)
    return config


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise click.BadParameter(f"需要逗号分隔的数字: {text}") from e


def _print_report(title: str, rows: dict) -> None:
    table = Table(title=title, box=box.ROUNDED)
    table.add_column("指标", style="cyan")
    table.add_column("值", justify="right", style="green")
    for key, value in rows.items():
        table.add_row(key, "-" if value is None else str(value))
    console.print(table)


def _frame_table(title: str, frame) -> Table:
    table = Table(title=title, box=box.ROUNDED, header_style="bold magenta")
    for column in frame.columns:
        table.add_column(str(column), justify="right")
    for row in frame.itertuples(index=False):
        table.add_row(*(f"{v:.4g}" if isinstance(v, float) else str(v) for v in row))
    return table


@click.group()
@click.version_option(__version__, prog_name="nac-lab")
@click.option("--debug", is_flag=True, help="调试模式")
@click.option("--seed", type=int, default=None, help="覆盖全部随机种子")
@click.pass_context
def cli(ctx, debug, seed):
    """神经激活编码 (NAC) 实验工具"""
    ctx.ensure_object(dict)
    _setup_logging(debug)
    ctx.obj["seed"] = seed


@cli.command("synth")
@click.option("--kind", type=click.Choice(KINDS), required=True, help="数据集类型")
@click.option("--n", "n", type=int, default=1000, show_default=True, help="样本数")
@click.option("--noise", type=float, default=0.1, show_default=True, help="噪声水平")
@click.option("--classes", type=int, default=2, show_default=True, help="类别数")
@click.option("--seed", type=int, default=None, help="数据种子 (默认取全局 --seed 或 0)")
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="输出 CSV")
@click.pass_context
def synth_cmd(ctx, kind, n, noise, classes, seed, out):
    """生成合成数据集"""
    if seed is None:
        seed = ctx.obj.get("seed") or 0
    dataset = synth(kind, n, noise, classes=classes, seed=seed)
    path = save_csv(dataset, out)
    console.print(f"[green]✅ 已生成 {dataset.name}: {len(dataset)} 行, {dataset.n_classes} 类 → {escape(str(path))}[/green]")


@cli.command("train")
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True, help="训练数据 CSV")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="配置文件")
@click.option("--out-checkpoint", type=click.Path(dir_okay=False), required=True, help="检查点输出路径")
@click.option("--log", "log_path", type=click.Path(dir_okay=False), help="训练日志 CSV")
@click.pass_context
def train_cmd(ctx, data, config_path, out_checkpoint, log_path):
    """训练编码器"""
    config = _load_config(ctx, config_path)
    dataset = load_csv(data)
    result = train(config, dataset.features, log_path)
    save_checkpoint(result.model, out_checkpoint, config.dumps())

    _print_report(
        "训练完成",
        {
            "loss": config.loss_kind,
            "步数": result.steps,
            "初始损失": f"{result.initial_loss:.6g}",
            "最终损失": f"{result.final_loss:.6g}",
            "config_hash": config.config_hash(),
            "检查点": out_checkpoint,
        },
    )


@cli.command("eval-linear")
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out-json", type=click.Path(dir_okay=False), help="评估结果 JSON")
def eval_linear_cmd(checkpoint, data, out_json):
    """冻结特征 h 上的线性探针"""
    model, config_text = load_checkpoint(checkpoint)
    config = TrainConfig.parse(config_text) if config_text else TrainConfig()
    dataset = load_csv(data)
    features = extract_features(model, dataset.features)
    result = train_linear_probe(features.h, dataset.labels, config.probe)

    report = EvalReport(
        probe_accuracy=float(f"{result.accuracy:.6g}"),
        chosen_lr=result.chosen_lr,
        distinct_codes=int(np.unique(features.codes, axis=0).shape[0]),
        config_hash=text_hash(config_text) if config_text else None,
    )
    if out_json:
        report.save(out_json)
    _print_report("线性探针", dataclasses.asdict(report))


@cli.command("eval-retrieve")
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--index-data", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--query-data", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out-json", type=click.Path(dir_okay=False), help="评估结果 JSON")
def eval_retrieve_cmd(checkpoint, index_data, query_data, out_json):
    """Hamming 排序检索的 mAP"""
    model, config_text = load_checkpoint(checkpoint)
    retrieval = eval_retrieval(model, load_csv(index_data), load_csv(query_data))
    report = EvalReport(
        map=float(f"{retrieval.mean_ap:.6g}"),
        config_hash=text_hash(config_text) if config_text else None,
    )
    if out_json:
        report.save(out_json)
    _print_report("哈希检索", {**dataclasses.asdict(report), "查询数": retrieval.queries, "跳过": retrieval.skipped})


@cli.command("regions")
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--resolution", type=int, default=256, show_default=True, help="每个方向的格子数")
@click.option("--data", type=click.Path(exists=True, dir_okay=False), help="数据 CSV (决定包围盒并叠加数据点)")
@click.option("--bbox", type=float, nargs=4, default=None, help="显式包围盒 xmin xmax ymin ymax (不给 --data 时必填)")
@click.option("--out-svg", type=click.Path(dir_okay=False), help="区域图 SVG")
@click.option("--out-svg-init", type=click.Path(dir_okay=False), help="同种子初始模型的区域图 SVG")
@click.option("--out-csv", type=click.Path(dir_okay=False), help="各分辨率的区域统计 CSV (需要 --data)")
@click.option("--layer", type=click.Choice(["projection", "last"]), default="projection", show_default=True)
def regions_cmd(checkpoint, resolution, data, bbox, out_svg, out_svg_init, out_csv, layer):
    """二维输入的线性区域分析; 包围盒默认取数据包围盒外扩 10%"""
    if out_csv and not data:
        raise click.UsageError("--out-csv 需要同时给出 --data")
    if not data and not bbox:
        raise click.UsageError("需要 --data 或 --bbox 来确定包围盒")
    model, _ = load_checkpoint(checkpoint)
    dataset = load_csv(data) if data else None
    bbox = tuple(bbox) if bbox else dataset.bbox()
    points = dataset.features if dataset is not None else None
    labels = dataset.labels if dataset is not None else None

    region_map = build_region_map(model, bbox, resolution, points=points, point_labels=labels)
    summary = {"分辨率": resolution, "不同激活模式": region_map.distinct, "边界段": len(region_map.boundaries)}
    if out_svg:
        render_region_svg(region_map, out_svg, title="trained")
    if out_svg_init:
        initial = init_model(model.dims, model.seed)
        init_map = build_region_map(initial, bbox, resolution, points=points, point_labels=labels)
        render_region_svg(init_map, out_svg_init, title="initialization")
        summary["初始模型不同激活模式"] = init_map.distinct
    if out_csv:
        resolutions = [r for r in (16, 32, 64, 128, 256, 512) if r <= resolution]
        if resolution not in resolutions:
            resolutions.append(resolution)
        stats = region_statistics(model, dataset.features, resolutions, bbox, layer=layer)
        write_report(stats, out_csv)
        summary["数据集不同编码"] = int(stats["dataset_distinct_codes"].iloc[0])
    _print_report("线性区域", summary)


def _codebook(codes: Optional[str], checkpoint: Optional[str], data: Optional[str]) -> Codebook:
    """--codes 编码文件, 或 --checkpoint + --data 在数据上的不同编码"""
    if codes:
        return Codebook(HashIndex.import_csv(codes).codes)
    if checkpoint and data:
        model, _ = load_checkpoint(checkpoint)
        bits = sign_codes(model.encode(load_csv(data).features).a.data)
        return Codebook(np.unique(bits, axis=0))
    raise click.UsageError("需要 --codes, 或同时给出 --checkpoint 与 --data")


@cli.command("mi-check")
@click.option("--codes", type=click.Path(exists=True, dir_okay=False), help="编码文件 (id,label,bitstring)")
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False))
@click.option("--data", type=click.Path(exists=True, dir_okay=False))
@click.option("--p", "p", type=float, required=True, help="翻转概率")
@click.option("--samples", type=int, default=None, help="额外给出离散目标的蒙特卡洛估计")
@click.pass_context
def mi_check_cmd(ctx, codes, checkpoint, data, p, samples):
    """均匀码本经过二元对称信道的精确互信息 (D <= 16)"""
    book = _codebook(codes, checkpoint, data)
    spec = ChannelSpec(p)
    value = exact_mi(book, spec)
    console.print(f"N={book.N} D={book.D} p={p}")
    console.print(f"exact_mi={value:.6g} nats")
    if samples:
        estimate = mc_mi_bound(book, spec, samples=samples, seed=ctx.obj.get("seed") or 0)
        console.print(f"mc_bound={estimate}")


@cli.command("bound-check")
@click.option("--codes", type=click.Path(exists=True, dir_okay=False), help="编码文件 (id,label,bitstring)")
@click.option("--random-n", type=int, default=None, help="改用随机码本: 码字数")
@click.option("--random-d", type=int, default=None, help="改用随机码本: 维度")
@click.option("--p", "p", type=float, required=True, help="翻转概率")
@click.pass_context
def bound_check_cmd(ctx, codes, random_n, random_d, p):
    """检查精确互信息不超过 Hamming 距离上界"""
    if codes:
        book = Codebook(HashIndex.import_csv(codes).codes)
    elif random_n and random_d:
        book = random_codebook(make_rng(ctx.obj.get("seed") or 0, Stream.EVAL), random_n, random_d)
    else:
        raise click.UsageError("需要 --codes, 或同时给出 --random-n 与 --random-d")
    check = hamming_bound_check(book, ChannelSpec(p))
    console.print(f"lhs={check.lhs:.6g}")
    console.print(f"rhs={check.rhs:.6g}")
    console.print(f"avg_hamming={check.avg_hamming:.6g}")
    console.print(Text(f"holds={'true' if check.holds else 'false'}", style="green" if check.holds else "red"))


@cli.command("sweep")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="配置文件")
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True, help="数据 CSV")
@click.option("--p-list", default="0.01,0.05,0.1,0.2,0.3,0.4", show_default=True, help="逗号分隔的翻转概率")
@click.option("--out-csv", type=click.Path(dir_okay=False), required=True, help="扫描结果 CSV")
@click.pass_context
def sweep_cmd(ctx, config_path, data, p_list, out_csv):
    """扫描翻转概率 p 对下游指标的影响"""
    config = _load_config(ctx, config_path)
    frame = flip_sweep(config, load_csv(data), _float_list(p_list))
    write_report(frame, out_csv)
    console.print(_frame_table("翻转概率扫描", frame))


@cli.command("compare")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="配置文件")
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True, help="数据 CSV")
@click.option("--methods", default="nac,nac_mq,simclr", show_default=True, help="逗号分隔的训练目标")
@click.option("--out-csv", type=click.Path(dir_okay=False), help="对比结果 CSV")
@click.pass_context
def compare_cmd(ctx, config_path, data, methods, out_csv):
    """相同数据与种子下对比 NAC / NAC-MQ / SimCLR"""
    config = _load_config(ctx, config_path)
    names = [m.strip() for m in methods.split(",") if m.strip()]
    frame = compare_methods(config, load_csv(data), names)
    if out_csv:
        write_report(frame, out_csv)
    console.print(_frame_table("方法对比", frame))


@cli.command("gradcheck")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="配置文件")
@click.option("--models", type=int, default=20, show_default=True, help="随机模型个数")
@click.pass_context
def gradcheck_cmd(ctx, config_path, models):
    """对训练损失做有限差分梯度检查"""
    config = _load_config(ctx, config_path)
    result = gradcheck_suite(config, models)

    table = Table(title=f"梯度检查 ({result.loss_kind})", box=box.ROUNDED)
    table.add_column("#", style="dim")
    table.add_column("最大相对误差", justify="right")
    table.add_column("检查", justify="right")
    table.add_column("跳过", justify="right")
    table.add_column("结果")
    for i, report in enumerate(result.reports):
        table.add_row(
            str(i),
            f"{report.max_rel_error:.2e}",
            str(report.checked),
            str(len(report.skipped)),
            Text("通过" if report.passed else "失败", style="green" if report.passed else "red"),
        )
    console.print(table)

    if result.passed:
        console.print(Panel(f"✅ 全部 {models} 个模型通过", border_style="green"))
    else:
        console.print(Panel(f"❌ 最大相对误差 {result.max_rel_error:.3e}", border_style="red"))
        ctx.exit(2)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    执行命令并返回退出码

    0 成功, 1 用法错误, 2 运行错误。
    """
    try:
        rv = cli.main(args=list(argv) if argv is not None else None, prog_name="nac-lab", standalone_mode=False, obj={})
    except click.UsageError as e:
        e.show()
        return 1
    except click.Abort:
        return 1
    except click.ClickException as e:
        e.show()
        return 2
    except (NacError, OSError) as e:
        console.print(f"[red]错误: {escape(str(e))}[/red]")
        return 2
    return rv if isinstance(rv, int) else 0


def main():
    """主入口"""
    sys.exit(run())


if __name__ == "__main__":
    main()
