"""端到端测试 (黑盒测试)

这些测试模拟真实用户场景，只通过命令行入口与输出文件交互，不关心内部实现细节。
"""

import json
import re
from pathlib import Path

import pytest

from nac_lab.cli import run

ROOT = Path(__file__).resolve().parent.parent
TOY_CONFIG = ROOT / "config" / "toy.conf"
CODES_DIR = ROOT / "data" / "codes"

SMALL_CONFIG = "batch_size=16\nepochs=2\nwarmup_epochs=1\nhidden=8,8\ncode_dim=4\nprobe.epochs=20\n"


def _synth(path: Path, kind: str, n: int, noise: float, seed: int = 0) -> Path:
    assert run(["synth", "--kind", kind, "--n", str(n), "--noise", str(noise), "--seed", str(seed), "--out", str(path)]) == 0
    return path


def _number(output: str, key: str) -> float:
    match = re.search(rf"{key}=([-0-9.e+]+)", output)
    assert match, output
    return float(match.group(1))


@pytest.fixture
def small_conf(tmp_path):
    path = tmp_path / "small.conf"
    path.write_text(SMALL_CONFIG, encoding="utf-8")
    return path


class TestUserScenarios:
    """用户场景测试"""

    @pytest.mark.slow
    def test_scenario_train_and_evaluate_moons(self, tmp_path):
        """
        场景: 新用户在两个半月数据上训练并评估

        Given: 用户生成 400 个样本的 moons 数据, 使用快速配置
        When: 训练编码器, 然后对冻结特征做线性探针
        Then: 检查点与评估 JSON 都写出, 探针准确率明显高于随机水平
        """
        data = _synth(tmp_path / "moons.csv", "moons", 400, 0.1)
        checkpoint = tmp_path / "moons.json"
        log = tmp_path / "moons_log.csv"

        code = run(
            ["train", "--data", str(data), "--config", str(TOY_CONFIG), "--out-checkpoint", str(checkpoint), "--log", str(log)]
        )
        assert code == 0
        assert checkpoint.exists()
        # 每个 epoch 一行日志
        assert len(log.read_text(encoding="utf-8").splitlines()) == 1 + 8

        report_path = tmp_path / "eval.json"
        assert run(["eval-linear", "--checkpoint", str(checkpoint), "--data", str(data), "--out-json", str(report_path)]) == 0
        report = json.loads(report_path.read_text(encoding="utf-8"))
        assert report["probe_accuracy"] >= 0.7
        assert report["distinct_codes"] >= 2
        assert len(report["config_hash"]) == 16

    @pytest.mark.slow
    def test_scenario_regions_change_after_training(self, tmp_path):
        """
        场景: 研究者对比训练前后的线性区域

        Given: 用户在同心圆环数据上训练了编码器
        When: 生成训练后与同种子初始模型的区域图
        Then: 两张图都有多个区域且内容不同, 统计表按分辨率排列
        """
        data = _synth(tmp_path / "rings.csv", "rings", 400, 0.1)
        checkpoint = tmp_path / "rings.json"
        assert run(["train", "--data", str(data), "--config", str(TOY_CONFIG), "--out-checkpoint", str(checkpoint)]) == 0

        trained, initial, stats = tmp_path / "trained.svg", tmp_path / "init.svg", tmp_path / "regions.csv"
        args = ["--checkpoint", str(checkpoint), "--data", str(data), "--resolution", "64"]
        outs = ["--out-svg", str(trained), "--out-svg-init", str(initial), "--out-csv", str(stats)]
        assert run(["regions", *args, *outs]) == 0

        trained_text, initial_text = trained.read_text(encoding="utf-8"), initial.read_text(encoding="utf-8")
        assert 'id="region-1"' in trained_text
        assert 'id="region-1"' in initial_text
        assert trained_text != initial_text

        rows = stats.read_text(encoding="utf-8").splitlines()[1:]
        counts = [int(row.split(",")[1]) for row in rows]
        assert [row.split(",")[0] for row in rows] == ["16", "32", "64"]
        assert counts == sorted(counts)

    def test_scenario_check_codebook_information(self, capsys):
        """
        场景: 研究者检查一个码本能携带多少信息

        Given: 用户有 D = 4 的成对码本文件
        When: 计算 p = 0.1 的精确互信息与 Hamming 上界
        Then: 两个命令给出的互信息一致, 且上界成立
        """
        codes = str(CODES_DIR / "d4_pairs.csv")
        assert run(["mi-check", "--codes", codes, "--p", "0.1"]) == 0
        exact = _number(capsys.readouterr().out, "exact_mi")

        assert run(["bound-check", "--codes", codes, "--p", "0.1"]) == 0
        out = capsys.readouterr().out
        assert _number(out, "lhs") == pytest.approx(exact, rel=1e-5)
        assert _number(out, "lhs") <= _number(out, "rhs")
        assert "holds=true" in out

    @pytest.mark.slow
    def test_scenario_flip_sweep_reproducible(self, tmp_path, small_conf):
        """
        场景: 研究者扫描翻转概率

        Given: 用户有一份小数据集和小模型配置
        When: 以相同参数运行两次 p 扫描
        Then: 每个 p 一行, 两次结果逐字节相同
        """
        data = _synth(tmp_path / "blobs.csv", "blobs", 128, 0.5)
        outputs = []
        for name in ("a.csv", "b.csv"):
            out = tmp_path / name
            assert run(["sweep", "--config", str(small_conf), "--data", str(data), "--p-list", "0.05,0.2,0.4", "--out-csv", str(out)]) == 0
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]

        lines = outputs[0].decode("utf-8").splitlines()
        assert lines[0] == "p,linear_probe_accuracy,retrieval_map,status"
        assert [line.split(",")[0] for line in lines[1:]] == ["0.05", "0.2", "0.4"]

    @pytest.mark.slow
    def test_scenario_compare_methods(self, tmp_path, small_conf):
        """
        场景: 研究者对比三种训练目标

        Given: 用户有一份小数据集
        When: 运行方法对比
        Then: 每种方法一行, 另有随机编码基线
        """
        data = _synth(tmp_path / "blobs.csv", "blobs", 128, 0.5)
        out = tmp_path / "compare.csv"
        assert run(["compare", "--config", str(small_conf), "--data", str(data), "--out-csv", str(out)]) == 0
        methods = [line.split(",")[0] for line in out.read_text(encoding="utf-8").splitlines()[1:]]
        assert methods == ["nac", "nac_mq", "simclr", "random_codes"]


class TestConfigurationScenarios:
    """配置场景测试"""

    def test_scenario_same_seed_same_checkpoint(self, tmp_path, small_conf):
        """
        场景: 复现他人的实验

        Given: 两个用户使用同一份数据与配置
        When: 分别训练并评估
        Then: 检查点与评估结果逐字节相同
        """
        data = _synth(tmp_path / "moons.csv", "moons", 96, 0.1, seed=5)
        blobs = []
        for user in ("alice", "bob"):
            checkpoint, report = tmp_path / f"{user}.json", tmp_path / f"{user}_eval.json"
            assert run(["train", "--data", str(data), "--config", str(small_conf), "--out-checkpoint", str(checkpoint)]) == 0
            assert run(["eval-linear", "--checkpoint", str(checkpoint), "--data", str(data), "--out-json", str(report)]) == 0
            blobs.append((checkpoint.read_bytes(), report.read_bytes()))
        assert blobs[0] == blobs[1]

    def test_scenario_seed_changes_model(self, tmp_path, small_conf):
        """
        场景: 用户换一个随机种子

        Given: 同一份数据与配置
        When: 使用 --seed 1 与 --seed 2 分别训练
        Then: 得到不同的检查点
        """
        data = _synth(tmp_path / "moons.csv", "moons", 96, 0.1)
        outputs = []
        for seed in ("1", "2"):
            checkpoint = tmp_path / f"s{seed}.json"
            args = ["--seed", seed, "train", "--data", str(data), "--config", str(small_conf)]
            assert run([*args, "--out-checkpoint", str(checkpoint)]) == 0
            outputs.append(checkpoint.read_bytes())
        assert outputs[0] != outputs[1]

    def test_scenario_config_typo(self, tmp_path, capsys):
        """
        场景: 用户在配置文件里拼错了配置项

        Given: 配置文件中有 learnign_rate=0.1
        When: 运行训练
        Then: 以运行错误退出, 错误信息指出拼错的项
        """
        data = _synth(tmp_path / "moons.csv", "moons", 96, 0.1)
        conf = tmp_path / "typo.conf"
        conf.write_text("epochs=2\nlearnign_rate=0.1\n", encoding="utf-8")
        capsys.readouterr()
        assert run(["train", "--data", str(data), "--config", str(conf), "--out-checkpoint", str(tmp_path / "m.json")]) == 2
        assert "learnign_rate" in capsys.readouterr().out
        assert not (tmp_path / "m.json").exists()


class TestEdgeCases:
    """边界情况测试"""

    def test_fewer_samples_than_batch(self, tmp_path, small_conf):
        """测试样本数少于批大小"""
        data = tmp_path / "few.csv"
        data.write_text("f0,f1,label\n0,0,0\n1,1,1\n", encoding="utf-8")
        assert run(["train", "--data", str(data), "--config", str(small_conf), "--out-checkpoint", str(tmp_path / "m.json")]) == 2

    def test_codebook_too_large_to_enumerate(self, tmp_path):
        """测试 D = 17 的码本无法精确计算"""
        codes = tmp_path / "big.csv"
        codes.write_text("0,0," + "1" * 17 + "\n1,1," + "0" * 17 + "\n", encoding="utf-8")
        assert run(["mi-check", "--codes", str(codes), "--p", "0.1"]) == 2

    def test_malformed_data_file(self, tmp_path, small_conf, capsys):
        """测试数据文件格式错误时报告行号"""
        data = tmp_path / "bad.csv"
        data.write_text("f0,f1,label\n0,0,0\n1,oops,1\n", encoding="utf-8")
        assert run(["train", "--data", str(data), "--config", str(small_conf), "--out-checkpoint", str(tmp_path / "m.json")]) == 2
        assert "第 3 行" in capsys.readouterr().out

    def test_sweep_rejects_invalid_p(self, tmp_path, small_conf):
        """测试扫描列表中的非法 p"""
        data = _synth(tmp_path / "blobs.csv", "blobs", 64, 0.5)
        args = ["sweep", "--config", str(small_conf), "--data", str(data), "--p-list", "0.1,0.5"]
        assert run([*args, "--out-csv", str(tmp_path / "s.csv")]) == 2
