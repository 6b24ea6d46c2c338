import os

import numpy as np
import pytest

from hgspec.cli import main
from hgspec.config import ConfigError, RunConfig, parse_config
from hgspec.hetgraph import save_heterograph
from conftest import coauthor_graph

SMALL = """
# small synthetic pipeline for tests
synth_n_target = 36
synth_aux_size = 18
synth_p_in = 0.4
synth_p_out = 0.05
synth_feature_dim = 6
dim = 8
epochs = 3
runs = 2
split_sizes = 4
aug_iters = 5
"""


def write_config(tmp_path, body=SMALL, name="run.cfg"):
    path = tmp_path / name
    path.write_text(body, encoding="utf-8")
    return str(path)


class TestParseConfig:
    def test_empty_file_gives_paper_defaults(self, tmp_path):
        cfg = parse_config(write_config(tmp_path, ""))
        assert cfg.lr == 0.001
        assert cfg.dim == 64
        assert cfg.tau == 0.5 and cfg.lam == 0.5
        assert cfg.p_feat == 0.7 and cfg.p_edge == 0.7
        assert cfg.aug_lr == 0.1

    def test_no_file_is_runnable(self):
        cfg = parse_config(None)
        assert cfg.split_size_list() == [20, 40, 60]

    def test_acm_aug_lr(self, tmp_path):
        cfg = parse_config(write_config(tmp_path, "aug_lr = 0.07\n"))
        assert cfg.aug_lr == 0.07

    def test_negative_tau_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="tau must be positive"):
            parse_config(write_config(tmp_path, "tau = -1\n"))

    def test_unknown_key_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="unknown config key"):
            parse_config(write_config(tmp_path, "learning_rate = 0.1\n"))

    def test_type_error_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="bad value"):
            parse_config(write_config(tmp_path, "epochs = soon\n"))

    def test_missing_graph_dir_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="does not exist"):
            parse_config(write_config(tmp_path, "graph_dir = /nonexistent/path\n"))

    def test_hash_changes_with_values(self):
        a, b = RunConfig(), RunConfig(seed=1)
        assert a.hash() != b.hash()


class TestCommands:
    def test_pipeline_end_to_end(self, tmp_path):
        cfg = write_config(tmp_path)
        out = str(tmp_path / "out")
        for command in ("synth", "augment", "train", "eval"):
            code = main([command, "--config", cfg, "--out", out])
            assert code == 0, command
        assert os.path.isdir(os.path.join(out, "graph"))
        for name in (
            "scheme_mp0_1.tsv",
            "scheme_mp0_2.tsv",
            "trace_mp0_1.tsv",
            "embeddings.tsv",
            "loss_curve.tsv",
            "params.bin",
            "metrics.tsv",
        ):
            assert os.path.isfile(os.path.join(out, name)), name

    def test_outputs_carry_config_header(self, tmp_path):
        cfg_path = write_config(tmp_path)
        out = str(tmp_path / "out")
        assert main(["augment", "--config", cfg_path, "--out", out]) == 0
        cfg = parse_config(cfg_path)
        cfg.out_dir = out
        first = open(os.path.join(out, "scheme_mp0_1.tsv")).readline()
        assert first.startswith("#") and cfg.hash() in first and "seed=0" in first

    def test_augment_idempotent(self, tmp_path):
        cfg = write_config(tmp_path)
        out = str(tmp_path / "out")
        assert main(["augment", "--config", cfg, "--out", out]) == 0
        before = {
            f: open(os.path.join(out, f), "rb").read()
            for f in os.listdir(out)
            if f.startswith("scheme_")
        }
        mtimes = {f: os.path.getmtime(os.path.join(out, f)) for f in before}
        assert main(["augment", "--config", cfg, "--out", out]) == 0
        for f, body in before.items():
            assert open(os.path.join(out, f), "rb").read() == body
            assert os.path.getmtime(os.path.join(out, f)) == mtimes[f]

    def test_spectrum_two_node_demo(self, tmp_path):
        g = coauthor_graph([(0, 0), (1, 0)], 2, 1)
        gdir = str(tmp_path / "demo")
        save_heterograph(g, gdir)
        cfg = write_config(tmp_path, f"graph_dir = {gdir}\n")
        out = str(tmp_path / "out")
        assert main(["spectrum", "--config", cfg, "--out", out]) == 0
        rows = [
            line.split("\t")
            for line in open(os.path.join(out, "spectrum_APA.tsv"))
            if not line.startswith(("#", "index"))
        ]
        values = sorted(float(v) for _, v in rows)
        assert values == pytest.approx([0.0, 2.0], abs=1e-12)

    def test_ablate_byte_identical(self, tmp_path):
        cfg = write_config(
            tmp_path, SMALL + "epochs = 2\nruns = 2\naug_iters = 3\n"
        )
        out_a, out_b = str(tmp_path / "a"), str(tmp_path / "b")
        assert main(["ablate", "--config", cfg, "--out", out_a]) == 0
        assert main(["ablate", "--config", cfg, "--out", out_b]) == 0
        body_a = open(os.path.join(out_a, "ablation.tsv"), "rb").read()
        body_b = open(os.path.join(out_b, "ablation.tsv"), "rb").read()
        assert body_a == body_b

    def test_config_error_exit_code(self, tmp_path):
        cfg = write_config(tmp_path, "tau = -1\n")
        assert main(["train", "--config", cfg]) == 2

    def test_pipeline_error_exit_code(self, tmp_path):
        # unlabeled graph cannot be evaluated
        g = coauthor_graph([(0, 0), (1, 0)], 2, 1)
        gdir = str(tmp_path / "demo")
        save_heterograph(g, gdir)
        cfg = write_config(tmp_path, f"graph_dir = {gdir}\nruns = 1\nsplit_sizes = 1\n")
        assert main(["eval", "--config", cfg, "--out", str(tmp_path / "o")]) == 1

    def test_seed_flag_overrides(self, tmp_path):
        cfg = write_config(tmp_path)
        out = str(tmp_path / "out")
        assert main(["synth", "--config", cfg, "--seed", "7", "--out", out]) == 0
        header = open(os.path.join(out, "graph", "manifest.tsv")).readline()
        assert "seed=7" in header
