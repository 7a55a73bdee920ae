import csv
import json

import numpy as np
import pytest

from rwanomaly.cli import main
from rwanomaly.data import synthetic_features


@pytest.fixture
def feature_csv(tmp_path):
    fm, _ = synthetic_features(n=60, n_clusters=3, outlier_clumps=3, seed=1)
    path = tmp_path / "features.csv"
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([f"f{j}" for j in range(fm.d)])
        writer.writerows(fm.values.tolist())
    return path


@pytest.fixture
def edge_csv(tmp_path):
    rng = np.random.default_rng(0)
    path = tmp_path / "edges.csv"
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["u", "v"])
        seen = set()
        for _ in range(60):
            u, v = int(rng.integers(12)), int(rng.integers(15))
            if (u, v) not in seen:
                seen.add((u, v))
                writer.writerow([u, v])
    return path


class TestDetect:
    def test_prox_detect(self, feature_csv, tmp_path):
        out = tmp_path / "scores.csv"
        code = main([
            "detect", "--model", "prox", "--input", str(feature_csv),
            "--epsilon", "0.5", "--alpha", "0.15", "--out", str(out),
        ])
        assert code == 0
        rows = list(csv.DictReader(open(out)))
        assert len(rows) == 60
        assert {r["flagged"] for r in rows} == {"0", "1"}

    def test_bigraph_detect(self, edge_csv, tmp_path):
        out = tmp_path / "scores.csv"
        code = main([
            "detect", "--model", "bigraph", "--input", str(edge_csv),
            "--alpha", "0.2", "--out", str(out),
        ])
        assert code == 0
        assert len(list(csv.DictReader(open(out)))) == 15

    def test_missing_file_is_data_error(self, tmp_path):
        code = main([
            "detect", "--model", "prox", "--input", str(tmp_path / "nope.csv"),
            "--out", str(tmp_path / "o.csv"),
        ])
        assert code == 2

    def test_bad_usage_is_exit_one(self):
        assert main(["detect", "--model", "bogus", "--input", "x", "--out", "y"]) == 1
        assert main(["nonsense"]) == 1


class TestAttackCommands:
    def test_attack_graph_roundtrip(self, feature_csv, tmp_path):
        out = tmp_path / "attack.json"
        code = main([
            "attack-graph", "--model", "prox", "--input", str(feature_csv),
            "--method", "cf", "--auto-targets", "3", "--pool", "10",
            "--budget", "4", "--epochs", "8", "--lr", "0.1", "--out", str(out),
        ])
        assert code == 0
        report = json.loads(out.read_text())
        assert report["budget"] == 4
        assert len(report["modified_edges"]) <= 4
        assert len(report["targets"]) == 3

    def test_attack_graph_explicit_targets(self, edge_csv, tmp_path):
        out = tmp_path / "attack.json"
        code = main([
            "attack-graph", "--model", "bigraph", "--input", str(edge_csv),
            "--method", "rnd-add", "--targets", "1,3", "--budget", "2",
            "--out", str(out),
        ])
        assert code == 0
        assert json.loads(out.read_text())["targets"] == [1, 3]

    def test_attack_feature_guided(self, feature_csv, tmp_path):
        out = tmp_path / "fatt.json"
        feats = tmp_path / "attacked.csv"
        code = main([
            "attack-feature", "--input", str(feature_csv),
            "--method", "g-guided-plus", "--auto-targets", "3", "--pool", "10",
            "--budget-prop", "0.5", "--epochs", "20", "--guide-epochs", "8",
            "--guide-lr", "0.1",
            "--out", str(out), "--out-features", str(feats),
        ])
        assert code == 0
        report = json.loads(out.read_text())
        assert report["k_prime"] >= 1
        assert len(list(csv.DictReader(open(feats)))) == 60


class TestGadgetCommand:
    def test_build_writes_edge_list(self, tmp_path):
        out = tmp_path / "edges.csv"
        code = main([
            "gadget", "--kind", "thm1", "build", "--elements", "7",
            "--subsets", "5", "--budget", "2", "--seed", "1", "--out", str(out),
        ])
        assert code == 0
        rows = list(csv.DictReader(open(out)))
        assert rows and {"u", "v"} <= set(rows[0])

    def test_verify_covering(self, tmp_path):
        code = main([
            "gadget", "--kind", "set-cover", "verify", "--elements", "8",
            "--subsets", "5", "--budget", "2", "--seed", "3",
        ])
        assert code == 0

    def test_verify_clique(self):
        code = main(["gadget", "--kind", "thm2", "verify", "--nodes", "7", "--k", "3"])
        assert code == 0


class TestEvalCommand:
    def test_eval_from_config(self, tmp_path):
        cfg = tmp_path / "exp.ini"
        cfg.write_text(
            "[experiment]\n"
            "model = prox\n"
            "trials = 1\n"
            "seed = 3\n"
            "budgets = 0.0\n"
            "methods = rnd-add\n"
            "pool_size = 12\n"
            "n_targets = 4\n"
            "[data]\n"
            "syn_n = 60\n"
            "syn_clusters = 3\n"
            "syn_outlier_clumps = 3\n"
        )
        out = tmp_path / "rep"
        assert main(["eval", "--config", str(cfg), "--out", str(out)]) == 0
        assert (tmp_path / "rep.jsonl").exists()
        assert (tmp_path / "rep.csv").exists()

    def test_eval_missing_config_is_data_error(self, tmp_path):
        assert main(["eval", "--config", str(tmp_path / "nope.ini")]) == 2
