import json

import numpy as np
import pytest

from aepl.cli import main
from aepl.data import load_dataset


def run_cli(*argv):
    return main(list(argv))


@pytest.fixture
def zero_noise_file(tmp_path):
    path = tmp_path / "zn.aepl"
    assert (
        run_cli(
            "synth",
            "--classes", "4",
            "--dim", "8",
            "--per-class", "10",
            "--spread", "0",
            "--text-noise", "0",
            "--seed", "7",
            "--out", str(path),
        )
        == 0
    )
    return path


class TestSynth:
    def test_defaults_produce_loadable_file(self, tmp_path):
        out = tmp_path / "ds.aepl"
        assert run_cli("synth", "--out", str(out)) == 0
        ds = load_dataset(out)
        assert ds.c == 10 and ds.d == 16

    def test_single_class_is_usage_error(self, tmp_path):
        assert run_cli("synth", "--classes", "1", "--out", str(tmp_path / "x.aepl")) == 2

    def test_same_flags_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.aepl", tmp_path / "b.aepl"
        for out in (a, b):
            assert run_cli("synth", "--seed", "3", "--out", str(out)) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_quiet_emits_json_line(self, tmp_path, capsys):
        out = tmp_path / "q.aepl"
        assert run_cli("--quiet", "synth", "--out", str(out)) == 0
        line = capsys.readouterr().out.strip()
        assert json.loads(line)["n"] == 1000


class TestRun:
    def config(self, tmp_path, **overrides):
        doc = {
            "method": "CB_SQ",
            "rounds": 3,
            "budget": 4,
            "train": {"epochs": 40},
            "seeds": [0],
        }
        doc.update(overrides)
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(doc))
        return path

    def test_zero_noise_round_one_accuracy(self, tmp_path, zero_noise_file, capsys):
        cfg = self.config(tmp_path)
        out = tmp_path / "report.csv"
        code = run_cli(
            "--quiet", "run", "--dataset", str(zero_noise_file), "--config", str(cfg), "--out", str(out)
        )
        assert code == 0
        rows = out.read_text().splitlines()
        first = rows[1].split(",")
        assert float(first[rows[0].split(",").index("accuracy")]) == 1.0
        summary = json.loads(capsys.readouterr().out.strip())
        assert summary["rounds"] == 3

    def test_missing_dataset_fails_nonzero(self, tmp_path):
        cfg = self.config(tmp_path)
        code = run_cli("run", "--dataset", str(tmp_path / "absent.aepl"), "--config", str(cfg), "--out", str(tmp_path / "r.csv"))
        assert code != 0

    def test_json_and_csv_agree(self, tmp_path, zero_noise_file):
        cfg = self.config(tmp_path)
        csv_out, json_out = tmp_path / "r.csv", tmp_path / "r.json"
        assert run_cli("run", "--dataset", str(zero_noise_file), "--config", str(cfg), "--out", str(csv_out)) == 0
        assert run_cli("run", "--dataset", str(zero_noise_file), "--config", str(cfg), "--out", str(json_out), "--format", "json") == 0
        import csv as csvmod

        with open(csv_out, newline="") as f:
            csv_rows = list(csvmod.DictReader(f))
        json_rows = json.loads(json_out.read_text())
        for a, b in zip(csv_rows, json_rows):
            assert float(a["accuracy"]) == b["accuracy"]
            assert int(a["consumed"]) == b["consumed"]

    def test_corrupt_dataset_exits_3(self, tmp_path):
        bad = tmp_path / "bad.aepl"
        bad.write_bytes(b"XXXX" + b"\x00" * 20)
        cfg = self.config(tmp_path)
        assert run_cli("run", "--dataset", str(bad), "--config", str(cfg), "--out", str(tmp_path / "r.csv")) == 3

    def test_unknown_config_field_is_usage_error(self, tmp_path, zero_noise_file):
        cfg = self.config(tmp_path, typo_field=1)
        assert run_cli("run", "--dataset", str(zero_noise_file), "--config", str(cfg), "--out", str(tmp_path / "r.csv")) == 2

    @pytest.mark.filterwarnings("ignore:overflow", "ignore:invalid value")
    def test_aborted_run_emits_no_partial_file(self, tmp_path):
        noisy = tmp_path / "noisy.aepl"
        assert (
            run_cli(
                "synth", "--classes", "4", "--dim", "6", "--per-class", "20",
                "--spread", "0.3", "--text-noise", "0.1", "--seed", "3", "--out", str(noisy),
            )
            == 0
        )
        cfg = self.config(tmp_path, method="Random", tau=0.05, train={"epochs": 2, "lr0": 1e308})
        out = tmp_path / "r.csv"
        assert run_cli("run", "--dataset", str(noisy), "--config", str(cfg), "--out", str(out)) == 4
        assert not out.exists()


class TestSuite:
    def test_matrix_expansion(self, tmp_path, zero_noise_file):
        cfg = tmp_path / "matrix.json"
        cfg.write_text(
            json.dumps(
                {
                    "method": ["Random", "CB"],
                    "rounds": 2,
                    "budget": 4,
                    "train": {"epochs": 30},
                    "seeds": [0, 1],
                }
            )
        )
        out = tmp_path / "suite.csv"
        assert run_cli("suite", "--dataset", str(zero_noise_file), "--config", str(cfg), "--out", str(out)) == 0
        rows = out.read_text().splitlines()
        # 2 methods x 2 seeds x 2 rounds per-seed rows + 2 x 2 x 2 aggregate rows
        assert len(rows) == 1 + 8 + 8

    def test_empty_method_list_is_usage_error(self, tmp_path, zero_noise_file):
        cfg = tmp_path / "matrix.json"
        cfg.write_text(json.dumps({"method": [], "seeds": [0]}))
        assert run_cli("suite", "--dataset", str(zero_noise_file), "--config", str(cfg), "--out", str(tmp_path / "s.csv")) == 2

    def test_deterministic_output_bytes(self, tmp_path, zero_noise_file):
        cfg = tmp_path / "matrix.json"
        cfg.write_text(
            json.dumps({"method": ["Random"], "rounds": 2, "budget": 3, "train": {"epochs": 20}, "seeds": [5]})
        )
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            assert run_cli("suite", "--dataset", str(zero_noise_file), "--config", str(cfg), "--out", str(out)) == 0
        assert a.read_bytes() == b.read_bytes()


class TestAri:
    def test_ground_truth_partition_is_one(self, tmp_path, zero_noise_file, capsys):
        ds = load_dataset(zero_noise_file)
        train_idx = ds.split_indices("train")
        part = tmp_path / "part.txt"
        part.write_text("\n".join(str(int(ds.labels[i])) for i in train_idx) + "\n")
        assert run_cli("ari", "--dataset", str(zero_noise_file), "--partition", str(part)) == 0
        assert capsys.readouterr().out.strip() == "1.0000"

    def test_wrong_length_is_error(self, tmp_path, zero_noise_file):
        part = tmp_path / "part.txt"
        part.write_text("0\n1\n")
        assert run_cli("ari", "--dataset", str(zero_noise_file), "--partition", str(part)) == 2

    def test_permuted_labels_still_one(self, tmp_path, zero_noise_file, capsys):
        ds = load_dataset(zero_noise_file)
        train_idx = ds.split_indices("train")
        permuted = (ds.labels[train_idx].astype(int) + 2) % ds.c
        part = tmp_path / "part.txt"
        part.write_text("\n".join(str(int(p)) for p in permuted) + "\n")
        assert run_cli("ari", "--dataset", str(zero_noise_file), "--partition", str(part)) == 0
        assert capsys.readouterr().out.strip() == "1.0000"


class TestInspect:
    def test_summary(self, zero_noise_file, capsys):
        assert run_cli("--quiet", "inspect", "--dataset", str(zero_noise_file)) == 0
        doc = json.loads(capsys.readouterr().out.strip())
        assert doc["n"] == 40 and doc["c"] == 4
        assert doc["train"] + doc["test"] == 40
