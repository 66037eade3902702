import json
from pathlib import Path

import numpy as np
import pytest

from plagiart.cli import main
from plagiart.store import load_dataset, save_dataset
from plagiart.synthetic import generate, separable_spec, split_cluster_spec
from conftest import make_dataset


@pytest.fixture
def separable_pair(tmp_path):
    ds = generate(separable_spec(dim=8, seed=0, counts=(30, 10, 10)))
    manifest = tmp_path / "manifest.jsonl"
    blob = tmp_path / "embeddings.pemb"
    save_dataset(ds, manifest, blob)
    return str(manifest), str(blob)


@pytest.fixture
def split_cluster_pair(tmp_path):
    ds = generate(split_cluster_spec(dim=8, seed=1, counts=(30, 10, 10)))
    manifest = tmp_path / "sc_manifest.jsonl"
    blob = tmp_path / "sc_embeddings.pemb"
    save_dataset(ds, manifest, blob)
    return str(manifest), str(blob)


class TestIngest:
    def test_valid_pair(self, separable_pair, capsys):
        manifest, blob = separable_pair
        assert main(["ingest", "--manifest", manifest, "--blob", blob]) == 0
        out = capsys.readouterr().out
        assert "van_gogh" in out and "30" in out

    def test_corrupt_magic(self, separable_pair, capsys):
        manifest, blob = separable_pair
        data = Path(blob).read_bytes()
        Path(blob).write_bytes(b"BAAD" + data[4:])
        assert main(["ingest", "--manifest", manifest, "--blob", blob]) == 1
        assert "magic" in capsys.readouterr().err

    def test_missing_file(self, tmp_path, capsys):
        missing = str(tmp_path / "nope.jsonl")
        code = main(["ingest", "--manifest", missing,
                     "--blob", str(tmp_path / "nope.pemb")])
        assert code == 1
        assert "nope" in capsys.readouterr().err


class TestSynth:
    def test_writes_loadable_pair(self, tmp_path):
        m = str(tmp_path / "m.jsonl")
        b = str(tmp_path / "b.pemb")
        assert main(["synth", "--mode", "separable", "--counts", "5,2,2",
                     "--out-manifest", m, "--out-blob", b]) == 0
        ds = load_dataset(m, b)
        assert len(ds) == 27

    def test_same_seed_identical_bytes(self, tmp_path):
        outs = []
        for run in ("x", "y"):
            m = str(tmp_path / f"{run}.jsonl")
            b = str(tmp_path / f"{run}.pemb")
            main(["synth", "--mode", "split_cluster", "--counts", "5,2,2",
                  "--seed", "3", "--out-manifest", m, "--out-blob", b])
            outs.append(Path(b).read_bytes())
        assert outs[0] == outs[1]


class TestTrain:
    def test_writes_head_and_loss_csv(self, split_cluster_pair, tmp_path):
        manifest, blob = split_cluster_pair
        head_path = str(tmp_path / "head.phed")
        csv_path = str(tmp_path / "loss.csv")
        assert main(["train", "--manifest", manifest, "--blob", blob,
                     "--iterations", "40", "--lr", "1e-3",
                     "--out-head", head_path, "--loss-csv", csv_path]) == 0
        lines = Path(csv_path).read_text().splitlines()
        assert lines[0] == "iteration,loss"
        assert len(lines) == 41

    def test_zero_iterations_identity(self, split_cluster_pair, tmp_path):
        from plagiart.metric import load_head
        manifest, blob = split_cluster_pair
        head_path = str(tmp_path / "head0.phed")
        main(["train", "--manifest", manifest, "--blob", blob,
              "--iterations", "0", "--out-head", head_path])
        head = load_head(head_path)
        assert np.array_equal(head.weights, np.eye(8, dtype=np.float32))

    def test_same_seed_identical_artifacts(self, split_cluster_pair, tmp_path):
        manifest, blob = split_cluster_pair
        outs = []
        for run in ("a", "b"):
            head_path = str(tmp_path / f"head_{run}.phed")
            main(["train", "--manifest", manifest, "--blob", blob,
                  "--iterations", "30", "--seed", "5", "--out-head", head_path])
            outs.append(Path(head_path).read_bytes())
        assert outs[0] == outs[1]


class TestCalibrate:
    def test_separable_val_accuracy_one(self, separable_pair, tmp_path, capsys):
        manifest, blob = separable_pair
        out = str(tmp_path / "thr.json")
        assert main(["calibrate", "--manifest", manifest, "--blob", blob,
                     "--out-model", out]) == 0
        assert "val_accuracy=1.0000" in capsys.readouterr().out

    def test_model_round_trips(self, separable_pair, tmp_path):
        from plagiart.classifier import ThresholdModel
        manifest, blob = separable_pair
        out = tmp_path / "thr.json"
        main(["calibrate", "--manifest", manifest, "--blob", blob,
              "--out-model", str(out)])
        model = ThresholdModel.from_json(out)
        model.to_json(tmp_path / "thr2.json")
        assert ThresholdModel.from_json(tmp_path / "thr2.json").tau == model.tau

    def test_single_class_val_fails(self, tmp_path, capsys):
        ds = make_dataset(
            [[1.0, 0.0], [0.9, 0.1], [0.0, 1.0], [0.95, 0.05]],
            labels=["van_gogh", "van_gogh", "other", "van_gogh"],
            splits=["train", "train", "train", "val"],
        )
        m, b = str(tmp_path / "m.jsonl"), str(tmp_path / "b.pemb")
        save_dataset(ds, m, b)
        code = main(["calibrate", "--manifest", m, "--blob", b,
                     "--out-model", str(tmp_path / "thr.json")])
        assert code == 1
        assert "both classes" in capsys.readouterr().err


class TestQuery:
    def test_db_item_query_ranks_itself_first(self, separable_pair, capsys):
        manifest, blob = separable_pair
        assert main(["query", "--manifest", manifest, "--blob", blob,
                     "--query-id", "van_gogh_train_0000", "--top-k", "3"]) == 0
        first = capsys.readouterr().out.splitlines()[0].split("\t")
        assert first[0] == "van_gogh_train_0000"
        assert float(first[1]) == pytest.approx(1.0)

    def test_report_has_three_topk_grids(self, separable_pair, tmp_path, capsys):
        manifest, blob = separable_pair
        report = tmp_path / "grid.md"
        main(["query", "--manifest", manifest, "--blob", blob,
              "--query-id", "plagiarized_test_0001", "--top-k", "6",
              "--report", str(report)])
        text = report.read_text()
        assert "Top-6 overall" in text
        assert "Top-6 Van Gogh" in text
        assert "Top-6 others" in text

    def test_db_variants_differ_exactly_by_plagiarized(self, separable_pair, capsys):
        manifest, blob = separable_pair
        main(["query", "--manifest", manifest, "--blob", blob,
              "--query-id", "van_gogh_test_0000", "--top-k", "100",
              "--db-variant", "authentic-only"])
        without = {l.split("\t")[0] for l in capsys.readouterr().out.splitlines()
                   if "\t" in l}
        main(["query", "--manifest", manifest, "--blob", blob,
              "--query-id", "van_gogh_test_0000", "--top-k", "100",
              "--db-variant", "with-plagiarized"])
        with_plag = {l.split("\t")[0] for l in capsys.readouterr().out.splitlines()
                     if "\t" in l}
        extra = with_plag - without
        assert extra and all(i.startswith("plagiarized_") for i in extra)
        assert without <= with_plag


class TestEvaluate:
    def test_baseline_on_separable(self, separable_pair, tmp_path, capsys):
        manifest, blob = separable_pair
        out = tmp_path / "baseline.json"
        assert main(["evaluate", "--manifest", manifest, "--blob", blob,
                     "--method", "baseline", "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert report["accuracy_overall"] >= 0.99
        assert report["map"] >= 0.99
        assert report["config"]["seed"] == 0

    def test_table_columns_rendered(self, separable_pair, capsys):
        manifest, blob = separable_pair
        main(["evaluate", "--manifest", manifest, "--blob", blob,
              "--method", "baseline"])
        header = capsys.readouterr().out.splitlines()[0]
        for col in ("method", "Van Gogh", "Plagiarized", "Other", "Accuracy", "mAP"):
            assert col in header


class TestReport:
    def test_combined_table(self, separable_pair, tmp_path, capsys):
        manifest, blob = separable_pair
        r1 = tmp_path / "r1.json"
        main(["evaluate", "--manifest", manifest, "--blob", blob,
              "--method", "baseline", "--out", str(r1)])
        capsys.readouterr()
        out_md = tmp_path / "table.md"
        assert main(["report", str(r1), str(r1), "--out", str(out_md)]) == 0
        lines = out_md.read_text().splitlines()
        assert len(lines) == 4  # header, separator, two rows


class TestUsageErrors:
    def test_unknown_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_missing_required_flag_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["ingest"])
        assert exc.value.code == 2
