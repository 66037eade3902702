import struct

import numpy as np
import pytest

from plagiart.store import (Dataset, DatasetError, ImageRecord, load_dataset,
                            save_dataset, subset)
from conftest import make_dataset


def write_pair(tmp_path, ds):
    manifest = tmp_path / "manifest.jsonl"
    blob = tmp_path / "embeddings.pemb"
    save_dataset(ds, manifest, blob)
    return manifest, blob


class TestLoad:
    def test_three_records_dim_four(self, tmp_path):
        ds = make_dataset(np.arange(12, dtype=np.float32).reshape(3, 4) + 1)
        manifest, blob = write_pair(tmp_path, ds)
        loaded = load_dataset(manifest, blob)
        assert len(loaded) == 3
        assert loaded.dim == 4

    def test_count_mismatch_names_both_counts(self, tmp_path):
        ds = make_dataset([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
        manifest, blob = write_pair(tmp_path, ds)
        # rewrite blob with only 2 rows
        data = np.array([[1, 2], [3, 4]], dtype="<f4")
        blob.write_bytes(b"PEMB" + struct.pack("<III", 1, 2, 2) + data.tobytes())
        with pytest.raises(DatasetError, match="3.*2|2.*3"):
            load_dataset(manifest, blob)

    def test_nan_reported_with_row_index(self, tmp_path):
        ds = make_dataset([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
        manifest, blob = write_pair(tmp_path, ds)
        data = np.array([[1, 2], [np.nan, 4], [5, 6]], dtype="<f4")
        blob.write_bytes(b"PEMB" + struct.pack("<III", 1, 3, 2) + data.tobytes())
        with pytest.raises(DatasetError, match="row 1"):
            load_dataset(manifest, blob)

    def test_bad_magic(self, tmp_path):
        ds = make_dataset([[1.0, 2.0]])
        manifest, blob = write_pair(tmp_path, ds)
        blob.write_bytes(b"XXXX" + blob.read_bytes()[4:])
        with pytest.raises(DatasetError, match="magic"):
            load_dataset(manifest, blob)

    def test_malformed_manifest_line_number(self, tmp_path):
        ds = make_dataset([[1.0, 2.0], [3.0, 4.0]])
        manifest, blob = write_pair(tmp_path, ds)
        lines = manifest.read_text().splitlines()
        lines[1] = '{"id": "x"}'
        manifest.write_text("\n".join(lines) + "\n")
        with pytest.raises(DatasetError, match="line 2"):
            load_dataset(manifest, blob)


class TestRoundTrip:
    def test_identity_on_records_and_bits(self, tmp_path):
        rng = np.random.Generator(np.random.PCG64(11))
        ds = make_dataset(
            rng.normal(size=(7, 5)).astype(np.float32),
            labels=["van_gogh", "other", "plagiarized"] * 2 + ["van_gogh"],
            splits=["train", "val", "test"] * 2 + ["train"],
        )
        manifest, blob = write_pair(tmp_path, ds)
        loaded = load_dataset(manifest, blob)
        assert loaded.records == ds.records
        assert loaded.embeddings.tobytes() == ds.embeddings.tobytes()

    def test_empty_dataset_rejected(self, tmp_path):
        empty = Dataset([], np.zeros((0, 3), dtype=np.float32))
        with pytest.raises(DatasetError, match="empty"):
            save_dataset(empty, tmp_path / "m.jsonl", tmp_path / "b.pemb")

    def test_paper_sized_dataset_round_trips(self, tmp_path):
        from plagiart.synthetic import generate, separable_spec
        ds = generate(separable_spec(dim=8, seed=2))
        assert len(ds) == 1500
        manifest, blob = write_pair(tmp_path, ds)
        loaded = load_dataset(manifest, blob)
        assert loaded.records == ds.records
        assert loaded.embeddings.tobytes() == ds.embeddings.tobytes()


class TestSubset:
    def test_paper_split_sizes(self):
        from plagiart.synthetic import generate, separable_spec
        ds = generate(separable_spec(dim=4, seed=0))
        assert len(subset(ds, "train", {"van_gogh"})) == 300
        assert len(subset(ds, "test")) == 300

    def test_empty_filter(self, tiny_train_dataset):
        sub = subset(tiny_train_dataset, "val", set())
        assert len(sub) == 0

    def test_order_preserved(self, tiny_train_dataset):
        sub = subset(tiny_train_dataset, "train", {"van_gogh", "other"})
        assert [r.id for r in sub.records] == ["vg_a", "vg_b", "oth_a"]
        assert np.array_equal(sub.embeddings[2], tiny_train_dataset.embeddings[3])


class TestValidation:
    def test_duplicate_ids_rejected(self):
        with pytest.raises(DatasetError, match="duplicate"):
            make_dataset([[1.0], [2.0]], ids=["a", "a"])

    def test_unknown_label_rejected(self):
        with pytest.raises(DatasetError, match="label"):
            ImageRecord(id="x", label="rembrandt", split="train")

    def test_unknown_split_rejected(self):
        with pytest.raises(DatasetError, match="split"):
            ImageRecord(id="x", label="other", split="dev")

    def test_alignment_enforced(self):
        records = [ImageRecord(id=i, label="other", split="train") for i in "abc"]
        with pytest.raises(DatasetError, match="alignment"):
            Dataset(records, np.zeros((2, 3), dtype=np.float32))
