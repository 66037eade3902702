import numpy as np
import pytest

from plagiart import pipeline
from plagiart.synthetic import (ClusterSpec, LabelCluster, generate,
                                separable_spec, split_cluster_spec)


class TestGenerate:
    def test_paper_sized_separable(self):
        ds = generate(separable_spec(dim=8, seed=0))
        assert len(ds) == 1500
        counts = ds.counts()
        for label in ("van_gogh", "other", "plagiarized"):
            assert counts[(label, "train")] == 300
            assert counts[(label, "val")] == 100
            assert counts[(label, "test")] == 100

    def test_tiny_sigma_degenerates_to_means(self):
        spec = separable_spec(dim=4, seed=1, sigma=1e-12, counts=(2, 1, 1))
        ds = generate(spec)
        vg_rows = [ds.embeddings[i] for i, r in enumerate(ds.records)
                   if r.label == "van_gogh"]
        mean = spec.clusters["van_gogh"].means[0]
        for row in vg_rows:
            assert np.allclose(row, mean, atol=1e-6)

    def test_seed_determinism_bit_identical(self):
        spec_a = split_cluster_spec(dim=6, seed=9, counts=(5, 2, 2))
        spec_b = split_cluster_spec(dim=6, seed=9, counts=(5, 2, 2))
        assert generate(spec_a).embeddings.tobytes() == generate(spec_b).embeddings.tobytes()

    def test_invalid_spec_rejected(self):
        spec = separable_spec(dim=4, counts=(2, 1, 1))
        spec.clusters["other"].sigma = -1.0
        with pytest.raises(ValueError, match="sigma"):
            generate(spec)

    def test_missing_train_items_rejected(self):
        spec = separable_spec(dim=4, counts=(2, 1, 1))
        spec.clusters["van_gogh"].counts["train"] = 0
        with pytest.raises(ValueError, match="train"):
            generate(spec)


class TestGeometry:
    def test_separable_means_exceed_ten_sigma(self):
        spec = separable_spec(dim=16)
        means = {lab: cl.means[0] for lab, cl in spec.clusters.items()}
        sigma = spec.clusters["van_gogh"].sigma
        labs = list(means)
        for i in range(len(labs)):
            for j in range(i + 1, len(labs)):
                assert np.linalg.norm(means[labs[i]] - means[labs[j]]) > 10 * sigma

    def test_separable_baseline_is_perfect(self):
        ds = generate(separable_spec(dim=16, seed=0, counts=(40, 15, 15)))
        model, val_acc = pipeline.calibrate_baseline(ds)
        assert val_acc == 1.0
        report = pipeline.evaluate_baseline(ds, model)
        assert report.accuracy_overall == 1.0

    def test_split_cluster_submean_separation(self):
        spec = split_cluster_spec(dim=16)
        vg = spec.clusters["van_gogh"]
        assert vg.means.shape[0] == 2
        sep = np.linalg.norm(vg.means[0] - vg.means[1])
        assert sep == pytest.approx(8.0 * vg.sigma)
        plag_offset = np.linalg.norm(
            spec.clusters["plagiarized"].means[0] - vg.means[0])
        assert plag_offset == pytest.approx(1.0 * vg.sigma)
