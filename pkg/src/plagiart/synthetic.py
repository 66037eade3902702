"""Seeded synthetic embedding datasets with controllable cluster geometry.

Two presets:

* ``separable`` — one isotropic Gaussian per label, means chosen so the
  plagiarized cluster sits angularly between van_gogh and other.  Easy
  regime: the non-learned baseline separates everything.
* ``split_cluster`` — van_gogh is drawn from two well-separated sub-means
  (plagiarized items sit near only sub-mean A) while the 'other' cluster is
  closer to A than B is.  Hard regime: identity-head retrieval interleaves
  negatives between the sub-clusters, so metric learning has room to improve.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from plagiart.store import LABELS, SPLITS, Dataset, ImageRecord


@dataclass
class LabelCluster:
    # one mean per component; rows are cycled over when drawing samples
    means: np.ndarray  # (n_components, dim)
    sigma: float
    counts: dict[str, int]  # split -> count


@dataclass
class ClusterSpec:
    dim: int
    clusters: dict[str, LabelCluster]  # label -> cluster
    mode: str  # "separable" | "split_cluster"
    seed: int = 0

    def validate(self) -> None:
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.mode not in ("separable", "split_cluster"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if set(self.clusters) != set(LABELS):
            raise ValueError(f"clusters must cover labels {LABELS}")
        for label, cl in self.clusters.items():
            if cl.sigma <= 0:
                raise ValueError(f"{label}: sigma must be > 0")
            if cl.means.shape[1] != self.dim:
                raise ValueError(f"{label}: mean dim {cl.means.shape[1]} != {self.dim}")
            if any(c < 0 for c in cl.counts.values()):
                raise ValueError(f"{label}: counts must be >= 0")
            if cl.counts.get("train", 0) < 1:
                raise ValueError(f"{label}: at least one train item required")


def generate(spec: ClusterSpec) -> Dataset:
    """Draw a labeled, split dataset from the spec's Gaussians.

    Deterministic per seed; record ids encode label, split, and index.
    """
    spec.validate()
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    records: list[ImageRecord] = []
    rows: list[np.ndarray] = []
    for label in LABELS:
        cl = spec.clusters[label]
        for split in SPLITS:
            count = cl.counts.get(split, 0)
            for i in range(count):
                mean = cl.means[i % cl.means.shape[0]]
                vec = mean + rng.normal(0.0, cl.sigma, size=spec.dim)
                records.append(ImageRecord(
                    id=f"{label}_{split}_{i:04d}", label=label, split=split,
                    path=f"synthetic://{label}/{split}/{i}",
                ))
                rows.append(vec.astype(np.float32))
    return Dataset(records, np.vstack(rows))


def _paper_counts(per_split: tuple[int, int, int] = (300, 100, 100)) -> dict[str, int]:
    train, val, test = per_split
    return {"train": train, "val": val, "test": test}


def separable_spec(dim: int = 16, seed: int = 0, sigma: float = 0.3,
                   counts: tuple[int, int, int] = (300, 100, 100)) -> ClusterSpec:
    """Easy regime: three angularly separated clusters on a sphere of radius 10.

    The plagiarized mean lies 30 degrees off van_gogh so that for plagiarized
    queries the van_gogh items (their positives) still dominate 'other' items.
    Pairwise mean distances exceed 10 sigma.
    """
    scale = 10.0
    vg = np.zeros(dim); vg[0] = scale
    theta = np.pi / 6.0
    plag = np.zeros(dim); plag[0] = scale * np.cos(theta); plag[1] = scale * np.sin(theta)
    other = np.zeros(dim); other[2] = scale
    clusters = {
        "van_gogh": LabelCluster(vg[None, :], sigma, _paper_counts(counts)),
        "plagiarized": LabelCluster(plag[None, :], sigma, _paper_counts(counts)),
        "other": LabelCluster(other[None, :], sigma, _paper_counts(counts)),
    }
    return ClusterSpec(dim=dim, clusters=clusters, mode="separable", seed=seed)


def split_cluster_spec(dim: int = 16, seed: int = 0, sigma: float = 1.0,
                       counts: tuple[int, int, int] = (300, 100, 100)) -> ClusterSpec:
    """Hard regime: van_gogh splits into sub-means A and B, 8 sigma apart.

    Plagiarized items sit 1 sigma from sub-mean A; the 'other' mean is closer
    to A (4 sigma) than B is, so identity-head rankings interleave negatives
    between the two van_gogh sub-clusters and depress mAP.
    """
    # orthogonal sub-means 8 sigma apart; 'other' sits 4 sigma off sub-mean A,
    # angularly between A and B, so identity-head rankings interleave negatives
    scale = 8.0 * sigma / np.sqrt(2.0)
    sub_a = np.zeros(dim); sub_a[0] = scale
    sub_b = np.zeros(dim); sub_b[1] = scale
    plag = sub_a.copy(); plag[3] += 1.0 * sigma
    other = sub_a.copy(); other[2] += 4.0 * sigma
    clusters = {
        "van_gogh": LabelCluster(np.stack([sub_a, sub_b]), sigma, _paper_counts(counts)),
        "plagiarized": LabelCluster(plag[None, :], sigma, _paper_counts(counts)),
        "other": LabelCluster(other[None, :], sigma, _paper_counts(counts)),
    }
    return ClusterSpec(dim=dim, clusters=clusters, mode="split_cluster", seed=seed)
