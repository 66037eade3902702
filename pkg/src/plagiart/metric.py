"""Triplet-loss metric learning over a linear projection head.

The head is a trainable linear map applied to frozen embeddings.  The
distance in the loss is squared Euclidean between L2-normalized projected
vectors, i.e. d(x, y) = 2 - 2*cos(proj x, proj y), bounded in [0, 4] and
consistent with the cosine ranking used at retrieval time.

Head file layout: magic ``PHED``, then version / in_dim / out_dim as u32
little-endian, followed by out_dim*in_dim float32 LE weights, row-major.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from plagiart.store import Dataset, subset_indices

HEAD_MAGIC = b"PHED"
HEAD_VERSION = 1


class TrainingError(RuntimeError):
    """Raised when training cannot proceed (bad classes, divergence)."""


@dataclass(frozen=True)
class Triplet:
    """(anchor, positive, negative) record indices into one dataset."""

    a: int
    p: int
    n: int


@dataclass
class TrainConfig:
    margin: float = 1.0
    learning_rate: float = 1e-4
    batch_size: int = 32
    iterations: int = 20_000
    out_dim: int | None = None  # None -> input dim, identity init
    seed: int = 0

    def validate(self) -> None:
        if self.margin <= 0:
            raise ValueError(f"margin must be > 0, got {self.margin}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")


@dataclass
class ProjectionHead:
    weights: np.ndarray  # (out_dim, in_dim), float32

    def __post_init__(self):
        self.weights = np.ascontiguousarray(self.weights, dtype=np.float32)
        if self.weights.ndim != 2:
            raise ValueError(f"head weights must be 2-D, got shape {self.weights.shape}")
        if not np.isfinite(self.weights).all():
            raise ValueError("head weights contain non-finite values")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


def init_head(in_dim: int, out_dim: int | None = None, seed: int = 0) -> ProjectionHead:
    """Identity when out_dim == in_dim, else seeded Gaussian rows, sigma=1/sqrt(in_dim).

    The identity start means an untrained head reproduces the non-learned
    baseline exactly.
    """
    out_dim = in_dim if out_dim is None else out_dim
    if out_dim == in_dim:
        return ProjectionHead(np.eye(in_dim, dtype=np.float32))
    rng = np.random.Generator(np.random.PCG64(seed))
    w = rng.normal(0.0, 1.0 / np.sqrt(in_dim), size=(out_dim, in_dim))
    return ProjectionHead(w.astype(np.float32))


def save_head(head: ProjectionHead, path: str | Path) -> None:
    with Path(path).open("wb") as f:
        f.write(HEAD_MAGIC)
        f.write(struct.pack("<III", HEAD_VERSION, head.in_dim, head.out_dim))
        f.write(head.weights.astype("<f4", copy=False).tobytes())


def load_head(path: str | Path) -> ProjectionHead:
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:4] != HEAD_MAGIC:
        raise ValueError(f"{path}: not a projection-head file")
    version, in_dim, out_dim = struct.unpack("<III", data[4:16])
    if version != HEAD_VERSION:
        raise ValueError(f"{path}: unsupported head version {version}")
    expected = 16 + 4 * in_dim * out_dim
    if len(data) != expected:
        raise ValueError(f"{path}: size mismatch, expected {expected} bytes, got {len(data)}")
    w = np.frombuffer(data, dtype="<f4", offset=16).reshape(out_dim, in_dim)
    return ProjectionHead(w.copy())


def project(head: ProjectionHead, emb: np.ndarray) -> np.ndarray:
    """Row-wise linear map; (n, in_dim) -> (n, out_dim) float32."""
    emb = np.asarray(emb, dtype=np.float32)
    single = emb.ndim == 1
    if single:
        emb = emb[None, :]
    if emb.shape[1] != head.in_dim:
        raise ValueError(f"dimension mismatch: rows have {emb.shape[1]}, head expects {head.in_dim}")
    out = emb @ head.weights.T
    return out[0] if single else out


def pair_distance(x: np.ndarray, y: np.ndarray) -> float:
    """Squared Euclidean distance between L2-normalized vectors: 2 - 2*cos."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    nx = np.linalg.norm(x)
    ny = np.linalg.norm(y)
    if nx == 0.0 or ny == 0.0:
        raise ValueError("distance undefined for zero-norm vector")
    return float(2.0 - 2.0 * np.dot(x, y) / (nx * ny))


def triplet_loss(a: np.ndarray, p: np.ndarray, n: np.ndarray, margin: float = 1.0) -> float:
    """max(0, d(a,p) - d(a,n) + margin) over normalized-squared-Euclidean d."""
    return max(0.0, pair_distance(a, p) - pair_distance(a, n) + margin)


def sample_triplets(ds: Dataset, count: int, seed: int) -> list[Triplet]:
    """Uniformly sample valid (anchor, positive, negative) index triplets.

    Anchors are authentic van_gogh train items; positives are train items
    labeled van_gogh or plagiarized (never the anchor itself); negatives are
    train items from other artists.  Deterministic for a fixed seed.
    """
    anchors = subset_indices(ds, "train", {"van_gogh"})
    positives = subset_indices(ds, "train", {"van_gogh", "plagiarized"})
    negatives = subset_indices(ds, "train", {"other"})
    if not anchors:
        raise TrainingError("no anchors: train split has no van_gogh items")
    if len(positives) < 2:
        raise TrainingError("no positives: need >= 2 train items in {van_gogh, plagiarized}")
    if not negatives:
        raise TrainingError("no negatives: train split has no 'other' items")
    rng = np.random.Generator(np.random.PCG64(seed))
    out: list[Triplet] = []
    while len(out) < count:
        a = anchors[rng.integers(len(anchors))]
        p = positives[rng.integers(len(positives))]
        if p == a:
            continue
        n = negatives[rng.integers(len(negatives))]
        out.append(Triplet(a, p, n))
    return out


def _cos_grad(head_w: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Gradient of cos(Wx, Wy) with respect to W."""
    u = head_w @ x
    v = head_w @ y
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("projected vector has zero norm")
    uh = u / nu
    vh = v / nv
    c = float(uh @ vh)
    du = (vh - c * uh) / nu
    dv = (uh - c * vh) / nv
    return np.outer(du, x) + np.outer(dv, y)


def loss_gradient(head: ProjectionHead, a: np.ndarray, p: np.ndarray, n: np.ndarray,
                  margin: float = 1.0) -> np.ndarray:
    """Subgradient of the triplet loss with respect to the head weights.

    Zero matrix when the hinge is inactive.  With d = 2 - 2*cos on projected
    vectors, the active-branch gradient is 2*(dcos(a,n)/dW - dcos(a,p)/dW).
    """
    w = head.weights.astype(np.float64)
    a = np.asarray(a, dtype=np.float64).ravel()
    p = np.asarray(p, dtype=np.float64).ravel()
    n = np.asarray(n, dtype=np.float64).ravel()
    loss = triplet_loss(w @ a, w @ p, w @ n, margin)
    if loss <= 0.0:
        return np.zeros_like(w)
    return 2.0 * (_cos_grad(w, a, n) - _cos_grad(w, a, p))


def batch_loss(head: ProjectionHead, ds: Dataset, triplets: list[Triplet],
               margin: float) -> float:
    """Mean triplet loss over a batch, evaluated in float64."""
    w = head.weights.astype(np.float64)
    total = 0.0
    for t in triplets:
        a = w @ ds.embeddings[t.a].astype(np.float64)
        p = w @ ds.embeddings[t.p].astype(np.float64)
        n = w @ ds.embeddings[t.n].astype(np.float64)
        total += triplet_loss(a, p, n, margin)
    return total / len(triplets)


def train_projection(ds: Dataset, cfg: TrainConfig,
                     loss_log: list[tuple[int, float]] | None = None) -> ProjectionHead:
    """Mini-batch gradient descent on the mean triplet loss.

    Deterministic for a fixed (dataset, config) pair.  Appends (iteration,
    batch loss) pairs to ``loss_log`` when given.  Aborts on non-finite loss
    or weights, naming the iteration.
    """
    cfg.validate()
    head = init_head(ds.dim, cfg.out_dim, cfg.seed)
    if cfg.iterations == 0:
        return head
    triplets = sample_triplets(ds, cfg.iterations * cfg.batch_size, cfg.seed)
    w = head.weights.astype(np.float64)
    emb = ds.embeddings.astype(np.float64)
    for it in range(cfg.iterations):
        batch = triplets[it * cfg.batch_size:(it + 1) * cfg.batch_size]
        grad = np.zeros_like(w)
        total = 0.0
        for t in batch:
            a, p, n = emb[t.a], emb[t.p], emb[t.n]
            loss = triplet_loss(w @ a, w @ p, w @ n, cfg.margin)
            total += loss
            if loss > 0.0:
                grad += 2.0 * (_cos_grad(w, a, n) - _cos_grad(w, a, p))
        mean_loss = total / len(batch)
        if not np.isfinite(mean_loss):
            raise TrainingError(f"non-finite batch loss at iteration {it}")
        if loss_log is not None:
            loss_log.append((it, mean_loss))
        w -= cfg.learning_rate * (grad / len(batch))
        if not np.isfinite(w).all():
            raise TrainingError(f"non-finite head weights after iteration {it}")
    return ProjectionHead(w.astype(np.float32))
