"""Binary authentic/plagiarized decisions.

Two routes: a similarity-threshold rule calibrated on validation scores, and
a linear SVM trained by deterministic subgradient descent on projected
embeddings.  Dataset labels map to the binary decision as van_gogh ->
authentic, other -> authentic, plagiarized -> plagiarized.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from plagiart.retrieval import cosine_similarity
from plagiart.store import Dataset

AUTHENTIC = "authentic"
PLAGIARIZED = "plagiarized"

_BINARY_OF_LABEL = {
    "van_gogh": AUTHENTIC,
    "other": AUTHENTIC,
    "plagiarized": PLAGIARIZED,
}


def binary_label(dataset_label: str) -> str:
    """Total mapping from the three dataset labels to the binary decision."""
    return _BINARY_OF_LABEL[dataset_label]


@dataclass
class ThresholdModel:
    """Decision rule: plagiarized iff score < tau (score == tau -> authentic)."""

    tau: float
    statistic: str = "max_similarity"  # or "mean_top_k"
    k: int = 1
    reference_labels: tuple[str, ...] = ("van_gogh", "other")

    def __post_init__(self):
        if not np.isfinite(self.tau):
            raise ValueError("threshold must be finite")
        if self.statistic not in ("max_similarity", "mean_top_k"):
            raise ValueError(f"unknown statistic {self.statistic!r}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps({
            "tau": self.tau,
            "statistic": self.statistic,
            "k": self.k,
            "reference_labels": list(self.reference_labels),
        }, indent=2) + "\n")

    @classmethod
    def from_json(cls, path: str | Path) -> "ThresholdModel":
        obj = json.loads(Path(path).read_text())
        return cls(tau=obj["tau"], statistic=obj["statistic"], k=obj.get("k", 1),
                   reference_labels=tuple(obj["reference_labels"]))


def score_query(query: np.ndarray, ref_db: Dataset,
                statistic: str = "max_similarity", k: int = 1) -> float:
    """Similarity statistic of a query against the reference database.

    max_similarity: highest cosine similarity over the reference set.
    mean_top_k: mean of the k highest similarities (clamped to set size).
    """
    if len(ref_db) == 0:
        raise ValueError("reference database is empty")
    sims = sorted(
        (cosine_similarity(query, ref_db.embeddings[i]) for i in range(len(ref_db))),
        reverse=True,
    )
    if statistic == "max_similarity":
        return sims[0]
    if statistic == "mean_top_k":
        top = sims[:min(k, len(sims))]
        return float(np.mean(top))
    raise ValueError(f"unknown statistic {statistic!r}")


def threshold_accuracy(tau: float, scores: list[tuple[float, str]]) -> float:
    """Accuracy of the rule 'plagiarized iff score < tau' on labeled scores."""
    correct = sum(
        1 for s, lab in scores
        if (PLAGIARIZED if s < tau else AUTHENTIC) == lab
    )
    return correct / len(scores)


def calibrate_threshold(scores: list[tuple[float, str]]) -> float:
    """Pick the tau maximizing accuracy of 'plagiarized iff score < tau'.

    Candidates are every midpoint between adjacent distinct sorted scores,
    plus one below the minimum and one above the maximum.  Among maximizers,
    the midpoint of the widest optimal gap wins; sentinel candidates are used
    only when no interior gap achieves the optimum.
    """
    if not scores:
        raise ValueError("no scores to calibrate on")
    labels = {lab for _, lab in scores}
    if labels != {AUTHENTIC, PLAGIARIZED}:
        raise ValueError(f"calibration needs both classes, got {sorted(labels)}")
    values = sorted({s for s, _ in scores})
    candidates: list[tuple[float, float]] = []  # (tau, gap width)
    for lo, hi in zip(values, values[1:]):
        candidates.append(((lo + hi) / 2.0, hi - lo))
    sentinels = [values[0] - 1.0, values[-1] + 1.0]

    best_acc = -1.0
    best_tau = sentinels[0]
    best_width = -1.0
    for tau, width in candidates:
        acc = threshold_accuracy(tau, scores)
        if acc > best_acc or (acc == best_acc and width > best_width):
            best_acc, best_tau, best_width = acc, tau, width
    for tau in sentinels:
        acc = threshold_accuracy(tau, scores)
        if acc > best_acc:
            best_acc, best_tau, best_width = acc, tau, float("inf")
    return best_tau


def classify_threshold(model: ThresholdModel, score: float) -> str:
    return PLAGIARIZED if score < model.tau else AUTHENTIC


@dataclass
class SvmModel:
    w: np.ndarray
    b: float
    lam: float

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64).ravel()
        if not np.isfinite(self.w).all() or not np.isfinite(self.b):
            raise ValueError("SVM parameters must be finite")
        if self.lam <= 0:
            raise ValueError(f"lambda must be > 0, got {self.lam}")

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps({
            "w": self.w.tolist(), "b": self.b, "lambda": self.lam,
        }, indent=2) + "\n")

    @classmethod
    def from_json(cls, path: str | Path) -> "SvmModel":
        obj = json.loads(Path(path).read_text())
        return cls(w=np.array(obj["w"], dtype=np.float64), b=obj["b"], lam=obj["lambda"])


def svm_objective(w: np.ndarray, b: float, x: np.ndarray, y: np.ndarray,
                  lam: float) -> float:
    """Regularized hinge objective: lam/2 ||w||^2 + mean(max(0, 1 - y(wx+b)))."""
    margins = 1.0 - y * (x @ w + b)
    return 0.5 * lam * float(w @ w) + float(np.mean(np.maximum(0.0, margins)))


def train_svm(features: np.ndarray, labels: list[str], lam: float = 1e-2,
              epochs: int = 200, seed: int = 0,
              objective_log: list[float] | None = None) -> SvmModel:
    """Pegasos-style subgradient descent on the regularized hinge objective.

    authentic encodes as +1, plagiarized as -1.  Full-batch updates with the
    decreasing step 1/(lam*t) and projection onto the ball of radius
    1/sqrt(lam); the bias is unregularized.  Deterministic for fixed inputs
    and seed.
    """
    x = np.asarray(features, dtype=np.float64)
    if lam <= 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs}")
    y = np.array([1.0 if lab == AUTHENTIC else -1.0 for lab in labels])
    if len(set(labels)) < 2:
        raise ValueError("SVM training needs both classes present")
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"feature/label count mismatch: {x.shape[0]} vs {y.shape[0]}")

    rng = np.random.Generator(np.random.PCG64(seed))
    w = np.zeros(x.shape[1])
    b = 0.0
    best = (svm_objective(w, b, x, y, lam), w.copy(), b)
    for t in range(1, epochs + 1):
        eta = 1.0 / (lam * t)
        order = rng.permutation(x.shape[0])
        margins = y[order] * (x[order] @ w + b)
        viol = margins < 1.0
        grad_w = lam * w
        grad_b = 0.0
        if viol.any():
            grad_w -= (y[order][viol, None] * x[order][viol]).sum(axis=0) / x.shape[0]
            grad_b = -float(y[order][viol].sum()) / x.shape[0]
        w = w - eta * grad_w
        b = b - eta * grad_b
        radius = 1.0 / np.sqrt(lam)
        norm = np.linalg.norm(w)
        if norm > radius:
            w = w * (radius / norm)
        if not (np.isfinite(w).all() and np.isfinite(b)):
            raise ValueError(f"non-finite SVM weights at epoch {t}")
        obj = svm_objective(w, b, x, y, lam)
        if objective_log is not None:
            objective_log.append(obj)
        if obj < best[0]:
            best = (obj, w.copy(), b)
    _, w, b = best
    return SvmModel(w=w, b=b, lam=lam)


def svm_predict(model: SvmModel, x: np.ndarray) -> str:
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape[0] != model.w.shape[0]:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {model.w.shape[0]}")
    return AUTHENTIC if float(model.w @ x + model.b) >= 0.0 else PLAGIARIZED
