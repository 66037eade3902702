"""End-to-end evaluation pipelines shared by the CLI and the test harness.

Retrieval database = train split (van_gogh + other, optionally plagiarized);
queries = test split.  The baseline classifies by thresholding the similarity
statistic against a reference set of raw embeddings; the learning method
projects embeddings through a trained head and classifies with a linear SVM.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from plagiart import classifier, evaluation, metric, retrieval
from plagiart.store import Dataset, subset
from plagiart.classifier import SvmModel, ThresholdModel, binary_label
from plagiart.evaluation import EvalReport, NoPositivesError
from plagiart.metric import ProjectionHead


def retrieval_database(ds: Dataset, include_plagiarized: bool = False) -> Dataset:
    labels = {"van_gogh", "other"}
    if include_plagiarized:
        labels.add("plagiarized")
    return subset(ds, "train", labels)


def calibrate_baseline(ds: Dataset, statistic: str = "max_similarity", k: int = 1,
                       reference_labels: tuple[str, ...] = ("van_gogh", "other"),
                       ) -> tuple[ThresholdModel, float]:
    """Fit the threshold on validation-split scores; returns (model, val accuracy)."""
    ref = subset(ds, "train", reference_labels)
    val = subset(ds, "val")
    scored = [
        (classifier.score_query(val.embeddings[i], ref, statistic, k),
         binary_label(val.records[i].label))
        for i in range(len(val))
    ]
    tau = classifier.calibrate_threshold(scored)
    model = ThresholdModel(tau=tau, statistic=statistic, k=k,
                           reference_labels=tuple(reference_labels))
    return model, classifier.threshold_accuracy(tau, scored)


def fit_svm(ds: Dataset, head: ProjectionHead, lam: float = 1e-2,
            epochs: int = 200, seed: int = 0) -> SvmModel:
    """Train the SVM on projected train-split embeddings."""
    train = subset(ds, "train")
    feats = metric.project(head, train.embeddings)
    labels = [binary_label(r.label) for r in train.records]
    return classifier.train_svm(feats, labels, lam=lam, epochs=epochs, seed=seed)


def select_svm(ds: Dataset, head: ProjectionHead, seed: int = 0,
               lam_grid=(1e-4, 1e-3, 1e-2, 1e-1), epoch_grid=(100, 500)) -> SvmModel:
    """Grid-search lambda and epochs on validation accuracy."""
    val = subset(ds, "val")
    val_feats = metric.project(head, val.embeddings)
    val_labels = [binary_label(r.label) for r in val.records]
    best = None
    for lam in lam_grid:
        for epochs in epoch_grid:
            model = fit_svm(ds, head, lam=lam, epochs=epochs, seed=seed)
            acc = np.mean([
                classifier.svm_predict(model, val_feats[i]) == val_labels[i]
                for i in range(len(val_labels))
            ])
            if best is None or acc > best[0]:
                best = (acc, model)
    return best[1]


def _evaluate(ds: Dataset, method: str,
              transform: Callable[[np.ndarray], np.ndarray],
              classify: Callable[[np.ndarray], str],
              include_plagiarized_in_db: bool,
              config: dict) -> EvalReport:
    db = retrieval_database(ds, include_plagiarized_in_db)
    db = Dataset(db.records, transform(db.embeddings))
    test = subset(ds, "test")
    ap_results = []
    per_query_ap = {}
    no_positive = 0
    predictions = []
    for i, rec in enumerate(test.records):
        vec = transform(test.embeddings[i][None, :])[0]
        rl = retrieval.rank(vec, db, query_id=rec.id)
        mask = evaluation.positives_for(rec.label, db)
        try:
            res = evaluation.average_precision(rl, mask, db_ids=[r.id for r in db.records])
            ap_results.append(res)
            per_query_ap[rec.id] = res.ap
        except NoPositivesError:
            no_positive += 1
        predictions.append((rec.label, classify(test.embeddings[i])))
    acc = evaluation.accuracy_breakdown(predictions, binary_label)
    return EvalReport(
        method=method,
        accuracy_van_gogh=acc["accuracy_van_gogh"],
        accuracy_plagiarized=acc["accuracy_plagiarized"],
        accuracy_other=acc["accuracy_other"],
        accuracy_overall=acc["accuracy_overall"],
        map=evaluation.mean_ap(ap_results) if ap_results else 0.0,
        num_queries=len(test),
        num_no_positive_queries=no_positive,
        per_query_ap=per_query_ap,
        config=config,
    )


def evaluate_baseline(ds: Dataset, model: ThresholdModel,
                      include_plagiarized_in_db: bool = False) -> EvalReport:
    ref = subset(ds, "train", model.reference_labels)

    def classify(vec: np.ndarray) -> str:
        score = classifier.score_query(vec, ref, model.statistic, model.k)
        return classifier.classify_threshold(model, score)

    config = {"tau": model.tau, "statistic": model.statistic,
              "reference_labels": list(model.reference_labels),
              "include_plagiarized_in_db": include_plagiarized_in_db}
    return _evaluate(ds, "baseline", lambda e: e, classify,
                     include_plagiarized_in_db, config)


def evaluate_learning(ds: Dataset, head: ProjectionHead, svm: SvmModel,
                      include_plagiarized_in_db: bool = False) -> EvalReport:
    def transform(emb: np.ndarray) -> np.ndarray:
        return metric.project(head, emb)

    def classify(vec: np.ndarray) -> str:
        return classifier.svm_predict(svm, metric.project(head, vec))

    config = {"head_dims": [head.in_dim, head.out_dim], "svm_lambda": svm.lam,
              "include_plagiarized_in_db": include_plagiarized_in_db}
    return _evaluate(ds, "learning", transform, classify,
                     include_plagiarized_in_db, config)
