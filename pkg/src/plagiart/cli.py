"""Command-line surface: ingest, synth, train, calibrate, train-svm, query,
evaluate, report.

Exit codes: 0 success, 1 validation failure, 2 usage error.  Commands never
mutate their input files; outputs carry the run configuration and seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from plagiart import classifier, evaluation, metric, pipeline, retrieval, synthetic
from plagiart.store import (LABELS, SPLITS, Dataset, DatasetError,
                            load_dataset, save_dataset, subset)


def _load(args) -> Dataset:
    return load_dataset(args.manifest, args.blob)


def _counts_table(ds: Dataset) -> str:
    counts = ds.counts()
    lines = ["label        " + "".join(f"{s:>8}" for s in SPLITS) + "   total"]
    for label in LABELS:
        row = [counts.get((label, s), 0) for s in SPLITS]
        lines.append(f"{label:<13}" + "".join(f"{c:>8}" for c in row) + f"{sum(row):>8}")
    return "\n".join(lines)


def cmd_ingest(args) -> int:
    ds = _load(args)
    print(f"loaded {len(ds)} records, dim {ds.dim}")
    print(_counts_table(ds))
    return 0


def cmd_synth(args) -> int:
    counts = tuple(int(c) for c in args.counts.split(","))
    if len(counts) != 3:
        raise ValueError(f"--counts must be train,val,test, got {args.counts!r}")
    if args.mode == "separable":
        sigma = 0.3 if args.sigma is None else args.sigma
        spec = synthetic.separable_spec(dim=args.dim, seed=args.seed,
                                        sigma=sigma, counts=counts)
    else:
        sigma = 1.0 if args.sigma is None else args.sigma
        spec = synthetic.split_cluster_spec(dim=args.dim, seed=args.seed,
                                            sigma=sigma, counts=counts)
    ds = synthetic.generate(spec)
    save_dataset(ds, args.out_manifest, args.out_blob)
    print(f"wrote {len(ds)} records (mode={args.mode}, dim={args.dim}, "
          f"sigma={sigma}, seed={args.seed})")
    return 0


def cmd_train(args) -> int:
    ds = _load(args)
    cfg = metric.TrainConfig(margin=args.margin, learning_rate=args.lr,
                             batch_size=args.batch_size, iterations=args.iterations,
                             out_dim=args.out_dim, seed=args.seed)
    log: list[tuple[int, float]] = []
    head = metric.train_projection(ds, cfg, loss_log=log)
    metric.save_head(head, args.out_head)
    if args.loss_csv:
        with open(args.loss_csv, "w") as f:
            f.write("iteration,loss\n")
            for it, loss in log:
                f.write(f"{it},{loss:.10g}\n")
    if log:
        print(f"trained {cfg.iterations} iterations: "
              f"loss {log[0][1]:.6f} -> {log[-1][1]:.6f} (seed={cfg.seed})")
    else:
        print(f"iterations=0: head equals initialization (seed={cfg.seed})")
    print(f"wrote head {head.in_dim}->{head.out_dim} to {args.out_head}")
    return 0


def cmd_calibrate(args) -> int:
    ds = _load(args)
    model, val_acc = pipeline.calibrate_baseline(
        ds, statistic=args.statistic, k=args.k,
        reference_labels=tuple(args.reference.split(",")),
    )
    model.to_json(args.out_model)
    print(f"tau={model.tau:.6f} statistic={model.statistic} "
          f"val_accuracy={val_acc:.4f}")
    return 0


def cmd_train_svm(args) -> int:
    ds = _load(args)
    head = metric.load_head(args.head) if args.head else metric.init_head(ds.dim)
    if args.grid:
        model = pipeline.select_svm(ds, head, seed=args.seed)
    else:
        model = pipeline.fit_svm(ds, head, lam=args.lam, epochs=args.epochs,
                                 seed=args.seed)
    model.to_json(args.out_model)
    print(f"wrote SVM (lambda={model.lam}) to {args.out_model}")
    return 0


def cmd_query(args) -> int:
    ds = _load(args)
    head = metric.load_head(args.head) if args.head else None
    db = pipeline.retrieval_database(
        ds, include_plagiarized=(args.db_variant == "with-plagiarized"))

    if args.query_id is not None:
        idx = {r.id: i for i, r in enumerate(ds.records)}
        if args.query_id not in idx:
            raise ValueError(f"unknown query id {args.query_id!r}")
        raw = ds.embeddings[idx[args.query_id]]
        qid = args.query_id
    else:
        raw = np.array(json.loads(Path(args.vector_json).read_text()), dtype=np.float32)
        qid = "external"

    vec = metric.project(head, raw) if head else raw
    db_eval = Dataset(db.records, metric.project(head, db.embeddings)) if head else db
    rl = retrieval.rank(vec, db_eval, query_id=qid)

    decision = None
    if args.threshold_model:
        model = classifier.ThresholdModel.from_json(args.threshold_model)
        ref = subset(ds, "train", model.reference_labels)
        score = classifier.score_query(raw, ref, model.statistic, model.k)
        decision = classifier.classify_threshold(model, score)
    elif args.svm_model:
        svm = classifier.SvmModel.from_json(args.svm_model)
        decision = classifier.svm_predict(svm, vec)

    for db_id, score in retrieval.top_k(rl, args.top_k).entries:
        print(f"{db_id}\t{score:.6f}")
    if decision is not None:
        print(f"decision: {decision}")
    if args.report:
        Path(args.report).write_text(_query_report(qid, rl, db, args, decision))
        print(f"wrote report to {args.report}")
    return 0


def _query_report(qid: str, rl: retrieval.RankedList, db: Dataset, args,
                  decision: str | None) -> str:
    by_id = {r.id: r for r in db.records}

    def grid(title: str, entries) -> list[str]:
        lines = [f"### {title}", "", "| rank | id | label | score | image |",
                 "|---|---|---|---|---|"]
        for i, (db_id, score) in enumerate(entries, start=1):
            rec = by_id[db_id]
            lines.append(f"| {i} | {db_id} | {rec.label} | {score:.4f} "
                         f"| [{rec.path}]({rec.path}) |")
        lines.append("")
        return lines

    k = args.top_k
    vg = [(i, s) for i, s in rl.entries if by_id[i].label == "van_gogh"][:k]
    others = [(i, s) for i, s in rl.entries if by_id[i].label != "van_gogh"][:k]
    lines = [f"# Query {qid}", ""]
    if decision is not None:
        lines += [f"**Decision:** {decision}", ""]
    lines += grid(f"Top-{k} overall", rl.entries[:k])
    lines += grid(f"Top-{k} Van Gogh", vg)
    lines += grid(f"Top-{k} others", others)
    lines += ["---", "", "```json",
              json.dumps({"query": qid, "top_k": k, "db_variant": args.db_variant,
                          "head": args.head, "threshold_model": args.threshold_model,
                          "svm_model": args.svm_model}, indent=2),
              "```", ""]
    return "\n".join(lines)


def cmd_evaluate(args) -> int:
    ds = _load(args)
    include = args.include_plagiarized_in_db
    if args.method == "baseline":
        if args.threshold_model:
            model = classifier.ThresholdModel.from_json(args.threshold_model)
        else:
            model, _ = pipeline.calibrate_baseline(ds)
        report = pipeline.evaluate_baseline(ds, model, include)
    else:
        head = metric.load_head(args.head) if args.head else metric.init_head(ds.dim)
        if args.svm_model:
            svm = classifier.SvmModel.from_json(args.svm_model)
        else:
            svm = pipeline.select_svm(ds, head, seed=args.seed)
        report = pipeline.evaluate_learning(ds, head, svm, include)
    report.config["seed"] = args.seed
    if args.out:
        report.to_json(args.out)
    print(evaluation.render_table(reports=[report]))
    return 0


def cmd_report(args) -> int:
    reports = [evaluation.EvalReport.from_json(p) for p in args.reports]
    table = evaluation.render_table(reports)
    if args.out:
        Path(args.out).write_text(table + "\n")
    print(table)
    return 0


def _add_dataset_args(p):
    p.add_argument("--manifest", required=True)
    p.add_argument("--blob", required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plagiart",
        description="Plagiarized-painting recognition and retrieval over embeddings",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a manifest+blob pair")
    _add_dataset_args(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--mode", choices=["separable", "split_cluster"], required=True)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--counts", default="300,100,100")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-manifest", required=True)
    p.add_argument("--out-blob", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train the projection head with triplet loss")
    _add_dataset_args(p)
    p.add_argument("--margin", type=float, default=1.0)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--iterations", type=int, default=20_000)
    p.add_argument("--out-dim", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-head", required=True)
    p.add_argument("--loss-csv", default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("calibrate", help="fit the similarity threshold on the val split")
    _add_dataset_args(p)
    p.add_argument("--statistic", choices=["max_similarity", "mean_top_k"],
                   default="max_similarity")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--reference", default="van_gogh,other",
                   help="comma-separated reference labels")
    p.add_argument("--out-model", required=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("train-svm", help="train the linear SVM on projected features")
    _add_dataset_args(p)
    p.add_argument("--head", default=None)
    p.add_argument("--lam", type=float, default=1e-2)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--grid", action="store_true",
                   help="grid-search lambda/epochs on validation accuracy")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-model", required=True)
    p.set_defaults(func=cmd_train_svm)

    p = sub.add_parser("query", help="rank the database for one query")
    _add_dataset_args(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--query-id")
    g.add_argument("--vector-json", help="path to a JSON array of floats")
    p.add_argument("--head", default=None)
    p.add_argument("--top-k", type=int, default=6)
    p.add_argument("--db-variant", choices=["authentic-only", "with-plagiarized"],
                   default="authentic-only")
    p.add_argument("--threshold-model", default=None)
    p.add_argument("--svm-model", default=None)
    p.add_argument("--report", default=None, help="write a markdown retrieval grid")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("evaluate", help="run a method over the test split")
    _add_dataset_args(p)
    p.add_argument("--method", choices=["baseline", "learning"], required=True)
    p.add_argument("--head", default=None)
    p.add_argument("--threshold-model", default=None)
    p.add_argument("--svm-model", default=None)
    p.add_argument("--include-plagiarized-in-db", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="write the EvalReport JSON here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="render a combined comparison table")
    p.add_argument("reports", nargs="+", help="EvalReport JSON files")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DatasetError, ValueError, metric.TrainingError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
