"""Exhaustive cosine-similarity retrieval with deterministic rankings.

Database sizes in scope are small enough that brute-force scoring is exact
and cheap; no approximate index is used so rankings stay reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from plagiart.store import Dataset


@dataclass
class RankedList:
    """Descending-score ordering of database items for one query.

    Ties are broken by ascending db id so the ordering is a total order,
    independent of any internal parallelism.
    """

    query_id: str
    entries: list[tuple[str, float]]

    def ids(self) -> list[str]:
        return [db_id for db_id, _ in self.entries]

    def scores(self) -> list[float]:
        return [s for _, s in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine of the angle between two vectors, in [-1, 1].

    Zero-norm inputs are a domain error; mismatched dims a usage error.
    """
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape[0]} vs {v.shape[0]}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine similarity undefined for zero-norm vector")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def rank(query: np.ndarray, db: Dataset, query_id: str = "query") -> RankedList:
    """Rank every database item against the query by cosine similarity."""
    query = np.asarray(query, dtype=np.float64).ravel()
    if len(db) == 0:
        raise ValueError("cannot rank against an empty database")
    if query.shape[0] != db.dim:
        raise ValueError(f"dimension mismatch: query {query.shape[0]} vs db {db.dim}")
    qn = np.linalg.norm(query)
    if qn == 0.0:
        raise ValueError("cosine similarity undefined for zero-norm vector")
    mat = db.embeddings.astype(np.float64)
    norms = np.linalg.norm(mat, axis=1)
    if np.any(norms == 0.0):
        bad = int(np.argwhere(norms == 0.0)[0][0])
        raise ValueError(f"zero-norm database row {bad} ({db.records[bad].id})")
    scores = np.clip(mat @ query / (norms * qn), -1.0, 1.0)
    order = sorted(range(len(db)), key=lambda i: (-scores[i], db.records[i].id))
    return RankedList(query_id, [(db.records[i].id, float(scores[i])) for i in order])


def top_k(rl: RankedList, k: int) -> RankedList:
    """First min(k, len) entries of a ranked list, order preserved."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return RankedList(rl.query_id, rl.entries[:k])
