"""Plagiarized-painting recognition and retrieval toolkit.

Operates on precomputed image embeddings: cosine-similarity retrieval,
triplet-loss metric learning over a linear projection head, threshold/SVM
classification, and a mAP evaluation harness with query-dependent positive
policies.
"""

from plagiart.store import Dataset, ImageRecord, load_dataset, save_dataset, subset

__all__ = ["Dataset", "ImageRecord", "load_dataset", "save_dataset", "subset"]
