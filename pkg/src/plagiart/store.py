"""Dataset persistence: JSONL manifests plus a bit-exact binary embedding blob.

Blob layout: magic ``PEMB``, then version / count / dim as u32 little-endian,
followed by count*dim float32 little-endian values in row-major order.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

LABELS = ("van_gogh", "other", "plagiarized")
SPLITS = ("train", "val", "test")

MAGIC = b"PEMB"
VERSION = 1


class DatasetError(ValueError):
    """Raised when a manifest/blob pair is malformed or inconsistent."""


@dataclass(frozen=True)
class ImageRecord:
    id: str
    label: str
    split: str
    path: str = ""

    def __post_init__(self):
        if not self.id:
            raise DatasetError("record id must be non-empty")
        if self.label not in LABELS:
            raise DatasetError(f"unknown label {self.label!r}, expected one of {LABELS}")
        if self.split not in SPLITS:
            raise DatasetError(f"unknown split {self.split!r}, expected one of {SPLITS}")


@dataclass
class Dataset:
    """Immutable-by-convention pairing of records with aligned embedding rows."""

    records: list[ImageRecord]
    embeddings: np.ndarray  # float32, shape (len(records), dim)

    def __post_init__(self):
        self.embeddings = np.ascontiguousarray(self.embeddings, dtype=np.float32)
        if self.embeddings.ndim != 2:
            raise DatasetError(f"embeddings must be 2-D, got shape {self.embeddings.shape}")
        if len(self.records) != self.embeddings.shape[0]:
            raise DatasetError(
                f"alignment error: {len(self.records)} records vs "
                f"{self.embeddings.shape[0]} embedding rows"
            )
        bad = ~np.isfinite(self.embeddings)
        if bad.any():
            row = int(np.argwhere(bad)[0][0])
            raise DatasetError(f"non-finite embedding value at row {row}")
        seen: set[str] = set()
        for rec in self.records:
            if rec.id in seen:
                raise DatasetError(f"duplicate record id {rec.id!r}")
            seen.add(rec.id)

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]

    def __len__(self) -> int:
        return len(self.records)

    def counts(self) -> dict[tuple[str, str], int]:
        """Record counts per (label, split) cell."""
        out: dict[tuple[str, str], int] = {}
        for rec in self.records:
            key = (rec.label, rec.split)
            out[key] = out.get(key, 0) + 1
        return out


def load_dataset(manifest_path: str | Path, blob_path: str | Path) -> Dataset:
    """Load and validate a manifest.jsonl + embeddings.pemb pair.

    Record order equals manifest line order equals blob row order.
    """
    records = _read_manifest(Path(manifest_path))
    matrix = _read_blob(Path(blob_path))
    if matrix.shape[0] != len(records):
        raise DatasetError(
            f"alignment error: manifest has {len(records)} records, "
            f"blob has {matrix.shape[0]} rows"
        )
    return Dataset(records, matrix)


def save_dataset(ds: Dataset, manifest_path: str | Path, blob_path: str | Path) -> None:
    """Persist a dataset so that a subsequent load reproduces it bit-exactly."""
    if len(ds) == 0:
        raise DatasetError("refusing to save an empty dataset")
    manifest_path = Path(manifest_path)
    blob_path = Path(blob_path)
    with manifest_path.open("w", encoding="utf-8") as f:
        for rec in ds.records:
            f.write(json.dumps(
                {"id": rec.id, "label": rec.label, "split": rec.split, "path": rec.path}
            ) + "\n")
    n, dim = ds.embeddings.shape
    with blob_path.open("wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<III", VERSION, n, dim))
        f.write(ds.embeddings.astype("<f4", copy=False).tobytes())


def subset(ds: Dataset, split: str | None = None,
           labels: Iterable[str] | None = None) -> Dataset:
    """Filter by split and/or label set, preserving relative record order.

    Returns the matching records with their embedding rows copied.  The result
    may be empty; empty datasets are only rejected at load/save time.
    """
    idx = subset_indices(ds, split, labels)
    return Dataset([ds.records[i] for i in idx], ds.embeddings[idx])


def subset_indices(ds: Dataset, split: str | None = None,
                   labels: Iterable[str] | None = None) -> list[int]:
    label_set = None if labels is None else set(labels)
    out = []
    for i, rec in enumerate(ds.records):
        if split is not None and rec.split != split:
            continue
        if label_set is not None and rec.label not in label_set:
            continue
        out.append(i)
    return out


def _read_manifest(path: Path) -> list[ImageRecord]:
    records = []
    with path.open("r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                rec = ImageRecord(
                    id=str(obj["id"]), label=obj["label"],
                    split=obj["split"], path=str(obj.get("path", "")),
                )
            except (json.JSONDecodeError, KeyError, TypeError, DatasetError) as e:
                raise DatasetError(f"{path}: malformed record at line {lineno}: {e}") from e
            records.append(rec)
    if not records:
        raise DatasetError(f"{path}: manifest contains no records")
    return records


def _read_blob(path: Path) -> np.ndarray:
    data = path.read_bytes()
    if len(data) < 16:
        raise DatasetError(f"{path}: truncated header ({len(data)} bytes)")
    if data[:4] != MAGIC:
        raise DatasetError(f"{path}: bad magic {data[:4]!r}, expected {MAGIC!r}")
    version, count, dim = struct.unpack("<III", data[4:16])
    if version != VERSION:
        raise DatasetError(f"{path}: unsupported version {version}, expected {VERSION}")
    if dim == 0:
        raise DatasetError(f"{path}: dim must be positive")
    expected = 16 + 4 * count * dim
    if len(data) != expected:
        raise DatasetError(
            f"{path}: size mismatch: header says {count}x{dim} "
            f"({expected} bytes), file has {len(data)}"
        )
    matrix = np.frombuffer(data, dtype="<f4", offset=16).reshape(count, dim)
    bad = ~np.isfinite(matrix)
    if bad.any():
        row = int(np.argwhere(bad)[0][0])
        raise DatasetError(f"{path}: non-finite value at row {row}")
    return matrix.astype(np.float32)
