"""Batch feature extraction with a pretrained vision transformer.

Images are resized to 224x224 (no crop, aspect ratio not preserved),
normalized with ImageNet statistics, and embedded with a DINOv2-style model
in deterministic eval mode.  Output is the manifest.jsonl + embeddings.pemb
pair consumed by the plagiart toolkit; the blob layout is magic ``PEMB``,
version / count / dim as u32 little-endian, then count*dim float32 LE values
row-major.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from PIL import Image, UnidentifiedImageError

log = logging.getLogger("plag_extractor")

IMAGE_SIZE = 224
IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)
IMAGE_SUFFIXES = {".jpg", ".jpeg", ".png", ".bmp", ".webp", ".tiff"}

LABELS = ("van_gogh", "other", "plagiarized")
SPLITS = ("train", "val", "test")

PEMB_MAGIC = b"PEMB"
PEMB_VERSION = 1


class ExtractionError(RuntimeError):
    pass


@dataclass
class ExtractionJob:
    label_dirs: dict[str, Path]  # label -> image folder
    out_manifest: Path
    out_blob: Path
    model: str = "facebook/dinov2-small"
    # either a ratio triple summing to 1 or a JSON file mapping filename -> split
    split_ratios: tuple[float, float, float] | None = (0.6, 0.2, 0.2)
    splits_file: Path | None = None
    feature: str = "class_token"  # or "mean_pool"
    batch_size: int = 8
    strict: bool = False

    def validate(self) -> None:
        unknown = set(self.label_dirs) - set(LABELS)
        if unknown:
            raise ExtractionError(f"unknown labels {sorted(unknown)}")
        if not self.label_dirs:
            raise ExtractionError("no input folders given")
        if self.feature not in ("class_token", "mean_pool"):
            raise ExtractionError(f"unknown feature kind {self.feature!r}")
        if self.splits_file is None:
            if self.split_ratios is None or len(self.split_ratios) != 3:
                raise ExtractionError("need either split ratios or a splits file")
            if abs(sum(self.split_ratios) - 1.0) > 1e-6:
                raise ExtractionError(f"split ratios must sum to 1, got {self.split_ratios}")


def list_images(folder: Path) -> list[Path]:
    return sorted(p for p in folder.iterdir()
                  if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def assign_splits(files: list[Path], job: ExtractionJob) -> list[str]:
    """One split per file: explicit mapping, or contiguous proportional blocks
    over the sorted filename order."""
    if job.splits_file is not None:
        mapping = json.loads(Path(job.splits_file).read_text())
        out = []
        for f in files:
            split = mapping.get(f.name)
            if split not in SPLITS:
                raise ExtractionError(f"{f.name}: no valid split in {job.splits_file}")
            out.append(split)
        return out
    n = len(files)
    n_train = round(n * job.split_ratios[0])
    n_val = round(n * job.split_ratios[1])
    return (["train"] * n_train + ["val"] * n_val + ["test"] * (n - n_train - n_val))[:n]


def preprocess(path: Path) -> torch.Tensor:
    """Resize to 224x224, scale to [0,1], normalize with ImageNet stats; CHW."""
    with Image.open(path) as img:
        img = img.convert("RGB").resize((IMAGE_SIZE, IMAGE_SIZE), Image.BILINEAR)
        arr = np.asarray(img, dtype=np.float32) / 255.0
    arr = (arr - np.array(IMAGENET_MEAN, dtype=np.float32)) / np.array(
        IMAGENET_STD, dtype=np.float32)
    return torch.from_numpy(arr.transpose(2, 0, 1))


def load_model(identifier: str) -> torch.nn.Module:
    from transformers import AutoModel
    try:
        model = AutoModel.from_pretrained(identifier)
    except Exception as e:
        raise ExtractionError(f"cannot load model {identifier!r}: {e}") from e
    model.eval()
    return model


def embed_batch(model: torch.nn.Module, batch: torch.Tensor, feature: str) -> np.ndarray:
    with torch.no_grad():
        out = model(pixel_values=batch)
    hidden = out.last_hidden_state  # (n, 1 + patches, dim)
    if feature == "class_token":
        vecs = hidden[:, 0, :]
    else:
        vecs = hidden[:, 1:, :].mean(dim=1)
    return vecs.to(torch.float32).cpu().numpy()


def write_pair(records: list[dict], matrix: np.ndarray,
               out_manifest: Path, out_blob: Path) -> None:
    if len(records) != matrix.shape[0]:
        raise ExtractionError(
            f"record/row mismatch: {len(records)} vs {matrix.shape[0]}")
    with out_manifest.open("w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec) + "\n")
    n, dim = matrix.shape
    with out_blob.open("wb") as f:
        f.write(PEMB_MAGIC)
        f.write(struct.pack("<III", PEMB_VERSION, n, dim))
        f.write(matrix.astype("<f4", copy=False).tobytes())


def extract(job: ExtractionJob) -> tuple[int, int]:
    """Run the full extraction; returns (images embedded, images skipped)."""
    job.validate()
    torch.manual_seed(0)  # model load must not depend on ambient RNG state
    model = load_model(job.model)

    records: list[dict] = []
    tensors: list[torch.Tensor] = []
    skipped = 0
    for label in LABELS:
        folder = job.label_dirs.get(label)
        if folder is None:
            continue
        folder = Path(folder)
        if not folder.is_dir():
            raise ExtractionError(f"{folder}: not a directory")
        files = list_images(folder)
        splits = assign_splits(files, job)
        for f, split in zip(files, splits):
            try:
                tensors.append(preprocess(f))
            except (UnidentifiedImageError, OSError) as e:
                if job.strict:
                    raise ExtractionError(f"{f}: cannot decode image: {e}") from e
                log.warning("skipping undecodable image %s: %s", f, e)
                skipped += 1
                continue
            records.append({"id": f"{label}/{f.name}", "label": label,
                            "split": split, "path": str(f)})
    if not records:
        raise ExtractionError("no decodable images found")

    rows = []
    for start in range(0, len(tensors), job.batch_size):
        batch = torch.stack(tensors[start:start + job.batch_size])
        rows.append(embed_batch(model, batch, job.feature))
    matrix = np.vstack(rows)
    if not np.isfinite(matrix).all():
        raise ExtractionError("model produced non-finite embedding values")
    write_pair(records, matrix, Path(job.out_manifest), Path(job.out_blob))
    return len(records), skipped
