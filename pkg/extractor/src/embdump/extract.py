"""Folder scan, batched encoding, stratified split, AEPL dump."""

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .encoders import get_encoder
from .writer import write_aepl

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".webp"}


@dataclass
class ExtractJob:
    data: str  # image folder with one subfolder per class
    out: str
    model: str = "clip-vit-b32"
    batch: int = 32
    device: str = "cpu"
    seed: int = 0

    def validate(self):
        if self.batch < 1:
            raise ValueError("batch must be >= 1")
        if not Path(self.data).is_dir():
            raise ValueError(f"data folder {self.data!r} does not exist")
        return self


def scan_folder(root):
    """(class_names, [(path, label), ...]); classes ordered lexicographically."""
    root = Path(root)
    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not class_dirs:
        raise ValueError(f"no class subfolders under {root}")
    class_names = [p.name for p in class_dirs]
    files = []
    for label, cdir in enumerate(class_dirs):
        for path in sorted(cdir.iterdir()):
            if path.suffix.lower() in IMAGE_SUFFIXES:
                files.append((path, label))
    if not files:
        raise ValueError(f"no images under {root}")
    return class_names, files


def stratified_split(labels, seed, test_fraction=0.2):
    """0=train / 1=test tags, 80/20 within each class, seeded."""
    labels = np.asarray(labels)
    split = np.zeros(len(labels), dtype=np.uint8)
    rng = np.random.default_rng(seed)
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        n_test = int(round(test_fraction * len(idx))) if len(idx) > 1 else 0
        chosen = rng.permutation(idx)[:n_test]
        split[chosen] = 1
    return split


def extract(job: ExtractJob) -> dict:
    """Run the job; returns the manifest that was written alongside."""
    job.validate()
    encoder = get_encoder(job.model, device=job.device)
    class_names, files = scan_folder(job.data)

    rows, labels, skipped = [], [], []
    batch_imgs, batch_labels = [], []

    def flush():
        if batch_imgs:
            rows.append(encoder.encode_images(batch_imgs))
            labels.extend(batch_labels)
            for img in batch_imgs:
                img.close()
            batch_imgs.clear()
            batch_labels.clear()

    for path, label in files:
        try:
            img = Image.open(path)
            img.load()
        except (OSError, UnidentifiedImageError) as exc:
            warnings.warn(f"skipping unreadable image {path}: {exc}", stacklevel=2)
            skipped.append(str(path))
            continue
        batch_imgs.append(img)
        batch_labels.append(label)
        if len(batch_imgs) >= job.batch:
            flush()
    flush()

    if not labels:
        raise ValueError("every image was unreadable")
    image_embeds = np.vstack(rows)
    labels = np.asarray(labels, dtype=np.uint32)
    text_embeds = encoder.encode_texts(class_names)
    split = stratified_split(labels, job.seed)

    write_aepl(job.out, image_embeds, labels, class_names, text_embeds, split)
    manifest = {
        "data": str(job.data),
        "model": job.model,
        "seed": job.seed,
        "n": int(len(labels)),
        "d": int(image_embeds.shape[1]),
        "c": len(class_names),
        "class_names": class_names,
        "skipped": skipped,
    }
    manifest_path = f"{job.out}.manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")
    return manifest
