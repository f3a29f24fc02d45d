"""Embedding dataset model, binary on-disk format, synthetic pools, oracle.

File layout (little-endian, no padding):

    bytes 0-3    magic "AEPL"
    bytes 4-7    version, u32 (currently 1)
    bytes 8-11   header length H, u32
    bytes 12..   UTF-8 JSON header {"n","d","c","class_names","split"}
    then         n*d float32 image embeddings, row-major
    then         n   uint32 labels
    then         c*d float32 text embeddings, row-major

EOF must land exactly at the end of the text-embedding block. Embeddings
are stored at 32-bit precision; engine arithmetic is done at 64-bit.
"""

import json
import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"AEPL"
VERSION = 1

TRAIN = 0
TEST = 1

NORM_TOL = 1e-5


class DatasetFormatError(Exception):
    """Malformed dataset file; ``offset`` is the first offending byte."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class BadMagicError(DatasetFormatError):
    pass


class VersionMismatchError(DatasetFormatError):
    pass


class HeaderError(DatasetFormatError):
    pass


class TruncatedFileError(DatasetFormatError):
    pass


class TrailingBytesError(DatasetFormatError):
    pass


class NonFiniteValueError(DatasetFormatError):
    pass


class InvalidValueError(DatasetFormatError):
    """In-range structural violations: bad labels, bad split tags, bad norms."""


class OracleAccessError(ValueError):
    """The simulated annotator was asked about an index it may not see."""


@dataclass(eq=False)
class EmbeddingDataset:
    """Frozen embeddings plus labels, class names and split tags.

    Ground-truth ``labels`` ride along for the oracle, evaluation, the
    label-guided ablation and dataset-quality metrics only; acquisition
    code must not read them.
    """

    image_embeds: np.ndarray  # (n, d) float32, unit rows
    labels: np.ndarray  # (n,) uint32
    class_names: list
    zeroshot_text_embeds: np.ndarray  # (c, d) float32, unit rows
    split: np.ndarray  # (n,) uint8, 0=train / 1=test

    _images64: np.ndarray = field(default=None, repr=False, compare=False)
    _text64: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def n(self):
        return self.image_embeds.shape[0]

    @property
    def d(self):
        return self.image_embeds.shape[1]

    @property
    def c(self):
        return len(self.class_names)

    @property
    def images64(self):
        """Image embeddings widened to float64 (cached)."""
        if self._images64 is None:
            self._images64 = self.image_embeds.astype(np.float64)
        return self._images64

    @property
    def text64(self):
        if self._text64 is None:
            self._text64 = self.zeroshot_text_embeds.astype(np.float64)
        return self._text64

    def split_indices(self, split):
        """Indices of one split; ``split`` is "train" or "test"."""
        tag = {"train": TRAIN, "test": TEST}[split]
        return np.flatnonzero(self.split == tag)

    def validate(self):
        n, d, c = self.n, self.d, self.c
        if self.zeroshot_text_embeds.shape != (c, d):
            raise ValueError("text embeddings shape mismatch")
        if self.labels.shape != (n,) or self.split.shape != (n,):
            raise ValueError("labels/split length mismatch")
        if n and int(self.labels.max()) >= c:
            raise ValueError("label out of range")
        if not np.all((self.split == TRAIN) | (self.split == TEST)):
            raise ValueError("split tags must be 0 or 1")
        for name, mat in (("image", self.image_embeds), ("text", self.zeroshot_text_embeds)):
            norms = np.linalg.norm(mat.astype(np.float64), axis=1)
            if norms.size and np.abs(norms - 1.0).max() > NORM_TOL:
                raise ValueError(f"{name} embedding rows must be unit norm within {NORM_TOL}")
        return self


@dataclass
class SyntheticSpec:
    """Recipe for a class-anchored synthetic pool."""

    c: int
    d: int
    per_class: int
    spread: float = 0.0
    text_noise: float = 0.0
    seed: int = 0

    def validate(self):
        if self.c < 2 or self.d < 2 or self.per_class < 1:
            raise ValueError("need c >= 2, d >= 2, per_class >= 1")
        if self.spread < 0 or self.text_noise < 0:
            raise ValueError("noise scales must be nonnegative")
        return self


def _unit_rows(mat):
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ValueError("cannot normalize a zero row")
    return mat / norms


def generate_synthetic(spec: SyntheticSpec) -> EmbeddingDataset:
    """Class-anchored Gaussian pool; pure function of the spec.

    Each class gets a random unit anchor; images are the anchor plus
    isotropic noise, renormalized. The 80/20 train/test split cycles a
    four-train-one-test pattern within each class.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    anchors = _unit_rows(rng.standard_normal((spec.c, spec.d)))

    n = spec.c * spec.per_class
    images = np.empty((n, spec.d))
    labels = np.empty(n, dtype=np.uint32)
    split = np.empty(n, dtype=np.uint8)
    for cls in range(spec.c):
        noise = rng.standard_normal((spec.per_class, spec.d))
        rows = anchors[cls] + spec.spread * noise
        base = cls * spec.per_class
        images[base : base + spec.per_class] = _unit_rows(rows)
        labels[base : base + spec.per_class] = cls
        for j in range(spec.per_class):
            split[base + j] = TEST if j % 5 == 4 else TRAIN

    text = _unit_rows(anchors + spec.text_noise * rng.standard_normal((spec.c, spec.d)))
    return EmbeddingDataset(
        image_embeds=images.astype(np.float32),
        labels=labels,
        class_names=[f"class_{i}" for i in range(spec.c)],
        zeroshot_text_embeds=text.astype(np.float32),
        split=split,
    ).validate()


def save_dataset(ds: EmbeddingDataset, path) -> None:
    """Write the binary format; identical datasets produce identical bytes."""
    ds.validate()
    header = json.dumps(
        {
            "n": ds.n,
            "d": ds.d,
            "c": ds.c,
            "class_names": list(ds.class_names),
            "split": [int(s) for s in ds.split],
        },
        separators=(",", ":"),
        ensure_ascii=False,
    ).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(header)))
        f.write(header)
        f.write(np.ascontiguousarray(ds.image_embeds, dtype="<f4").tobytes())
        f.write(np.ascontiguousarray(ds.labels, dtype="<u4").tobytes())
        f.write(np.ascontiguousarray(ds.zeroshot_text_embeds, dtype="<f4").tobytes())


def _check_finite(mat, what, section_start):
    bad = np.flatnonzero(~np.isfinite(mat.ravel()))
    if bad.size:
        raise NonFiniteValueError(
            f"non-finite value in {what} embeddings", section_start + 4 * int(bad[0])
        )


def load_dataset(path) -> EmbeddingDataset:
    """Read the binary format back; byte-deterministic inverse of save."""
    with open(path, "rb") as f:
        blob = f.read()

    if len(blob) < 4 or blob[:4] != MAGIC:
        raise BadMagicError("bad magic, expected 'AEPL'", 0)
    if len(blob) < 12:
        raise TruncatedFileError("file ends inside the fixed header", len(blob))
    version, hlen = struct.unpack_from("<II", blob, 4)
    if version != VERSION:
        raise VersionMismatchError(f"unsupported version {version}", 4)
    if 12 + hlen > len(blob):
        raise TruncatedFileError("file ends inside the JSON header", len(blob))

    try:
        header = json.loads(blob[12 : 12 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise HeaderError(f"unparseable JSON header: {exc}", 12) from None
    try:
        n, d, c = int(header["n"]), int(header["d"]), int(header["c"])
        class_names = list(header["class_names"])
        split_list = list(header["split"])
    except (KeyError, TypeError) as exc:
        raise HeaderError(f"header missing field: {exc}", 12) from None
    if n < 0 or d <= 0 or c <= 0:
        raise HeaderError("header dimensions out of range", 12)
    if len(class_names) != c:
        raise HeaderError(f"expected {c} class names, got {len(class_names)}", 12)
    if len(split_list) != n or not all(s in (0, 1) for s in split_list):
        raise HeaderError("split must be a 0/1 list of length n", 12)

    img_start = 12 + hlen
    lab_start = img_start + 4 * n * d
    txt_start = lab_start + 4 * n
    end = txt_start + 4 * c * d
    if len(blob) < end:
        raise TruncatedFileError(
            f"payload truncated: expected {end} bytes, file has {len(blob)}", len(blob)
        )
    if len(blob) > end:
        raise TrailingBytesError(f"{len(blob) - end} trailing bytes after payload", end)

    images = np.frombuffer(blob, dtype="<f4", count=n * d, offset=img_start).reshape(n, d)
    labels = np.frombuffer(blob, dtype="<u4", count=n, offset=lab_start)
    text = np.frombuffer(blob, dtype="<f4", count=c * d, offset=txt_start).reshape(c, d)

    _check_finite(images, "image", img_start)
    _check_finite(text, "text", txt_start)
    bad = np.flatnonzero(labels >= c)
    if bad.size:
        raise InvalidValueError(f"label {labels[bad[0]]} >= c", lab_start + 4 * int(bad[0]))

    for what, mat, start in (("image", images, img_start), ("text", text, txt_start)):
        norms = np.linalg.norm(mat.astype(np.float64), axis=1)
        off = np.flatnonzero(np.abs(norms - 1.0) > NORM_TOL)
        if off.size:
            raise InvalidValueError(
                f"{what} row {off[0]} has norm {norms[off[0]]:.6f}", start + 4 * d * int(off[0])
            )

    ds = EmbeddingDataset(
        image_embeds=images.copy(),
        labels=labels.astype(np.uint32),
        class_names=class_names,
        zeroshot_text_embeds=text.copy(),
        split=np.asarray(split_list, dtype=np.uint8),
    )
    return ds.validate()


def oracle_label(ds: EmbeddingDataset, index: int) -> int:
    """Simulated annotator: ground truth for train-split images only."""
    if not 0 <= index < ds.n:
        raise OracleAccessError(f"index {index} out of range")
    if ds.split[index] != TRAIN:
        raise OracleAccessError(f"index {index} is not in the train split")
    return int(ds.labels[index])
