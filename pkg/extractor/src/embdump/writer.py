"""AEPL binary writer.

Layout (little-endian, no padding): magic "AEPL", u32 version 1, u32
header length, UTF-8 JSON header {"n","d","c","class_names","split"},
then n*d float32 image embeddings row-major, n uint32 labels, and c*d
float32 text embeddings. The write is atomic (temp file + rename).
"""

import json
import os
import struct

import numpy as np

MAGIC = b"AEPL"
VERSION = 1


def write_aepl(path, image_embeds, labels, class_names, text_embeds, split):
    image_embeds = np.ascontiguousarray(image_embeds, dtype="<f4")
    text_embeds = np.ascontiguousarray(text_embeds, dtype="<f4")
    labels = np.ascontiguousarray(labels, dtype="<u4")
    split = np.ascontiguousarray(split, dtype=np.uint8)

    n, d = image_embeds.shape
    c = len(class_names)
    if text_embeds.shape != (c, d) or labels.shape != (n,) or split.shape != (n,):
        raise ValueError("inconsistent array shapes for the AEPL layout")
    for name, mat in (("image", image_embeds), ("text", text_embeds)):
        norms = np.linalg.norm(mat.astype(np.float64), axis=1)
        if norms.size and np.abs(norms - 1.0).max() > 1e-5:
            raise ValueError(f"{name} embedding rows must be unit norm within 1e-5")

    header = json.dumps(
        {
            "n": int(n),
            "d": int(d),
            "c": int(c),
            "class_names": [str(s) for s in class_names],
            "split": [int(s) for s in split],
        },
        separators=(",", ":"),
        ensure_ascii=False,
    ).encode("utf-8")

    tmp = f"{path}.tmp"
    with open(tmp, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(header)))
        f.write(header)
        f.write(image_embeds.tobytes())
        f.write(labels.tobytes())
        f.write(text_embeds.tobytes())
    os.replace(tmp, path)
