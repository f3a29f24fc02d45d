"""Generate a small on-disk image-classification dataset for trying the
extractor without downloading anything: colored shapes with jitter and
noise, one subfolder per class."""

import argparse
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .encoders import COLORS, SHAPES

SIZE = 64


def _draw_sample(rng, color, shape):
    bg = int(rng.integers(12, 40))
    img = Image.new("RGB", (SIZE, SIZE), (bg, bg, bg))
    draw = ImageDraw.Draw(img)
    jitter = lambda: int(rng.integers(-6, 7))  # noqa: E731
    lo, hi = SIZE // 4 + jitter(), 3 * SIZE // 4 + jitter()
    lo, hi = max(2, min(lo, hi - 8)), min(SIZE - 2, max(hi, lo + 8))
    shade = tuple(int(np.clip(v + rng.integers(-25, 26), 0, 255)) for v in color)
    if shape == "square":
        draw.rectangle([lo, lo, hi, hi], fill=shade)
    elif shape == "circle":
        draw.ellipse([lo, lo, hi, hi], fill=shade)
    elif shape == "triangle":
        draw.polygon([(lo, hi), (hi, hi), ((lo + hi) // 2, lo)], fill=shade)
    else:
        mid = (lo + hi) // 2
        draw.rectangle([4, mid - 5, SIZE - 4, mid + 5], fill=shade)
    arr = np.asarray(img, dtype=np.int16)
    arr = np.clip(arr + rng.integers(-10, 11, size=arr.shape), 0, 255).astype(np.uint8)
    return Image.fromarray(arr)


def make_demo_dataset(out_dir, colors=("red", "green", "blue", "yellow"), shapes=("square", "circle"), per_class=20, seed=0):
    """Write {color}_{shape} class folders of PNGs; returns class names."""
    unknown = [c for c in colors if c not in COLORS] + [s for s in shapes if s not in SHAPES]
    if unknown:
        raise ValueError(f"outside the encoder vocabulary: {unknown}")
    rng = np.random.default_rng(seed)
    out_dir = Path(out_dir)
    names = []
    for color in colors:
        for shape in shapes:
            name = f"{color}_{shape}"
            names.append(name)
            cdir = out_dir / name
            cdir.mkdir(parents=True, exist_ok=True)
            for i in range(per_class):
                _draw_sample(rng, COLORS[color], shape).save(cdir / f"{i:04d}.png")
    return sorted(names)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True)
    parser.add_argument("--per-class", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    names = make_demo_dataset(args.out, per_class=args.per_class, seed=args.seed)
    print(f"wrote {len(names)} classes under {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
