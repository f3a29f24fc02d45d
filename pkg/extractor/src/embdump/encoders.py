"""Vision-language encoders behind one small interface.

Two implementations:

* ``clip-vit-b32`` wraps the pretrained CLIP ViT-B/32 through transformers
  (needs downloadable or cached weights).
* ``patch-stats`` is a self-contained offline encoder pair: images map to
  color/layout statistics, and a class name maps to the image features of
  a canonically rendered example parsed from the name. Alignment between
  the two sides holds by construction, which is all zero-shot needs.
"""

import numpy as np
from PIL import Image, ImageDraw

TEXT_TEMPLATE = "a photo of a {}."

# vocabulary the offline text encoder understands
COLORS = {
    "red": (220, 40, 40),
    "green": (40, 190, 60),
    "blue": (40, 80, 220),
    "yellow": (230, 220, 50),
    "magenta": (210, 50, 200),
    "cyan": (60, 210, 210),
    "orange": (235, 140, 40),
    "white": (235, 235, 235),
}
SHAPES = ("square", "circle", "triangle", "bar")

_GRID = 8
_SIZE = 64
_BACKGROUND = (24, 24, 24)


def _unit_rows(mat):
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return mat / norms


class PatchStatsEncoder:
    """Deterministic offline encoder over color and layout statistics.

    Feature layout: mean RGB (3), center-crop mean RGB (3), an 8x8 grid
    of luminance means (64), and mean |gradient| along each axis (2).
    Rows are L2-normalized and stored at 32-bit.
    """

    name = "patch-stats"

    @property
    def dim(self):
        return 3 + 3 + _GRID * _GRID + 2

    def _features(self, img: Image.Image) -> np.ndarray:
        rgb = np.asarray(img.convert("RGB").resize((_SIZE, _SIZE)), dtype=np.float64) / 255.0
        lum = rgb.mean(axis=2)
        q = _SIZE // 4
        center = rgb[q : _SIZE - q, q : _SIZE - q]
        cells = lum.reshape(_GRID, _SIZE // _GRID, _GRID, _SIZE // _GRID).mean(axis=(1, 3))
        grad = (
            np.abs(np.diff(lum, axis=0)).mean(),
            np.abs(np.diff(lum, axis=1)).mean(),
        )
        feat = np.concatenate(
            [
                rgb.mean(axis=(0, 1)),
                center.mean(axis=(0, 1)),
                cells.ravel(),
                4.0 * np.asarray(grad),  # rescale gradients onto the [0,1] range
            ]
        )
        return feat

    def encode_images(self, images) -> np.ndarray:
        """``images`` is a sequence of PIL images; returns unit (n, d)."""
        feats = np.stack([self._features(img) for img in images])
        return _unit_rows(feats).astype(np.float32)

    def render_class(self, class_name: str) -> Image.Image:
        """Canonical image for a class name: parsed color + shape."""
        words = class_name.lower().replace("_", " ").replace("-", " ").split()
        color = next((COLORS[w] for w in words if w in COLORS), (128, 128, 128))
        shape = next((w for w in words if w in SHAPES), "square")

        img = Image.new("RGB", (_SIZE, _SIZE), _BACKGROUND)
        draw = ImageDraw.Draw(img)
        lo, hi = _SIZE // 4, 3 * _SIZE // 4
        if shape == "square":
            draw.rectangle([lo, lo, hi, hi], fill=color)
        elif shape == "circle":
            draw.ellipse([lo, lo, hi, hi], fill=color)
        elif shape == "triangle":
            draw.polygon([(lo, hi), (hi, hi), (_SIZE // 2, lo)], fill=color)
        else:  # horizontal bar
            draw.rectangle([lo // 2, _SIZE // 2 - 6, _SIZE - lo // 2, _SIZE // 2 + 6], fill=color)
        return img

    def encode_texts(self, class_names) -> np.ndarray:
        # the template is parsed back out; only the class words carry signal
        renders = [self.render_class(name) for name in class_names]
        return self.encode_images(renders)


class ClipEncoder:
    """CLIP ViT-B/32 via transformers; weights must be cached or fetchable."""

    name = "clip-vit-b32"
    model_id = "openai/clip-vit-base-patch32"

    def __init__(self, device="cpu", model_id=None):
        try:
            import torch
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise RuntimeError(f"clip encoder needs transformers and torch: {exc}") from exc
        if model_id:
            self.model_id = model_id
        try:
            self.model = CLIPModel.from_pretrained(self.model_id).to(device).eval()
            self.processor = CLIPProcessor.from_pretrained(self.model_id)
        except Exception as exc:
            raise RuntimeError(
                f"encoder unavailable: could not load {self.model_id} ({exc})"
            ) from exc
        self.torch = torch
        self.device = device

    @property
    def dim(self):
        return int(self.model.config.projection_dim)

    def encode_images(self, images):
        inputs = self.processor(images=list(images), return_tensors="pt").to(self.device)
        with self.torch.no_grad():
            feats = self.model.get_image_features(**inputs)
        feats = feats / feats.norm(dim=-1, keepdim=True)
        return feats.cpu().numpy().astype(np.float32)

    def encode_texts(self, class_names):
        prompts = [TEXT_TEMPLATE.format(name) for name in class_names]
        inputs = self.processor(text=prompts, return_tensors="pt", padding=True).to(self.device)
        with self.torch.no_grad():
            feats = self.model.get_text_features(**inputs)
        feats = feats / feats.norm(dim=-1, keepdim=True)
        return feats.cpu().numpy().astype(np.float32)


def get_encoder(identifier: str, device="cpu"):
    if identifier == PatchStatsEncoder.name:
        return PatchStatsEncoder()
    if identifier in (ClipEncoder.name, ClipEncoder.model_id):
        return ClipEncoder(device=device)
    raise ValueError(f"unknown encoder {identifier!r}; try 'clip-vit-b32' or 'patch-stats'")
