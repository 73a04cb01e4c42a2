"""Embedding backends.

The built-in backends are deterministic, dependency-free stand-ins for
vision-language models: text is embedded by hashing character trigrams into
a fixed number of bins, images by a coarse color-grid signature.  Both emit
unit-norm float64 vectors of the same dimension so task and segment files
agree on D.  A real CLIP backend can be selected with ``clip:<model>`` when
sentence-transformers (and its weights) are available.
"""

from __future__ import annotations

import hashlib

import numpy as np
from PIL import Image


class ModelError(Exception):
    """Unknown backend or a backend that failed to load."""


DEFAULT_DIM = 64


def _normalize(v: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(v))
    if norm <= 0.0:
        raise ModelError("embedding collapsed to the zero vector")
    return v / norm


class TrigramTextEmbedder:
    """Hash character trigrams of the lowercased, padded string into bins."""

    id = "chargram64"

    def __init__(self, dim: int = DEFAULT_DIM):
        self.dim = dim

    def embed(self, text: str) -> np.ndarray:
        if not text.strip():
            raise ModelError("cannot embed an empty task string")
        padded = f"  {text.strip().lower()}  "
        counts = np.zeros(self.dim, dtype=np.float64)
        for i in range(len(padded) - 2):
            digest = hashlib.md5(padded[i : i + 3].encode("utf-8")).digest()
            counts[int.from_bytes(digest[:4], "little") % self.dim] += 1.0
        return _normalize(np.sqrt(counts))


class ColorGridImageEmbedder:
    """4x4 RGB cell means plus a 16-bin luminance histogram (D = 64)."""

    id = "colorgrid64"
    dim = DEFAULT_DIM

    def embed(self, image: Image.Image) -> np.ndarray:
        rgb = image.convert("RGB")
        cells = np.asarray(rgb.resize((4, 4), Image.BILINEAR), dtype=np.float64) / 255.0
        full = np.asarray(rgb, dtype=np.float64) / 255.0
        luminance = full @ np.array([0.299, 0.587, 0.114])
        hist, _ = np.histogram(luminance, bins=16, range=(0.0, 1.0))
        hist = hist / max(luminance.size, 1)
        return _normalize(np.concatenate([cells.reshape(-1), hist]))


class ClipBackend:
    """sentence-transformers CLIP wrapper; needs downloadable weights."""

    def __init__(self, name: str):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise ModelError(f"sentence-transformers unavailable: {exc}") from exc
        try:
            self._model = SentenceTransformer(name)
        except Exception as exc:
            raise ModelError(f"cannot load model {name!r}: {exc}") from exc
        self.id = f"clip:{name}"
        self.dim = int(self._model.get_sentence_embedding_dimension() or 512)

    def embed(self, item) -> np.ndarray:
        vec = self._model.encode([item], normalize_embeddings=True)[0]
        return np.asarray(vec, dtype=np.float64)


def text_model(spec: str):
    if spec == TrigramTextEmbedder.id:
        return TrigramTextEmbedder()
    if spec.startswith("clip:"):
        return ClipBackend(spec.split(":", 1)[1])
    raise ModelError(f"unknown text embedding model {spec!r}")


def image_model(spec: str):
    if spec == ColorGridImageEmbedder.id:
        return ColorGridImageEmbedder()
    if spec.startswith("clip:"):
        return ClipBackend(spec.split(":", 1)[1])
    raise ModelError(f"unknown image embedding model {spec!r}")
