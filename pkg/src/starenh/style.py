"""Style embedding math: normalized-softmax loss, latent centroids, Recall@1."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import torch

DEFAULT_SCALE = 30.0
DEGENERATE_NORM = 1e-8

STYLELATENT_VERSION = 1


@dataclass(frozen=True)
class StyleLatent:
    """Unit-norm style code with a provenance note."""

    values: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.shape[0] < 2 or not np.all(np.isfinite(v)):
            raise ValueError("latent must be a finite vector of dimension >= 2")
        if abs(np.linalg.norm(v) - 1.0) > 1e-6:
            raise ValueError("latent must be unit-norm")
        object.__setattr__(self, "values", v)

    def to_json(self) -> str:
        return json.dumps(
            {
                "version": STYLELATENT_VERSION,
                "dim": int(self.values.shape[0]),
                "values": self.values.tolist(),
                "provenance": self.provenance,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "StyleLatent":
        doc = json.loads(text)
        if doc.get("version") != STYLELATENT_VERSION:
            raise ValueError(f"unsupported StyleLatent version {doc.get('version')!r}")
        values = np.asarray(doc["values"], dtype=np.float64)
        if values.shape[0] != doc["dim"]:
            raise ValueError("dimension field disagrees with values length")
        return cls(values, doc.get("provenance", ""))


def cosine_logits(f: torch.Tensor, weights: torch.Tensor, scale: float) -> torch.Tensor:
    """Scaled cosine similarity of embeddings (B,E) against class weights (Q,E)."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    f_norm = torch.linalg.vector_norm(f, dim=-1, keepdim=True)
    w_norm = torch.linalg.vector_norm(weights, dim=-1, keepdim=True)
    if torch.any(f_norm == 0) or torch.any(w_norm == 0):
        raise ValueError("embeddings and class weights must be nonzero")
    return scale * (f / f_norm) @ (weights / w_norm).T


def classify_loss(f, weights, label: int, scale: float = DEFAULT_SCALE) -> torch.Tensor:
    """Negative log-softmax of the scaled cosine similarity at the true class.

    Scale-invariant in f: only the direction of the embedding matters.
    """
    f_t = torch.as_tensor(f)
    w_t = torch.as_tensor(weights)
    if w_t.ndim != 2 or w_t.shape[0] < 2:
        raise ValueError("need a (Q,E) weight matrix with Q >= 2")
    if not 0 <= label < w_t.shape[0]:
        raise ValueError(f"label {label} outside style set of size {w_t.shape[0]}")
    logits = cosine_logits(f_t.reshape(1, -1), w_t, scale)[0]
    return -torch.log_softmax(logits, dim=0)[label]


def average_latent(embeddings, provenance: str = "") -> StyleLatent:
    """Unit-normalized mean of the unit-normalized embeddings (style centroid)."""
    if len(embeddings) == 0:
        raise ValueError("need at least one embedding")
    acc = None
    for f in embeddings:
        f = np.asarray(f, dtype=np.float64)
        norm = np.linalg.norm(f)
        if not np.all(np.isfinite(f)) or norm == 0:
            raise ValueError("embeddings must be finite and nonzero")
        acc = f / norm if acc is None else acc + f / norm
    avg = acc / len(embeddings)
    avg_norm = np.linalg.norm(avg)
    if avg_norm < DEGENERATE_NORM:
        raise ValueError("degenerate centroid: embeddings average to (near) zero")
    return StyleLatent(avg / avg_norm, provenance)


def recall_at_1(embeddings, labels, centers: dict[int, StyleLatent]) -> dict[int, float]:
    """Per-style fraction of embeddings whose nearest center (by cosine) is correct.

    Ties go to the lowest style index.
    """
    if len(embeddings) != len(labels):
        raise ValueError("embeddings and labels must have equal length")
    missing = set(labels) - set(centers)
    if missing:
        raise ValueError(f"no center for styles {sorted(missing)}")
    styles = sorted(centers)
    center_mat = np.stack([centers[q].values for q in styles])  # (Q,E), unit rows
    hits: dict[int, int] = {q: 0 for q in styles}
    counts: dict[int, int] = {q: 0 for q in styles}
    for f, label in zip(embeddings, labels):
        f = np.asarray(f, dtype=np.float64)
        sims = center_mat @ (f / np.linalg.norm(f))
        best = styles[int(np.argmax(sims))]  # argmax takes the first max: lowest index wins ties
        counts[label] += 1
        hits[label] += int(best == label)
    return {q: hits[q] / counts[q] for q in styles if counts[q]}
