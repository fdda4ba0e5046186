"""Desk-scale training harness: synthetic styles, trainers, and evaluation.

Synthetic styles stand in for multi-style retouching data: each style is a
deterministic global color pipeline (white balance, per-channel gamma,
saturation, lift/gain, optional vignette) applied to procedurally generated
base images, so the repo trains and evaluates without any downloads.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import cv2
import numpy as np
import torch

from . import nn as snn
from .diffops import enhance_t, lab_l1_t, split_curve_vector
from .enhancer import CurveSet, enhance
from .style import StyleLatent, average_latent, cosine_logits, recall_at_1

_LUMA = np.array([0.2126, 0.7152, 0.0722])

PSNR_CAP = 99.0


@dataclass(frozen=True)
class SyntheticStyleSpec:
    """One global tonal style: gains -> gamma -> saturation -> lift/gain -> vignette."""

    gamma: tuple = (1.0, 1.0, 1.0)
    gains: tuple = (1.0, 1.0, 1.0)
    saturation: float = 1.0
    lift: float = 0.0
    gain: float = 1.0
    vignette: float = 0.0

    def __post_init__(self):
        if any(g <= 0 for g in self.gamma) or any(g <= 0 for g in self.gains):
            raise ValueError("gamma and gains must be positive")
        if self.saturation < 0:
            raise ValueError("saturation must be nonnegative")
        for v in (*self.gamma, *self.gains, self.saturation, self.lift, self.gain, self.vignette):
            if not np.isfinite(v):
                raise ValueError("style parameters must be finite")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticStyleSpec":
        d = dict(d)
        d["gamma"] = tuple(d["gamma"])
        d["gains"] = tuple(d["gains"])
        return cls(**d)


def synth_style_apply(image: np.ndarray, spec: SyntheticStyleSpec) -> np.ndarray:
    """Apply a synthetic style to a (3,H,W) image in [0,1]; output clamped."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 3 or img.shape[0] != 3:
        raise ValueError(f"expected (3,H,W) image, got shape {img.shape}")
    v = np.clip(img, 0.0, 1.0)
    v = v * np.asarray(spec.gains)[:, None, None]
    v = np.clip(v, 0.0, None) ** np.asarray(spec.gamma)[:, None, None]
    luma = np.tensordot(_LUMA, v, axes=1)
    v = luma[None] + spec.saturation * (v - luma[None])
    v = spec.gain * v + spec.lift
    if spec.vignette != 0.0:
        h, w = img.shape[1], img.shape[2]
        ys = np.linspace(-1.0, 1.0, h) if h > 1 else np.zeros(1)
        xs = np.linspace(-1.0, 1.0, w) if w > 1 else np.zeros(1)
        r2 = (ys[:, None] ** 2 + xs[None, :] ** 2) / 2.0
        v = v * (1.0 - spec.vignette * r2)[None]
    return np.clip(v, 0.0, 1.0)


def make_base_images(count: int, size: int, seed: int = 0) -> np.ndarray:
    """Procedural base scenes: smooth color fields plus geometric shapes.

    Values are spread over the whole [0,1] range so every curve segment
    sees training signal.
    """
    rng = np.random.RandomState(seed)
    out = np.empty((count, 3, size, size), dtype=np.float32)
    for n in range(count):
        grid = rng.uniform(0.0, 1.0, size=(3, rng.randint(2, 7), rng.randint(2, 7)))
        img = np.stack(
            [cv2.resize(g, (size, size), interpolation=cv2.INTER_LINEAR) for g in grid]
        )
        for _ in range(rng.randint(1, 5)):
            cy, cx = rng.randint(0, size, 2)
            rad = rng.randint(size // 8, size // 2)
            color = rng.uniform(0.0, 1.0, 3)
            yy, xx = np.ogrid[:size, :size]
            mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= rad**2
            alpha = rng.uniform(0.3, 1.0)
            img[:, mask] = (1 - alpha) * img[:, mask] + alpha * color[:, None]
        out[n] = np.clip(img, 0.0, 1.0)
    return out


class StyleDataset:
    """Base images plus per-style specs; styled views computed on demand."""

    def __init__(self, base: np.ndarray, specs: dict[int, SyntheticStyleSpec], holdout: float = 0.2):
        if base.ndim != 4 or base.shape[1] != 3:
            raise ValueError("base must be (N,3,H,W)")
        if len(specs) < 1:
            raise ValueError("need at least one style")
        self.base = np.asarray(base, dtype=np.float32)
        self.specs = dict(specs)
        n_test = max(1, int(round(len(base) * holdout)))
        self.train_indices = list(range(len(base) - n_test))
        self.test_indices = list(range(len(base) - n_test, len(base)))
        self._cache: dict[tuple[int, int], np.ndarray] = {}

    @property
    def styles(self) -> list[int]:
        return sorted(self.specs)

    @property
    def size(self) -> int:
        return self.base.shape[2]

    def styled(self, style: int, index: int) -> np.ndarray:
        key = (style, index)
        if key not in self._cache:
            self._cache[key] = synth_style_apply(self.base[index], self.specs[style]).astype(np.float32)
        return self._cache[key]


def save_dataset(root: str | Path, dataset: StyleDataset):
    """Write the on-disk layout: base/ PNGs, styles.json, per-style 16-bit PNG pairs."""
    from .imgio import save_image

    root = Path(root)
    (root / "base").mkdir(parents=True, exist_ok=True)
    for n in range(len(dataset.base)):
        save_image(root / "base" / f"{n:04d}.png", dataset.base[n], bit_depth=16)
    styles_doc = {str(q): dataset.specs[q].to_dict() for q in dataset.styles}
    (root / "styles.json").write_text(json.dumps(styles_doc, indent=2))
    for q in dataset.styles:
        (root / f"style_{q}").mkdir(exist_ok=True)
        for n in range(len(dataset.base)):
            save_image(root / f"style_{q}" / f"{n:04d}.png", dataset.styled(q, n), bit_depth=16)


def load_dataset(root: str | Path, holdout: float = 0.2) -> StyleDataset:
    from .imgio import load_image

    root = Path(root)
    styles_doc = json.loads((root / "styles.json").read_text())
    specs = {int(q): SyntheticStyleSpec.from_dict(d) for q, d in styles_doc.items()}
    paths = sorted((root / "base").glob("*.png"))
    if not paths:
        raise ValueError(f"no base images under {root}")
    base = np.stack([load_image(p).data for p in paths])
    return StyleDataset(base, specs, holdout=holdout)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 16
    lr: float = 1e-3
    lr_min: float = 0.0
    seed: int = 0
    head_lr_mult: float = 10.0  # classifier last layer trains much faster
    subset_range: tuple = (2, 0)  # latent-augmentation pool sizes; 0 = whole pool

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")
        if not self.lr > self.lr_min >= 0:
            raise ValueError("need lr > lr_min >= 0")


def cosine_lr(step: int, total: int, lr0: float, lr_min: float = 0.0) -> float:
    """Single cosine decay cycle, no warm restarts."""
    if not 0 <= step <= total:
        raise ValueError(f"step {step} outside [0, {total}]")
    return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + math.cos(math.pi * step / total))


def downsample(image: np.ndarray, size: int) -> np.ndarray:
    """Bilinear downsample of a (3,H,W) image to (3,size,size)."""
    if image.shape[1] == size and image.shape[2] == size:
        return image
    hwc = np.transpose(image, (1, 2, 0))
    small = cv2.resize(hwc, (size, size), interpolation=cv2.INTER_LINEAR)
    return np.ascontiguousarray(np.transpose(small, (2, 0, 1)))


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """PSNR in dB over [0,1] images (clamped); identical images cap at 99."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((np.clip(a, 0, 1) - np.clip(b, 0, 1)) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return min(10.0 * math.log10(1.0 / mse), PSNR_CAP)


def _embed_all(bundle: snn.ModelBundle, dataset: StyleDataset, indices, style: int) -> np.ndarray:
    k = bundle.config.downsample_size
    with torch.no_grad():
        batch = torch.from_numpy(
            np.stack([downsample(dataset.styled(style, n), k) for n in indices])
        )
        return bundle.style_encoder(batch).numpy().astype(np.float64)


def train_style_encoder(
    dataset: StyleDataset,
    config: TrainConfig,
    model_config: snn.ModelConfig | None = None,
    bundle: snn.ModelBundle | None = None,
):
    """Train the style classifier; returns (bundle, history, per-style latents).

    history is a list of per-epoch dicts with mean loss and train Recall@1.
    """
    styles = dataset.styles
    if len(styles) < 2 or len(dataset.train_indices) < 2:
        raise ValueError("need at least 2 styles and 2 training images")
    if bundle is None:
        if model_config is None:
            model_config = snn.ModelConfig(num_styles=len(styles), downsample_size=dataset.size)
        bundle = snn.fixup_init(model_config, seed=config.seed)
    k = bundle.config.downsample_size
    g = torch.Generator().manual_seed(config.seed + 1)
    params = [
        {"params": [p for n, p in bundle.style_encoder.named_parameters() if not n.startswith("head")]},
        {"params": bundle.style_encoder.head.parameters(), "mult": config.head_lr_mult},
    ]
    opt = torch.optim.Adam(params, lr=config.lr)
    steps_per_epoch = max(1, math.ceil(len(dataset.train_indices) * len(styles) / config.batch_size))
    total = max(1, config.epochs * steps_per_epoch)
    history = []
    step = 0
    for _epoch in range(config.epochs):
        losses = []
        for _ in range(steps_per_epoch):
            lr = cosine_lr(step, total, config.lr, config.lr_min)
            for group in opt.param_groups:
                group["lr"] = lr * group.get("mult", 1.0)
            idx = torch.randint(0, len(dataset.train_indices), (config.batch_size,), generator=g)
            sty = torch.randint(0, len(styles), (config.batch_size,), generator=g)
            batch = torch.from_numpy(
                np.stack(
                    [
                        downsample(dataset.styled(styles[int(s)], dataset.train_indices[int(n)]), k)
                        for n, s in zip(idx, sty)
                    ]
                )
            )
            emb = bundle.style_encoder(batch)
            logits = cosine_logits(emb, bundle.style_encoder.head.weight, bundle.config.logit_scale)
            loss = torch.nn.functional.cross_entropy(logits, sty)
            opt.zero_grad()
            loss.backward()
            opt.step()
            losses.append(loss.item())
            step += 1
        embeddings, labels = [], []
        for q in styles:
            for f in _embed_all(bundle, dataset, dataset.train_indices, q):
                embeddings.append(f)
                labels.append(q)
        centers = style_centers(bundle, dataset)
        recall = recall_at_1(embeddings, labels, centers)
        history.append({"loss": float(np.mean(losses)), "recall": recall})
    return bundle, history, style_centers(bundle, dataset)


def style_centers(bundle: snn.ModelBundle, dataset: StyleDataset) -> dict[int, StyleLatent]:
    """Final per-style latents: normalized centroid over the train split."""
    return {
        q: average_latent(_embed_all(bundle, dataset, dataset.train_indices, q), provenance=f"style {q}")
        for q in dataset.styles
    }


def embedding_pools(bundle: snn.ModelBundle, dataset: StyleDataset) -> dict[int, np.ndarray]:
    """Per-style train-split embeddings, for subset-latent augmentation."""
    return {q: _embed_all(bundle, dataset, dataset.train_indices, q) for q in dataset.styles}


def subset_latent(pool: np.ndarray, g: torch.Generator, subset_range: tuple) -> StyleLatent:
    """Latent from a random subset of a style's embedding pool."""
    n = pool.shape[0]
    lo = max(1, min(subset_range[0], n))
    hi = n if subset_range[1] in (0, None) else max(lo, min(subset_range[1], n))
    m = int(torch.randint(lo, hi + 1, (1,), generator=g))
    idx = torch.randperm(n, generator=g)[:m].numpy()
    return average_latent(pool[idx])


def train_enhancer(
    dataset: StyleDataset,
    pools: dict[int, np.ndarray],
    config: TrainConfig,
    bundle: snn.ModelBundle,
    metrics_path: str | Path | None = None,
):
    """Train mapping network + curve encoder with the CIELab L1 loss.

    Each step samples (source, target) style pairs uniformly over Q x Q
    (a = b included) and builds latents from random pool subsets. Returns
    (bundle, metrics rows [step, lr, loss]).
    """
    styles = dataset.styles
    if len(styles) < 2:
        raise ValueError("need at least 2 styles")
    missing = [q for q in styles if q not in pools or len(pools[q]) == 0]
    if missing:
        raise ValueError(f"no embedding pool for styles {missing}")
    cfg = bundle.config
    k = cfg.downsample_size
    g = torch.Generator().manual_seed(config.seed + 2)
    opt = torch.optim.Adam(
        list(bundle.mapping.parameters()) + list(bundle.curve_encoder.parameters()),
        lr=config.lr,
    )
    steps_per_epoch = max(1, math.ceil(len(dataset.train_indices) * len(styles) / config.batch_size))
    total = max(1, config.epochs * steps_per_epoch)
    metrics = []
    for step in range(config.epochs * steps_per_epoch):
        lr = cosine_lr(step, total, config.lr, config.lr_min)
        for group in opt.param_groups:
            group["lr"] = lr
        idx = torch.randint(0, len(dataset.train_indices), (config.batch_size,), generator=g)
        pair = torch.randint(0, len(styles) * len(styles), (config.batch_size,), generator=g)
        inputs, targets, lat_a, lat_b = [], [], [], []
        for n, pq in zip(idx, pair):
            a = styles[int(pq) // len(styles)]
            b = styles[int(pq) % len(styles)]
            image_idx = dataset.train_indices[int(n)]
            inputs.append(dataset.styled(a, image_idx))
            targets.append(dataset.styled(b, image_idx))
            lat_a.append(subset_latent(pools[a], g, config.subset_range).values)
            lat_b.append(subset_latent(pools[b], g, config.subset_range).values)
        input_t = torch.from_numpy(np.stack(inputs))
        target_t = torch.from_numpy(np.stack(targets))
        low_t = torch.from_numpy(np.stack([downsample(im, k) for im in inputs]))
        codes_a = bundle.mapping(torch.from_numpy(np.stack(lat_a)).float())
        codes_b = bundle.mapping(torch.from_numpy(np.stack(lat_b)).float())
        u = bundle.curve_encoder(low_t, codes_a, codes_b)
        curves = split_curve_vector(u, cfg.color_knots, cfg.coord_knots)
        out = enhance_t(input_t, curves)
        loss = lab_l1_t(out, target_t)
        opt.zero_grad()
        loss.backward()
        opt.step()
        metrics.append([step, lr, loss.item()])
    if metrics_path is not None:
        with open(metrics_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "lr", "loss"])
            writer.writerows(metrics)
    return bundle, metrics


def predict_curves(bundle: snn.ModelBundle, image: np.ndarray, source: StyleLatent, target: StyleLatent) -> CurveSet:
    """Inference path: downsample, run mapping + curve encoder, split into curves."""
    cfg = bundle.config
    low = torch.from_numpy(downsample(image.astype(np.float32), cfg.downsample_size)).unsqueeze(0)
    with torch.no_grad():
        codes_a = bundle.mapping(torch.from_numpy(source.values).float())
        codes_b = bundle.mapping(torch.from_numpy(target.values).float())
        u = bundle.curve_encoder(low, codes_a, codes_b)[0].numpy()
    return CurveSet.from_vector(u, cfg.color_knots, cfg.coord_knots)


def style_matrix_eval(
    bundle: snn.ModelBundle,
    latents: dict[int, StyleLatent],
    dataset: StyleDataset,
    csv_path: str | Path | None = None,
) -> np.ndarray:
    """|Q| x |Q| mean held-out PSNR of every source -> target mapping."""
    styles = dataset.styles
    table = np.zeros((len(styles), len(styles)))
    for ai, a in enumerate(styles):
        for bi, b in enumerate(styles):
            scores = []
            for n in dataset.test_indices:
                image = dataset.styled(a, n)
                curves = predict_curves(bundle, image, latents[a], latents[b])
                out = enhance(image.astype(np.float64), curves, clamp=True)
                scores.append(psnr(out, dataset.styled(b, n)))
            table[ai, bi] = float(np.mean(scores))
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["source\\target"] + [str(q) for q in styles])
            for ai, a in enumerate(styles):
                writer.writerow([str(a)] + [f"{v:.3f}" for v in table[ai]])
    return table
