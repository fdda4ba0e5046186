"""Image I/O: PNG (8/16-bit) and PPM/PNM, mapped to planar [0,1] floats."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np


@dataclass(frozen=True)
class Image:
    """Planar (3,H,W) float image in [0,1] with its source bit depth."""

    data: np.ndarray
    bit_depth: int = 8

    def __post_init__(self):
        if self.data.ndim != 3 or self.data.shape[0] != 3:
            raise ValueError(f"expected (3,H,W) data, got shape {self.data.shape}")
        if self.bit_depth not in (8, 16):
            raise ValueError(f"bit depth must be 8 or 16, got {self.bit_depth}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("image values must be finite")

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


def _from_raw(raw: np.ndarray) -> Image:
    if raw is None:
        raise ValueError("could not decode image")
    if raw.ndim == 2:
        raw = np.stack([raw] * 3, axis=-1)
    if raw.shape[2] == 4:
        raw = raw[:, :, :3]
    if raw.dtype == np.uint8:
        depth, maxval = 8, 255.0
    elif raw.dtype == np.uint16:
        depth, maxval = 16, 65535.0
    else:
        raise ValueError(f"unsupported sample type {raw.dtype}")
    rgb = raw[:, :, ::-1].astype(np.float32) / maxval
    return Image(np.ascontiguousarray(rgb.transpose(2, 0, 1)), depth)


def load_image(path: str | Path) -> Image:
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise ValueError(f"could not read image {path}")
    return _from_raw(raw)


def decode_image(buf: bytes) -> Image:
    raw = cv2.imdecode(np.frombuffer(buf, dtype=np.uint8), cv2.IMREAD_UNCHANGED)
    return _from_raw(raw)


def _to_raw(data: np.ndarray, bit_depth: int) -> np.ndarray:
    maxval = 255.0 if bit_depth == 8 else 65535.0
    dtype = np.uint8 if bit_depth == 8 else np.uint16
    quant = np.clip(np.rint(np.clip(data, 0.0, 1.0) * maxval), 0, maxval).astype(dtype)
    return np.ascontiguousarray(quant.transpose(1, 2, 0)[:, :, ::-1])  # to HWC BGR


def save_image(path: str | Path, data: np.ndarray, bit_depth: int = 8):
    """Write (3,H,W) floats as PNG or PPM at the given bit depth."""
    if bit_depth not in (8, 16):
        raise ValueError(f"bit depth must be 8 or 16, got {bit_depth}")
    if not cv2.imwrite(str(path), _to_raw(np.asarray(data), bit_depth)):
        raise ValueError(f"could not write image {path}")


def encode_png(data: np.ndarray, bit_depth: int = 8) -> bytes:
    ok, buf = cv2.imencode(".png", _to_raw(np.asarray(data), bit_depth))
    if not ok:
        raise ValueError("PNG encoding failed")
    return buf.tobytes()
