"""sRGB <-> CIELab conversion (D65) and the Lab-space L1 training loss."""

from __future__ import annotations

import numpy as np

__all__ = ["srgb_to_lab", "lab_l1_loss"]

# sRGB (linear) -> XYZ, IEC 61966-2-1.
_RGB2XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)

# D65 white taken as the matrix row sums so the gray axis lands exactly on
# a = b = 0 (the tabulated 0.95047/1/1.08883 constants are rounded).
_WHITE = _RGB2XYZ.sum(axis=1)

_LAB_EPS = 216.0 / 24389.0  # (6/29)^3
_LAB_KAPPA = 24389.0 / 27.0


def _srgb_to_linear(c: np.ndarray) -> np.ndarray:
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def _lab_f(t: np.ndarray) -> np.ndarray:
    return np.where(t > _LAB_EPS, np.cbrt(t), (_LAB_KAPPA * t + 16.0) / 116.0)


def srgb_to_lab(image: np.ndarray) -> np.ndarray:
    """Convert a planar (3,H,W) sRGB image in [0,1] to CIELab (D65).

    Values outside [0,1] are clamped before conversion.
    """
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 3 or img.shape[0] != 3:
        raise ValueError(f"expected (3,H,W) image, got shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValueError("image values must be finite")
    rgb = np.clip(img, 0.0, 1.0)
    lin = _srgb_to_linear(rgb)
    xyz = np.tensordot(_RGB2XYZ, lin, axes=1) / _WHITE[:, None, None]
    fx, fy, fz = _lab_f(xyz[0]), _lab_f(xyz[1]), _lab_f(xyz[2])
    return np.stack([116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)])


def lab_l1_loss(a: np.ndarray, b: np.ndarray) -> float:
    """Mean absolute CIELab difference over all pixels and channels."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean(np.abs(srgb_to_lab(a) - srgb_to_lab(b))))
