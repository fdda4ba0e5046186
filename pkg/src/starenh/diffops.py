"""Differentiable torch counterparts of the curve and color operations.

These mirror the numpy implementations in `curves`, `colorspace`, and
`enhancer` but run on batched tensors and carry gradients back into the
predicted knot vectors. Index lookups treat the index as a constant
(scatter-add gradient into the sampled tables); the [0,1] clamp before the
Lab conversion passes gradients straight through.
"""

from __future__ import annotations

import torch

from .enhancer import CURVE_ORDER

_RGB2XYZ = (
    (0.4124564, 0.3575761, 0.1804375),
    (0.2126729, 0.7151522, 0.0721750),
    (0.0193339, 0.1191920, 0.9503041),
)
# white = matrix row sums, matching colorspace.srgb_to_lab
_WHITE = tuple(sum(row) for row in _RGB2XYZ)
_LAB_EPS = 216.0 / 24389.0
_LAB_KAPPA = 24389.0 / 27.0


def monotone_slopes_t(u: torch.Tensor) -> torch.Tensor:
    """Fritsch-Carlson tangents along the last axis; batched."""
    d = u[..., 1:] - u[..., :-1]
    first = d[..., :1]
    last = d[..., -1:]
    if u.shape[-1] > 2:
        dl, dr = d[..., :-1], d[..., 1:]
        prod = dl * dr
        mask = prod > 0
        denom = torch.where(mask, dl + dr, torch.ones_like(dl))
        interior = torch.where(mask, 2.0 * prod / denom, torch.zeros_like(dl))
        return torch.cat([first, interior, last], dim=-1)
    return torch.cat([first, last], dim=-1)


def sample_curve_t(u: torch.Tensor, n: int) -> torch.Tensor:
    """Resample (..., M) knot vectors to (..., n) dense samples."""
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    m_knots = u.shape[-1]
    n_seg = m_knots - 1
    k = torch.arange(n, dtype=u.dtype, device=u.device) * (n_seg / (n - 1))
    seg = k.floor().long().clamp_(0, n_seg - 1)
    s = k - seg.to(u.dtype)
    slopes = monotone_slopes_t(u)
    u0 = u[..., seg]
    u1 = u[..., seg + 1]
    m0 = slopes[..., seg]
    m1 = slopes[..., seg + 1]
    s2 = s * s
    s3 = s2 * s
    h00 = 2.0 * s3 - 3.0 * s2 + 1.0
    h10 = s3 - 2.0 * s2 + s
    h01 = -2.0 * s3 + 3.0 * s2
    h11 = s3 - s2
    return h00 * u0 + h10 * m0 + h01 * u1 + h11 * m1


def _coord_table_t(u: torch.Tensor, n: int) -> torch.Tensor:
    if n == 1:
        return u[..., :1]
    return sample_curve_t(u, n)


def split_curve_vector(u: torch.Tensor, color_knots: int, coord_knots: int) -> dict:
    """Split (B, total) parameter vectors into the 15 (B, M) curves."""
    curves = {}
    pos = 0
    for i, j in CURVE_ORDER:
        m = color_knots if i in ("r", "g", "b") else coord_knots
        curves[(i, j)] = u[:, pos : pos + m]
        pos += m
    if pos != u.shape[1]:
        raise ValueError(f"expected {pos} parameters, got {u.shape[1]}")
    return curves


def render_residual_t(image: torch.Tensor, curves: dict, depth: int = 8) -> torch.Tensor:
    """Batched residual render from per-sample curves.

    image: (B,3,H,W) in [0,1]; curves: dict (i,j) -> (B,M) knot tensors.
    """
    b, _, h, w = image.shape
    n_color = 1 << depth
    idx = (image * (n_color - 1)).floor().long().clamp_(0, n_color - 1)  # (B,3,H,W)
    out = []
    for j in ("r", "g", "b"):
        acc = None
        for ci, i in enumerate(("r", "g", "b")):
            table = sample_curve_t(curves[(i, j)], n_color)  # (B, 2^D)
            term = torch.gather(table, 1, idx[:, ci].reshape(b, -1)).reshape(b, h, w)
            acc = term if acc is None else acc + term
        acc = acc + _coord_table_t(curves[("y", j)], h).reshape(b, h, 1)
        acc = acc + _coord_table_t(curves[("x", j)], w).reshape(b, 1, w)
        out.append(acc)
    return torch.stack(out, dim=1)


def enhance_t(image: torch.Tensor, curves: dict, depth: int = 8) -> torch.Tensor:
    """O = I + R, unclamped (training path)."""
    return image + render_residual_t(image, curves, depth)


def _clamp_straight_through(x: torch.Tensor) -> torch.Tensor:
    return x + (x.clamp(0.0, 1.0) - x).detach()


def srgb_to_lab_t(image: torch.Tensor) -> torch.Tensor:
    """Batched (B,3,H,W) sRGB -> CIELab with straight-through [0,1] clamp."""
    rgb = _clamp_straight_through(image)
    lin = torch.where(rgb <= 0.04045, rgb / 12.92, ((rgb.clamp_min(0.04045) + 0.055) / 1.055) ** 2.4)
    mat = torch.tensor(_RGB2XYZ, dtype=image.dtype, device=image.device)
    white = torch.tensor(_WHITE, dtype=image.dtype, device=image.device)
    xyz = torch.einsum("ck,bkhw->bchw", mat, lin) / white.reshape(1, 3, 1, 1)
    f = torch.where(
        xyz > _LAB_EPS,
        xyz.clamp_min(_LAB_EPS * 0.5) ** (1.0 / 3.0),
        (_LAB_KAPPA * xyz + 16.0) / 116.0,
    )
    fx, fy, fz = f[:, 0], f[:, 1], f[:, 2]
    return torch.stack([116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)], dim=1)


def lab_l1_t(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Mean absolute CIELab difference (the enhancer training loss)."""
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {tuple(a.shape)} vs {tuple(b.shape)}")
    return torch.mean(torch.abs(srgb_to_lab_t(a) - srgb_to_lab_t(b)))
