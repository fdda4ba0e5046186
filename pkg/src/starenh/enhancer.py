"""Full-resolution curve transform: LUT construction and residual rendering.

Fifteen curves map input channels {r,g,b,x,y} to residual contributions on
output channels {r,g,b}. Color curves are sampled into 2^D-entry tables
indexed by the quantized pixel value; coordinate curves are sampled per-row
and per-column, so their contribution is a cheap broadcast. The enhanced
image is input + residual.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .curves import eval_curve, sample_curve

IN_CHANNELS = ("r", "g", "b", "x", "y")
OUT_CHANNELS = ("r", "g", "b")
CURVE_ORDER = [(i, j) for i in IN_CHANNELS for j in OUT_CHANNELS]

DEFAULT_COLOR_KNOTS = 17
DEFAULT_COORD_KNOTS = 9

CURVESET_VERSION = 1


def default_knot_count(in_channel: str) -> int:
    return DEFAULT_COLOR_KNOTS if in_channel in ("r", "g", "b") else DEFAULT_COORD_KNOTS


@dataclass(frozen=True)
class CurveSet:
    """The 15 knot vectors u_{i,j}, keyed by (input, output) channel."""

    curves: dict[tuple[str, str], np.ndarray]

    def __post_init__(self):
        if set(self.curves) != set(CURVE_ORDER):
            raise ValueError("CurveSet requires exactly the 15 (i,j) curves")
        for key, u in self.curves.items():
            u = np.asarray(u, dtype=np.float64)
            if u.ndim != 1 or u.shape[0] < 2 or not np.all(np.isfinite(u)):
                raise ValueError(f"curve {key[0]}_to_{key[1]}: need >=2 finite knots")
            self.curves[key] = u

    @classmethod
    def zeros(cls, color_knots: int = DEFAULT_COLOR_KNOTS, coord_knots: int = DEFAULT_COORD_KNOTS) -> "CurveSet":
        return cls(
            {
                (i, j): np.zeros(color_knots if i in ("r", "g", "b") else coord_knots)
                for i, j in CURVE_ORDER
            }
        )

    @classmethod
    def from_vector(
        cls,
        u: np.ndarray,
        color_knots: int = DEFAULT_COLOR_KNOTS,
        coord_knots: int = DEFAULT_COORD_KNOTS,
    ) -> "CurveSet":
        """Split a flat parameter vector into the 15 curves, (r,g,b,x,y) x (r,g,b) order."""
        u = np.asarray(u, dtype=np.float64).ravel()
        curves = {}
        pos = 0
        for i, j in CURVE_ORDER:
            m = color_knots if i in ("r", "g", "b") else coord_knots
            curves[(i, j)] = u[pos : pos + m].copy()
            pos += m
        if pos != u.shape[0]:
            raise ValueError(f"expected {pos} parameters, got {u.shape[0]}")
        return cls(curves)

    def total_knots(self) -> int:
        return sum(u.shape[0] for u in self.curves.values())

    def to_json(self, sliders: "SliderSettings | None" = None) -> str:
        doc = {
            "version": CURVESET_VERSION,
            "curves": {f"{i}_to_{j}": self.curves[(i, j)].tolist() for i, j in CURVE_ORDER},
        }
        if sliders is not None:
            doc["sliders"] = {f"{i}_to_{j}": sliders.scales[(i, j)] for i, j in CURVE_ORDER}
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "tuple[CurveSet, SliderSettings | None]":
        doc = json.loads(text)
        if doc.get("version") != CURVESET_VERSION:
            raise ValueError(f"unsupported CurveSet version {doc.get('version')!r}")
        curves = {
            (i, j): np.asarray(doc["curves"][f"{i}_to_{j}"], dtype=np.float64)
            for i, j in CURVE_ORDER
        }
        sliders = None
        if "sliders" in doc:
            sliders = SliderSettings(
                {(i, j): float(doc["sliders"][f"{i}_to_{j}"]) for i, j in CURVE_ORDER}
            )
        return cls(curves), sliders


@dataclass(frozen=True)
class SliderSettings:
    """Per-curve scale factors, each in [0,2]."""

    scales: dict[tuple[str, str], float]

    def __post_init__(self):
        if set(self.scales) != set(CURVE_ORDER):
            raise ValueError("need exactly 15 slider values")
        for key, beta in self.scales.items():
            if not np.isfinite(beta) or not 0.0 <= beta <= 2.0:
                raise ValueError(f"slider {key[0]}_to_{key[1]}={beta}: must be in [0,2]")

    @classmethod
    def ones(cls) -> "SliderSettings":
        return cls({key: 1.0 for key in CURVE_ORDER})

    @classmethod
    def uniform(cls, beta: float) -> "SliderSettings":
        return cls({key: float(beta) for key in CURVE_ORDER})

    @classmethod
    def from_dict(cls, values: dict[str, float]) -> "SliderSettings":
        scales = {key: 1.0 for key in CURVE_ORDER}
        for name, beta in values.items():
            i, _, j = name.partition("_to_")
            if (i, j) not in scales:
                raise ValueError(f"unknown slider {name!r}")
            scales[(i, j)] = float(beta)
        return cls(scales)


@dataclass(frozen=True)
class LutSet:
    """Sampled tables for one (D, H, W) target: 2^D color tables plus
    per-row / per-column coordinate tables for each output channel."""

    color: dict[tuple[str, str], np.ndarray]  # (i,j) for i in rgb, length 2^D
    row: dict[str, np.ndarray]  # per output channel, length H
    col: dict[str, np.ndarray]  # per output channel, length W
    depth: int
    height: int
    width: int


def _coord_table(u: np.ndarray, n: int, dtype) -> np.ndarray:
    if n == 1:
        return np.array([eval_curve(u, 0.0)], dtype=dtype)
    return sample_curve(u, n).astype(dtype)


def build_lut_set(curves: CurveSet, depth: int, height: int, width: int, dtype=np.float64) -> LutSet:
    """Sample every curve into its lookup table for a D-bit, HxW render."""
    if not 1 <= depth <= 16:
        raise ValueError(f"index depth must be in [1,16], got {depth}")
    if height < 1 or width < 1:
        raise ValueError("image dimensions must be positive")
    n_color = 1 << depth
    color = {
        (i, j): sample_curve(curves.curves[(i, j)], n_color).astype(dtype)
        for i in ("r", "g", "b")
        for j in OUT_CHANNELS
    }
    row = {j: _coord_table(curves.curves[("y", j)], height, dtype) for j in OUT_CHANNELS}
    col = {j: _coord_table(curves.curves[("x", j)], width, dtype) for j in OUT_CHANNELS}
    return LutSet(color=color, row=row, col=col, depth=depth, height=height, width=width)


def _coord_indices(n: int) -> np.ndarray:
    # literal floor(coord * (n-1)) with coord = k/(n-1); kept in this form so
    # the optimized path matches a per-pixel reading of the index formula
    if n == 1:
        return np.zeros(1, dtype=np.intp)
    coords = np.arange(n, dtype=np.float64) / (n - 1)
    return np.clip(np.floor(coords * (n - 1)).astype(np.intp), 0, n - 1)


_TILE_ROWS = 64  # rows per cache tile; keeps the working set in L2


def _packed_rg(luts: LutSet) -> dict[str, np.ndarray] | None:
    """Precombined r+g tables indexed by (r_idx << D) + g_idx, for D <= 8.

    Table entry [r, g] is color_r[r] + color_g[g] -- the same two addends,
    added in the same order, as the unpacked path, so results are
    bit-identical while halving the number of large gathers.
    """
    if luts.depth > 8:
        return None
    return {
        j: np.add.outer(luts.color[("r", j)], luts.color[("g", j)]).ravel()
        for j in OUT_CHANNELS
    }


def _render_tile(chunk, luts: LutSet, packed, row_idx, col_idx, out) -> None:
    n = 1 << luts.depth
    scale = float(n - 1)
    buf = chunk * scale
    np.clip(buf, 0.0, scale, out=buf)
    # values are now in [0, 2^D - 1], so integer truncation equals floor
    if packed is not None:
        idx = buf.astype(np.uint16)
        rg = idx[0] << np.uint16(luts.depth)
        rg += idx[1]
        ib = idx[2]
    else:
        idx = buf.astype(np.intp)
        ib = idx[2]
    for jc, j in enumerate(OUT_CHANNELS):
        acc = out[jc]
        if packed is not None:
            np.take(packed[j], rg, out=acc)
        else:
            np.take(luts.color[("r", j)], idx[0], out=acc)
            acc += luts.color[("g", j)][idx[1]]
        acc += np.take(luts.color[("b", j)], ib)
        acc += luts.row[j][row_idx][:, None]
        acc += luts.col[j][col_idx][None, :]


def _render_rows(image: np.ndarray, luts: LutSet, r0: int, r1: int, packed=None, out=None) -> np.ndarray:
    if packed is None:
        packed = _packed_rg(luts)
    if out is None:
        out = np.empty((3, r1 - r0, luts.width), dtype=luts.color[("r", "r")].dtype)
    rows = _coord_indices(luts.height)
    cols = _coord_indices(luts.width)
    for t0 in range(r0, r1, _TILE_ROWS):
        t1 = min(t0 + _TILE_ROWS, r1)
        _render_tile(image[:, t0:t1, :], luts, packed, rows[t0:t1], cols, out[:, t0 - r0 : t1 - r0])
    return out


def render_residual(image: np.ndarray, luts: LutSet, workers: int = 1) -> np.ndarray:
    """Residual image R: five table lookups per pixel and output channel.

    Rendering is a pure per-pixel function, so partitioning rows across
    workers cannot change the result.
    """
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[0] != 3:
        raise ValueError(f"expected (3,H,W) image, got shape {image.shape}")
    h, w = image.shape[1], image.shape[2]
    if h != luts.height or w != luts.width:
        raise ValueError(f"LUTs built for {luts.height}x{luts.width}, image is {h}x{w}")
    packed = _packed_rg(luts)
    out = np.empty((3, h, w), dtype=luts.color[("r", "r")].dtype)
    if workers <= 1 or h < 2 * workers:
        return _render_rows(image, luts, 0, h, packed, out)
    bounds = np.linspace(0, h, workers + 1, dtype=int)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(
            pool.map(
                lambda k: _render_rows(
                    image, luts, bounds[k], bounds[k + 1], packed, out[:, bounds[k] : bounds[k + 1]]
                ),
                range(workers),
            )
        )
    return out


def enhance(
    image: np.ndarray,
    curves: CurveSet,
    depth: int = 8,
    clamp: bool = False,
    workers: int = 1,
) -> np.ndarray:
    """O = I + R with LUTs built for this image; optional [0,1] export clamp."""
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[0] != 3:
        raise ValueError(f"expected (3,H,W) image, got shape {image.shape}")
    luts = build_lut_set(curves, depth, image.shape[1], image.shape[2], dtype=image.dtype)
    out = render_residual(image, luts, workers=workers) + image
    if clamp:
        out = np.clip(out, 0.0, 1.0)
    return out


def apply_sliders(curves: CurveSet, sliders: SliderSettings) -> CurveSet:
    """Scale each curve's knots by its slider factor: u' = beta * u."""
    return CurveSet({key: sliders.scales[key] * u for key, u in curves.curves.items()})


def set_knot(curves: CurveSet, i: str, j: str, k: int, value: float) -> CurveSet:
    """Return a copy with one knot replaced."""
    if (i, j) not in curves.curves:
        raise ValueError(f"unknown curve {i}_to_{j}")
    u = curves.curves[(i, j)]
    if not 0 <= k < u.shape[0]:
        raise ValueError(f"knot index {k} out of range for curve {i}_to_{j} with {u.shape[0]} knots")
    if not np.isfinite(value):
        raise ValueError("knot value must be finite")
    new = {key: arr.copy() for key, arr in curves.curves.items()}
    new[(i, j)][k] = value
    return CurveSet(new)
