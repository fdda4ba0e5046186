"""Independent reference implementations used as test oracles.

Everything here is deliberately scalar, loop-based, and coded straight from
the textbook definitions, so it shares no code path with the package.
"""

import math

import numpy as np


def pchip_tangents(u):
    """Fritsch-Carlson tangents on a unit-spaced grid, one knot at a time."""
    m = len(u)
    d = [u[k + 1] - u[k] for k in range(m - 1)]
    slopes = [0.0] * m
    slopes[0] = d[0]
    slopes[m - 1] = d[m - 2]
    for k in range(1, m - 1):
        if d[k - 1] * d[k] > 0:
            slopes[k] = 2.0 * d[k - 1] * d[k] / (d[k - 1] + d[k])
        else:
            slopes[k] = 0.0
    return slopes


def pchip_eval(u, t):
    """Monotone cubic Hermite value at t in [0,1], scalar arithmetic."""
    m = len(u)
    slopes = pchip_tangents(u)
    k = t * (m - 1)
    seg = min(int(math.floor(k)), m - 2)
    s = k - seg
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * u[seg] + h10 * slopes[seg] + h01 * u[seg + 1] + h11 * slopes[seg + 1]


def naive_residual(image, curveset, depth, sample_fn=None):
    """Per-pixel five-term residual, straight from the transform definition.

    Tables come from the scalar pchip oracle by default; pass the package's
    own sampler as sample_fn to isolate the gather/sum structure (the
    bit-exact renderer check).
    """
    _, h, w = image.shape
    n = 1 << depth
    tables = {}
    for (i, j), u in curveset.curves.items():
        if i in ("r", "g", "b"):
            length = n
        elif i == "y":
            length = h
        else:
            length = w
        if length == 1:
            tables[(i, j)] = [u[0]]
        elif sample_fn is not None:
            tables[(i, j)] = list(sample_fn(u, length))
        else:
            tables[(i, j)] = [pchip_eval(list(u), k / (length - 1)) for k in range(length)]
    out = np.zeros_like(image, dtype=np.float64)
    for jc, j in enumerate(("r", "g", "b")):
        for row in range(h):
            y = row / (h - 1) if h > 1 else 0.0
            yi = min(int(math.floor(y * (h - 1))), h - 1)
            for col in range(w):
                x = col / (w - 1) if w > 1 else 0.0
                xi = min(int(math.floor(x * (w - 1))), w - 1)
                acc = tables[("r", j)][min(int(math.floor(image[0, row, col] * (n - 1))), n - 1)]
                acc = acc + tables[("g", j)][min(int(math.floor(image[1, row, col] * (n - 1))), n - 1)]
                acc = acc + tables[("b", j)][min(int(math.floor(image[2, row, col] * (n - 1))), n - 1)]
                acc = acc + tables[("y", j)][yi]
                acc = acc + tables[("x", j)][xi]
                out[jc, row, col] = acc
    return out


def srgb_to_lab_scalar(r, g, b):
    """Scalar sRGB -> Lab chain, written out term by term."""

    def lin(c):
        return c / 12.92 if c <= 0.04045 else ((c + 0.055) / 1.055) ** 2.4

    rl, gl, bl = lin(r), lin(g), lin(b)
    rows = (
        (0.4124564, 0.3575761, 0.1804375),
        (0.2126729, 0.7151522, 0.0721750),
        (0.0193339, 0.1191920, 0.9503041),
    )
    xyz = [m[0] * rl + m[1] * gl + m[2] * bl for m in rows]
    white = [sum(m) for m in rows]

    def f(t):
        return t ** (1.0 / 3.0) if t > 216.0 / 24389.0 else (24389.0 / 27.0 * t + 16.0) / 116.0

    fx, fy, fz = (f(v / wv) for v, wv in zip(xyz, white))
    return 116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)


def random_curveset(rng, color_knots=17, coord_knots=9, scale=0.3):
    from starenh.enhancer import CURVE_ORDER, CurveSet

    return CurveSet(
        {
            (i, j): rng.uniform(-scale, scale, size=color_knots if i in "rgb" else coord_knots)
            for i, j in CURVE_ORDER
        }
    )
