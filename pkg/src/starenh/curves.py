"""Monotone piecewise-cubic curves on a uniform knot grid.

A curve is an M-vector of knot ordinates placed at t_k = k/(M-1) on [0,1].
Tangents follow the Fritsch-Carlson shape-preserving rule (harmonic mean of
adjacent secants when they agree in sign, zero otherwise), so monotone knot
data always yields a monotone interpolant. Tangents are expressed in
knot-index units (du/dk), which keeps every formula degree-1 homogeneous
in the knot values.
"""

from __future__ import annotations

import numpy as np

__all__ = ["monotone_slopes", "eval_curve", "sample_curve"]


def _check_knots(knots: np.ndarray) -> np.ndarray:
    u = np.asarray(knots, dtype=np.float64)
    if u.ndim != 1 or u.shape[0] < 2:
        raise ValueError(f"need at least 2 knots, got shape {u.shape}")
    if not np.all(np.isfinite(u)):
        raise ValueError("knot values must be finite")
    return u


def monotone_slopes(knots: np.ndarray) -> np.ndarray:
    """Per-knot tangents (du/dk) for the Fritsch-Carlson monotone cubic.

    Interior knots get the harmonic mean of the two adjacent secants when
    both share a sign, else 0. Endpoints use the one-sided secant, which
    already satisfies the monotonicity bound.
    """
    u = _check_knots(knots)
    d = np.diff(u)  # secants on the unit-spaced knot grid
    m = np.empty_like(u)
    m[0] = d[0]
    m[-1] = d[-1]
    if u.shape[0] > 2:
        dl, dr = d[:-1], d[1:]
        prod = dl * dr
        with np.errstate(divide="ignore", invalid="ignore"):
            hm = 2.0 * prod / (dl + dr)
        m[1:-1] = np.where(prod > 0.0, hm, 0.0)
    return m


def eval_curve(knots: np.ndarray, t) -> np.ndarray | float:
    """Evaluate the monotone cubic Hermite interpolant at t in [0,1].

    Accepts a scalar or an array of positions; exact at knot abscissae.
    """
    u = _check_knots(knots)
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < 0.0) or np.any(t_arr > 1.0):
        raise ValueError("t must lie in [0,1]")
    m = monotone_slopes(u)
    n_seg = u.shape[0] - 1
    k = t_arr * n_seg
    seg = np.minimum(np.floor(k).astype(np.intp), n_seg - 1)
    s = k - seg  # local coordinate in [0,1]
    u0, u1 = u[seg], u[seg + 1]
    m0, m1 = m[seg], m[seg + 1]
    s2 = s * s
    s3 = s2 * s
    h00 = 2.0 * s3 - 3.0 * s2 + 1.0
    h10 = s3 - 2.0 * s2 + s
    h01 = -2.0 * s3 + 3.0 * s2
    h11 = s3 - s2
    out = h00 * u0 + h10 * m0 + h01 * u1 + h11 * m1
    return out if t_arr.ndim else float(out)


def sample_curve(knots: np.ndarray, n: int) -> np.ndarray:
    """Dense resampling: v_k = eval_curve(u, k/(n-1)) for k = 0..n-1.

    With n equal to the knot count this reproduces the knots exactly.
    """
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    return eval_curve(knots, np.arange(n, dtype=np.float64) / (n - 1))
