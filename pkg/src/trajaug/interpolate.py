"""Monotone piecewise cubic Hermite interpolation and trajectory resampling.

Slopes follow the shape-preserving scheme of Fritsch and Carlson as used
by the classic PCHIP routines: a weighted harmonic mean at interior knots
(zero where the secant changes sign) and a non-centered three-point
formula at the ends.  The interpolant reproduces knot values exactly and
never overshoots monotone data.
"""

from __future__ import annotations

import numpy as np

from .errors import DataError
from .trajectory import Trajectory


def pchip_slopes(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Knot derivatives for the monotone cubic Hermite interpolant."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.size
    if n < 2:
        raise DataError(f"need >= 2 knots, got {n}")
    h = np.diff(x)
    if np.any(h <= 0):
        raise DataError("knots must be strictly increasing")
    delta = np.diff(y) / h

    if n == 2:
        return np.array([delta[0], delta[0]])

    d = np.zeros(n)
    # Interior: weighted harmonic mean of adjacent secants where they
    # share a sign, zero otherwise (kills overshoot at local extrema).
    dl, dr = delta[:-1], delta[1:]
    hl, hr = h[:-1], h[1:]
    same_sign = np.sign(dl) * np.sign(dr) > 0
    w1 = 2.0 * hr + hl
    w2 = hr + 2.0 * hl
    with np.errstate(divide="ignore", invalid="ignore"):
        hm = (w1 + w2) / (w1 / dl + w2 / dr)
    d[1:-1] = np.where(same_sign, hm, 0.0)

    d[0] = _edge_slope(h[0], h[1], delta[0], delta[1])
    d[-1] = _edge_slope(h[-1], h[-2], delta[-1], delta[-2])
    return d


def _edge_slope(h0, h1, d0, d1):
    """Shape-preserving three-point end slope."""
    d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1)
    if np.sign(d) != np.sign(d0):
        return 0.0
    if np.sign(d0) != np.sign(d1) and abs(d) > 3.0 * abs(d0):
        return 3.0 * d0
    return d


def pchip_evaluate(x, y, xq, deriv: int = 0) -> np.ndarray:
    """Evaluate the monotone interpolant (or its first derivative) at xq."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xq = np.asarray(xq, dtype=np.float64)
    d = pchip_slopes(x, y)

    k = np.clip(np.searchsorted(x, xq, side="right") - 1, 0, x.size - 2)
    h = x[k + 1] - x[k]
    t = (xq - x[k]) / h
    yk, yk1 = y[k], y[k + 1]
    dk, dk1 = d[k], d[k + 1]

    if deriv == 0:
        h00 = (1.0 + 2.0 * t) * (1.0 - t) ** 2
        h10 = t * (1.0 - t) ** 2
        h01 = t * t * (3.0 - 2.0 * t)
        h11 = t * t * (t - 1.0)
        return h00 * yk + h * h10 * dk + h01 * yk1 + h * h11 * dk1
    if deriv == 1:
        dh00 = 6.0 * t * (t - 1.0)
        dh10 = (1.0 - t) * (1.0 - 3.0 * t)
        dh01 = -dh00
        dh11 = t * (3.0 * t - 2.0)
        return (dh00 * yk / h) + dh10 * dk + (dh01 * yk1 / h) + dh11 * dk1
    raise ValueError(f"deriv must be 0 or 1, got {deriv}")


def pchip_resample(traj: Trajectory, dt: float) -> Trajectory:
    """Resample a trajectory onto the uniform grid t0, t0+dt, ... <= t_end.

    Each feature (lat, lon, alt) is interpolated independently; grid
    points that coincide with knots reproduce the knot values exactly.
    """
    if dt <= 0:
        raise DataError(f"dt must be positive, got {dt}")
    t, feats = traj.to_arrays()
    duration = t[-1] - t[0]
    if dt > duration:
        raise DataError(
            f"dt={dt} s exceeds trajectory duration {duration} s for {traj.flight_id!r}"
        )
    n_out = int(np.floor(duration / dt + 1e-9)) + 1
    tq = t[0] + dt * np.arange(n_out)
    resampled = np.empty((3, n_out))
    for f in range(3):
        resampled[f] = pchip_evaluate(t, feats[f], tq)
    return Trajectory.from_arrays(traj.flight_id, tq, *resampled)
