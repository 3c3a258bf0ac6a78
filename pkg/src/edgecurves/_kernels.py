"""Compiled inner loops for the curve-fitting objectives."""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def bezier_distances(pts, coef, coarse, newton_steps):
    """Distance from each point to the cubic ``coef[0] + coef[1] t + coef[2] t^2 + coef[3] t^3``."""
    n = pts.shape[0]
    out = np.empty(n)
    for i in range(n):
        best_t = 0.0
        best_d2 = math.inf
        for k in range(coarse):
            t = k / (coarse - 1)
            d2 = 0.0
            for j in range(3):
                c = ((coef[3, j] * t + coef[2, j]) * t + coef[1, j]) * t + coef[0, j]
                diff = c - pts[i, j]
                d2 += diff * diff
            if d2 < best_d2:
                best_d2 = d2
                best_t = t
        t = best_t
        for _ in range(newton_steps):
            g = 0.0
            h = 0.0
            for j in range(3):
                r = ((coef[3, j] * t + coef[2, j]) * t + coef[1, j]) * t + coef[0, j] - pts[i, j]
                dc = (3.0 * coef[3, j] * t + 2.0 * coef[2, j]) * t + coef[1, j]
                ddc = 6.0 * coef[3, j] * t + 2.0 * coef[2, j]
                g += r * dc
                h += dc * dc + r * ddc
            if h > 0.0:
                t = min(max(t - g / h, 0.0), 1.0)
        d2 = 0.0
        for j in range(3):
            diff = ((coef[3, j] * t + coef[2, j]) * t + coef[1, j]) * t + coef[0, j] - pts[i, j]
            d2 += diff * diff
        out[i] = math.sqrt(min(d2, best_d2))
    return out


@njit(cache=True)
def nn_mean(src, dst):
    """Mean over ``src`` of the distance to the nearest ``dst`` point."""
    total = 0.0
    for i in range(src.shape[0]):
        best = math.inf
        for k in range(dst.shape[0]):
            d2 = 0.0
            for j in range(3):
                diff = src[i, j] - dst[k, j]
                d2 += diff * diff
            if d2 < best:
                best = d2
        total += math.sqrt(best)
    return total / src.shape[0]


@njit(cache=True)
def bezier_project(pts, coef, coarse, newton_steps):
    """Curve parameter of the closest point for each point (power-basis cubic, t in [0, 1])."""
    n = pts.shape[0]
    out = np.empty(n)
    for i in range(n):
        best_t = 0.0
        best_d2 = math.inf
        for k in range(coarse):
            t = k / (coarse - 1)
            d2 = 0.0
            for j in range(3):
                diff = ((coef[3, j] * t + coef[2, j]) * t + coef[1, j]) * t + coef[0, j] - pts[i, j]
                d2 += diff * diff
            if d2 < best_d2:
                best_d2 = d2
                best_t = t
        t = best_t
        for _ in range(newton_steps):
            g = 0.0
            h = 0.0
            for j in range(3):
                r = ((coef[3, j] * t + coef[2, j]) * t + coef[1, j]) * t + coef[0, j] - pts[i, j]
                dc = (3.0 * coef[3, j] * t + 2.0 * coef[2, j]) * t + coef[1, j]
                ddc = 6.0 * coef[3, j] * t + 2.0 * coef[2, j]
                g += r * dc
                h += dc * dc + r * ddc
            if h > 0.0:
                t = min(max(t - g / h, 0.0), 1.0)
        d2 = 0.0
        for j in range(3):
            diff = ((coef[3, j] * t + coef[2, j]) * t + coef[1, j]) * t + coef[0, j] - pts[i, j]
            d2 += diff * diff
        out[i] = t if d2 <= best_d2 else best_t
    return out


@njit(cache=True)
def bezier_arclength_samples(coef, m):
    """``m`` samples of a power-basis cubic spaced evenly by arc length (from a 4m+1 polyline)."""
    nd = 4 * m + 1
    dense = np.empty((nd, 3))
    for k in range(nd):
        t = k / (nd - 1)
        for j in range(3):
            dense[k, j] = ((coef[3, j] * t + coef[2, j]) * t + coef[1, j]) * t + coef[0, j]
    cum = np.zeros(nd)
    for k in range(1, nd):
        d2 = 0.0
        for j in range(3):
            diff = dense[k, j] - dense[k - 1, j]
            d2 += diff * diff
        cum[k] = cum[k - 1] + math.sqrt(d2)
    out = np.empty((m, 3))
    if cum[nd - 1] <= 0.0:
        for k in range(m):
            out[k] = dense[k]
        return out
    seg = 0
    for k in range(m):
        target = cum[nd - 1] * k / (m - 1)
        while seg < nd - 2 and cum[seg + 1] < target:
            seg += 1
        span = cum[seg + 1] - cum[seg]
        w = 0.0 if span <= 0.0 else min(max((target - cum[seg]) / span, 0.0), 1.0)
        for j in range(3):
            out[k, j] = dense[seg, j] + w * (dense[seg + 1, j] - dense[seg, j])
    return out


@njit(cache=True)
def bezier_fit_cost(pts, coef, m, coarse, newton_steps):
    """Mean point-to-curve distance plus mean arc-length-sample-to-point distance."""
    return bezier_distances(pts, coef, coarse, newton_steps).mean() + nn_mean(bezier_arclength_samples(coef, m), pts)


@njit(cache=True)
def arc_fit_cost(pts, c1, q, c2, m):
    """Fit cost of the arc from ``c1`` through ``q`` to ``c2``; -1 when the three points are collinear."""
    a = c1 - q
    b = c2 - q
    n = np.cross(a, b)
    nn2 = n @ n
    if nn2 <= 1e-24 * (a @ a) * (b @ b):
        return -1.0
    center = q + np.cross((a @ a) * b - (b @ b) * a, n) / (2.0 * nn2)
    u = c1 - center
    r = math.sqrt(u @ u)
    u = u / r
    nh = n / math.sqrt(nn2)
    w = np.cross(nh, u)
    vq = q - center
    vc = c2 - center
    tq = math.atan2(vq @ w, vq @ u) % (2.0 * math.pi)
    t2 = math.atan2(vc @ w, vc @ u) % (2.0 * math.pi)
    if tq > t2:
        w = -w
        t2 = 2.0 * math.pi - t2
    total = 0.0
    for i in range(pts.shape[0]):
        v = pts[i] - center
        h = v @ nh
        x = v @ u
        y = v @ w
        phi = math.atan2(y, x) % (2.0 * math.pi)
        if phi <= t2:
            rho = math.sqrt(x * x + y * y)
            d = math.sqrt(h * h + (rho - r) ** 2)
        else:
            d1 = pts[i] - c1
            d2 = pts[i] - c2
            d = math.sqrt(min(d1 @ d1, d2 @ d2))
        total += d
    samples = np.empty((m, 3))
    for k in range(m):
        t = t2 * k / (m - 1)
        samples[k] = center + r * (math.cos(t) * u + math.sin(t) * w)
    return total / pts.shape[0] + nn_mean(samples, pts)
