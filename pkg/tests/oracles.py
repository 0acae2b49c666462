"""Brute-force reference computations, independent of the package internals."""
import math

import numpy as np
from matplotlib.path import Path

MARCH_STEP = 1e-3


def marched_exit_distance(vertices, origin, angle, step=MARCH_STEP):
    """Distance to the last inside->outside transition along a sampled ray."""
    v = np.asarray(vertices, dtype=float)
    path = Path(np.vstack([v, v[:1]]), closed=True)
    span = np.ptp(v, axis=0)
    length = math.hypot(*span) + 2.0
    t = np.arange(0.0, length, step)
    pts = np.asarray(origin) + t[:, None] * np.array([math.cos(angle), math.sin(angle)])
    inside = path.contains_points(pts)
    exits = np.nonzero(inside[:-1] & ~inside[1:])[0]
    if len(exits) == 0:
        return None
    return (t[exits[-1]] + t[exits[-1] + 1]) / 2


def contains(vertices, points):
    v = np.asarray(vertices, dtype=float)
    return Path(np.vstack([v, v[:1]]), closed=True).contains_points(np.atleast_2d(points))


def circle_node_trace(radius, center, n, k, s):
    """Node search on an exact circle using closed-form ray/circle hits."""
    c0 = np.asarray(center, dtype=float)

    def hit(p, theta):
        u = np.array([math.cos(theta), math.sin(theta)])
        w = p - c0
        b = w @ u
        return -b + math.sqrt(b * b - (w @ w - radius * radius))

    th = [2 * math.pi * k / n, 2 * math.pi * ((k + 1) % n) / n]
    c = c0.copy()
    for i in range(s):
        if i == s - 1:
            l1 = l2 = 0.5
        else:
            l1 = 1 / (2 * (s - i) - 1)
            l2 = 1 / (2 * (s - i) - 2)
        c = c + l1 * hit(c, th[0]) * np.array([math.cos(th[0]), math.sin(th[0])])
        c = c + l2 * hit(c, th[1]) * np.array([math.cos(th[1]), math.sin(th[1])])
    return c
