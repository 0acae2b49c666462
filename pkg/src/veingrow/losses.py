"""Distance-regression and classification losses with analytic gradients."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateTarget, NumericalDomain

PRED_FLOOR = 1e-6


@dataclass(frozen=True)
class LossReport:
    value: float
    gradient: np.ndarray
    clamped: int = field(default=0, compare=False)


def _pair(d, d_star):
    d = np.asarray(d, dtype=float)
    t = np.asarray(d_star, dtype=float)
    if d.shape != t.shape or d.ndim != 1:
        raise ValueError(f"predicted and target distances must be equal-length vectors, got {d.shape} and {t.shape}")
    if np.any(t <= 0):
        raise DegenerateTarget("target distances must be strictly positive")
    if t.sum() < 1e-9:
        raise DegenerateTarget("target distances sum to zero")
    clamped = int(np.count_nonzero(d < PRED_FLOOR))
    return np.maximum(d, PRED_FLOOR), t, clamped


def r_iou_loss(d, d_star) -> LossReport:
    """Summed absolute residual over summed target distance.

    Every direction with a nonzero residual receives a gradient of the same
    magnitude ``1 / sum(d_star)``; a zero residual gets 0.
    """
    d, t, clamped = _pair(d, d_star)
    total = t.sum()
    value = float(np.abs(d - t).sum() / total)
    return LossReport(value, np.sign(d - t) / total, clamped)


def polar_iou_loss(d, d_star) -> LossReport:
    """``log(sum max(d, d*) / sum min(d, d*))``."""
    d, t, clamped = _pair(d, d_star)
    hi = np.maximum(d, t)
    lo = np.minimum(d, t)
    s_hi, s_lo = hi.sum(), lo.sum()
    value = float(math.log(s_hi / s_lo))
    grad = np.where(d > t, 1.0 / s_hi, np.where(d < t, -1.0 / s_lo, 0.0))
    return LossReport(value, grad, clamped)


def _check_prob(p):
    if not (0.0 < p < 1.0):
        raise NumericalDomain(f"probability must lie strictly inside (0, 1), got {p}")


def focal_loss(prob: float, label: int, gamma: float = 2.0, alpha: float = 0.25) -> tuple[float, float]:
    """Alpha-balanced focal loss and its derivative with respect to ``prob``."""
    _check_prob(prob)
    if label not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {label!r}")
    if gamma < 0 or not (0.0 < alpha < 1.0):
        raise ValueError("focal loss needs gamma >= 0 and 0 < alpha < 1")
    if label == 1:
        q = 1.0 - prob
        value = -alpha * q**gamma * math.log(prob)
        grad = alpha * (gamma * q ** (gamma - 1) * math.log(prob) - q**gamma / prob) if gamma else -alpha / prob
    else:
        q = 1.0 - prob
        value = -(1 - alpha) * prob**gamma * math.log(q)
        if gamma:
            grad = -(1 - alpha) * (gamma * prob ** (gamma - 1) * math.log(q) - prob**gamma / q)
        else:
            grad = (1 - alpha) / q
    return value, grad


def bce_loss(prob: float, target: float) -> tuple[float, float]:
    _check_prob(prob)
    if not (0.0 <= target <= 1.0):
        raise ValueError(f"target must lie in [0, 1], got {target}")
    value = -(target * math.log(prob) + (1 - target) * math.log(1 - prob))
    grad = (prob - target) / (prob * (1 - prob))
    return value, grad


def total_loss(riou: float, fl: float, ce: float, weights=(1.0, 1.0, 1.0)) -> float:
    terms = (riou, fl, ce)
    if not all(math.isfinite(x) for x in terms):
        raise ValueError(f"loss terms must be finite, got {terms}")
    # fsum is correctly rounded, so the result does not depend on term order
    return math.fsum(w * x for w, x in zip(weights, terms))


# -- finite-difference verification ---------------------------------------

def _rel_err(analytic, numeric) -> float:
    a = np.atleast_1d(np.asarray(analytic, dtype=float))
    f = np.atleast_1d(np.asarray(numeric, dtype=float))
    scale = np.maximum(np.maximum(np.abs(a), np.abs(f)), 1e-12)
    return float(np.max(np.abs(a - f) / scale))


def _central_diff(fn, x, h):
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for k in range(len(x)):
        up = x.copy()
        dn = x.copy()
        up[k] += h
        dn[k] -= h
        g[k] = (fn(up) - fn(dn)) / (2 * h)
    return g


GRADIENT_TOL = 1e-4
LOSS_NAMES = ("r_iou", "polar_iou", "focal", "bce")


def _random_pair(rng, n):
    t = rng.uniform(1.0, 100.0, size=n)
    r = rng.uniform(-0.5, 0.5, size=n) * t
    # keep residuals clear of the |.| kink
    r = np.where(np.abs(r) < 1e-2, 1e-2 * np.sign(r + 1e-300), r)
    return t + r, t


def gradient_check(trials: int = 100, seed: int = 0, h: float = 1e-5, corrupt: str | None = None):
    """Compare analytic gradients with central differences.

    Returns rows ``(loss_name, trial, max_rel_err, passed)``.  ``corrupt``
    names a loss whose analytic gradient is deliberately perturbed, to prove
    the harness can fail.
    """
    rng = np.random.default_rng(seed)
    rows = []
    bad = 1.01 if corrupt else 1.0
    for trial in range(trials):
        n = int(rng.integers(4, 37))
        d, t = _random_pair(rng, n)
        for name, fn in (("r_iou", r_iou_loss), ("polar_iou", polar_iou_loss)):
            grad = fn(d, t).gradient * (bad if corrupt == name else 1.0)
            num = _central_diff(lambda x: fn(x, t).value, d, h)
            err = _rel_err(grad, num)
            rows.append((name, trial, err, err < GRADIENT_TOL))
        p = float(rng.uniform(0.05, 0.95))
        label = int(rng.integers(0, 2))
        gamma = float(rng.choice([0.0, 0.5, 1.0, 2.0, 3.0]))
        alpha = float(rng.uniform(0.1, 0.9))
        grad = focal_loss(p, label, gamma, alpha)[1] * (bad if corrupt == "focal" else 1.0)
        num = (focal_loss(p + h, label, gamma, alpha)[0] - focal_loss(p - h, label, gamma, alpha)[0]) / (2 * h)
        err = _rel_err(grad, num)
        rows.append(("focal", trial, err, err < GRADIENT_TOL))
        target = float(rng.uniform(0.0, 1.0))
        # keep the derivative away from its zero at p == target
        if abs(p - target) < 0.02:
            target = min(1.0, target + 0.05)
        grad = bce_loss(p, target)[1] * (bad if corrupt == "bce" else 1.0)
        num = (bce_loss(p + h, target)[0] - bce_loss(p - h, target)[0]) / (2 * h)
        err = _rel_err(grad, num)
        rows.append(("bce", trial, err, err < GRADIENT_TOL))
    return rows


def invariance_check(trials: int = 100, seed: int = 0) -> list[tuple[str, bool]]:
    """Scale invariance and zero-iff-equal checks for the distance losses."""
    rng = np.random.default_rng(seed)
    results = []
    scale_ok = {"r_iou": True, "polar_iou": True}
    zero_ok = True
    for _ in range(trials):
        n = int(rng.integers(4, 37))
        d, t = _random_pair(rng, n)
        for name, fn in (("r_iou", r_iou_loss), ("polar_iou", polar_iou_loss)):
            base = fn(d, t).value
            for a in (0.5, 2.0, 10.0):
                if abs(fn(a * d, a * t).value - base) > 1e-12:
                    scale_ok[name] = False
        zero_ok &= r_iou_loss(t, t).value == 0.0 and r_iou_loss(d, t).value > 0.0
    results.append(("r_iou_scale_invariance", scale_ok["r_iou"]))
    results.append(("polar_iou_scale_invariance", scale_ok["polar_iou"]))
    results.append(("r_iou_zero_iff_equal", bool(zero_ok)))
    return results
