"""Reference dataflow of the surroundings sensitive feature enhancement.

A feature grid is shifted one pixel in each of four directions, a fixed
linear predictor produces one sensitivity logit per direction and pixel, the
logits compete per pixel (softmax), and the weighted shifted grids are
concatenated after the untouched input.  No learning happens here.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import ShapeError

DIRECTIONS = ("left", "top", "right", "bottom")


def _check_grid(f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.ndim != 3 or min(f.shape) < 1:
        raise ShapeError(f"feature grid must be (H, W, C) with every axis >= 1, got {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ValueError("feature grid contains non-finite values")
    return f


def translate(f, direction: str) -> np.ndarray:
    """Shift ``f`` by one pixel; the vacated row or column is zero."""
    f = _check_grid(f)
    out = np.zeros_like(f)
    if direction == "right":
        out[:, 1:] = f[:, :-1]
    elif direction == "left":
        out[:, :-1] = f[:, 1:]
    elif direction == "bottom":
        out[1:] = f[:-1]
    elif direction == "top":
        out[:-1] = f[1:]
    else:
        raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    return out


@dataclass(frozen=True)
class SensitivityStack:
    logits: np.ndarray  # (4, H, W)
    weights: np.ndarray  # (4, H, W), per-pixel simplex


def normalize_sensitivity(a1, a2, a3, a4) -> SensitivityStack:
    logits = np.stack([np.asarray(a, dtype=float) for a in (a1, a2, a3, a4)])
    if logits.ndim != 3:
        raise ShapeError(f"sensitivity maps must be (H, W), got {logits.shape[1:]}")
    z = logits - logits.max(axis=0, keepdims=True)
    e = np.exp(z)
    return SensitivityStack(logits, e / e.sum(axis=0, keepdims=True))


def sensitivity_logits(f, weights, bias=None) -> np.ndarray:
    """Apply the per-pixel linear map ``C -> 4``; returns ``(4, H, W)``."""
    f = _check_grid(f)
    w = np.asarray(weights, dtype=float)
    if w.shape != (f.shape[2], 4):
        raise ShapeError(f"predictor weights must have shape ({f.shape[2]}, 4), got {w.shape}")
    a = f @ w
    if bias is not None:
        b = np.asarray(bias, dtype=float)
        if b.shape != (4,):
            raise ShapeError(f"predictor bias must have shape (4,), got {b.shape}")
        a = a + b
    return np.moveaxis(a, -1, 0)


def apply_sensitivity(f, stack: SensitivityStack) -> np.ndarray:
    """Concatenate ``f`` with the sensitivity-weighted shifted copies."""
    f = _check_grid(f)
    if stack.weights.shape[1:] != f.shape[:2]:
        raise ShapeError("sensitivity maps and feature grid differ in spatial size")
    blocks = [f]
    for w, direction in zip(stack.weights, DIRECTIONS):
        blocks.append(w[..., None] * translate(f, direction))
    return np.concatenate(blocks, axis=2)


def sccs_forward(f, weights, bias=None) -> np.ndarray:
    """``(H, W, C) -> (H, W, 5C)``: ``[f, A1'*T_left, A2'*T_top, A3'*T_right, A4'*T_bottom]``."""
    f = _check_grid(f)
    stack = normalize_sensitivity(*sensitivity_logits(f, weights, bias))
    return apply_sensitivity(f, stack)


def write_grid_csv(f, path):
    """First line ``H,W,C``; then one line per pixel (row-major) with C values."""
    f = _check_grid(f)
    h, w, c = f.shape
    lines = [f"{h},{w},{c}"]
    lines.extend(",".join(f"{x:.9g}" for x in px) for px in f.reshape(-1, c))
    Path(path).write_text("\n".join(lines) + "\n")


def read_grid_csv(path) -> np.ndarray:
    lines = Path(path).read_text().split()
    h, w, c = (int(t) for t in lines[0].split(","))
    values = np.array([[float(x) for x in line.split(",")] for line in lines[1:]])
    if values.shape != (h * w, c):
        raise ShapeError(f"{path}: expected {h * w} rows of {c} values, got {values.shape}")
    return values.reshape(h, w, c)
