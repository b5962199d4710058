"""Slow, independent reference computations used as test oracles.

Nothing here imports csvm's kernels; inputs and outputs are plain numpy
arrays or Python numbers.
"""
import itertools
import math

import numpy as np


def naive_conv(x, w, stride, pad=0):
    """x: (H, W, C), w: (n, k, k, C). Cross-correlation by explicit loops."""
    h, wd, c = x.shape
    n, k, _, _ = w.shape
    xp = np.zeros((h + 2 * pad, wd + 2 * pad, c))
    xp[pad:pad + h, pad:pad + wd] = x
    ho = (h + 2 * pad - k) // stride + 1
    wo = (wd + 2 * pad - k) // stride + 1
    out = np.zeros((ho, wo, n))
    for f in range(n):
        for oy in range(ho):
            for ox in range(wo):
                acc = 0.0
                for dy in range(k):
                    for dx in range(k):
                        for ch in range(c):
                            acc += float(xp[oy * stride + dy, ox * stride + dx, ch]) * float(w[f, dy, dx, ch])
                out[oy, ox, f] = acc
    return out


def naive_pool(x, window, stride, mode):
    h, w, c = x.shape
    ho = (h - window) // stride + 1
    wo = (w - window) // stride + 1
    out = np.zeros((ho, wo, c))
    for oy in range(ho):
        for ox in range(wo):
            for ch in range(c):
                vals = [float(x[oy * stride + dy, ox * stride + dx, ch])
                        for dy in range(window) for dx in range(window)]
                out[oy, ox, ch] = max(vals) if mode == "max" else sum(vals) / len(vals)
    return out


def mann_whitney_auc(scores, labels, positive=1):
    """Fraction of (positive, negative) pairs ranked correctly, ties count 1/2."""
    pos = [s for s, y in zip(scores, labels) if y == positive]
    neg = [s for s, y in zip(scores, labels) if y != positive]
    wins = 0.0
    for p, q in itertools.product(pos, neg):
        wins += 1.0 if p > q else 0.5 if p == q else 0.0
    return wins / (len(pos) * len(neg))


def svm_objective(w, x, y, c):
    total = float(np.dot(w, w))
    for xi, yi in zip(x, y):
        total += c * max(1.0 - yi * float(np.dot(w, xi)), 0.0) ** 2
    return total


def grid_svm_2d(x, y, c, lo=-6.0, hi=6.0, n=601):
    """Exhaustive search for the minimiser of the squared-hinge objective over a 2-D grid."""
    g = np.linspace(lo, hi, n)
    w1, w2 = np.meshgrid(g, g, indexing="ij")
    ws = np.stack([w1.ravel(), w2.ravel()], axis=1)
    margins = np.maximum(1.0 - (ws @ x.T) * y, 0.0)
    f = (ws ** 2).sum(1) + c * (margins ** 2).sum(1)
    i = int(np.argmin(f))
    return ws[i], float(f[i]), g[1] - g[0]


def bilinear_weights(n_in, n_out):
    """Half-pixel-centre linear interpolation matrix with edge clamping (n_out x n_in)."""
    m = np.zeros((n_out, n_in))
    scale = n_in / n_out
    for i in range(n_out):
        src = (i + 0.5) * scale - 0.5
        src = min(max(src, 0.0), n_in - 1)
        j0 = int(math.floor(src))
        j1 = min(j0 + 1, n_in - 1)
        t = src - j0
        m[i, j0] += 1 - t
        m[i, j1] += t
    return m
