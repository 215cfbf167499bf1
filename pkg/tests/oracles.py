"""Naive loop reference implementations used as test oracles.

Everything here is written for clarity, not speed: plain Python loops,
float64 accumulation, no shortcuts shared with the library code. The
library must agree with these on random instances; the test modules own
the tolerances.
"""

import numpy as np


def conv2d_naive(x, w, b=None, stride=1, padding=0, dilation=1, groups=1):
    """Seven-loop cross-correlation. Returns (output, multiply_count)."""
    n, c_in, h, w_in = x.shape
    c_out, c_in_g, kh, kw = w.shape
    assert c_in % groups == 0 and c_out % groups == 0
    assert c_in_g == c_in // groups

    h_out = (h + 2 * padding - dilation * (kh - 1) - 1) // stride + 1
    w_out = (w_in + 2 * padding - dilation * (kw - 1) - 1) // stride + 1
    xp = np.zeros((n, c_in, h + 2 * padding, w_in + 2 * padding), dtype=np.float64)
    xp[:, :, padding:padding + h, padding:padding + w_in] = x

    y = np.zeros((n, c_out, h_out, w_out), dtype=np.float64)
    muls = 0
    out_per_group = c_out // groups
    for ni in range(n):
        for co in range(c_out):
            g = co // out_per_group
            for yo in range(h_out):
                for xo in range(w_out):
                    acc = 0.0
                    for ci in range(c_in_g):
                        for ky in range(kh):
                            for kx in range(kw):
                                iy = yo * stride + ky * dilation
                                ix = xo * stride + kx * dilation
                                acc += (w[co, ci, ky, kx]
                                        * xp[ni, g * c_in_g + ci, iy, ix])
                                muls += 1
                    if b is not None:
                        acc += b[co]
                    y[ni, co, yo, xo] = acc
    return y, muls


def fully_connected_naive(x, w, b=None):
    n, c_in = x.shape
    c_out = w.shape[0]
    y = np.zeros((n, c_out), dtype=np.float64)
    for ni in range(n):
        for co in range(c_out):
            acc = 0.0
            for ci in range(c_in):
                acc += float(w[co, ci]) * float(x[ni, ci])
            if b is not None:
                acc += float(b[co])
            y[ni, co] = acc
    return y


def directional_avg_pool_naive(x, axis):
    n, c, h, w = x.shape
    if axis == "height":
        y = np.zeros((n, c, 1, w), dtype=np.float64)
        for ni in range(n):
            for ci in range(c):
                for wi in range(w):
                    y[ni, ci, 0, wi] = sum(float(x[ni, ci, hi, wi])
                                           for hi in range(h)) / h
    else:
        y = np.zeros((n, c, h, 1), dtype=np.float64)
        for ni in range(n):
            for ci in range(c):
                for hi in range(h):
                    y[ni, ci, hi, 0] = sum(float(x[ni, ci, hi, wi])
                                           for wi in range(w)) / w
    return y


def channel_max_pool_naive(x):
    n, c, h, w = x.shape
    y = np.zeros((n, 1, h, w), dtype=np.float64)
    for ni in range(n):
        for hi in range(h):
            for wi in range(w):
                y[ni, 0, hi, wi] = max(float(x[ni, ci, hi, wi])
                                       for ci in range(c))
    return y


def hadamard_naive(a, b, c=None):
    shape = np.broadcast_shapes(a.shape, b.shape,
                                *(() if c is None else (c.shape,)))
    out = np.zeros(shape, dtype=np.float64)

    def at(t, idx):
        # emulate broadcasting by collapsing stretched axes to 0
        full = []
        pad = len(shape) - t.ndim
        for d, i in enumerate(idx):
            if d < pad:
                continue
            full.append(0 if t.shape[d - pad] == 1 else i)
        return float(t[tuple(full)])

    for idx in np.ndindex(*shape):
        v = at(a, idx) * at(b, idx)
        if c is not None:
            v *= at(c, idx)
        out[idx] = v
    return out


def resize_bilinear_naive(x, out_h, out_w):
    """Per-pixel half-pixel bilinear with edge clamping (align corners off)."""
    n, c, h, w = x.shape
    y = np.zeros((n, c, out_h, out_w), dtype=np.float64)
    for yo in range(out_h):
        sy = min(max((yo + 0.5) * h / out_h - 0.5, 0.0), h - 1)
        y0 = int(np.floor(sy))
        y1 = min(y0 + 1, h - 1)
        fy = sy - y0
        for xo in range(out_w):
            sx = min(max((xo + 0.5) * w / out_w - 0.5, 0.0), w - 1)
            x0 = int(np.floor(sx))
            x1 = min(x0 + 1, w - 1)
            fx = sx - x0
            for ni in range(n):
                for ci in range(c):
                    top = (1 - fx) * float(x[ni, ci, y0, x0]) \
                        + fx * float(x[ni, ci, y0, x1])
                    bot = (1 - fx) * float(x[ni, ci, y1, x0]) \
                        + fx * float(x[ni, ci, y1, x1])
                    y[ni, ci, yo, xo] = (1 - fy) * top + fy * bot
    return y


def bce_naive(pred, gt):
    p = np.clip(pred, 1e-7, 1 - 1e-7)
    total = 0.0
    for pi, gi in zip(p.ravel(), gt.ravel()):
        total += -(float(gi) * np.log(float(pi))
                   + (1 - float(gi)) * np.log(1 - float(pi)))
    return total / p.size


def iou_naive(pred, gt, eps=1.0):
    inter = 0.0
    sp = 0.0
    sg = 0.0
    for pi, gi in zip(pred.ravel(), gt.ravel()):
        inter += float(pi) * float(gi)
        sp += float(pi)
        sg += float(gi)
    return 1.0 - (inter + eps) / (sp + sg - inter + eps)


def mae_naive(pred, gt):
    total = 0.0
    for pi, gi in zip(pred.ravel(), gt.ravel()):
        total += abs(float(pi) - float(gi))
    return total / pred.size
