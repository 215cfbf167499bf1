"""Tensor primitives for the network graph.

Conventions used throughout the package:

* Feature tensors are ``numpy.ndarray`` in NCHW layout (batch, channels,
  height, width). Inference runs in float32; gradient checking runs the
  same code in float64.
* Every op is a pure function: inputs are never mutated and repeated
  calls are bit-identical. There is no hidden state and no RNG here.
* Each differentiable op has a hand-written companion ``<op>_vjp`` that
  maps the upstream gradient (cotangent) to gradients of the inputs.
  There is no autograd tape; module-level backward passes chain these
  explicitly.
* Cost accounting: ``conv2d_cost`` and ``fully_connected_cost`` return
  analytic ``OpCost`` records. MACs count multiply-accumulates of the
  underlying dense computation; elementwise work is not counted.
"""

from dataclasses import dataclass

import numpy as np


# --------------------------------------------------------------------------
# cost records
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class OpCost:
    """Learnable parameter count and multiply-accumulate count of one op."""

    params: int = 0
    macs: int = 0

    def __add__(self, other):
        return OpCost(self.params + other.params, self.macs + other.macs)

    def __radd__(self, other):
        if other == 0:  # so sum() works
            return self
        return self.__add__(other)


@dataclass(frozen=True)
class ConvSpec:
    """Geometry of a 2-d convolution.

    kernel: (k_h, k_w); stride/dilation: positive; padding: zero padding
    applied per side; groups must divide both channel counts; ``bias``
    declares whether the layer carries a bias vector (used by the cost
    walkers; execution looks at the actual bias argument).
    """

    kernel: tuple = (1, 1)
    stride: int = 1
    padding: int = 0
    dilation: int = 1
    groups: int = 1
    bias: bool = False

    def __post_init__(self):
        kh, kw = self.kernel
        if kh < 1 or kw < 1:
            raise ValueError(f"kernel extents must be positive, got {self.kernel}")
        if self.stride < 1:
            raise ValueError(f"stride must be positive, got {self.stride}")
        if self.padding < 0:
            raise ValueError(f"padding must be non-negative, got {self.padding}")
        if self.dilation < 1:
            raise ValueError(f"dilation must be positive, got {self.dilation}")
        if self.groups < 1:
            raise ValueError(f"groups must be positive, got {self.groups}")


def conv_out_extent(extent, kernel, stride, padding, dilation):
    """Output extent of a convolution along one spatial axis."""
    return (extent + 2 * padding - dilation * (kernel - 1) - 1) // stride + 1


def conv2d_cost(c_in, c_out, in_hw, spec, batch=1):
    """Analytic parameter/MAC cost of ``conv2d`` for a given input extent."""
    kh, kw = spec.kernel
    if c_in % spec.groups or c_out % spec.groups:
        raise ValueError(
            f"channels ({c_in} in, {c_out} out) not divisible by groups {spec.groups}")
    h_out = conv_out_extent(in_hw[0], kh, spec.stride, spec.padding, spec.dilation)
    w_out = conv_out_extent(in_hw[1], kw, spec.stride, spec.padding, spec.dilation)
    if h_out < 1 or w_out < 1:
        raise ValueError(f"zero-sized output extent {h_out}x{w_out}")
    weight_params = (kh * kw * c_in // spec.groups) * c_out
    params = weight_params + (c_out if spec.bias else 0)
    return OpCost(params=params, macs=weight_params * h_out * w_out * batch)


def fully_connected_cost(c_in, c_out, bias=True, positions=1):
    """Cost of a dense layer applied at ``positions`` independent points."""
    return OpCost(params=c_out * c_in + (c_out if bias else 0),
                  macs=c_out * c_in * positions)


# --------------------------------------------------------------------------
# convolution
# --------------------------------------------------------------------------


def _check_rank4(x, name):
    if x.ndim != 4:
        raise ValueError(f"{name} must be rank-4 (N, C, H, W), got rank {x.ndim}")


def _conv_geometry(x, weight, bias, spec):
    _check_rank4(x, "input")
    _check_rank4(weight, "weight")
    kh, kw = spec.kernel
    if weight.shape[2:] != (kh, kw):
        raise ValueError(
            f"weight kernel extent {weight.shape[2:]} does not match spec {spec.kernel}")
    n, c_in, h, w = x.shape
    c_out = weight.shape[0]
    if c_in % spec.groups:
        raise ValueError(f"input channels {c_in} not divisible by groups {spec.groups}")
    if c_out % spec.groups:
        raise ValueError(f"output channels {c_out} not divisible by groups {spec.groups}")
    if weight.shape[1] != c_in // spec.groups:
        raise ValueError(
            f"weight expects {weight.shape[1] * spec.groups} input channels, got {c_in}")
    if bias is not None and bias.shape != (c_out,):
        raise ValueError(
            f"bias length {bias.shape[0]} does not match output channels {c_out}")
    h_out = conv_out_extent(h, kh, spec.stride, spec.padding, spec.dilation)
    w_out = conv_out_extent(w, kw, spec.stride, spec.padding, spec.dilation)
    if h_out < 1 or w_out < 1:
        raise ValueError(f"zero-sized output extent {h_out}x{w_out} "
                         f"for input {h}x{w} with {spec}")
    return n, c_in, c_out, h_out, w_out


def _pad_input(x, padding):
    if padding == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))


def _tap_window(xp, ky, kx, spec, h_out, w_out):
    """The input positions seen by kernel tap (ky, kx) across the output."""
    d, s = spec.dilation, spec.stride
    return xp[:, :,
              ky * d:ky * d + (h_out - 1) * s + 1:s,
              kx * d:kx * d + (w_out - 1) * s + 1:s]


def conv2d(x, weight, bias=None, spec=ConvSpec()):
    """2-d cross-correlation with zero padding.

    Accumulates one kernel tap at a time: each tap is a strided slice of
    the padded input contracted against one (C_out, C_in/groups) weight
    plane, which keeps memory flat and maps onto dense matmuls.
    """
    n, c_in, c_out, h_out, w_out = _conv_geometry(x, weight, bias, spec)
    kh, kw = spec.kernel
    xp = _pad_input(x, spec.padding)
    depthwise = spec.groups == c_in and c_in == c_out

    if depthwise:
        y = np.zeros((n, c_out, h_out, w_out), dtype=x.dtype)
        for ky in range(kh):
            for kx in range(kw):
                win = _tap_window(xp, ky, kx, spec, h_out, w_out)
                y += weight[:, 0, ky, kx][None, :, None, None] * win
    elif spec.groups == 1:
        y = np.zeros((c_out, n, h_out, w_out), dtype=x.dtype)
        for ky in range(kh):
            for kx in range(kw):
                win = _tap_window(xp, ky, kx, spec, h_out, w_out)
                y += np.tensordot(weight[:, :, ky, kx], win, axes=([1], [1]))
        y = y.transpose(1, 0, 2, 3)
    else:
        g = spec.groups
        ci, co = c_in // g, c_out // g
        w5 = weight.reshape(g, co, ci, kh, kw)
        y = np.zeros((n, g, co, h_out, w_out), dtype=x.dtype)
        for ky in range(kh):
            for kx in range(kw):
                win = _tap_window(xp, ky, kx, spec, h_out, w_out)
                win5 = win.reshape(n, g, ci, h_out, w_out)
                y += np.einsum("goc,ngchw->ngohw", w5[:, :, :, ky, kx], win5,
                               optimize=True)
        y = y.reshape(n, c_out, h_out, w_out)

    if bias is not None:
        y = y + bias[None, :, None, None]
    return y


def conv2d_vjp(x, weight, spec, grad):
    """Gradients of conv2d w.r.t. (input, weight, bias) given the upstream
    gradient. The bias gradient is always returned; ignore it for
    bias-free layers."""
    n, c_in, c_out, h_out, w_out = _conv_geometry(x, weight, None, spec)
    kh, kw = spec.kernel
    g_ = spec.groups
    ci, co = c_in // g_, c_out // g_
    xp = _pad_input(x, spec.padding)
    gxp = np.zeros_like(xp)
    gw = np.zeros_like(weight)
    w5 = weight.reshape(g_, co, ci, kh, kw)
    gw5 = gw.reshape(g_, co, ci, kh, kw)
    g5 = grad.reshape(n, g_, co, h_out, w_out)
    d, s = spec.dilation, spec.stride
    for ky in range(kh):
        for kx in range(kw):
            win = _tap_window(xp, ky, kx, spec, h_out, w_out)
            win5 = win.reshape(n, g_, ci, h_out, w_out)
            gw5[:, :, :, ky, kx] = np.einsum("ngohw,ngchw->goc", g5, win5,
                                             optimize=True)
            contrib = np.einsum("goc,ngohw->ngchw", w5[:, :, :, ky, kx], g5,
                                optimize=True)
            gxp[:, :,
                ky * d:ky * d + (h_out - 1) * s + 1:s,
                kx * d:kx * d + (w_out - 1) * s + 1:s] += \
                contrib.reshape(n, c_in, h_out, w_out)
    p = spec.padding
    gx = gxp[:, :, p:p + x.shape[2], p:p + x.shape[3]]
    if p:
        gx = gx.copy()
    gb = grad.sum(axis=(0, 2, 3))
    return gx, gw, gb


# --------------------------------------------------------------------------
# dense / normalization / activations
# --------------------------------------------------------------------------


def fully_connected(x, weight, bias=None):
    """y = x W^T + b for x of shape (N, C_in), weight (C_out, C_in)."""
    if x.ndim != 2 or weight.ndim != 2:
        raise ValueError(f"expected rank-2 input and weight, "
                         f"got {x.ndim} and {weight.ndim}")
    if x.shape[1] != weight.shape[1]:
        raise ValueError(f"input features {x.shape[1]} do not match "
                         f"weight features {weight.shape[1]}")
    y = x @ weight.T
    if bias is not None:
        y = y + bias
    return y


def fully_connected_vjp(x, weight, grad):
    return grad @ weight, grad.T @ x, grad.sum(axis=0)


def batch_norm_inference(x, gamma, beta, running_mean, running_var, eps=1e-5):
    """Frozen-statistics batch normalization over the channel axis."""
    _check_rank4(x, "input")
    if np.any(running_var < 0):
        raise ValueError("running variance must be non-negative")
    scale = gamma / np.sqrt(running_var + eps)
    shift = beta - running_mean * scale
    return x * scale[None, :, None, None] + shift[None, :, None, None]


def batch_norm_inference_vjp(x, gamma, running_mean, running_var, grad,
                             eps=1e-5):
    """Gradients w.r.t. (input, gamma, beta). Running stats are buffers."""
    inv = 1.0 / np.sqrt(running_var + eps)
    gx = grad * (gamma * inv)[None, :, None, None]
    xhat = (x - running_mean[None, :, None, None]) * inv[None, :, None, None]
    ggamma = (grad * xhat).sum(axis=(0, 2, 3))
    gbeta = grad.sum(axis=(0, 2, 3))
    return gx, ggamma, gbeta


def relu6(x):
    return np.clip(x, 0.0, 6.0)


def relu6_vjp(x, grad):
    return grad * ((x > 0.0) & (x < 6.0))


def sigmoid(x):
    """Numerically stable logistic function; exact symmetry around 0."""
    z = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z))


def sigmoid_vjp(y, grad):
    """Takes the forward output y = sigmoid(x), not x."""
    return grad * y * (1.0 - y)


def softmax(x, axis=-1):
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def softmax_vjp(y, grad, axis=-1):
    """Takes the forward output y = softmax(x)."""
    inner = (grad * y).sum(axis=axis, keepdims=True)
    return y * (grad - inner)


# --------------------------------------------------------------------------
# pooling
# --------------------------------------------------------------------------


def directional_avg_pool(x, axis):
    """Mean over one spatial axis: 'height' -> (N,C,1,W), 'width' -> (N,C,H,1)."""
    _check_rank4(x, "input")
    if axis == "height":
        return x.mean(axis=2, keepdims=True)
    if axis == "width":
        return x.mean(axis=3, keepdims=True)
    raise ValueError(f"axis must be 'height' or 'width', got {axis!r}")


def directional_avg_pool_vjp(x_shape, axis, grad):
    if axis == "height":
        return np.broadcast_to(grad, x_shape) / x_shape[2]
    if axis == "width":
        return np.broadcast_to(grad, x_shape) / x_shape[3]
    raise ValueError(f"axis must be 'height' or 'width', got {axis!r}")


def channel_max_pool(x):
    """Max over the channel axis, keeping a singleton channel."""
    _check_rank4(x, "input")
    return x.max(axis=1, keepdims=True)


def channel_max_pool_vjp(x, grad):
    """Routes the gradient to the first channel attaining the max."""
    idx = np.argmax(x, axis=1)[:, None, :, :]
    gx = np.zeros_like(x)
    np.put_along_axis(gx, idx, grad, axis=1)
    return gx


def patch_avg_pool(x, grid):
    """Average over a grid of non-overlapping patches: (N,C,H,W) -> (N,C,gh,gw)."""
    _check_rank4(x, "input")
    n, c, h, w = x.shape
    gh, gw = grid
    if h % gh or w % gw:
        raise ValueError(f"input extent {h}x{w} not divisible by patch grid "
                         f"{gh}x{gw}")
    ph, pw = h // gh, w // gw
    return x.reshape(n, c, gh, ph, gw, pw).mean(axis=(3, 5))


def patch_avg_pool_vjp(x_shape, grid, grad):
    gh, gw = grid
    ph, pw = x_shape[2] // gh, x_shape[3] // gw
    up = np.repeat(np.repeat(grad, ph, axis=2), pw, axis=3)
    return up / (ph * pw)


# --------------------------------------------------------------------------
# resize
# --------------------------------------------------------------------------


def _linear_coeffs(n_in, n_out):
    """Half-pixel source coordinates with edge clamping (align corners off)."""
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * n_in / n_out - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    i0 = np.floor(src).astype(np.int64)
    frac = src - i0
    i1 = np.minimum(i0 + 1, n_in - 1)
    return i0, i1, 1.0 - frac, frac


def resize_bilinear(x, target_hw):
    """Bilinear resize to (H_out, W_out); constant inputs are preserved."""
    _check_rank4(x, "input")
    out_h, out_w = target_hw
    if out_h < 1 or out_w < 1:
        raise ValueError(f"target extent must be >= 1, got {target_hw}")
    i0h, i1h, w0h, w1h = _linear_coeffs(x.shape[2], out_h)
    i0w, i1w, w0w, w1w = _linear_coeffs(x.shape[3], out_w)
    w0h, w1h = (w.astype(x.dtype)[:, None] for w in (w0h, w1h))
    w0w, w1w = (w.astype(x.dtype) for w in (w0w, w1w))
    rows = x[:, :, i0h, :] * w0h + x[:, :, i1h, :] * w1h
    return rows[:, :, :, i0w] * w0w + rows[:, :, :, i1w] * w1w


def _scatter_axis(grad, n_in, i0, i1, w0, w1, axis):
    """Adjoint of a gather-and-blend along one axis."""
    moved = np.moveaxis(grad, axis, -1)
    out = np.zeros(moved.shape[:-1] + (n_in,), dtype=grad.dtype)
    flat = out.reshape(-1, n_in)
    gflat = moved.reshape(-1, moved.shape[-1])
    np.add.at(flat, (slice(None), i0), gflat * w0)
    np.add.at(flat, (slice(None), i1), gflat * w1)
    return np.moveaxis(out, -1, axis)


def resize_bilinear_vjp(x_shape, target_hw, grad):
    i0h, i1h, w0h, w1h = _linear_coeffs(x_shape[2], target_hw[0])
    i0w, i1w, w0w, w1w = _linear_coeffs(x_shape[3], target_hw[1])
    gw = _scatter_axis(grad, x_shape[3], i0w, i1w, w0w, w1w, axis=3)
    return _scatter_axis(gw, x_shape[2], i0h, i1h, w0h, w1h, axis=2)


# --------------------------------------------------------------------------
# elementwise combinations
# --------------------------------------------------------------------------


def _unbroadcast(grad, shape):
    """Reduce a broadcast gradient back to the operand's shape."""
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, d in enumerate(shape) if d == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def hadamard(a, b, c=None):
    """Broadcasting elementwise product of two or three tensors."""
    operands = (a, b) if c is None else (a, b, c)
    try:
        np.broadcast_shapes(*(t.shape for t in operands))
    except ValueError:
        raise ValueError("operands cannot be broadcast together: "
                         + ", ".join(str(t.shape) for t in operands)) from None
    out = a * b
    if c is not None:
        out = out * c
    return out


def hadamard_vjp(operands, grad):
    """Gradient of hadamard for each operand (tuple of 2 or 3 arrays)."""
    grads = []
    for i, t in enumerate(operands):
        others = grad
        for j, o in enumerate(operands):
            if j != i:
                others = others * o
        grads.append(_unbroadcast(others, t.shape))
    return tuple(grads)


def concat(parts, axis):
    """Concatenate along one axis; all other extents must agree."""
    first = parts[0].shape
    for p in parts[1:]:
        for d in range(len(first)):
            if d != axis and p.shape[d] != first[d]:
                raise ValueError(f"concat extent mismatch on axis {d}: "
                                 f"{p.shape} vs {first}")
    return np.concatenate(parts, axis=axis)


def split(x, sizes, axis):
    """Inverse of concat: cut into consecutive chunks of the given sizes."""
    if sum(sizes) != x.shape[axis]:
        raise ValueError(f"split sizes {sizes} do not cover extent "
                         f"{x.shape[axis]} on axis {axis}")
    return np.split(x, np.cumsum(sizes)[:-1], axis=axis)


def elementwise_add(a, b):
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a + b


def elementwise_max(a, b):
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return np.maximum(a, b)


def elementwise_max_vjp(a, b, grad):
    """Ties route to the first operand."""
    take_a = a >= b
    return grad * take_a, grad * ~take_a


def assert_all_finite(x, name="tensor"):
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values")
    return x
