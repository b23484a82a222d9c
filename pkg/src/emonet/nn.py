"""Minimal dense-tensor neural network engine.

Forward/backward passes for valid-padding convolution, 2x2 max-pooling,
dense layers, sigmoid activations and a softmax/cross-entropy head, plus
plain SGD updates and finite-difference gradient verification.

Arrays are float32 in the model path; intermediate accumulations run in
float64 and are rounded back, so results stay stable against naive
nested-loop reference implementations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class ShapeMismatchError(ValueError):
    """Raised when tensor shapes are inconsistent; message names both shapes."""


# ---------------------------------------------------------------------------
# elementwise activations
# ---------------------------------------------------------------------------

def sigmoid(x: np.ndarray) -> np.ndarray:
    """Elementwise logistic function 1 / (1 + exp(-x)), overflow-safe."""
    x = np.asarray(x)
    if not np.issubdtype(x.dtype, np.floating):
        x = x.astype(np.float64)
    # exp() only ever sees non-positive arguments
    z = np.exp(np.where(x >= 0, -x, x))
    return np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z))


def sigmoid_derivative(o: np.ndarray) -> np.ndarray:
    """Derivative of the logistic function expressed via its output: o * (1 - o)."""
    o = np.asarray(o)
    return o * (1.0 - o)


# ---------------------------------------------------------------------------
# layer forwards (single sample public API, batched internals)
# ---------------------------------------------------------------------------

def conv2d_forward(x: np.ndarray, kernels: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Valid cross-correlation of an H x W x C input with k x k x C x F kernels.

    Returns an (H-k+1) x (W-k+1) x F map; each cell is the windowed sum of
    products plus the per-filter bias.
    """
    if x.ndim != 3 or kernels.ndim != 4:
        raise ShapeMismatchError(
            f"conv2d expects HxWxC input and kxkxCxF kernels, got {x.shape} and {kernels.shape}")
    return _conv_batch(x[None], kernels, bias)[0]


def _conv_batch(x: np.ndarray, kernels: np.ndarray, bias: np.ndarray) -> np.ndarray:
    n, h, w, c = x.shape
    k, k2, kc, f = kernels.shape
    if k != k2 or kc != c:
        raise ShapeMismatchError(
            f"kernel shape {kernels.shape} incompatible with input shape {x.shape[1:]}")
    if k > min(h, w):
        raise ShapeMismatchError(
            f"kernel size {k} exceeds input plane {h}x{w}")
    if bias.shape != (f,):
        raise ShapeMismatchError(f"bias shape {bias.shape} does not match filter count {f}")
    out_dtype = np.result_type(x, kernels)
    win = sliding_window_view(x, (k, k), axis=(1, 2))      # (n, ho, wo, c, k, k)
    out = np.einsum("nhwcij,ijcf->nhwf",
                    win.astype(np.float64), kernels.astype(np.float64))
    out += bias.astype(np.float64)
    return out.astype(out_dtype)


def maxpool2_forward(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """2x2 non-overlapping max-pool; odd trailing row/column is dropped.

    Returns (pooled, mask) where mask holds the row-major winner index
    (0..3) inside each window, ties broken toward the first position.
    """
    if x.ndim != 3:
        raise ShapeMismatchError(f"maxpool expects HxWxC input, got {x.shape}")
    out, mask = _maxpool_batch(x[None])
    return out[0], mask[0]


def _maxpool_batch(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n, h, w, c = x.shape
    if h < 2 or w < 2:
        raise ShapeMismatchError(f"maxpool needs H, W >= 2, got plane {h}x{w}")
    he, we = h // 2, w // 2
    xc = x[:, : he * 2, : we * 2, :]
    win = xc.reshape(n, he, 2, we, 2, c).transpose(0, 1, 3, 2, 4, 5)
    flat = win.reshape(n, he, we, 4, c)
    mask = np.argmax(flat, axis=3)                         # first max wins
    out = np.take_along_axis(flat, mask[:, :, :, None, :], axis=3)[:, :, :, 0, :]
    return out, mask


def _maxpool_backward(dout: np.ndarray, mask: np.ndarray, in_shape: tuple) -> np.ndarray:
    n, h, w, c = in_shape
    he, we = h // 2, w // 2
    dflat = np.zeros((n, he, we, 4, c), dtype=dout.dtype)
    np.put_along_axis(dflat, mask[:, :, :, None, :], dout[:, :, :, None, :], axis=3)
    dwin = dflat.reshape(n, he, we, 2, 2, c).transpose(0, 1, 3, 2, 4, 5)
    dx = np.zeros(in_shape, dtype=dout.dtype)
    dx[:, : he * 2, : we * 2, :] = dwin.reshape(n, he * 2, we * 2, c)
    return dx


def dense_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Affine map: out_j = sum_i x_i W_ij + b_j."""
    x = np.asarray(x)
    if x.ndim != 1:
        raise ShapeMismatchError(f"dense expects a flat input, got {x.shape}")
    return _dense_batch(x[None], weights, bias)[0]


def _dense_batch(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    if x.shape[1] != weights.shape[0]:
        raise ShapeMismatchError(
            f"dense input width {x.shape[1]} does not match weight rows {weights.shape[0]}")
    out_dtype = np.result_type(x, weights)
    out = x.astype(np.float64) @ weights.astype(np.float64) + bias.astype(np.float64)
    return out.astype(out_dtype)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Stable softmax along the last axis (max-subtraction, no overflow).

    Probabilities come back in float64 so they sum to 1 at tight tolerance
    regardless of the logit dtype.
    """
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray,
                          true_class: int) -> tuple[np.ndarray, float, np.ndarray]:
    """Softmax probabilities, cross-entropy loss and dL/dlogits for one sample."""
    logits = np.asarray(logits)
    k = logits.shape[-1]
    if logits.ndim != 1 or k < 2:
        raise ShapeMismatchError(f"expected a logit vector of length >= 2, got {logits.shape}")
    if not 0 <= true_class < k:
        raise ValueError(f"true_class {true_class} outside [0, {k})")
    z = logits.astype(np.float64)
    z = z - z.max()
    e = np.exp(z)
    p = e / e.sum()
    loss = float(-np.log(max(p[true_class], np.finfo(np.float64).tiny)))
    d = p.copy()
    d[true_class] -= 1.0
    return p, loss, d.astype(logits.dtype) if logits.dtype != np.float64 else d


# ---------------------------------------------------------------------------
# sequential model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LayerSpec:
    """One layer of the fixed vocabulary: conv, maxpool, dense, sigmoid, softmax."""
    kind: str
    kernel_size: int = 0   # conv only; stride 1, valid padding
    filters: int = 0       # conv only
    width: int = 0         # dense only

    KINDS = ("conv", "maxpool", "dense", "sigmoid", "softmax")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")


@dataclass
class CnnModel:
    """A sequential conv/pool/dense stack with float32 parameters.

    params is aligned with layers: conv layers get {"k": kernels, "b": bias},
    dense layers {"w": weights, "b": bias}, the rest an empty dict.
    Immutable after construction except during an explicit training step.
    """
    input_side: int
    channels: int
    layers: list[LayerSpec]
    params: list[dict[str, np.ndarray]]
    seed: int

    @property
    def output_width(self) -> int:
        for spec in reversed(self.layers):
            if spec.kind == "dense":
                return spec.width
        raise ValueError("model has no dense layer")

    def param_arrays(self) -> list[np.ndarray]:
        """All parameter tensors in deterministic (layer, key) order."""
        out = []
        for p in self.params:
            for key in sorted(p):
                out.append(p[key])
        return out


@dataclass(frozen=True)
class GradientReport:
    max_relative_error: float
    worst_parameter_index: int


def emotion_layer_stack() -> list[LayerSpec]:
    """Default classifier stack: two conv/sigmoid/pool blocks and a dense head."""
    return [
        LayerSpec("conv", kernel_size=3, filters=8),
        LayerSpec("sigmoid"),
        LayerSpec("maxpool"),
        LayerSpec("conv", kernel_size=3, filters=16),
        LayerSpec("sigmoid"),
        LayerSpec("maxpool"),
        LayerSpec("dense", width=64),
        LayerSpec("sigmoid"),
        LayerSpec("dense", width=7),
        LayerSpec("softmax"),
    ]


# Glorot limits assume unit-gain activations; a sigmoid attenuates signals by
# ~1/4 per layer, so without compensation the cross-sample spread collapses to
# nearly zero by the logits and SGD stalls at the uniform output. A gain of 4
# (the inverse of sigmoid's maximum slope) keeps activations distinguishable
# through the full conv/dense stack.
INIT_GAIN = 4.0


def build_model(input_side: int, layers: list[LayerSpec], seed: int,
                channels: int = 1, init_gain: float = INIT_GAIN) -> CnnModel:
    """Shape-check the layer chain end to end and initialize parameters.

    Weights are gain-scaled Glorot-uniform (+-gain*sqrt(6/(fan_in+fan_out)))
    from a seeded PRNG; biases start at zero.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    shape: tuple = (input_side, input_side, channels)
    params: list[dict[str, np.ndarray]] = []
    for i, spec in enumerate(layers):
        if spec.kind == "conv":
            if len(shape) != 3:
                raise ShapeMismatchError(f"layer {i}: conv needs a 3-D input, have {shape}")
            h, w, c = shape
            k, f = spec.kernel_size, spec.filters
            if k < 1 or f < 1 or k > min(h, w):
                raise ShapeMismatchError(
                    f"layer {i}: conv {k}x{k}x{f} does not fit input {shape}")
            lim = init_gain * np.sqrt(6.0 / (k * k * c + k * k * f))
            params.append({
                "k": rng.uniform(-lim, lim, size=(k, k, c, f)).astype(np.float32),
                "b": np.zeros(f, dtype=np.float32),
            })
            shape = (h - k + 1, w - k + 1, f)
        elif spec.kind == "maxpool":
            if len(shape) != 3 or shape[0] < 2 or shape[1] < 2:
                raise ShapeMismatchError(f"layer {i}: maxpool needs H, W >= 2, have {shape}")
            params.append({})
            shape = (shape[0] // 2, shape[1] // 2, shape[2])
        elif spec.kind == "dense":
            n = int(np.prod(shape))
            m = spec.width
            if m < 1:
                raise ShapeMismatchError(f"layer {i}: dense width must be >= 1")
            lim = init_gain * np.sqrt(6.0 / (n + m))
            params.append({
                "w": rng.uniform(-lim, lim, size=(n, m)).astype(np.float32),
                "b": np.zeros(m, dtype=np.float32),
            })
            shape = (m,)
        elif spec.kind == "sigmoid":
            params.append({})
        elif spec.kind == "softmax":
            if i != len(layers) - 1:
                raise ShapeMismatchError("softmax must be the final layer")
            params.append({})
    return CnnModel(input_side=input_side, channels=channels,
                    layers=list(layers), params=params, seed=seed)


def _as_batch(model: CnnModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    side, c = model.input_side, model.channels
    if x.shape[-1] != c:
        if c == 1 and x.shape[-2:] == (side, side):
            x = x[..., None]
        else:
            raise ShapeMismatchError(
                f"input shape {x.shape} does not match model input "
                f"{side}x{side}x{c}")
    if x.ndim == 3:
        x = x[None]
    if x.shape[1:] != (side, side, c):
        raise ShapeMismatchError(
            f"input shape {x.shape} does not match model input {side}x{side}x{c}")
    return x


def _forward_batch(model: CnnModel, xb: np.ndarray, keep_cache: bool = False):
    """Run the stack up to (not including) softmax; optionally keep caches."""
    a = xb
    caches = []
    for spec, p in zip(model.layers, model.params):
        if spec.kind == "conv":
            caches.append(("conv", a))
            a = _conv_batch(a, p["k"], p["b"])
        elif spec.kind == "sigmoid":
            a = sigmoid(a)
            caches.append(("sigmoid", a))
        elif spec.kind == "maxpool":
            out, mask = _maxpool_batch(a)
            caches.append(("maxpool", (a.shape, mask)))
            a = out
        elif spec.kind == "dense":
            flat = a.reshape(a.shape[0], -1)
            caches.append(("dense", (a.shape, flat)))
            a = _dense_batch(flat, p["w"], p["b"])
        elif spec.kind == "softmax":
            caches.append(("softmax", None))
    return (a, caches) if keep_cache else a


def _param_dtype(model: CnnModel):
    for p in model.params:
        for v in p.values():
            return v.dtype
    return np.dtype(np.float32)


def model_forward(model: CnnModel, x: np.ndarray) -> np.ndarray:
    """Full forward pass; returns the softmax probability vector."""
    xb = _as_batch(model, x).astype(_param_dtype(model), copy=False)
    logits = _forward_batch(model, xb)
    return softmax(logits)[0]


def _backward_batch(model: CnnModel, caches, dlogits: np.ndarray):
    """Mean-gradient backward pass; returns per-layer grad dicts."""
    grads: list[dict[str, np.ndarray]] = [dict() for _ in model.layers]
    d = dlogits
    for i in range(len(model.layers) - 1, -1, -1):
        spec, p = model.layers[i], model.params[i]
        kind, cache = caches[i]
        if kind == "softmax":
            continue
        if kind == "dense":
            in_shape, flat = cache
            f64 = np.float64
            grads[i]["w"] = (flat.astype(f64).T @ d.astype(f64)).astype(p["w"].dtype)
            grads[i]["b"] = d.sum(axis=0).astype(p["b"].dtype)
            d = (d.astype(f64) @ p["w"].astype(f64).T).astype(d.dtype).reshape(in_shape)
        elif kind == "sigmoid":
            d = d * sigmoid_derivative(cache)
        elif kind == "maxpool":
            in_shape, mask = cache
            d = _maxpool_backward(d, mask, in_shape)
        elif kind == "conv":
            x = cache
            k = p["k"].shape[0]
            ho, wo = d.shape[1], d.shape[2]
            win = sliding_window_view(x, (k, k), axis=(1, 2))
            grads[i]["k"] = np.einsum(
                "nhwcij,nhwf->ijcf",
                win.astype(np.float64), d.astype(np.float64)).astype(p["k"].dtype)
            grads[i]["b"] = d.sum(axis=(0, 1, 2)).astype(p["b"].dtype)
            dx = np.zeros(x.shape, dtype=np.float64)
            d64 = d.astype(np.float64)
            k64 = p["k"].astype(np.float64)
            for di in range(k):
                for dj in range(k):
                    dx[:, di:di + ho, dj:dj + wo, :] += np.einsum(
                        "nhwf,cf->nhwc", d64, k64[di, dj])
            d = dx.astype(d.dtype)
    return grads


def model_backward_and_step(model: CnnModel, inputs: np.ndarray,
                            labels: np.ndarray, learning_rate: float) -> float:
    """One SGD step on a batch; updates parameters in place, returns mean loss."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise ValueError("batch must be nonempty")
    dtype = np.float32
    xb = _as_batch(model, inputs).astype(dtype, copy=False)
    n = xb.shape[0]
    logits, caches = _forward_batch(model, xb, keep_cache=True)
    z = logits.astype(np.float64)
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    probs = e / e.sum(axis=1, keepdims=True)
    picked = probs[np.arange(n), labels]
    loss = float(-np.log(np.maximum(picked, np.finfo(np.float64).tiny)).mean())
    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    dlogits = (dlogits / n).astype(logits.dtype)           # mean gradient
    grads = _backward_batch(model, caches, dlogits)
    for p, g in zip(model.params, grads):
        for key, grad in g.items():
            p[key] = (p[key].astype(np.float64)
                      - learning_rate * grad.astype(np.float64)).astype(p[key].dtype)
    return loss


def _loss_on(model: CnnModel, xb: np.ndarray, label: int) -> float:
    logits = _forward_batch(model, xb)[0]
    _, loss, _ = softmax_cross_entropy(logits, label)
    return loss


def gradient_check(model: CnnModel, sample: tuple[np.ndarray, int],
                   epsilon: float) -> GradientReport:
    """Compare analytic gradients to central finite differences, parameter by parameter.

    Runs on a float64 copy of the model so the difference quotient is not
    drowned by float32 rounding.
    """
    if not 1e-5 <= epsilon <= 1e-2:
        raise ValueError(f"epsilon {epsilon} outside [1e-5, 1e-2]")
    x, label = sample
    m64 = CnnModel(
        input_side=model.input_side, channels=model.channels,
        layers=list(model.layers),
        params=[{k: v.astype(np.float64) for k, v in p.items()} for p in model.params],
        seed=model.seed)
    xb = _as_batch(m64, np.asarray(x, dtype=np.float64))

    logits, caches = _forward_batch(m64, xb, keep_cache=True)
    _, _, dlogits = softmax_cross_entropy(logits[0], label)
    grads = _backward_batch(m64, caches, dlogits[None])

    worst_err, worst_idx, flat_idx = 0.0, 0, 0
    for p, g in zip(m64.params, grads):
        for key in sorted(p):
            arr = p[key]
            analytic = g[key]
            it = np.nditer(arr, flags=["multi_index"])
            while not it.finished:
                idx = it.multi_index
                orig = arr[idx]
                arr[idx] = orig + epsilon
                lp = _loss_on(m64, xb, label)
                arr[idx] = orig - epsilon
                lm = _loss_on(m64, xb, label)
                arr[idx] = orig
                numeric = (lp - lm) / (2.0 * epsilon)
                a = float(analytic[idx])
                err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
                if err > worst_err:
                    worst_err, worst_idx = err, flat_idx
                flat_idx += 1
                it.iternext()
    return GradientReport(max_relative_error=worst_err, worst_parameter_index=worst_idx)
