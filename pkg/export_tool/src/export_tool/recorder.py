"""Framework-side spike recording for reference traces.

Runs the checkpoint over a binary input spike train and records every
layer's output spikes. Arithmetic follows the interchange contract the
simulator documents for bit-exact validation: float32 throughout, synaptic
contributions accumulated one addition at a time in ascending pre-synaptic
address order, then mem = beta*mem + acc + bias with spike at
mem >= threshold and subtract/zero reset.
"""

from __future__ import annotations

import numpy as np
from torch import nn

from .export import ExportError
from .layers import LifConv2d, LifLinear


def _fc_acc(weights: np.ndarray, pre_bits: np.ndarray) -> np.ndarray:
    acc = np.zeros(weights.shape[0], dtype=np.float32)
    for a in np.flatnonzero(pre_bits):
        acc = (acc + weights[:, a]).astype(np.float32)
    return acc


def _conv_acc(filters: np.ndarray, pre_bits: np.ndarray, shape) -> np.ndarray:
    c, h, w = shape
    k = filters.shape[2]
    oh, ow = h - k + 1, w - k + 1
    acc = np.zeros((filters.shape[0], oh, ow), dtype=np.float32)
    plane = h * w
    for a in np.flatnonzero(pre_bits):
        ci, rem = divmod(int(a), plane)
        r, col = divmod(rem, w)
        for i in range(max(0, r - k + 1), min(oh - 1, r) + 1):
            for j in range(max(0, col - k + 1), min(ow - 1, col) + 1):
                acc[:, i, j] = (acc[:, i, j] + filters[:, ci, r - i, col - j]).astype(
                    np.float32
                )
    return acc


def record_forward(model, input_bits, input_shape=None) -> list[np.ndarray]:
    """Forward a (T, n) binary input and return one (T, n_out) boolean spike
    trace per checkpoint layer (pool layers included)."""
    bits = np.asarray(input_bits, dtype=bool)
    if bits.ndim != 2:
        raise ExportError("input must be a (T, n) binary matrix")
    modules = list(model) if not isinstance(model, nn.Module) else list(model.children())
    t_total = bits.shape[0]

    shape = input_shape
    if shape is None:
        if not isinstance(modules[0], LifLinear):
            raise ExportError("input_shape is required for convolutional checkpoints")
        shape = modules[0].in_features

    params = []
    for mod in modules:
        if isinstance(mod, (LifLinear, LifConv2d)):
            w = mod.weight.detach().cpu().numpy().astype(np.float32)
            b = mod.bias.detach().cpu().numpy().astype(np.float32)
            params.append((mod, w, b))
        elif isinstance(mod, nn.MaxPool2d):
            params.append((mod, None, None))
        else:
            raise ExportError(f"unsupported module {type(mod).__name__}")

    traces = []
    shapes = []
    cur_shape = shape
    for mod, w, _ in params:
        if isinstance(mod, LifLinear):
            cur_shape = mod.out_features
        elif isinstance(mod, LifConv2d):
            c, h, wd = cur_shape
            k = mod.kernel_size[0]
            cur_shape = (mod.out_channels, h - k + 1, wd - k + 1)
        else:
            c, h, wd = cur_shape
            cur_shape = (c, h // 2, wd // 2)
        shapes.append(cur_shape)
        n = cur_shape if isinstance(cur_shape, int) else int(np.prod(cur_shape))
        traces.append(np.zeros((t_total, n), dtype=bool))

    mems = [
        None if isinstance(mod, nn.MaxPool2d)
        else np.zeros(s if isinstance(s, int) else int(np.prod(s)), dtype=np.float32)
        for (mod, _, _), s in zip(params, shapes)
    ]

    for t in range(t_total):
        cur = bits[t]
        cur_shape = shape
        for li, ((mod, w, b), out_shape) in enumerate(zip(params, shapes)):
            if isinstance(mod, LifLinear):
                acc = _fc_acc(w, cur)
                bias = b
            elif isinstance(mod, LifConv2d):
                acc = _conv_acc(w, cur, cur_shape).reshape(-1)
                oc, oh, ow = out_shape
                bias = np.repeat(b, oh * ow)
            else:
                c, h, wd = cur_shape
                cur = cur.reshape(c, h // 2, 2, wd // 2, 2).any(axis=(2, 4)).reshape(-1)
                traces[li][t] = cur
                cur_shape = out_shape
                continue
            mem = mems[li]
            np.multiply(mem, np.float32(mod.beta), out=mem)
            np.add(mem, acc, out=mem)
            np.add(mem, bias, out=mem)
            spikes = mem >= np.float32(mod.threshold)
            if mod.reset_mode == "subtract":
                mem[spikes] -= np.float32(mod.threshold)
            else:
                mem[spikes] = np.float32(0.0)
            cur = spikes
            traces[li][t] = cur
            cur_shape = out_shape
    return traces
