"""Functional (untimed) reference SNN forward pass.

This is the oracle side of spike-to-spike validation: it computes layer
outputs with dense numpy arithmetic, independent of the event-driven engine
in :mod:`snndse.accel`. Both sides accumulate float32 contributions in
ascending pre-synaptic address order, so matching traces are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import CONV, FC, MAXPOOL, NetworkConfig
from .spikeio import SpikeTensor


class NumericOverflowError(ArithmeticError):
    """Membrane potential left the finite float32 range."""


@dataclass(frozen=True)
class LayerWeights:
    """float32 weights/bias for one FC or CONV layer (None slots for pools)."""

    weights: np.ndarray  # FC: [post, pre]; CONV: [out_ch, in_ch, K, K]
    bias: np.ndarray  # FC: [post]; CONV: [out_ch]


@dataclass(frozen=True)
class WeightSet:
    per_layer: tuple[LayerWeights | None, ...]

    def validate(self, cfg: NetworkConfig) -> None:
        if len(self.per_layer) != len(cfg.layers):
            raise ValueError(
                f"weight set has {len(self.per_layer)} layers, config has {len(cfg.layers)}"
            )
        for i, (layer, lw) in enumerate(zip(cfg.layers, self.per_layer)):
            if layer.kind == MAXPOOL:
                if lw is not None:
                    raise ValueError(f"layer {i}: pool layers carry no weights")
                continue
            if lw is None:
                raise ValueError(f"layer {i}: missing weights")
            if layer.kind == FC:
                want_w = (layer.out_size, layer.in_size)
                want_b = (layer.out_size,)
            else:
                oc, ic = layer.out_size[0], layer.in_size[0]
                want_w = (oc, ic, layer.kernel, layer.kernel)
                want_b = (oc,)
            if lw.weights.shape != want_w or lw.weights.dtype != np.float32:
                raise ValueError(
                    f"layer {i}: weight shape {lw.weights.shape} != {want_w} float32"
                )
            if lw.bias.shape != want_b or lw.bias.dtype != np.float32:
                raise ValueError(f"layer {i}: bias shape {lw.bias.shape} != {want_b} float32")


@dataclass(frozen=True)
class LayerSpikeTrace:
    """Per-layer emitted spike trains plus per-timestep event counts."""

    traces: tuple[SpikeTensor, ...]  # one per network layer
    counts: np.ndarray  # int64 [layers, timesteps]
    input_counts: np.ndarray  # int64 [timesteps]

    @property
    def output(self) -> SpikeTensor:
        return self.traces[-1]


def lif_step(
    membrane: np.ndarray,
    accumulated: np.ndarray,
    beta: float,
    threshold: float,
    bias: np.ndarray,
    reset_mode: str,
) -> tuple[np.ndarray, np.ndarray]:
    """One leaky integrate-and-fire update over a membrane vector.

    mem' = beta*mem + accumulated + bias; spike where mem' >= threshold;
    reset subtracts the threshold or zeroes the membrane. Returns the new
    membrane (float32) and the boolean spike vector.
    """
    if membrane.shape != accumulated.shape:
        raise ValueError("membrane/accumulated size mismatch")
    b = np.float32(beta)
    thr = np.float32(threshold)
    mem = (b * membrane.astype(np.float32) + accumulated.astype(np.float32)).astype(np.float32)
    mem = (mem + bias.astype(np.float32)).astype(np.float32)
    if not np.isfinite(mem).all():
        raise NumericOverflowError("non-finite membrane potential")
    spikes = mem >= thr
    if reset_mode == "subtract":
        mem = np.where(spikes, mem - thr, mem).astype(np.float32)
    else:
        mem = np.where(spikes, np.float32(0.0), mem).astype(np.float32)
    return mem, spikes


def _fc_accumulate(weights: np.ndarray, pre_bits: np.ndarray) -> np.ndarray:
    """Weighted sum over spiking pre-neurons, ascending address order."""
    acc = np.zeros(weights.shape[0], dtype=np.float32)
    for a in np.flatnonzero(pre_bits):
        acc = (acc + weights[:, a]).astype(np.float32)
    return acc


def _conv_accumulate(filters: np.ndarray, pre_bits: np.ndarray, in_shape) -> np.ndarray:
    """Dense binary correlation, valid padding, stride 1.

    Terms per output neuron accumulate in ascending pre-address order:
    input channel outer, then rows, then columns.
    """
    c, h, w = in_shape
    k = filters.shape[2]
    oh, ow = h - k + 1, w - k + 1
    spk = pre_bits.reshape(c, h, w).astype(np.float32)
    acc = np.zeros((filters.shape[0], oh, ow), dtype=np.float32)
    for ci in range(c):
        for dr in range(k):
            for dc in range(k):
                patch = spk[ci, dr : dr + oh, dc : dc + ow]
                acc = (acc + patch[None, :, :] * filters[:, ci, dr, dc][:, None, None]).astype(
                    np.float32
                )
    return acc


def _pool(pre_bits: np.ndarray, in_shape) -> np.ndarray:
    c, h, w = in_shape
    return pre_bits.reshape(c, h // 2, 2, w // 2, 2).any(axis=(2, 4)).reshape(-1)


def golden_forward(
    cfg: NetworkConfig, weights: WeightSet, spikes_in: SpikeTensor
) -> LayerSpikeTrace:
    """Run the untimed reference model over a full spike train."""
    weights.validate(cfg)
    if spikes_in.size != cfg.input_flat:
        raise ValueError(f"input size {spikes_in.size} != network input {cfg.input_flat}")
    t_total = spikes_in.timesteps
    in_bits = spikes_in.to_bool()
    membranes = [
        np.zeros(l.out_flat, dtype=np.float32) if l.kind != MAXPOOL else None
        for l in cfg.layers
    ]
    out_bits = [np.zeros((t_total, l.out_flat), dtype=bool) for l in cfg.layers]

    for t in range(t_total):
        cur = in_bits[t]
        for li, layer in enumerate(cfg.layers):
            lw = weights.per_layer[li]
            if layer.kind == FC:
                acc = _fc_accumulate(lw.weights, cur)
                bias = lw.bias
            elif layer.kind == CONV:
                acc = _conv_accumulate(lw.weights, cur, layer.in_size).reshape(-1)
                bias = np.repeat(lw.bias, layer.out_size[1] * layer.out_size[2])
            else:
                cur = _pool(cur, layer.in_size)
                out_bits[li][t] = cur
                continue
            membranes[li], spk = lif_step(
                membranes[li], acc, layer.beta, layer.threshold, bias, layer.reset_mode
            )
            cur = spk
            out_bits[li][t] = cur

    traces = tuple(SpikeTensor.from_bool(b) for b in out_bits)
    counts = np.stack([tr.counts() for tr in traces])
    return LayerSpikeTrace(traces=traces, counts=counts, input_counts=spikes_in.counts())


def decode_population(output_trace: SpikeTensor, classes: int, pcr: int) -> int:
    """Argmax over per-class pooled spike counts; ties go to the lowest class."""
    if output_trace.size != classes * pcr:
        raise ValueError(
            f"output size {output_trace.size} != classes*pcr = {classes * pcr}"
        )
    scores = output_trace.to_bool().sum(axis=0).reshape(classes, pcr).sum(axis=1)
    return int(np.argmax(scores))
