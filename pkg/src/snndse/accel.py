"""Cycle-count-accurate accelerator engine.

Event-scheduled rather than per-clock ticked: each layer-timestep is charged
closed-form phase costs (spike compression, accumulation, activation) and a
pipeline recurrence over the resulting cost matrix yields the total latency.
Output spikes are computed with the same float32 accumulation order as the
reference model in :mod:`snndse.golden`, so traces must match bit for bit.

Reference cost model (cycles):
  compression   popcount(input) + one chunk-advance per PENC chunk
  FC accumulate |addresses| * max NU neural size * memory contention
  FC activate   max NU neural size
  CONV accumulate sum over input spikes of (channels/NU * |affected outputs|)
  CONV activate channels/NU * out_h * out_w
Max-pool layers are fused OR gates and cost nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .config import CONV, FC, MAXPOOL, MappingPlan, NetworkConfig, build_mapping
from .golden import LayerSpikeTrace, NumericOverflowError, WeightSet
from .spikeio import SpikeTensor


@dataclass(frozen=True)
class CompressedSpikes:
    """Ascending spiking addresses plus the chunk count the PENC scanned."""

    addresses: np.ndarray  # int64, strictly ascending
    chunk_count: int


@dataclass(frozen=True)
class LayerCycleCost:
    compression: int
    accumulation: int
    activation: int

    @property
    def total(self) -> int:
        return self.compression + self.accumulation + self.activation


@dataclass(frozen=True)
class SimResult:
    total_cycles: int
    compression: np.ndarray  # int64 [mapped_layers, T]
    accumulation: np.ndarray
    activation: np.ndarray
    finish: np.ndarray  # pipeline finish times, int64 [mapped_layers, T]
    mapped_indices: tuple[int, ...]
    trace: LayerSpikeTrace | None
    spike_events: np.ndarray | None  # int64 per network layer (totals)
    memory_reads: np.ndarray  # int64 per mapped layer (totals)

    @property
    def phase_totals(self) -> np.ndarray:
        return self.compression + self.accumulation + self.activation

    def cost(self, mapped_idx: int, t: int) -> LayerCycleCost:
        return LayerCycleCost(
            int(self.compression[mapped_idx, t]),
            int(self.accumulation[mapped_idx, t]),
            int(self.activation[mapped_idx, t]),
        )

    def event_log_lines(self):
        """Line-oriented event log: one record per layer-timestep phase."""
        names = ("compression", "accumulation", "activation")
        arrays = (self.compression, self.accumulation, self.activation)
        timesteps = self.compression.shape[1]
        for t in range(timesteps):
            for mi, li in enumerate(self.mapped_indices):
                spikes = "-"
                if self.trace is not None:
                    spikes = str(int(self.trace.counts[li, t]))
                for name, arr in zip(names, arrays):
                    yield (
                        f"t={t} layer={li} phase={name} "
                        f"cycles={int(arr[mi, t])} spikes={spikes}"
                    )


def compress_spikes(
    words: np.ndarray, size: int, chunk_width: int
) -> tuple[CompressedSpikes, int]:
    """PENC compression of one packed spike train.

    One cycle per emitted address plus one chunk-advance cycle per
    ceil(size/chunk_width) chunk.
    """
    if not (1 <= chunk_width <= 100):
        raise ValueError("chunk_width must be in [1,100]")
    addrs = kernels.set_bit_addresses(np.asarray(words, dtype=np.uint64), size)
    chunks = math.ceil(size / chunk_width)
    return CompressedSpikes(addresses=addrs, chunk_count=chunks), int(addrs.size) + chunks


def affected_addresses(spike_addr: int, in_h: int, in_w: int, kernel: int) -> np.ndarray:
    """Output-plane addresses whose receptive field covers one input spike.

    Valid padding, stride 1: the spike at (r, c) touches outputs
    (i, j) with i in [r-K+1, r] and j in [c-K+1, c], clipped to the frame.
    """
    if not (0 <= spike_addr < in_h * in_w):
        raise ValueError(f"spike address {spike_addr} outside {in_h}x{in_w} frame")
    out_h, out_w = in_h - kernel + 1, in_w - kernel + 1
    r, c = divmod(spike_addr, in_w)
    i_lo, i_hi = max(0, r - kernel + 1), min(out_h - 1, r)
    j_lo, j_hi = max(0, c - kernel + 1), min(out_w - 1, c)
    if i_lo > i_hi or j_lo > j_hi:
        return np.empty(0, dtype=np.int64)
    ii = np.arange(i_lo, i_hi + 1, dtype=np.int64)
    jj = np.arange(j_lo, j_hi + 1, dtype=np.int64)
    return (ii[:, None] * out_w + jj[None, :]).reshape(-1)


def _affected_counts(addrs: np.ndarray, in_h: int, in_w: int, kernel: int) -> np.ndarray:
    """Vectorized |affected_addresses| per flat in-plane address."""
    out_h, out_w = in_h - kernel + 1, in_w - kernel + 1
    plane = addrs % (in_h * in_w)
    r, c = plane // in_w, plane % in_w
    rows = np.minimum(out_h - 1, r) - np.maximum(0, r - kernel + 1) + 1
    cols = np.minimum(out_w - 1, c) - np.maximum(0, c - kernel + 1) + 1
    return np.maximum(rows, 0) * np.maximum(cols, 0)


def fc_timestep(
    layer,
    nus,
    contention: int,
    weights,
    compressed: CompressedSpikes,
    membrane: np.ndarray,
) -> tuple[np.ndarray, LayerCycleCost, np.ndarray]:
    """One FC layer-timestep: serial accumulation per NU plus LIF activation.

    Returns (spike vector, phase costs sans compression, membrane).
    The membrane array is updated in place.
    """
    max_size = max(nu.neural_size for nu in nus)
    acc = kernels.fc_accumulate(weights.weights, compressed.addresses)
    spikes = kernels.lif_update(
        membrane, acc, weights.bias, layer.beta, layer.threshold,
        layer.reset_mode == "subtract",
    )
    cost = LayerCycleCost(
        compression=0,
        accumulation=int(compressed.addresses.size) * max_size * contention,
        activation=max_size,
    )
    return spikes, cost, membrane


def conv_timestep(
    layer,
    nus,
    weights,
    compressed: CompressedSpikes,
    membrane: np.ndarray,
) -> tuple[np.ndarray, LayerCycleCost, np.ndarray]:
    """One CONV layer-timestep: per-spike scatter into affected outputs."""
    c, h, w = layer.in_size
    oc, oh, ow = layer.out_size
    cpn = max(nu.neural_size for nu in nus)  # output channels per NU
    acc = kernels.conv_accumulate(weights.weights, compressed.addresses, h, w).reshape(-1)
    bias = np.repeat(weights.bias, oh * ow)
    spikes = kernels.lif_update(
        membrane, acc, bias, layer.beta, layer.threshold,
        layer.reset_mode == "subtract",
    )
    touched = int(_affected_counts(compressed.addresses, h, w, layer.kernel).sum())
    cost = LayerCycleCost(
        compression=0,
        accumulation=cpn * touched,
        activation=cpn * oh * ow,
    )
    return spikes, cost, membrane


def pipeline_schedule(
    costs: np.ndarray, buffer_depth: int = 1
) -> tuple[np.ndarray, int]:
    """Layer-pipelined schedule over an L x T cost matrix.

    A layer starts item t once it finished item t-1, its producer finished
    item t, and (bounded handoff buffers) its consumer has started item
    t - buffer_depth. Returns (finish matrix, total cycles).
    """
    costs = np.asarray(costs, dtype=np.int64)
    if costs.ndim != 2:
        raise ValueError("costs must be an L x T matrix")
    if np.any(costs < 0):
        raise ValueError("costs must be non-negative")
    if buffer_depth < 1:
        raise ValueError("buffer_depth must be >= 1")
    n_layers, n_steps = costs.shape
    start = np.zeros((n_layers, n_steps), dtype=np.int64)
    finish = np.zeros((n_layers, n_steps), dtype=np.int64)
    for t in range(n_steps):
        for l in range(n_layers):
            s = 0
            if t > 0:
                s = max(s, finish[l, t - 1])
            if l > 0:
                s = max(s, finish[l - 1, t])
            if l + 1 < n_layers and t - buffer_depth >= 0:
                s = max(s, start[l + 1, t - buffer_depth])
            start[l, t] = s
            finish[l, t] = s + costs[l, t]
    total = int(finish[-1, -1]) if costs.size else 0
    return finish, total


def _compression_cost(layer, tensor_words, size, chunk_width):
    """Chunk layout: FC inputs are one flat train; CONV inputs are chunked
    per input channel."""
    comp, cycles = compress_spikes(tensor_words, size, chunk_width)
    if layer.kind == CONV:
        c, h, w = layer.in_size
        chunks = c * math.ceil(h * w / chunk_width)
        cycles = int(comp.addresses.size) + chunks
        comp = CompressedSpikes(addresses=comp.addresses, chunk_count=chunks)
    return comp, cycles


def timing_from_traces(
    cfg: NetworkConfig,
    input_traces: list[SpikeTensor],
    mapping: MappingPlan | None = None,
) -> SimResult:
    """Cycle counts from frozen per-layer input spike traces (no weights).

    input_traces[mi] feeds mapped layer mi. Timing depends only on the
    topology, mapping, memory plan, and spike addresses.
    """
    if mapping is None:
        mapping = build_mapping(cfg)
    mapped = cfg.mapped_layers
    if len(input_traces) != len(mapped):
        raise ValueError("need one input trace per mapped layer")
    t_total = cfg.timesteps
    n_mapped = len(mapped)
    comp_c = np.zeros((n_mapped, t_total), dtype=np.int64)
    acc_c = np.zeros((n_mapped, t_total), dtype=np.int64)
    act_c = np.zeros((n_mapped, t_total), dtype=np.int64)
    reads = np.zeros(n_mapped, dtype=np.int64)
    for mi, layer in enumerate(mapped):
        tensor = input_traces[mi]
        if tensor.size != layer.in_flat or tensor.timesteps != t_total:
            raise ValueError(f"trace {mi} does not match layer geometry")
        nus = mapping.layers[mi]
        max_size = max(nu.neural_size for nu in nus)
        contention = mapping.contention(mi, cfg.memory[mi].block_count)
        for t in range(t_total):
            comp, cycles = _compression_cost(
                layer, tensor.words[t], tensor.size, cfg.penc_chunk_width
            )
            comp_c[mi, t] = cycles
            if layer.kind == FC:
                acc_c[mi, t] = comp.addresses.size * max_size * contention
                act_c[mi, t] = max_size
                reads[mi] += comp.addresses.size * layer.out_size
            else:
                c, h, w = layer.in_size
                oc, oh, ow = layer.out_size
                touched = int(_affected_counts(comp.addresses, h, w, layer.kernel).sum())
                acc_c[mi, t] = max_size * touched
                act_c[mi, t] = max_size * oh * ow
                reads[mi] += oc * touched
    finish, total = pipeline_schedule(comp_c + acc_c + act_c, cfg.buffer_depth)
    return SimResult(
        total_cycles=total,
        compression=comp_c,
        accumulation=acc_c,
        activation=act_c,
        finish=finish,
        mapped_indices=cfg.mapped_indices,
        trace=None,
        spike_events=None,
        memory_reads=reads,
    )


def simulate_network(
    cfg: NetworkConfig,
    weights: WeightSet,
    spikes_in: SpikeTensor,
    mapping: MappingPlan | None = None,
) -> SimResult:
    """Full behavioral + timing simulation of one inference.

    Output spike traces follow the same accumulation order as the golden
    model; cycle counts come from the reference cost model and the pipeline
    recurrence. Raises NumericOverflowError on non-finite membranes.
    """
    weights.validate(cfg)
    if spikes_in.size != cfg.input_flat:
        raise ValueError(f"input size {spikes_in.size} != network input {cfg.input_flat}")
    if spikes_in.timesteps != cfg.timesteps:
        raise ValueError("input spike train length != configured timesteps")
    if mapping is None:
        mapping = build_mapping(cfg)

    t_total = cfg.timesteps
    mapped_idx = cfg.mapped_indices
    n_mapped = len(mapped_idx)
    comp_c = np.zeros((n_mapped, t_total), dtype=np.int64)
    acc_c = np.zeros((n_mapped, t_total), dtype=np.int64)
    act_c = np.zeros((n_mapped, t_total), dtype=np.int64)
    reads = np.zeros(n_mapped, dtype=np.int64)

    membranes = {
        li: np.zeros(cfg.layers[li].out_flat, dtype=np.float32) for li in mapped_idx
    }
    out_bits = [np.zeros((t_total, l.out_flat), dtype=bool) for l in cfg.layers]

    for t in range(t_total):
        cur_words, cur_size = spikes_in.words[t], spikes_in.size
        mi = 0
        for li, layer in enumerate(cfg.layers):
            if layer.kind == MAXPOOL:
                c, h, w = layer.in_size
                bits = kernels.unpack_bits(cur_words, cur_size)
                pooled = (
                    bits.reshape(c, h // 2, 2, w // 2, 2).any(axis=(2, 4)).reshape(-1)
                )
                out_bits[li][t] = pooled
                cur_words, cur_size = kernels.pack_bits(pooled), pooled.size
                continue
            comp, comp_cycles = _compression_cost(
                layer, cur_words, cur_size, cfg.penc_chunk_width
            )
            nus = mapping.layers[mi]
            lw = weights.per_layer[li]
            if layer.kind == FC:
                contention = mapping.contention(mi, cfg.memory[mi].block_count)
                spikes, cost, _ = fc_timestep(
                    layer, nus, contention, lw, comp, membranes[li]
                )
                reads[mi] += comp.addresses.size * layer.out_size
            else:
                spikes, cost, _ = conv_timestep(layer, nus, lw, comp, membranes[li])
                reads[mi] += layer.out_size[0] * int(
                    _affected_counts(
                        comp.addresses, layer.in_size[1], layer.in_size[2], layer.kernel
                    ).sum()
                )
            if not np.isfinite(membranes[li]).all():
                raise NumericOverflowError(f"non-finite membrane in layer {li}")
            comp_c[mi, t] = comp_cycles
            acc_c[mi, t] = cost.accumulation
            act_c[mi, t] = cost.activation
            out_bits[li][t] = spikes
            cur_words, cur_size = kernels.pack_bits(spikes), spikes.size
            mi += 1

    traces = tuple(SpikeTensor.from_bool(b) for b in out_bits)
    counts = np.stack([tr.counts() for tr in traces])
    trace = LayerSpikeTrace(
        traces=traces, counts=counts, input_counts=spikes_in.counts()
    )
    finish, total = pipeline_schedule(comp_c + acc_c + act_c, cfg.buffer_depth)
    return SimResult(
        total_cycles=total,
        compression=comp_c,
        accumulation=acc_c,
        activation=act_c,
        finish=finish,
        mapped_indices=mapped_idx,
        trace=trace,
        spike_events=counts.sum(axis=1),
        memory_reads=reads,
    )
