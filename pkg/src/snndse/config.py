"""Experiment configuration: parsing, validation, and NU mapping.

The configuration document is an INI-style file with sections [network],
[lif], [lhr], [memory], and [sim]; the grammar is documented in
docs/formats.md. Topology strings follow the compact notation
``784-500-500-300`` for fully connected stacks and e.g.
``28x28-8C3-P2-100-30`` for convolutional ones (``<f>C<k>`` = conv layer
with f filters of odd side k, ``P2`` = non-overlapping 2x2 max-pool).
"""

from __future__ import annotations

import configparser
import io
import math
import re
from dataclasses import dataclass, field

FC = "fc"
CONV = "conv"
MAXPOOL = "maxpool"

_CONV_RE = re.compile(r"^(\d+)C(\d+)$")
_POOL_RE = re.compile(r"^P(\d+)$")
_FMAP_RE = re.compile(r"^(\d+)x(\d+)(?:x(\d+))?$")


class ConfigError(ValueError):
    """Syntax or semantic error in a configuration document."""


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    in_size: int | tuple[int, int, int]
    out_size: int | tuple[int, int, int]
    kernel: int = 0
    pool_window: int = 0
    beta: float = 0.0
    threshold: float = 1.0
    reset_mode: str = "subtract"

    @property
    def logical_size(self) -> int:
        """Units the layer is mapped by: neurons (FC) or output channels (CONV)."""
        if self.kind == FC:
            return self.out_size
        return self.out_size[0]

    @property
    def in_flat(self) -> int:
        return self.in_size if isinstance(self.in_size, int) else math.prod(self.in_size)

    @property
    def out_flat(self) -> int:
        return self.out_size if isinstance(self.out_size, int) else math.prod(self.out_size)

    @property
    def weight_words_per_unit(self) -> int:
        """Weight-memory entries per logical unit (pre size for FC, C*K*K for CONV)."""
        if self.kind == FC:
            return self.in_size
        if self.kind == CONV:
            return self.in_size[0] * self.kernel * self.kernel
        return 0

    def validate(self) -> None:
        if self.kind == FC:
            if not (isinstance(self.in_size, int) and self.in_size >= 1):
                raise ConfigError("FC layer requires in_size >= 1")
            if not (isinstance(self.out_size, int) and self.out_size >= 1):
                raise ConfigError("FC layer requires out_size >= 1")
        elif self.kind == CONV:
            if self.kernel < 1 or self.kernel % 2 == 0:
                raise ConfigError(f"conv kernel must be odd and >= 1, got {self.kernel}")
        elif self.kind == MAXPOOL:
            if self.pool_window != 2:
                raise ConfigError("pool window must be 2")
        else:
            raise ConfigError(f"unknown layer kind {self.kind!r}")
        if self.kind != MAXPOOL:
            if not (0.0 <= self.beta < 1.0):
                raise ConfigError(f"beta must be in [0,1), got {self.beta}")
            if not (self.threshold > 0):
                raise ConfigError(f"threshold must be > 0, got {self.threshold}")
            if self.reset_mode not in ("subtract", "zero"):
                raise ConfigError(f"reset_mode must be subtract|zero, got {self.reset_mode}")


@dataclass(frozen=True)
class MemoryLayerPlan:
    """Weight-memory blocks for one mapped layer."""

    block_count: int
    neurons_per_block: int
    block_depth: int
    word_width: int = 32


@dataclass(frozen=True)
class NetworkConfig:
    layers: tuple[LayerSpec, ...]
    lhr: tuple[int, ...]
    memory: tuple[MemoryLayerPlan, ...]
    timesteps: int
    pcr: int
    classes: int
    seed: int
    penc_chunk_width: int = 64
    buffer_depth: int = 1

    @property
    def input_size(self) -> int | tuple[int, int, int]:
        return self.layers[0].in_size

    @property
    def input_flat(self) -> int:
        return self.layers[0].in_flat

    @property
    def mapped_indices(self) -> tuple[int, ...]:
        """Network-layer indices of FC/CONV layers (pools carry no NUs)."""
        return tuple(i for i, l in enumerate(self.layers) if l.kind != MAXPOOL)

    @property
    def mapped_layers(self) -> tuple[LayerSpec, ...]:
        return tuple(self.layers[i] for i in self.mapped_indices)


@dataclass(frozen=True)
class NuDescriptor:
    base_address: int
    neural_size: int
    memory_blocks: tuple[int, ...]


@dataclass(frozen=True)
class MappingPlan:
    """Per mapped layer: NU partition of the logical units plus block binding."""

    layers: tuple[tuple[NuDescriptor, ...], ...]
    mapped_indices: tuple[int, ...]

    def nu_count(self, mapped_idx: int) -> int:
        return len(self.layers[mapped_idx])

    def max_neural_size(self, mapped_idx: int) -> int:
        return max(nu.neural_size for nu in self.layers[mapped_idx])

    def contention(self, mapped_idx: int, block_count: int) -> int:
        """Serialization factor: max NUs reading one memory block."""
        per_block = [0] * block_count
        for nu in self.layers[mapped_idx]:
            for b in nu.memory_blocks:
                per_block[b] += 1
        return max(1, max(per_block))


# ---------------------------------------------------------------------------
# topology string handling
# ---------------------------------------------------------------------------

def _parse_shape_token(tok: str):
    m = _FMAP_RE.match(tok)
    if m:
        h, w, d = m.groups()
        if d is not None:
            return (int(h), int(w), int(d))  # CxHxW
        return (1, int(h), int(w))
    if tok.isdigit():
        return int(tok)
    raise ConfigError(f"bad input token {tok!r} in topology")


def parse_topology(text: str) -> list[dict]:
    """Split a topology string into raw layer descriptors (kind + geometry)."""
    toks = text.strip().split("-")
    if len(toks) < 2:
        raise ConfigError("topology needs an input token and at least one layer")
    shape = _parse_shape_token(toks[0])
    out = []
    for tok in toks[1:]:
        m = _CONV_RE.match(tok)
        if m:
            filters, kernel = int(m.group(1)), int(m.group(2))
            if isinstance(shape, int):
                raise ConfigError(f"conv layer {tok!r} needs a spatial input")
            c, h, w = shape
            oh, ow = h - kernel + 1, w - kernel + 1
            if oh < 1 or ow < 1:
                raise ConfigError(f"conv kernel {kernel} too large for {h}x{w} input")
            out.append({"kind": CONV, "in": shape, "out": (filters, oh, ow), "kernel": kernel})
            shape = (filters, oh, ow)
            continue
        m = _POOL_RE.match(tok)
        if m:
            win = int(m.group(1))
            if isinstance(shape, int):
                raise ConfigError("pool layer needs a spatial input")
            c, h, w = shape
            if win != 2 or h % 2 or w % 2:
                raise ConfigError(f"pool requires window 2 over even dims, got P{win} on {h}x{w}")
            out.append({"kind": MAXPOOL, "in": shape, "out": (c, h // 2, w // 2)})
            shape = (c, h // 2, w // 2)
            continue
        if tok.isdigit():
            n = int(tok)
            in_size = shape if isinstance(shape, int) else math.prod(shape)
            out.append({"kind": FC, "in": in_size, "out": n})
            shape = n
            continue
        raise ConfigError(f"bad layer token {tok!r} in topology")
    if out[-1]["kind"] == MAXPOOL:
        raise ConfigError("topology must not end with a pool layer")
    return out


def format_topology(layers: tuple[LayerSpec, ...]) -> str:
    first = layers[0]
    if isinstance(first.in_size, int):
        toks = [str(first.in_size)]
    else:
        c, h, w = first.in_size
        toks = [f"{h}x{w}" if c == 1 else f"{c}x{h}x{w}"]
    for l in layers:
        if l.kind == FC:
            toks.append(str(l.out_size))
        elif l.kind == CONV:
            toks.append(f"{l.out_size[0]}C{l.kernel}")
        else:
            toks.append("P2")
    return "-".join(toks)


# ---------------------------------------------------------------------------
# document parsing
# ---------------------------------------------------------------------------

def _get(cp: configparser.ConfigParser, section: str, key: str, default=None):
    if not cp.has_option(section, key):
        if default is None:
            raise ConfigError(f"missing [{section}] {key}")
        return default
    return cp.get(section, key)


def _num_list(raw: str, count: int, conv, what: str):
    parts = [p for p in re.split(r"[,\s()]+", raw.strip()) if p]
    try:
        vals = [conv(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"bad {what} value in {raw!r}") from exc
    if len(vals) == 1:
        vals = vals * count
    if len(vals) != count:
        raise ConfigError(f"{what} needs 1 or {count} values, got {len(vals)}")
    return vals


def parse_network_config(text: str) -> NetworkConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax error: {exc}") from exc
    for sec in ("network", "lif", "lhr", "sim"):
        if not cp.has_section(sec):
            raise ConfigError(f"missing [{sec}] section")

    raw_layers = parse_topology(_get(cp, "network", "topology"))
    mapped = [l for l in raw_layers if l["kind"] != MAXPOOL]
    n_mapped = len(mapped)

    betas = _num_list(_get(cp, "lif", "beta"), n_mapped, float, "beta")
    thrs = _num_list(_get(cp, "lif", "threshold"), n_mapped, float, "threshold")
    reset = _get(cp, "lif", "reset_mode", "subtract").strip().lower()

    ratios = _num_list(_get(cp, "lhr", "ratios"), n_mapped, int, "lhr ratio")
    if any(r < 1 for r in ratios):
        raise ConfigError("lhr ratios must be >= 1")

    try:
        timesteps = int(_get(cp, "sim", "timesteps"))
        seed = int(_get(cp, "sim", "seed", "0"))
        chunk = int(_get(cp, "sim", "penc_chunk_width", "64"))
        pcr = int(_get(cp, "sim", "pcr", "1"))
        buffer_depth = int(_get(cp, "sim", "buffer_depth", "1"))
    except ValueError as exc:
        raise ConfigError(f"bad [sim] value: {exc}") from exc
    out_size = mapped[-1]["out"] if isinstance(mapped[-1]["out"], int) else math.prod(mapped[-1]["out"])
    classes = int(_get(cp, "sim", "classes", str(out_size)))

    layers = []
    mi = 0
    for raw in raw_layers:
        if raw["kind"] == MAXPOOL:
            layers.append(LayerSpec(MAXPOOL, raw["in"], raw["out"], pool_window=2))
            continue
        layers.append(
            LayerSpec(
                raw["kind"],
                raw["in"],
                raw["out"],
                kernel=raw.get("kernel", 0),
                beta=betas[mi],
                threshold=thrs[mi],
                reset_mode=reset,
            )
        )
        mi += 1
    for l in layers:
        l.validate()

    sizes = [l.logical_size for l in layers if l.kind != MAXPOOL]
    wpu = [l.weight_words_per_unit for l in layers if l.kind != MAXPOOL]
    word_width = int(_get(cp, "memory", "word_width", "32")) if cp.has_section("memory") else 32
    blocks_raw = _get(cp, "memory", "blocks", "auto") if cp.has_section("memory") else "auto"
    npb_raw = _get(cp, "memory", "neurons_per_block", "auto") if cp.has_section("memory") else "auto"

    nu_counts = [math.ceil(n / r) for n, r in zip(sizes, ratios)]
    if blocks_raw.strip().lower() == "auto":
        block_counts = nu_counts
    else:
        block_counts = _num_list(blocks_raw, n_mapped, int, "memory blocks")
    if npb_raw.strip().lower() == "auto":
        npbs = list(ratios) if blocks_raw.strip().lower() == "auto" else [
            math.ceil(n / b) for n, b in zip(sizes, block_counts)
        ]
    else:
        npbs = _num_list(npb_raw, n_mapped, int, "neurons_per_block")
    memory = []
    for i, (bc, m) in enumerate(zip(block_counts, npbs)):
        if bc < 1 or m < 1:
            raise ConfigError("memory block_count and neurons_per_block must be >= 1")
        if bc * m < sizes[i]:
            raise ConfigError(
                f"layer {i}: {bc} blocks x {m} units/block cannot hold {sizes[i]} units"
            )
        memory.append(MemoryLayerPlan(bc, m, m * wpu[i], word_width))

    cfg = NetworkConfig(
        layers=tuple(layers),
        lhr=tuple(ratios),
        memory=tuple(memory),
        timesteps=timesteps,
        pcr=pcr,
        classes=classes,
        seed=seed,
        penc_chunk_width=chunk,
        buffer_depth=buffer_depth,
    )
    validate_config(cfg)
    return cfg


def validate_config(cfg: NetworkConfig) -> None:
    if cfg.timesteps < 1:
        raise ConfigError("timesteps must be >= 1")
    if not (1 <= cfg.penc_chunk_width <= 100):
        raise ConfigError("penc_chunk_width must be in [1,100]")
    if cfg.pcr < 1 or cfg.classes < 1:
        raise ConfigError("pcr and classes must be >= 1")
    n_mapped = len(cfg.mapped_indices)
    if len(cfg.lhr) != n_mapped:
        raise ConfigError(f"lhr has {len(cfg.lhr)} ratios for {n_mapped} mapped layers")
    if len(cfg.memory) != n_mapped:
        raise ConfigError("memory plan length mismatch")
    if cfg.buffer_depth < 1:
        raise ConfigError("buffer_depth must be >= 1")
    out = cfg.layers[-1]
    if out.out_flat != cfg.classes * cfg.pcr:
        raise ConfigError(
            f"output layer size {out.out_flat} != classes*pcr = {cfg.classes * cfg.pcr}"
        )


def serialize_network_config(cfg: NetworkConfig) -> str:
    cp = configparser.ConfigParser()
    mapped = cfg.mapped_layers
    cp["network"] = {"topology": format_topology(cfg.layers)}
    cp["lif"] = {
        "beta": ", ".join(repr(l.beta) for l in mapped),
        "threshold": ", ".join(repr(l.threshold) for l in mapped),
        "reset_mode": mapped[0].reset_mode,
    }
    cp["lhr"] = {"ratios": ", ".join(str(r) for r in cfg.lhr)}
    cp["memory"] = {
        "blocks": ", ".join(str(m.block_count) for m in cfg.memory),
        "neurons_per_block": ", ".join(str(m.neurons_per_block) for m in cfg.memory),
        "word_width": str(cfg.memory[0].word_width),
    }
    cp["sim"] = {
        "timesteps": str(cfg.timesteps),
        "seed": str(cfg.seed),
        "penc_chunk_width": str(cfg.penc_chunk_width),
        "pcr": str(cfg.pcr),
        "classes": str(cfg.classes),
        "buffer_depth": str(cfg.buffer_depth),
    }
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def build_mapping(cfg: NetworkConfig) -> MappingPlan:
    """Partition each mapped layer into NUs of LHR units (remainder to the last)
    and bind NUs to weight-memory blocks round-robin."""
    plans = []
    for mi, layer in enumerate(cfg.mapped_layers):
        n = layer.logical_size
        r = cfg.lhr[mi]
        bc = cfg.memory[mi].block_count
        nus = []
        base = 0
        i = 0
        while base < n:
            size = min(r, n - base)
            nus.append(NuDescriptor(base, size, (i % bc,)))
            base += size
            i += 1
        plans.append(tuple(nus))
    return MappingPlan(layers=tuple(plans), mapped_indices=cfg.mapped_indices)
