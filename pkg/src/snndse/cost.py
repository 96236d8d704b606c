"""FPGA resource and energy estimation from a mapping plan.

Component costs come from an editable JSON library (schema in
docs/formats.md). The bundled default calibration is a toy library: it
preserves the additive structure and relative magnitudes of real component
costs but is not silicon-accurate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from importlib import resources as importlib_resources
from pathlib import Path

from .config import CONV, FC, MappingPlan, NetworkConfig

COSTLIB_FORMAT = "snndse-costlib-v1"


class CostLibraryError(ValueError):
    """Missing or malformed component cost entry."""


@dataclass(frozen=True)
class ComponentCost:
    lut: float = 0.0
    reg: float = 0.0


@dataclass(frozen=True)
class NuCost:
    lut_per_unit: float = 0.0
    reg_per_unit: float = 0.0
    lut_per_slot: float = 0.0
    reg_per_slot: float = 0.0


@dataclass(frozen=True)
class PowerModel:
    clock_period: float = 1e-8  # 100 MHz
    static_power: float = 0.05  # watts
    alpha_lut: float = 2e-6  # watts per LUT
    alpha_reg: float = 5e-7
    alpha_bram: float = 1e-4

    def validate(self) -> None:
        if self.clock_period <= 0:
            raise CostLibraryError("clock_period must be > 0")
        if min(self.static_power, self.alpha_lut, self.alpha_reg, self.alpha_bram) < 0:
            raise CostLibraryError("power coefficients must be >= 0")


@dataclass(frozen=True)
class CostLibrary:
    nu_fc: NuCost
    nu_conv: NuCost
    ecu: ComponentCost
    wrapper: ComponentCost
    penc: dict[int, ComponentCost]
    memory_block: ComponentCost
    bram_capacity_bits: int = 36864
    power: PowerModel = PowerModel()

    def penc_cost(self, width: int) -> ComponentCost:
        try:
            return self.penc[width]
        except KeyError:
            raise CostLibraryError(f"cost library has no PENC entry for width {width}")

    def bram_blocks(self, depth: int, word_width: int) -> int:
        return math.ceil(depth * word_width / self.bram_capacity_bits)


@dataclass(frozen=True)
class LayerResources:
    lut: float
    reg: float
    bram: int


@dataclass(frozen=True)
class ResourceReport:
    per_layer: tuple[LayerResources, ...]  # one entry per mapped layer
    wrapper: LayerResources
    lut: float
    reg: float
    bram: int
    energy_per_inference: float | None = None

    def with_energy(self, joules: float) -> "ResourceReport":
        return replace(self, energy_per_inference=joules)

    def to_dict(self) -> dict:
        return {
            "per_layer": [
                {"lut": l.lut, "reg": l.reg, "bram": l.bram} for l in self.per_layer
            ],
            "wrapper": {"lut": self.wrapper.lut, "reg": self.wrapper.reg},
            "total": {"lut": self.lut, "reg": self.reg, "bram": self.bram},
            "energy_per_inference_j": self.energy_per_inference,
        }


def _component(doc: dict, key: str) -> ComponentCost:
    entry = doc.get(key)
    if entry is None:
        raise CostLibraryError(f"cost library missing {key!r} entry")
    return ComponentCost(lut=float(entry.get("lut", 0)), reg=float(entry.get("reg", 0)))


def _nu(doc: dict, key: str) -> NuCost:
    entry = doc.get(key)
    if entry is None:
        raise CostLibraryError(f"cost library missing {key!r} entry")
    cost = NuCost(
        lut_per_unit=float(entry.get("lut_per_unit", 0)),
        reg_per_unit=float(entry.get("reg_per_unit", 0)),
        lut_per_slot=float(entry.get("lut_per_slot", 0)),
        reg_per_slot=float(entry.get("reg_per_slot", 0)),
    )
    if min(cost.lut_per_unit, cost.reg_per_unit, cost.lut_per_slot, cost.reg_per_slot) < 0:
        raise CostLibraryError(f"{key}: costs must be >= 0")
    return cost


def parse_cost_library(doc: dict) -> CostLibrary:
    if doc.get("format") != COSTLIB_FORMAT:
        raise CostLibraryError(f"unsupported cost library format {doc.get('format')!r}")
    penc_doc = doc.get("penc")
    if not isinstance(penc_doc, dict) or not penc_doc:
        raise CostLibraryError("cost library missing 'penc' width table")
    penc = {}
    for width, entry in penc_doc.items():
        penc[int(width)] = ComponentCost(
            lut=float(entry.get("lut", 0)), reg=float(entry.get("reg", 0))
        )
    cap = int(doc.get("bram_capacity_bits", 36864))
    if cap <= 0:
        raise CostLibraryError("bram_capacity_bits must be > 0")
    power_doc = doc.get("power", {})
    power = PowerModel(
        clock_period=float(power_doc.get("clock_period_s", PowerModel.clock_period)),
        static_power=float(power_doc.get("static_power_w", PowerModel.static_power)),
        alpha_lut=float(power_doc.get("alpha_lut_w", PowerModel.alpha_lut)),
        alpha_reg=float(power_doc.get("alpha_reg_w", PowerModel.alpha_reg)),
        alpha_bram=float(power_doc.get("alpha_bram_w", PowerModel.alpha_bram)),
    )
    power.validate()
    return CostLibrary(
        nu_fc=_nu(doc, "nu_fc"),
        nu_conv=_nu(doc, "nu_conv"),
        ecu=_component(doc, "ecu"),
        wrapper=_component(doc, "wrapper"),
        penc=penc,
        memory_block=_component(doc, "memory_block"),
        bram_capacity_bits=cap,
        power=power,
    )


def load_cost_library(path=None) -> CostLibrary:
    """Load a cost library file, or the bundled default when path is None."""
    if path is None:
        raw = (
            importlib_resources.files("snndse")
            .joinpath("data/default_cost_lib.json")
            .read_text()
        )
    else:
        raw = Path(path).read_text()
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise CostLibraryError(f"cost library is not valid JSON: {exc}") from exc
    return parse_cost_library(doc)


def estimate_resources(
    cfg: NetworkConfig, mapping: MappingPlan, lib: CostLibrary
) -> ResourceReport:
    """Strictly additive per-layer resource roll-up.

    Per mapped layer: NU cost (per instance + per logical slot), one ECU,
    PENC instances per input chunk, and the layer's weight-memory blocks.
    """
    per_layer = []
    for mi, layer in enumerate(cfg.mapped_layers):
        nus = mapping.layers[mi]
        nu_count = len(nus)
        slots = sum(nu.neural_size for nu in nus)
        nu_cost = lib.nu_fc if layer.kind == FC else lib.nu_conv
        lut = nu_count * nu_cost.lut_per_unit + slots * nu_cost.lut_per_slot
        reg = nu_count * nu_cost.reg_per_unit + slots * nu_cost.reg_per_slot
        lut += lib.ecu.lut
        reg += lib.ecu.reg
        if layer.kind == CONV:
            c, h, w = layer.in_size
            chunk_count = c * math.ceil(h * w / cfg.penc_chunk_width)
        else:
            chunk_count = math.ceil(layer.in_flat / cfg.penc_chunk_width)
        penc = lib.penc_cost(cfg.penc_chunk_width)
        lut += chunk_count * penc.lut
        reg += chunk_count * penc.reg
        mem = cfg.memory[mi]
        lut += mem.block_count * lib.memory_block.lut
        reg += mem.block_count * lib.memory_block.reg
        bram = mem.block_count * lib.bram_blocks(mem.block_depth, mem.word_width)
        per_layer.append(LayerResources(lut=lut, reg=reg, bram=bram))
    wrapper = LayerResources(lut=lib.wrapper.lut, reg=lib.wrapper.reg, bram=0)
    return ResourceReport(
        per_layer=tuple(per_layer),
        wrapper=wrapper,
        lut=sum(l.lut for l in per_layer) + wrapper.lut,
        reg=sum(l.reg for l in per_layer) + wrapper.reg,
        bram=sum(l.bram for l in per_layer),
    )


def estimate_energy(
    total_cycles: int, report: ResourceReport, power: PowerModel
) -> float:
    """Energy per inference: cycles x clock period x affine power model."""
    power.validate()
    watts = (
        power.static_power
        + power.alpha_lut * report.lut
        + power.alpha_reg * report.reg
        + power.alpha_bram * report.bram
    )
    return total_cycles * power.clock_period * watts
