"""Design-space sweeps over layer-wise LHR, spike-train length, and PCR.

Configurations are enumerated as a Cartesian product, evaluated (cycles,
resources, energy, accuracy over a small image budget), and reduced to a
Pareto front. Evaluation may run on a thread pool (capped by the
SNNDSE_THREADS environment variable); results are gathered in enumeration
order so output files are byte-stable regardless of scheduling.
"""

from __future__ import annotations

import concurrent.futures
import configparser
import dataclasses
import json
import logging
import os
import re
from dataclasses import dataclass

import numpy as np

from . import accel, cost
from .config import ConfigError, NetworkConfig, build_mapping, validate_config
from .golden import WeightSet, decode_population
from .spikeio import ImageSet, rate_encode

log = logging.getLogger(__name__)

CSV_HEADER = "config_id,lhr,timesteps,pcr,cycles_mean,lut,reg,bram,energy_j,accuracy"


@dataclass(frozen=True)
class SweepSpec:
    lhr_choices: tuple[tuple[int, ...], ...]  # per mapped layer
    timestep_choices: tuple[int, ...]
    pcr_choices: tuple[int, ...]
    sample_budget: int
    objectives: tuple[str, ...] = ("cycles", "lut", "energy", "accuracy")

    def validate(self) -> None:
        if not self.lhr_choices or any(not c for c in self.lhr_choices):
            raise ConfigError("lhr choice lists must be non-empty")
        if not self.timestep_choices or not self.pcr_choices:
            raise ConfigError("timestep/pcr choice lists must be non-empty")
        if self.sample_budget < 1:
            raise ConfigError("sample budget must be >= 1")
        bad = set(self.objectives) - {"cycles", "lut", "energy", "accuracy"}
        if not self.objectives or bad:
            raise ConfigError(f"bad objectives {sorted(bad)}")


@dataclass(frozen=True)
class SweepRow:
    config_id: str
    lhr: tuple[int, ...]
    timesteps: int
    pcr: int
    cycles_mean: float
    lut: float
    reg: float
    bram: int
    energy_j: float
    accuracy: float
    error: str | None = None


def parse_sweep_spec(text: str) -> SweepSpec:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"sweep syntax error: {exc}") from exc
    if not cp.has_section("sweep"):
        raise ConfigError("missing [sweep] section")

    def ints(raw: str) -> tuple[int, ...]:
        vals = tuple(int(p) for p in re.split(r"[,\s]+", raw.strip()) if p)
        if not vals:
            raise ConfigError(f"empty choice list in {raw!r}")
        return vals

    lhr_raw = cp.get("sweep", "lhr", fallback=None)
    if lhr_raw is None:
        raise ConfigError("missing [sweep] lhr")
    lhr_choices = tuple(ints(part) for part in lhr_raw.split("/"))
    spec = SweepSpec(
        lhr_choices=lhr_choices,
        timestep_choices=ints(cp.get("sweep", "timesteps", fallback="")),
        pcr_choices=ints(cp.get("sweep", "pcr", fallback="")),
        sample_budget=int(cp.get("sweep", "budget", fallback="1")),
        objectives=tuple(
            re.split(r"[,\s]+", cp.get("sweep", "objectives", fallback="cycles lut energy accuracy").strip())
        ),
    )
    spec.validate()
    return spec


def _auto_memory(base: NetworkConfig, lhr: tuple[int, ...]) -> tuple:
    """Regenerate the contention-free default plan for a swept LHR vector."""
    plans = []
    for layer, r, old in zip(base.mapped_layers, lhr, base.memory):
        n = layer.logical_size
        blocks = -(-n // r)
        plans.append(
            dataclasses.replace(
                old,
                block_count=blocks,
                neurons_per_block=r,
                block_depth=r * layer.weight_words_per_unit,
            )
        )
    return tuple(plans)


def enumerate_configs(
    spec: SweepSpec, base: NetworkConfig
) -> list[tuple[str, NetworkConfig]]:
    """Cartesian product of sweep choices, validated; invalid points are
    logged and skipped. Deterministic order: LHR vectors lexicographic by
    choice position, then timesteps, then pcr."""
    spec.validate()
    if len(spec.lhr_choices) != len(base.mapped_indices):
        raise ConfigError(
            f"sweep has {len(spec.lhr_choices)} LHR choice lists for "
            f"{len(base.mapped_indices)} mapped layers"
        )
    lhr_vectors = [()]
    for choices in spec.lhr_choices:
        lhr_vectors = [v + (c,) for v in lhr_vectors for c in choices]
    out = []
    idx = 0
    for lhr in lhr_vectors:
        for t in spec.timestep_choices:
            for pcr in spec.pcr_choices:
                cand = dataclasses.replace(
                    base,
                    lhr=tuple(lhr),
                    timesteps=t,
                    pcr=pcr,
                    memory=_auto_memory(base, tuple(lhr)),
                )
                try:
                    validate_config(cand)
                except ConfigError as exc:
                    log.warning(
                        "skipping config lhr=%s T=%d pcr=%d: %s", lhr, t, pcr, exc
                    )
                    continue
                out.append((f"cfg{idx:04d}", cand))
                idx += 1
    return out


def _evaluate(
    config_id: str,
    cfg: NetworkConfig,
    weights: WeightSet,
    images: ImageSet,
    seed: int,
    lib: cost.CostLibrary,
    budget: int,
) -> SweepRow:
    mapping = build_mapping(cfg)
    report = cost.estimate_resources(cfg, mapping, lib)
    try:
        cycles = []
        correct = 0
        for i in range(budget):
            spikes = rate_encode(images.images[i], cfg.timesteps, seed + i)
            res = accel.simulate_network(cfg, weights, spikes, mapping)
            cycles.append(res.total_cycles)
            pred = decode_population(res.trace.output, cfg.classes, cfg.pcr)
            correct += int(pred == int(images.labels[i]))
        cycles_mean = float(np.mean(cycles))
        energy = cost.estimate_energy(cycles_mean, report, lib.power)
        return SweepRow(
            config_id=config_id,
            lhr=cfg.lhr,
            timesteps=cfg.timesteps,
            pcr=cfg.pcr,
            cycles_mean=cycles_mean,
            lut=report.lut,
            reg=report.reg,
            bram=report.bram,
            energy_j=energy,
            accuracy=correct / budget,
        )
    except Exception as exc:  # noqa: BLE001 - per-row failures must not kill the sweep
        log.warning("config %s failed: %s", config_id, exc)
        return SweepRow(
            config_id=config_id,
            lhr=cfg.lhr,
            timesteps=cfg.timesteps,
            pcr=cfg.pcr,
            cycles_mean=float("nan"),
            lut=report.lut,
            reg=report.reg,
            bram=report.bram,
            energy_j=float("nan"),
            accuracy=float("nan"),
            error=str(exc),
        )


def _max_workers() -> int:
    raw = os.environ.get("SNNDSE_THREADS", "")
    if raw.strip():
        return max(1, int(raw))
    return min(8, os.cpu_count() or 1)


def run_sweep(
    configs: list[tuple[str, NetworkConfig]],
    weights: WeightSet,
    images: ImageSet,
    seed: int,
    budget: int,
    lib: cost.CostLibrary | None = None,
) -> list[SweepRow]:
    """Evaluate every configuration; deterministic given (configs, weights,
    images, seed). Rows come back in enumeration order."""
    if budget < 1:
        raise ConfigError("sample budget must be >= 1")
    if budget > images.images.shape[0]:
        raise ConfigError("sample budget exceeds available images")
    if lib is None:
        lib = cost.load_cost_library()
    workers = _max_workers()
    if workers == 1 or len(configs) == 1:
        return [
            _evaluate(cid, cfg, weights, images, seed, lib, budget)
            for cid, cfg in configs
        ]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_evaluate, cid, cfg, weights, images, seed, lib, budget)
            for cid, cfg in configs
        ]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# Pareto extraction
# ---------------------------------------------------------------------------

_OBJECTIVE_SENSE = {"cycles": "min", "lut": "min", "energy": "min", "accuracy": "max"}
_OBJECTIVE_FIELD = {
    "cycles": "cycles_mean",
    "lut": "lut",
    "energy": "energy_j",
    "accuracy": "accuracy",
}


def pareto_indices(matrix: np.ndarray, maximize: np.ndarray) -> list[int]:
    """Indices of non-dominated rows, stable order.

    Row a dominates b when a is at least as good in every column and
    strictly better in at least one (columns flagged in ``maximize`` are
    maximized, others minimized). Duplicates never dominate each other.
    """
    values = np.asarray(matrix, dtype=float).copy()
    values[:, np.asarray(maximize, dtype=bool)] *= -1.0
    keep = []
    for i in range(values.shape[0]):
        dominated = False
        for j in range(values.shape[0]):
            if j == i:
                continue
            if np.all(values[j] <= values[i]) and np.any(values[j] < values[i]):
                dominated = True
                break
        if not dominated:
            keep.append(i)
    return keep


def pareto_front(rows: list[SweepRow], objectives: tuple[str, ...]) -> list[SweepRow]:
    """Non-dominated sweep rows under the named objectives (accuracy is
    maximized, everything else minimized). Failed rows are excluded."""
    if not objectives:
        raise ConfigError("objectives must be non-empty")
    usable = [r for r in rows if r.error is None]
    if not usable:
        return []
    matrix = np.array(
        [[getattr(r, _OBJECTIVE_FIELD[o]) for o in objectives] for r in usable]
    )
    maximize = np.array([_OBJECTIVE_SENSE[o] == "max" for o in objectives])
    return [usable[i] for i in pareto_indices(matrix, maximize)]


# ---------------------------------------------------------------------------
# output documents
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return "nan" if isinstance(x, float) and np.isnan(x) else f"{x:.6g}"


def format_sweep_csv(rows: list[SweepRow]) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        lhr = "(" + ",".join(str(v) for v in r.lhr) + ")"
        lines.append(
            f"{r.config_id},{lhr},{r.timesteps},{r.pcr},"
            f"{_fmt(r.cycles_mean)},{_fmt(r.lut)},{_fmt(r.reg)},{r.bram},"
            f"{_fmt(r.energy_j)},{_fmt(r.accuracy)}"
        )
    return "\n".join(lines) + "\n"


def format_sweep_report(rows: list[SweepRow], objectives: tuple[str, ...]) -> str:
    front = {r.config_id for r in pareto_front(rows, objectives)}
    doc = {
        "objectives": list(objectives),
        "rows": [
            {
                "config_id": r.config_id,
                "lhr": list(r.lhr),
                "timesteps": r.timesteps,
                "pcr": r.pcr,
                "cycles_mean": None if np.isnan(r.cycles_mean) else r.cycles_mean,
                "lut": r.lut,
                "reg": r.reg,
                "bram": r.bram,
                "energy_j": None if np.isnan(r.energy_j) else r.energy_j,
                "accuracy": None if np.isnan(r.accuracy) else r.accuracy,
                "pareto": r.config_id in front,
                "error": r.error,
            }
            for r in rows
        ],
    }
    return json.dumps(doc, indent=2) + "\n"
