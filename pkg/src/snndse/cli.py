"""Command-line front end: encode, simulate, validate, estimate, dse.

Exit codes: 0 success, 1 runtime error, 2 usage error, 3 spike-to-spike
validation mismatch. All subcommands are deterministic under fixed flags
and seed; --verbosity only changes the event log on stderr, never results.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import accel, cost, dse, manifest, spikeio
from .config import ConfigError, build_mapping, parse_network_config
from .golden import NumericOverflowError

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_MISMATCH = 3


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="snndse", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encode", help="rate-encode an IDX image into a spike file")
    enc.add_argument("--input", required=True, help="IDX image file")
    enc.add_argument("--index", type=int, default=0, help="image index within the file")
    enc.add_argument("--timesteps", type=int, required=True)
    enc.add_argument("--seed", type=int, default=0)
    enc.add_argument("--out", required=True, help="output .spk path")

    sim = sub.add_parser("simulate", help="cycle-accurate simulation of one input")
    sim.add_argument("--config", required=True, help="network configuration file")
    sim.add_argument("--model", required=True, help="model manifest directory")
    sim.add_argument("--input", required=True, help="input spike file (.spk)")
    sim.add_argument("--out", help="SimResult report (JSON)")
    sim.add_argument("--buffer-depth", type=int, default=None)
    sim.add_argument("--verbosity", type=int, choices=(0, 1, 2), default=0)

    val = sub.add_parser("validate", help="spike-to-spike validation against reference traces")
    val.add_argument("--model", required=True)
    val.add_argument("--input", required=True, help="input spike file (.spk)")
    val.add_argument("--reference", required=True, help="directory of layer<k>.spk reference traces")
    val.add_argument("--config", help="optional config (defaults to LHR 1 from the manifest)")
    val.add_argument("--verbosity", type=int, choices=(0, 1, 2), default=0)

    est = sub.add_parser("estimate", help="resource and energy estimate for a configuration")
    est.add_argument("--config", required=True)
    est.add_argument("--cost-lib", help="cost library JSON (default: bundled toy library)")
    est.add_argument("--cycles", type=int, help="attach energy for this cycle count")
    est.add_argument("--out", help="ResourceReport (JSON)")

    d = sub.add_parser("dse", help="run a design-space sweep")
    d.add_argument("--config", required=True, help="base network configuration")
    d.add_argument("--sweep", required=True, help="sweep specification file")
    d.add_argument("--model", required=True)
    d.add_argument("--input", required=True, help="IDX image file")
    d.add_argument("--labels", required=True, help="IDX label file")
    d.add_argument("--cost-lib")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", required=True, help="sweep table CSV")
    d.add_argument("--report", help="optional structured JSON report")
    return p


def _load_config(path: str):
    return parse_network_config(Path(path).read_text())


def _cmd_encode(args) -> int:
    images = spikeio.load_idx(args.input)
    if images.ndim != 3:
        print(f"error: {args.input} is not an IDX image file", file=sys.stderr)
        return EXIT_RUNTIME
    if not (0 <= args.index < images.shape[0]):
        print(f"error: index {args.index} out of range ({images.shape[0]} images)", file=sys.stderr)
        return EXIT_RUNTIME
    tensor = spikeio.rate_encode(images[args.index], args.timesteps, args.seed)
    spikeio.write_spike_file(tensor, args.out)
    print(f"wrote {args.out}: T={tensor.timesteps} n={tensor.size} spikes={int(tensor.counts().sum())}")
    return EXIT_OK


def _simulate(args, cfg):
    weights = manifest.load_weights(args.model, cfg)
    spikes = spikeio.read_spike_file(args.input)
    result = accel.simulate_network(cfg, weights, spikes, build_mapping(cfg))
    if args.verbosity >= 2:
        for line in result.event_log_lines():
            print(line, file=sys.stderr)
    return result


def _result_doc(cfg, result) -> dict:
    return {
        "total_cycles": result.total_cycles,
        "buffer_depth": cfg.buffer_depth,
        "mapped_layers": list(result.mapped_indices),
        "per_layer": [
            {
                "layer": li,
                "compression": result.compression[mi].tolist(),
                "accumulation": result.accumulation[mi].tolist(),
                "activation": result.activation[mi].tolist(),
                "memory_reads": int(result.memory_reads[mi]),
            }
            for mi, li in enumerate(result.mapped_indices)
        ],
        "spike_events": result.spike_events.tolist(),
        "input_spike_events": int(result.trace.input_counts.sum()),
    }


def _cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    if args.buffer_depth is not None:
        cfg = dataclasses.replace(cfg, buffer_depth=args.buffer_depth)
    spikes = spikeio.read_spike_file(args.input)
    if spikes.timesteps != cfg.timesteps:
        cfg = dataclasses.replace(cfg, timesteps=spikes.timesteps)
    result = _simulate(args, cfg)
    print(f"total_cycles={result.total_cycles}")
    if args.verbosity >= 1:
        for mi, li in enumerate(result.mapped_indices):
            print(
                f"layer {li}: cycles={int(result.phase_totals[mi].sum())} "
                f"spikes={int(result.spike_events[li])}",
                file=sys.stderr,
            )
    if args.out:
        Path(args.out).write_text(json.dumps(_result_doc(cfg, result), indent=2) + "\n")
    return EXIT_OK


def _cmd_validate(args) -> int:
    spikes = spikeio.read_spike_file(args.input)
    if args.config:
        cfg = _load_config(args.config)
        if spikes.timesteps != cfg.timesteps:
            cfg = dataclasses.replace(cfg, timesteps=spikes.timesteps)
    else:
        cfg = manifest.config_from_manifest(args.model, timesteps=spikes.timesteps)
    result = _simulate(args, cfg)
    ref_dir = Path(args.reference)
    compared = 0
    for li in range(len(cfg.layers)):
        ref_path = ref_dir / f"layer{li}.spk"
        if not ref_path.exists():
            continue
        ref = spikeio.read_spike_file(ref_path)
        got = result.trace.traces[li]
        if ref.timesteps != got.timesteps or ref.size != got.size:
            print(
                f"MISMATCH layer={li}: reference shape (T={ref.timesteps}, n={ref.size}) "
                f"!= simulated (T={got.timesteps}, n={got.size})"
            )
            return EXIT_MISMATCH
        compared += 1
        if not np.array_equal(ref.words, got.words):
            diff = ref.to_bool() != got.to_bool()
            t, neuron = map(int, np.argwhere(diff)[0])
            print(f"MISMATCH layer={li} t={t} neuron={neuron}")
            return EXIT_MISMATCH
    if compared == 0:
        print(f"error: no layer<k>.spk reference files found in {ref_dir}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"MATCH ({compared} layer trace{'s' if compared != 1 else ''})")
    return EXIT_OK


def _cmd_estimate(args) -> int:
    cfg = _load_config(args.config)
    lib = cost.load_cost_library(args.cost_lib)
    report = cost.estimate_resources(cfg, build_mapping(cfg), lib)
    if args.cycles is not None:
        report = report.with_energy(cost.estimate_energy(args.cycles, report, lib.power))
    print(f"lut={report.lut:.6g} reg={report.reg:.6g} bram={report.bram}")
    if report.energy_per_inference is not None:
        print(f"energy_j={report.energy_per_inference:.6g}")
    if args.out:
        Path(args.out).write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    return EXIT_OK


def _cmd_dse(args) -> int:
    cfg = _load_config(args.config)
    spec = dse.parse_sweep_spec(Path(args.sweep).read_text())
    lib = cost.load_cost_library(args.cost_lib)
    weights = manifest.load_weights(args.model, cfg)
    images = spikeio.load_image_set(args.input, args.labels, classes=cfg.classes)
    configs = dse.enumerate_configs(spec, cfg)
    rows = dse.run_sweep(configs, weights, images, args.seed, spec.sample_budget, lib)
    Path(args.out).write_text(dse.format_sweep_csv(rows))
    if args.report:
        Path(args.report).write_text(dse.format_sweep_report(rows, spec.objectives))
    front = dse.pareto_front(rows, spec.objectives)
    print(f"evaluated {len(rows)} configs, pareto front size {len(front)}")
    return EXIT_OK


_COMMANDS = {
    "encode": _cmd_encode,
    "simulate": _cmd_simulate,
    "validate": _cmd_validate,
    "estimate": _cmd_estimate,
    "dse": _cmd_dse,
}


def run_cli(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, spikeio.SpikeFileError, manifest.ManifestError,
            cost.CostLibraryError, NumericOverflowError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(run_cli())
