"""Command-line front end for the export tool.

Subcommands:
  demo   train the 784-32-30 demo checkpoint and export a complete model
         directory (manifest + blobs + input/reference spike traces)
  trace  convert a binary .npy array of shape (T, n) into an SNNSPK1 file
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
import torch

from .export import ExportError, export_model, export_spike_trace, verify_export
from .recorder import record_forward
from .train import train_demo_net


def _cmd_demo(args) -> int:
    net = train_demo_net(epochs=args.epochs, timesteps=args.timesteps,
                         seed=args.seed, verbose=args.verbose)
    out = Path(args.out)
    export_model(net, out)
    verify_export(out)
    g = torch.Generator().manual_seed(args.seed + 100)
    image = torch.rand(784, generator=g)
    input_bits = (torch.rand(args.timesteps, 784, generator=g) < image).numpy()
    export_spike_trace(input_bits, out / "input.spk")
    for li, trace in enumerate(record_forward(net, input_bits)):
        export_spike_trace(trace, out / f"layer{li}.spk")
    print(f"exported demo model and traces to {out}")
    return 0


def _cmd_trace(args) -> int:
    arr = np.load(args.input)
    export_spike_trace(arr, args.out)
    print(f"wrote {args.out}")
    return 0


def main(argv=None) -> None:
    p = argparse.ArgumentParser(prog="snn-export", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    demo = sub.add_parser("demo", help="train and export the demo checkpoint")
    demo.add_argument("--out", required=True, help="output model directory")
    demo.add_argument("--epochs", type=int, default=30)
    demo.add_argument("--timesteps", type=int, default=10)
    demo.add_argument("--seed", type=int, default=0)
    demo.add_argument("--verbose", action="store_true")

    trace = sub.add_parser("trace", help="convert a binary .npy array to SNNSPK1")
    trace.add_argument("--input", required=True, help=".npy file of shape (T, n)")
    trace.add_argument("--out", required=True, help="output .spk path")

    args = p.parse_args(argv)
    try:
        rc = {"demo": _cmd_demo, "trace": _cmd_trace}[args.command](args)
    except (ExportError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        rc = 1
    sys.exit(rc)


if __name__ == "__main__":
    main()
