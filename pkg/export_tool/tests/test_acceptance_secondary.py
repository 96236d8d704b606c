"""Acceptance: the exported model round-trips through the simulator.

The simulator is exercised strictly through its external interfaces: the
manifest directory, SNNSPK1 spike files, and the ``snndse`` command line.
"""

import json
import shutil
import subprocess
import sys
import time

import numpy as np
import pytest
import torch

from export_tool import (
    export_model,
    export_spike_trace,
    record_forward,
    train_demo_net,
    training_accuracy,
    verify_export,
)

SNNDSE = shutil.which("snndse")
needs_snndse = pytest.mark.skipif(SNNDSE is None, reason="snndse CLI not installed")


@needs_snndse
def test_export_round_trip_bit_exact(tmp_path):
    """Train 784-32-30 (<5 min), export, and have the simulator reproduce the
    framework-recorded output spike trace bit for bit."""
    t0 = time.perf_counter()
    timesteps = 10
    net = train_demo_net(epochs=25, timesteps=timesteps, seed=0)
    train_s = time.perf_counter() - t0
    assert train_s < 300.0
    acc = training_accuracy(net, timesteps=timesteps, seed=0)
    assert acc > 0.5  # sanity: the checkpoint actually learned something

    model = tmp_path / "model"
    export_model(net, model)
    verify_export(model)

    # blobs parse float-exact on re-read
    for li, layer in enumerate(net):
        w = np.frombuffer((model / f"layer{li}_w.bin").read_bytes(), dtype="<f4")
        assert np.array_equal(
            w.reshape(layer.out_features, layer.in_features),
            layer.weight.detach().numpy().astype(np.float32),
        )

    g = torch.Generator().manual_seed(123)
    image = torch.rand(784, generator=g)
    input_bits = (torch.rand(timesteps, 784, generator=g) < image).numpy()
    export_spike_trace(input_bits, model / "input.spk")
    for li, trace in enumerate(record_forward(net, input_bits)):
        export_spike_trace(trace, model / f"layer{li}.spk")

    res = subprocess.run(
        [SNNDSE, "validate", "--model", str(model),
         "--input", str(model / "input.spk"), "--reference", str(model)],
        capture_output=True, text=True,
    )
    assert res.returncode == 0, res.stdout + res.stderr
    assert res.stdout.startswith("MATCH")
    print(f"[PASS] export round trip (train {train_s:.1f}s, acc {acc:.2f}, "
          f"{res.stdout.strip()})")


@needs_snndse
def test_flipped_reference_bit_detected(tmp_path):
    """The validation verdict is sensitive: one flipped output bit fails."""
    timesteps = 6
    torch.manual_seed(1)
    net = train_demo_net(epochs=2, timesteps=timesteps, seed=1)
    model = tmp_path / "model"
    export_model(net, model)
    g = torch.Generator().manual_seed(5)
    input_bits = (torch.rand(timesteps, 784, generator=g) < 0.3).numpy()
    export_spike_trace(input_bits, model / "input.spk")
    traces = record_forward(net, input_bits)
    traces[1][3, 7] = not traces[1][3, 7]
    for li, trace in enumerate(traces):
        export_spike_trace(trace, model / f"layer{li}.spk")
    res = subprocess.run(
        [SNNDSE, "validate", "--model", str(model),
         "--input", str(model / "input.spk"), "--reference", str(model)],
        capture_output=True, text=True,
    )
    assert res.returncode == 3
    assert "MISMATCH layer=1 t=3 neuron=7" in res.stdout


@needs_snndse
def test_manifest_loads_in_simulator_cli(tmp_path):
    """`snndse simulate` consumes the exported manifest directly."""
    timesteps = 4
    net = train_demo_net(epochs=1, timesteps=timesteps, seed=2)
    model = tmp_path / "model"
    export_model(net, model)
    g = torch.Generator().manual_seed(9)
    export_spike_trace((torch.rand(timesteps, 784, generator=g) < 0.2).numpy(),
                       model / "input.spk")
    cfg = tmp_path / "net.ini"
    cfg.write_text(
        "[network]\ntopology = 784-32-30\n"
        "[lif]\nbeta = 0.9\nthreshold = 1.0\n"
        "[lhr]\nratios = 1\n"
        f"[sim]\ntimesteps = {timesteps}\npcr = 3\nclasses = 10\n"
    )
    report = tmp_path / "report.json"
    res = subprocess.run(
        [SNNDSE, "simulate", "--config", str(cfg), "--model", str(model),
         "--input", str(model / "input.spk"), "--out", str(report)],
        capture_output=True, text=True,
    )
    assert res.returncode == 0, res.stdout + res.stderr
    doc = json.loads(report.read_text())
    assert doc["total_cycles"] > 0
    assert len(doc["per_layer"]) == 2
