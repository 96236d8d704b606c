"""Write the snndse-model-v1 manifest directory and SNNSPK1 spike files.

Both formats are defined by the simulator's published interface docs; this
module reimplements them independently so the exporter has no dependency on
the simulator package. Blobs are little-endian float32; every blob carries a
sha256 checksum in the manifest.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from torch import nn

from .layers import LifConv2d, LifLinear

MANIFEST_FORMAT = "snndse-model-v1"
SPIKE_MAGIC = b"SNNSPK1\x00"


class ExportError(ValueError):
    """Unsupported checkpoint structure or malformed export input."""


@dataclass(frozen=True)
class ExportManifest:
    """Parsed view of an exported model directory."""

    directory: Path
    layers: tuple[dict, ...]

    @property
    def blob_names(self) -> list[str]:
        out = []
        for entry in self.layers:
            if "weights" in entry:
                out += [entry["weights"], entry["bias"]]
        return out


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _flat(shape) -> int:
    return shape if isinstance(shape, int) else math.prod(shape)


def export_model(model, out_dir, input_shape=None) -> ExportManifest:
    """Export a checkpoint (iterable of Lif*/MaxPool2d modules) to a manifest
    directory.

    ``input_shape`` is the (channels, height, width) of the input and is
    required when the first layer is convolutional; fully connected
    checkpoints infer their input width from the first weight matrix.
    Output bytes are deterministic for a fixed checkpoint.
    """
    modules = list(model) if not isinstance(model, nn.Module) else list(model.children())
    if not modules:
        raise ExportError("checkpoint has no layers")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    shape = input_shape
    if shape is None:
        first = modules[0]
        if isinstance(first, LifLinear):
            shape = first.in_features
        elif isinstance(first, (LifConv2d, nn.MaxPool2d)):
            raise ExportError("input_shape is required for convolutional checkpoints")
        else:
            raise ExportError(
                f"layer 0: unsupported module {type(first).__name__} "
                "(expected LifLinear, LifConv2d, or MaxPool2d)"
            )
    entries = []
    for i, mod in enumerate(modules):
        if isinstance(mod, LifLinear):
            in_flat = _flat(shape)
            if mod.in_features != in_flat:
                raise ExportError(
                    f"layer {i}: expects {mod.in_features} inputs, got {in_flat}"
                )
            w = mod.weight.detach().cpu().numpy().astype("<f4")
            b = mod.bias.detach().cpu().numpy().astype("<f4")
            entry = {
                "kind": "fc",
                "in": in_flat,
                "out": mod.out_features,
            }
            shape = mod.out_features
        elif isinstance(mod, LifConv2d):
            if isinstance(shape, int):
                raise ExportError(f"layer {i}: conv layer needs a spatial input")
            c, h, w_in = shape
            if mod.in_channels != c:
                raise ExportError(f"layer {i}: expects {mod.in_channels} channels, got {c}")
            k = mod.kernel_size[0]
            oh, ow = h - k + 1, w_in - k + 1
            if oh < 1 or ow < 1:
                raise ExportError(f"layer {i}: kernel {k} too large for {h}x{w_in}")
            w = mod.weight.detach().cpu().numpy().astype("<f4")
            b = mod.bias.detach().cpu().numpy().astype("<f4")
            entry = {
                "kind": "conv",
                "in": [c, h, w_in],
                "out": [mod.out_channels, oh, ow],
                "kernel": k,
            }
            shape = (mod.out_channels, oh, ow)
        elif isinstance(mod, nn.MaxPool2d):
            win = mod.kernel_size if isinstance(mod.kernel_size, int) else mod.kernel_size[0]
            if win != 2:
                raise ExportError(f"layer {i}: only 2x2 max pooling is supported")
            if isinstance(shape, int):
                raise ExportError(f"layer {i}: pool layer needs a spatial input")
            c, h, w_in = shape
            if h % 2 or w_in % 2:
                raise ExportError(f"layer {i}: pool input {h}x{w_in} must have even dims")
            entries.append({"kind": "maxpool", "in": [c, h, w_in], "out": [c, h // 2, w_in // 2]})
            shape = (c, h // 2, w_in // 2)
            continue
        else:
            raise ExportError(
                f"layer {i}: unsupported module {type(mod).__name__} "
                "(expected LifLinear, LifConv2d, or MaxPool2d)"
            )
        w_name, b_name = f"layer{i}_w.bin", f"layer{i}_b.bin"
        w_bytes, b_bytes = w.tobytes(), b.tobytes()
        (out_dir / w_name).write_bytes(w_bytes)
        (out_dir / b_name).write_bytes(b_bytes)
        entry.update(
            beta=mod.beta,
            threshold=mod.threshold,
            reset_mode=mod.reset_mode,
            weights=w_name,
            weights_sha256=_sha256(w_bytes),
            bias=b_name,
            bias_sha256=_sha256(b_bytes),
        )
        entries.append(entry)
    doc = {"format": MANIFEST_FORMAT, "layers": entries}
    (out_dir / "manifest.json").write_text(json.dumps(doc, indent=2) + "\n")
    return ExportManifest(directory=out_dir, layers=tuple(entries))


def verify_export(model_dir) -> None:
    """Recompute blob checksums against the manifest; raise on any mismatch."""
    model_dir = Path(model_dir)
    try:
        doc = json.loads((model_dir / "manifest.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ExportError(f"cannot read manifest: {exc}") from exc
    if doc.get("format") != MANIFEST_FORMAT:
        raise ExportError(f"unsupported manifest format {doc.get('format')!r}")
    for entry in doc.get("layers", []):
        for blob_key, sum_key in (("weights", "weights_sha256"), ("bias", "bias_sha256")):
            if blob_key not in entry:
                continue
            raw = (model_dir / entry[blob_key]).read_bytes()
            if _sha256(raw) != entry[sum_key]:
                raise ExportError(f"checksum mismatch for {entry[blob_key]}")


def export_spike_trace(tensor_like, path) -> None:
    """Write a (T, n) binary tensor as an SNNSPK1 file.

    Accepts numpy arrays, torch tensors, or nested sequences; every value
    must be exactly 0 or 1. Bit b of word w at a timestep is neuron
    64*w + b (little-endian bit order), pad bits zero.
    """
    arr = np.asarray(_to_numpy(tensor_like))
    if arr.ndim != 2:
        raise ExportError(f"spike trace must be 2-D (T, n), got shape {arr.shape}")
    if arr.dtype != bool:
        vals = np.unique(arr)
        if not np.isin(vals, (0, 1)).all():
            raise ExportError(f"spike trace must be binary, found value {vals[~np.isin(vals, (0, 1))][0]!r}")
        arr = arr.astype(bool)
    t, n = arr.shape
    words = (n + 63) // 64
    padded = np.zeros((t, words * 64), dtype=np.uint8)
    padded[:, :n] = arr
    payload = np.packbits(padded, axis=1, bitorder="little").tobytes()
    with open(path, "wb") as fh:
        fh.write(SPIKE_MAGIC)
        fh.write(struct.pack("<II", t, n))
        fh.write(payload)


def _to_numpy(tensor_like):
    if hasattr(tensor_like, "detach"):  # torch tensor
        return tensor_like.detach().cpu().numpy()
    return tensor_like
