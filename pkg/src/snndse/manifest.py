"""Model interchange manifest: layer metadata plus raw float32 weight blobs.

Directory layout (shared with the external export tool):

    manifest.json         layer list with kind/shape/LIF params and blob names
    layer<k>_w.bin        little-endian float32 weights
                          (FC row-major [post][pre]; CONV [out][in][K][K])
    layer<k>_b.bin        little-endian float32 bias

Blob entries may carry sha256 checksums; when present they are verified on
load. Schema details in docs/formats.md.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .config import CONV, FC, MAXPOOL, NetworkConfig
from .golden import LayerWeights, WeightSet

MANIFEST_FORMAT = "snndse-model-v1"


class ManifestError(ValueError):
    """Malformed or inconsistent model directory."""


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _read_blob(path: Path, shape, checksum: str | None):
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ManifestError(f"cannot read blob {path}: {exc}") from exc
    if checksum is not None and _sha256(raw) != checksum:
        raise ManifestError(f"checksum mismatch for {path.name}")
    expected = math.prod(shape) * 4
    if len(raw) != expected:
        raise ManifestError(
            f"{path.name}: {len(raw)} bytes, expected {expected} for shape {shape}"
        )
    return np.frombuffer(raw, dtype="<f4").astype(np.float32).reshape(shape)


def load_weights(model_dir, cfg: NetworkConfig) -> WeightSet:
    """Load and shape-check the weight set for a validated config."""
    model_dir = Path(model_dir)
    try:
        doc = json.loads((model_dir / "manifest.json").read_text())
    except OSError as exc:
        raise ManifestError(f"cannot read manifest: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest.json is not valid JSON: {exc}") from exc
    if doc.get("format") != MANIFEST_FORMAT:
        raise ManifestError(f"unsupported manifest format {doc.get('format')!r}")
    entries = doc.get("layers", [])
    if len(entries) != len(cfg.layers):
        raise ManifestError(
            f"manifest has {len(entries)} layers, config has {len(cfg.layers)}"
        )
    per_layer: list[LayerWeights | None] = []
    for i, (entry, layer) in enumerate(zip(entries, cfg.layers)):
        kind = entry.get("kind")
        if layer.kind == MAXPOOL:
            if kind not in ("maxpool", "pool"):
                raise ManifestError(f"layer {i}: config expects a pool, manifest says {kind!r}")
            per_layer.append(None)
            continue
        if kind != layer.kind:
            raise ManifestError(f"layer {i}: kind {kind!r} != config {layer.kind!r}")
        if layer.kind == FC:
            w_shape = (layer.out_size, layer.in_size)
            b_shape = (layer.out_size,)
        else:
            w_shape = (layer.out_size[0], layer.in_size[0], layer.kernel, layer.kernel)
            b_shape = (layer.out_size[0],)
        w = _read_blob(model_dir / entry["weights"], w_shape, entry.get("weights_sha256"))
        b = _read_blob(model_dir / entry["bias"], b_shape, entry.get("bias_sha256"))
        per_layer.append(LayerWeights(weights=w, bias=b))
    ws = WeightSet(per_layer=tuple(per_layer))
    ws.validate(cfg)
    return ws


def config_from_manifest(
    model_dir,
    timesteps: int,
    lhr: tuple[int, ...] | None = None,
    pcr: int = 1,
    classes: int | None = None,
    seed: int = 0,
) -> NetworkConfig:
    """Build a validation-grade config (default LHR 1, auto memory plan)
    straight from a model directory."""
    from .config import LayerSpec, MemoryLayerPlan, NetworkConfig, validate_config

    model_dir = Path(model_dir)
    try:
        doc = json.loads((model_dir / "manifest.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read manifest: {exc}") from exc
    if doc.get("format") != MANIFEST_FORMAT:
        raise ManifestError(f"unsupported manifest format {doc.get('format')!r}")
    layers = []
    for entry in doc.get("layers", []):
        kind = entry.get("kind")
        to_size = lambda v: v if isinstance(v, int) else tuple(v)
        if kind in ("maxpool", "pool"):
            layers.append(
                LayerSpec(MAXPOOL, to_size(entry["in"]), to_size(entry["out"]), pool_window=2)
            )
            continue
        if kind not in (FC, CONV):
            raise ManifestError(f"unsupported layer kind {kind!r}")
        layers.append(
            LayerSpec(
                kind,
                to_size(entry["in"]),
                to_size(entry["out"]),
                kernel=int(entry.get("kernel", 0)),
                beta=float(entry["beta"]),
                threshold=float(entry["threshold"]),
                reset_mode=entry.get("reset_mode", "subtract"),
            )
        )
    if not layers:
        raise ManifestError("manifest lists no layers")
    mapped = [l for l in layers if l.kind != MAXPOOL]
    if lhr is None:
        lhr = tuple(1 for _ in mapped)
    memory = tuple(
        MemoryLayerPlan(
            block_count=-(-l.logical_size // r),
            neurons_per_block=r,
            block_depth=r * l.weight_words_per_unit,
        )
        for l, r in zip(mapped, lhr)
    )
    last = layers[-1]
    out_flat = last.out_flat
    if classes is None:
        if out_flat % pcr:
            raise ManifestError(f"output size {out_flat} not divisible by pcr {pcr}")
        classes = out_flat // pcr
    cfg = NetworkConfig(
        layers=tuple(layers),
        lhr=tuple(lhr),
        memory=memory,
        timesteps=timesteps,
        pcr=pcr,
        classes=classes,
        seed=seed,
    )
    validate_config(cfg)
    return cfg


def save_weights(model_dir, cfg: NetworkConfig, weights: WeightSet) -> None:
    """Write a manifest directory for an in-memory weight set."""
    weights.validate(cfg)
    model_dir = Path(model_dir)
    model_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, (layer, lw) in enumerate(zip(cfg.layers, weights.per_layer)):
        if layer.kind == MAXPOOL:
            entries.append(
                {"kind": "maxpool", "in": list(layer.in_size), "out": list(layer.out_size)}
            )
            continue
        w_name, b_name = f"layer{i}_w.bin", f"layer{i}_b.bin"
        w_bytes = lw.weights.astype("<f4").tobytes()
        b_bytes = lw.bias.astype("<f4").tobytes()
        (model_dir / w_name).write_bytes(w_bytes)
        (model_dir / b_name).write_bytes(b_bytes)
        entry = {
            "kind": layer.kind,
            "in": layer.in_size if isinstance(layer.in_size, int) else list(layer.in_size),
            "out": layer.out_size if isinstance(layer.out_size, int) else list(layer.out_size),
            "beta": layer.beta,
            "threshold": layer.threshold,
            "reset_mode": layer.reset_mode,
            "weights": w_name,
            "weights_sha256": _sha256(w_bytes),
            "bias": b_name,
            "bias_sha256": _sha256(b_bytes),
        }
        if layer.kind == CONV:
            entry["kernel"] = layer.kernel
        entries.append(entry)
    doc = {"format": MANIFEST_FORMAT, "layers": entries}
    (model_dir / "manifest.json").write_text(json.dumps(doc, indent=2) + "\n")
