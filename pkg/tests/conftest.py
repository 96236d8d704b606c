import struct

import numpy as np
import pytest

from snndse.config import CONV, FC, MAXPOOL, parse_network_config
from snndse.golden import LayerWeights, WeightSet


def make_config(
    topology,
    lhr,
    timesteps=6,
    beta=0.8,
    threshold=1.0,
    reset_mode="subtract",
    pcr=1,
    classes=None,
    seed=0,
    extra="",
):
    lhr_txt = ", ".join(str(r) for r in lhr)
    classes_line = f"classes = {classes}" if classes is not None else ""
    text = f"""
[network]
topology = {topology}

[lif]
beta = {beta}
threshold = {threshold}
reset_mode = {reset_mode}

[lhr]
ratios = {lhr_txt}

[sim]
timesteps = {timesteps}
seed = {seed}
pcr = {pcr}
{classes_line}
{extra}
"""
    return parse_network_config(text)


def make_weights(cfg, rng, scale=0.3, bias_scale=0.05, integer=False):
    """Random float32 weight set; integer=True keeps sums exact in float32."""
    per = []
    for layer in cfg.layers:
        if layer.kind == MAXPOOL:
            per.append(None)
            continue
        if layer.kind == FC:
            w_shape = (layer.out_size, layer.in_size)
            b_shape = (layer.out_size,)
        else:
            w_shape = (layer.out_size[0], layer.in_size[0], layer.kernel, layer.kernel)
            b_shape = (layer.out_size[0],)
        if integer:
            w = rng.integers(-3, 4, size=w_shape).astype(np.float32)
            b = rng.integers(-1, 2, size=b_shape).astype(np.float32)
        else:
            w = rng.normal(0, scale, size=w_shape).astype(np.float32)
            b = rng.normal(0, bias_scale, size=b_shape).astype(np.float32)
        per.append(LayerWeights(weights=w, bias=b))
    return WeightSet(per_layer=tuple(per))


def write_idx_images(path, images):
    images = np.asarray(images, dtype=np.uint8)
    count, h, w = images.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", 0x00000803, count, h, w))
        fh.write(images.tobytes())


def write_idx_labels(path, labels):
    labels = np.asarray(labels, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", 0x00000801, labels.size))
        fh.write(labels.tobytes())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
