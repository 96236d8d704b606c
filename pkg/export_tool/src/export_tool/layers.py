"""LIF-annotated torch layers: the checkpoint vocabulary the exporter accepts.

A spiking checkpoint is an ``nn.Sequential`` (or any iterable of modules) of
``LifLinear``, ``LifConv2d``, and ``nn.MaxPool2d(2)`` layers. The Lif*
layers carry the neuron constants (beta, threshold, reset mode) next to the
synaptic weights so a single module fully describes one simulator layer.
"""

from __future__ import annotations

from torch import nn

RESET_MODES = ("subtract", "zero")


class LifLinear(nn.Linear):
    """Fully connected synapses feeding a layer of LIF neurons."""

    def __init__(self, in_features: int, out_features: int, *,
                 beta: float, threshold: float, reset_mode: str = "subtract"):
        super().__init__(in_features, out_features, bias=True)
        _check_lif(beta, threshold, reset_mode)
        self.beta = float(beta)
        self.threshold = float(threshold)
        self.reset_mode = reset_mode


class LifConv2d(nn.Conv2d):
    """Valid-padding, stride-1 convolution feeding LIF neurons."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int, *,
                 beta: float, threshold: float, reset_mode: str = "subtract"):
        if kernel_size % 2 == 0:
            raise ValueError(f"kernel size must be odd, got {kernel_size}")
        super().__init__(in_channels, out_channels, kernel_size, bias=True)
        _check_lif(beta, threshold, reset_mode)
        self.beta = float(beta)
        self.threshold = float(threshold)
        self.reset_mode = reset_mode


def _check_lif(beta: float, threshold: float, reset_mode: str) -> None:
    if not (0.0 <= beta < 1.0):
        raise ValueError(f"beta must be in [0,1), got {beta}")
    if threshold <= 0:
        raise ValueError(f"threshold must be > 0, got {threshold}")
    if reset_mode not in RESET_MODES:
        raise ValueError(f"reset_mode must be one of {RESET_MODES}, got {reset_mode!r}")
