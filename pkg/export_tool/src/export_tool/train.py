"""Train a small demonstration SNN checkpoint on synthetic digit data.

The demo net is the fully connected stack 784-32-30 with population coding
(10 classes x 3 output neurons). Training uses a straight-through surrogate
gradient for the spike nonlinearity and a synthetic dataset of noisy class
prototypes, so it converges in seconds on CPU; the point is producing a
realistic checkpoint to export, not benchmark accuracy.
"""

from __future__ import annotations

import torch
from torch import nn

from .layers import LifLinear


class _SpikeFn(torch.autograd.Function):
    """Heaviside spike with a sigmoid-derivative surrogate gradient."""

    @staticmethod
    def forward(ctx, v):
        ctx.save_for_backward(v)
        return (v >= 0).float()

    @staticmethod
    def backward(ctx, grad_out):
        (v,) = ctx.saved_tensors
        sg = torch.sigmoid(4.0 * v)
        return grad_out * 4.0 * sg * (1 - sg)


def build_demo_net(seed: int = 0, beta: float = 0.9, threshold: float = 1.0,
                   reset_mode: str = "subtract") -> nn.Sequential:
    torch.manual_seed(seed)
    return nn.Sequential(
        LifLinear(784, 32, beta=beta, threshold=threshold, reset_mode=reset_mode),
        LifLinear(32, 30, beta=beta, threshold=threshold, reset_mode=reset_mode),
    )


def make_synthetic_dataset(count: int = 256, classes: int = 10, seed: int = 1):
    """Noisy 28x28 class prototypes; returns (images in [0,1], labels)."""
    g = torch.Generator().manual_seed(seed)
    prototypes = (torch.rand(classes, 784, generator=g) < 0.15).float()
    labels = torch.arange(count) % classes
    images = prototypes[labels]
    noise = torch.rand(count, 784, generator=g)
    images = torch.where(noise < 0.05, 1.0 - images, images)  # 5% pixel flips
    return images, labels


def _forward_train(net: nn.Sequential, spikes: torch.Tensor) -> torch.Tensor:
    """Differentiable unrolled forward; returns summed output spikes (B, 30)."""
    batch = spikes.shape[1]
    mems = [torch.zeros(batch, lyr.out_features) for lyr in net]
    out_sum = torch.zeros(batch, net[-1].out_features)
    for t in range(spikes.shape[0]):
        cur = spikes[t]
        for li, lyr in enumerate(net):
            drive = torch.nn.functional.linear(cur, lyr.weight, lyr.bias)
            mems[li] = lyr.beta * mems[li] + drive
            spk = _SpikeFn.apply(mems[li] - lyr.threshold)
            mems[li] = mems[li] - spk.detach() * lyr.threshold
            cur = spk
        out_sum = out_sum + cur
    return out_sum


def train_demo_net(epochs: int = 30, timesteps: int = 10, pcr: int = 3,
                   seed: int = 0, verbose: bool = False) -> nn.Sequential:
    """Train the 784-32-30 demo net; returns the trained checkpoint."""
    net = build_demo_net(seed=seed)
    images, labels = make_synthetic_dataset(seed=seed + 1)
    g = torch.Generator().manual_seed(seed + 2)
    spikes = (torch.rand(timesteps, *images.shape, generator=g) < images).float()
    opt = torch.optim.Adam(net.parameters(), lr=5e-3)
    for epoch in range(epochs):
        opt.zero_grad()
        scores = _forward_train(net, spikes).reshape(-1, 10, pcr).sum(dim=2)
        loss = torch.nn.functional.cross_entropy(scores, labels)
        loss.backward()
        opt.step()
        if verbose:
            acc = (scores.argmax(dim=1) == labels).float().mean().item()
            print(f"epoch {epoch}: loss={loss.item():.4f} acc={acc:.3f}")
    return net


def training_accuracy(net: nn.Sequential, timesteps: int = 10, pcr: int = 3,
                      seed: int = 0) -> float:
    images, labels = make_synthetic_dataset(seed=seed + 1)
    g = torch.Generator().manual_seed(seed + 2)
    spikes = (torch.rand(timesteps, *images.shape, generator=g) < images).float()
    with torch.no_grad():
        scores = _forward_train(net, spikes).reshape(-1, 10, pcr).sum(dim=2)
    return (scores.argmax(dim=1) == labels).float().mean().item()
