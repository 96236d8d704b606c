"""Dataset loading, rate encoding, and bit-exact spike file I/O.

Spike trains are stored timestep-major, bit-packed little-endian within
64-bit words. The on-disk container ("SNNSPK1" format) is documented in
docs/formats.md; IDX files follow the de-facto big-endian MNIST layout.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import kernels

SPIKE_MAGIC = b"SNNSPK1\x00"
IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


class SpikeFileError(ValueError):
    """Malformed spike file or IDX container."""


@dataclass(frozen=True)
class ImageSet:
    """Grayscale image stack with class labels."""

    images: np.ndarray  # uint8, (count, height, width)
    labels: np.ndarray  # int64, (count,)

    def __post_init__(self):
        if self.images.ndim != 3 or self.images.dtype != np.uint8:
            raise ValueError("images must be a uint8 (count, h, w) array")
        if self.labels.shape != (self.images.shape[0],):
            raise ValueError("labels length must equal image count")

    def validate_labels(self, classes: int) -> None:
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= classes):
            bad = int(self.labels[(self.labels < 0) | (self.labels >= classes)][0])
            raise ValueError(f"label {bad} out of range for {classes} classes")


@dataclass(frozen=True)
class SpikeTensor:
    """Bit-packed spike train: T timesteps over n neuron addresses."""

    timesteps: int
    size: int
    words: np.ndarray  # uint64, (timesteps, ceil(size/64))

    def __post_init__(self):
        exp = (self.size + 63) // 64
        if self.words.shape != (self.timesteps, exp) or self.words.dtype != np.uint64:
            raise ValueError("packed words shape/dtype mismatch")
        pad = self.timesteps * 64 * exp - self.timesteps * self.size
        if pad and self.size % 64:
            mask = np.uint64((1 << (self.size % 64)) - 1)
            if np.any(self.words[:, -1] & ~mask):
                raise ValueError("nonzero pad bits in final word")

    @classmethod
    def from_bool(cls, bits: np.ndarray) -> "SpikeTensor":
        bits = np.asarray(bits, dtype=bool)
        if bits.ndim != 2:
            raise ValueError("expected (T, n) boolean matrix")
        t, n = bits.shape
        return cls(t, n, kernels.pack_bits(bits))

    def to_bool(self) -> np.ndarray:
        return kernels.unpack_bits(self.words, self.size)

    def addresses(self, t: int) -> np.ndarray:
        """Ascending spiking addresses at timestep t."""
        return kernels.set_bit_addresses(self.words[t], self.size)

    def counts(self) -> np.ndarray:
        """Spike-event count per timestep (popcount of each row)."""
        bytes_view = self.words.astype("<u8").view(np.uint8)
        return np.unpackbits(bytes_view, axis=1).sum(axis=1).astype(np.int64)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SpikeTensor)
            and self.timesteps == other.timesteps
            and self.size == other.size
            and np.array_equal(self.words, other.words)
        )


def load_idx(path) -> np.ndarray:
    """Load a big-endian IDX image (3-D u8) or label (1-D u8) file."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 8:
        raise SpikeFileError(f"{path}: truncated IDX header")
    (magic,) = struct.unpack(">I", raw[:4])
    if magic == IDX_IMAGE_MAGIC:
        if len(raw) < 16:
            raise SpikeFileError(f"{path}: truncated IDX image header")
        count, h, w = struct.unpack(">III", raw[4:16])
        payload = raw[16:]
        if len(payload) != count * h * w:
            raise SpikeFileError(
                f"{path}: expected {count * h * w} image bytes, found {len(payload)}"
            )
        return np.frombuffer(payload, dtype=np.uint8).reshape(count, h, w).copy()
    if magic == IDX_LABEL_MAGIC:
        (count,) = struct.unpack(">I", raw[4:8])
        payload = raw[8:]
        if len(payload) != count:
            raise SpikeFileError(f"{path}: expected {count} labels, found {len(payload)}")
        return np.frombuffer(payload, dtype=np.uint8).astype(np.int64).copy()
    raise SpikeFileError(f"{path}: unrecognized IDX magic 0x{magic:08x}")


def load_image_set(image_path, label_path, classes: int | None = None) -> ImageSet:
    images = load_idx(image_path)
    labels = load_idx(label_path)
    if images.ndim != 3:
        raise SpikeFileError(f"{image_path} is not an IDX image file")
    if labels.ndim != 1:
        raise SpikeFileError(f"{label_path} is not an IDX label file")
    if labels.shape[0] != images.shape[0]:
        raise SpikeFileError("image/label counts differ")
    out = ImageSet(images=images, labels=labels)
    if classes is not None:
        out.validate_labels(classes)
    return out


def rate_encode(image: np.ndarray, timesteps: int, seed: int) -> SpikeTensor:
    """Bernoulli rate coding: pixel p fires with probability intensity/255.

    Deterministic and platform-independent: draws come from the SplitMix64
    recurrence keyed by (seed, flat pixel index, timestep).
    """
    if timesteps < 1:
        raise ValueError("timesteps must be >= 1")
    flat = np.ascontiguousarray(image, dtype=np.uint8).reshape(-1)
    words = kernels.encode_bits(flat, timesteps, seed)
    return SpikeTensor(timesteps, flat.size, words)


def write_spike_file(tensor: SpikeTensor, path) -> None:
    """Write the 16-byte header plus timestep-major packed payload."""
    with open(path, "wb") as fh:
        fh.write(SPIKE_MAGIC)
        fh.write(struct.pack("<II", tensor.timesteps, tensor.size))
        fh.write(tensor.words.astype("<u8").tobytes())


def read_spike_file(path) -> SpikeTensor:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 16 or raw[:8] != SPIKE_MAGIC:
        raise SpikeFileError(f"{path}: not an SNNSPK1 spike file")
    t, n = struct.unpack("<II", raw[8:16])
    words_per_t = (n + 63) // 64
    expected = 16 + t * words_per_t * 8
    if len(raw) != expected:
        raise SpikeFileError(
            f"{path}: payload size {len(raw) - 16} does not match header "
            f"(T={t}, n={n} needs {expected - 16} bytes)"
        )
    words = np.frombuffer(raw[16:], dtype="<u8").astype(np.uint64).reshape(t, words_per_t)
    if n % 64:
        mask = np.uint64((1 << (n % 64)) - 1)
        if np.any(words[:, -1] & ~mask):
            raise SpikeFileError(f"{path}: nonzero pad bits")
    return SpikeTensor(t, n, words)
