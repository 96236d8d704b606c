"""Hot numeric kernels: spike encoding, bit packing, accumulation, LIF update.

Every kernel exists in two bit-identical implementations: a numba ``@njit``
version used by default and a pure-numpy fallback. Set ``SNNDSE_NO_NUMBA=1``
to force the numpy path (useful on platforms without a working numba, and for
the benchmark in ``benchmarks/bench_kernels.py``).

Floating-point contract: accumulation is float32, one add at a time, in
ascending pre-synaptic address order. Both implementations issue the same
sequence of IEEE float32 operations per output element, so spike traces are
bit-identical across paths.
"""

from __future__ import annotations

import os

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U53_INV = 1.0 / float(1 << 53)

WORD_BITS = 64


def _want_numba() -> bool:
    return os.environ.get("SNNDSE_NO_NUMBA", "0").lower() not in ("1", "true", "yes")


# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------

def _mix64_np(z: np.ndarray) -> np.ndarray:
    """SplitMix64 output function, vectorized over uint64 arrays."""
    z = (z + _GOLDEN).astype(np.uint64)
    z = ((z ^ (z >> np.uint64(30))) * _MIX1).astype(np.uint64)
    z = ((z ^ (z >> np.uint64(27))) * _MIX2).astype(np.uint64)
    return z ^ (z >> np.uint64(31))


def encode_bits_numpy(pixels: np.ndarray, timesteps: int, seed: int) -> np.ndarray:
    """Rate-encode u8 pixel intensities into packed spike words.

    Pixel p fires at timestep t iff u(seed, p, t) < intensity/255 with
    u drawn from SplitMix64 over the key (p << 32) | t.
    Returns uint64 array of shape (timesteps, ceil(n/64)).
    """
    n = pixels.size
    seed = np.uint64(seed)
    p_idx = np.arange(n, dtype=np.uint64) << np.uint64(32)
    t_idx = np.arange(timesteps, dtype=np.uint64)
    keys = _mix64_np(p_idx[None, :] | t_idx[:, None])
    draws = _mix64_np(seed ^ keys) >> np.uint64(11)
    prob = pixels.astype(np.float64) / 255.0
    spikes = draws.astype(np.float64) * _U53_INV < prob[None, :]
    return pack_bits_numpy(spikes)


def pack_bits_numpy(bits: np.ndarray) -> np.ndarray:
    """Pack a (T, n) or (n,) boolean matrix into little-endian uint64 words."""
    squeeze = bits.ndim == 1
    if squeeze:
        bits = bits[None, :]
    t, n = bits.shape
    words = (n + WORD_BITS - 1) // WORD_BITS
    padded = np.zeros((t, words * WORD_BITS), dtype=np.uint8)
    padded[:, :n] = bits
    # np.packbits is big-endian within bytes; request little-endian and view u64
    packed = np.packbits(padded, axis=1, bitorder="little")
    out = packed.view("<u8").astype(np.uint64).reshape(t, words)
    return out[0] if squeeze else out


def unpack_bits_numpy(words: np.ndarray, n: int) -> np.ndarray:
    """Inverse of pack_bits: boolean matrix of shape (..., n)."""
    squeeze = words.ndim == 1
    if squeeze:
        words = words[None, :]
    as_bytes = words.astype("<u8").view(np.uint8)
    bits = np.unpackbits(as_bytes, axis=1, bitorder="little")[:, :n].astype(bool)
    return bits[0] if squeeze else bits


def set_bit_addresses_numpy(words: np.ndarray, n: int) -> np.ndarray:
    """Ascending positions of set bits in one packed timestep row."""
    return np.flatnonzero(unpack_bits_numpy(words, n)).astype(np.int64)


def fc_accumulate_numpy(weights: np.ndarray, addrs: np.ndarray) -> np.ndarray:
    """Sum weight columns for spiking pre-neurons, ascending address order.

    weights: float32 [post, pre]; returns float32 [post].
    """
    acc = np.zeros(weights.shape[0], dtype=np.float32)
    for a in addrs:
        np.add(acc, weights[:, a], out=acc)
    return acc


def conv_accumulate_numpy(
    filters: np.ndarray, addrs: np.ndarray, in_h: int, in_w: int
) -> np.ndarray:
    """Scatter filter taps for spiking input pixels into output potentials.

    filters: float32 [out_ch, in_ch, K, K]; addrs: ascending flat addresses
    over the (in_ch, in_h, in_w) input volume. Valid padding, stride 1.
    Returns float32 [out_ch, out_h, out_w].
    """
    out_ch, in_ch, k, _ = filters.shape
    out_h = in_h - k + 1
    out_w = in_w - k + 1
    acc = np.zeros((out_ch, out_h, out_w), dtype=np.float32)
    plane = in_h * in_w
    for a in addrs:
        c, rem = divmod(int(a), plane)
        r, col = divmod(rem, in_w)
        i_lo = max(0, r - k + 1)
        i_hi = min(out_h - 1, r)
        j_lo = max(0, col - k + 1)
        j_hi = min(out_w - 1, col)
        for i in range(i_lo, i_hi + 1):
            for j in range(j_lo, j_hi + 1):
                np.add(
                    acc[:, i, j],
                    filters[:, c, r - i, col - j],
                    out=acc[:, i, j],
                )
    return acc


def lif_update_numpy(
    mem: np.ndarray,
    acc: np.ndarray,
    bias: np.ndarray,
    beta: float,
    threshold: float,
    reset_subtract: bool,
) -> np.ndarray:
    """One LIF step in place: mem' = beta*mem + acc + bias; spike on >= threshold.

    Returns the boolean spike vector; mem is updated in place (float32).
    """
    b = np.float32(beta)
    thr = np.float32(threshold)
    np.multiply(mem, b, out=mem)
    np.add(mem, acc, out=mem)
    np.add(mem, bias, out=mem)
    spikes = mem >= thr
    if reset_subtract:
        mem[spikes] -= thr
    else:
        mem[spikes] = np.float32(0.0)
    return spikes


# ---------------------------------------------------------------------------
# numba implementations (loop form of the same arithmetic)
# ---------------------------------------------------------------------------

NUMBA_ENABLED = False

if _want_numba():
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        njit = None
    if njit is not None:
        NUMBA_ENABLED = True

        @njit(cache=False)
        def _mix64_scalar(z):
            z = z + np.uint64(0x9E3779B97F4A7C15)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
            return z ^ (z >> np.uint64(31))

        @njit(cache=False)
        def _encode_bits_nb(pixels, timesteps, seed):
            n = pixels.size
            words = (n + 63) // 64
            out = np.zeros((timesteps, words), dtype=np.uint64)
            for p in range(n):
                prob = pixels[p] / 255.0
                key_hi = np.uint64(p) << np.uint64(32)
                for t in range(timesteps):
                    key = _mix64_scalar(key_hi | np.uint64(t))
                    draw = _mix64_scalar(np.uint64(seed) ^ key) >> np.uint64(11)
                    if draw * 1.1102230246251565e-16 < prob:  # 2**-53
                        out[t, p // 64] |= np.uint64(1) << np.uint64(p % 64)
            return out

        def encode_bits_numba(pixels, timesteps, seed):
            return _encode_bits_nb(
                np.ascontiguousarray(pixels, dtype=np.uint8), timesteps, np.uint64(seed)
            )

        @njit(cache=False)
        def _set_bit_addresses_nb(words, n):
            count = 0
            for w in words:
                x = w
                while x:
                    x &= x - np.uint64(1)
                    count += 1
            out = np.empty(count, dtype=np.int64)
            pos = 0
            for wi in range(words.size):
                w = words[wi]
                for b in range(64):
                    if w & (np.uint64(1) << np.uint64(b)):
                        addr = wi * 64 + b
                        if addr < n:
                            out[pos] = addr
                            pos += 1
            return out[:pos]

        def set_bit_addresses_numba(words, n):
            return _set_bit_addresses_nb(np.ascontiguousarray(words, np.uint64), n)

        @njit(cache=False)
        def _fc_accumulate_nb(weights, addrs):
            post = weights.shape[0]
            acc = np.zeros(post, dtype=np.float32)
            for j in range(post):
                s = np.float32(0.0)
                for idx in range(addrs.size):
                    s = s + weights[j, addrs[idx]]
                acc[j] = s
            return acc

        def fc_accumulate_numba(weights, addrs):
            return _fc_accumulate_nb(weights, np.ascontiguousarray(addrs, np.int64))

        @njit(cache=False)
        def _conv_accumulate_nb(filters, addrs, in_h, in_w):
            out_ch = filters.shape[0]
            k = filters.shape[2]
            out_h = in_h - k + 1
            out_w = in_w - k + 1
            acc = np.zeros((out_ch, out_h, out_w), dtype=np.float32)
            plane = in_h * in_w
            for idx in range(addrs.size):
                a = addrs[idx]
                c = a // plane
                rem = a % plane
                r = rem // in_w
                col = rem % in_w
                i_lo = max(0, r - k + 1)
                i_hi = min(out_h - 1, r)
                j_lo = max(0, col - k + 1)
                j_hi = min(out_w - 1, col)
                for o in range(out_ch):
                    for i in range(i_lo, i_hi + 1):
                        for j in range(j_lo, j_hi + 1):
                            acc[o, i, j] = acc[o, i, j] + filters[o, c, r - i, col - j]
            return acc

        def conv_accumulate_numba(filters, addrs, in_h, in_w):
            return _conv_accumulate_nb(
                filters, np.ascontiguousarray(addrs, np.int64), in_h, in_w
            )

        @njit(cache=False)
        def _lif_update_nb(mem, acc, bias, beta, threshold, reset_subtract):
            n = mem.size
            spikes = np.zeros(n, dtype=np.bool_)
            for i in range(n):
                m = beta * mem[i]
                m = m + acc[i]
                m = m + bias[i]
                if m >= threshold:
                    spikes[i] = True
                    if reset_subtract:
                        m = m - threshold
                    else:
                        m = np.float32(0.0)
                mem[i] = m
            return spikes

        def lif_update_numba(mem, acc, bias, beta, threshold, reset_subtract):
            return _lif_update_nb(
                mem, acc, bias, np.float32(beta), np.float32(threshold), reset_subtract
            )


if NUMBA_ENABLED:
    encode_bits = encode_bits_numba
    set_bit_addresses = set_bit_addresses_numba
    fc_accumulate = fc_accumulate_numba
    conv_accumulate = conv_accumulate_numba
    lif_update = lif_update_numba
else:
    encode_bits = encode_bits_numpy
    set_bit_addresses = set_bit_addresses_numpy
    fc_accumulate = fc_accumulate_numpy
    conv_accumulate = conv_accumulate_numpy
    lif_update = lif_update_numpy

pack_bits = pack_bits_numpy
unpack_bits = unpack_bits_numpy
