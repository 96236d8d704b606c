import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import write_idx_images, write_idx_labels
from snndse import spikeio
from snndse.spikeio import SpikeFileError, SpikeTensor

MASK = (1 << 64) - 1


def _mix(z):
    """SplitMix64 output function over plain python ints (independent oracle)."""
    z = (z + 0x9E3779B97F4A7C15) & MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def _oracle_encode(pixels, timesteps, seed):
    bits = np.zeros((timesteps, len(pixels)), dtype=bool)
    for p, v in enumerate(pixels):
        for t in range(timesteps):
            u = (_mix((seed ^ _mix(((p << 32) | t) & MASK)) & MASK) >> 11) / 2**53
            bits[t, p] = u < v / 255
    return bits


class TestRateEncode:
    def test_matches_python_int_oracle(self):
        pixels = np.array([0, 1, 37, 128, 200, 254, 255, 90], dtype=np.uint8)
        got = spikeio.rate_encode(pixels.reshape(2, 4), 16, seed=42)
        want = _oracle_encode(pixels.tolist(), 16, 42)
        assert np.array_equal(got.to_bool(), want)

    def test_frozen_words(self):
        # frozen against the python-int oracle above
        pixels = np.arange(64, dtype=np.uint8).reshape(8, 8) * 4
        got = spikeio.rate_encode(pixels, 2, seed=7)
        want = spikeio.SpikeTensor.from_bool(_oracle_encode(pixels.reshape(-1).tolist(), 2, 7))
        assert got == want

    def test_extremes(self):
        img = np.array([[0, 255]], dtype=np.uint8)
        t = spikeio.rate_encode(img, 50, seed=3)
        bits = t.to_bool()
        assert not bits[:, 0].any()  # intensity 0 never fires
        assert bits[:, 1].all()  # intensity 255 always fires

    def test_seed_changes_pattern_not_rate(self):
        img = np.full((16, 16), 128, dtype=np.uint8)
        a = spikeio.rate_encode(img, 40, seed=0)
        b = spikeio.rate_encode(img, 40, seed=1)
        assert a != b
        # 256*40 Bernoulli(128/255) draws; 3 sigma around the mean
        n, p = 256 * 40, 128 / 255
        sigma = (n * p * (1 - p)) ** 0.5
        for t in (a, b):
            assert abs(int(t.counts().sum()) - n * p) < 3 * sigma

    def test_deterministic(self):
        img = np.random.default_rng(0).integers(0, 256, (10, 10), dtype=np.uint8)
        assert spikeio.rate_encode(img, 12, 5) == spikeio.rate_encode(img, 12, 5)

    def test_rejects_zero_timesteps(self):
        with pytest.raises(ValueError):
            spikeio.rate_encode(np.zeros((2, 2), np.uint8), 0, 0)


class TestSpikeTensor:
    @given(
        t=st.integers(1, 5),
        n=st.integers(1, 200),
        data=st.data(),
    )
    @settings(max_examples=60, deadline=None)
    def test_bool_round_trip(self, t, n, data):
        rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
        bits = rng.random((t, n)) < 0.3
        tensor = SpikeTensor.from_bool(bits)
        assert np.array_equal(tensor.to_bool(), bits)
        assert np.array_equal(tensor.counts(), bits.sum(axis=1))

    def test_addresses_ascending(self, rng):
        bits = rng.random((3, 150)) < 0.2
        tensor = SpikeTensor.from_bool(bits)
        for t in range(3):
            addrs = tensor.addresses(t)
            assert np.array_equal(addrs, np.flatnonzero(bits[t]))
            assert np.all(np.diff(addrs) > 0)

    def test_pad_bits_rejected(self):
        words = np.full((1, 1), np.uint64(1 << 63), dtype=np.uint64)
        with pytest.raises(ValueError, match="pad"):
            SpikeTensor(1, 10, words)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            SpikeTensor(2, 70, np.zeros((2, 1), dtype=np.uint64))


class TestSpikeFile:
    def test_round_trip(self, tmp_path, rng):
        bits = rng.random((7, 130)) < 0.25
        tensor = SpikeTensor.from_bool(bits)
        path = tmp_path / "a.spk"
        spikeio.write_spike_file(tensor, path)
        assert spikeio.read_spike_file(path) == tensor

    def test_layout_is_frozen(self, tmp_path):
        # neuron 0 and 65 fire at t=0; neuron 1 at t=1
        bits = np.zeros((2, 66), dtype=bool)
        bits[0, 0] = bits[0, 65] = bits[1, 1] = True
        path = tmp_path / "b.spk"
        spikeio.write_spike_file(SpikeTensor.from_bool(bits), path)
        raw = path.read_bytes()
        assert raw[:8] == b"SNNSPK1\x00"
        assert raw[8:16] == (2).to_bytes(4, "little") + (66).to_bytes(4, "little")
        words = np.frombuffer(raw[16:], dtype="<u8").reshape(2, 2)
        assert words[0, 0] == 1 and words[0, 1] == 2  # bit 0; bit 65 -> word 1 bit 1
        assert words[1, 0] == 2 and words[1, 1] == 0

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "c.spk"
        p.write_bytes(b"NOTSPIKE" + bytes(8))
        with pytest.raises(SpikeFileError, match="SNNSPK1"):
            spikeio.read_spike_file(p)

    def test_truncated_payload(self, tmp_path):
        bits = np.zeros((2, 64), dtype=bool)
        p = tmp_path / "d.spk"
        spikeio.write_spike_file(SpikeTensor.from_bool(bits), p)
        p.write_bytes(p.read_bytes()[:-4])
        with pytest.raises(SpikeFileError, match="payload"):
            spikeio.read_spike_file(p)

    def test_nonzero_pad_bits_rejected(self, tmp_path):
        p = tmp_path / "e.spk"
        spikeio.write_spike_file(SpikeTensor.from_bool(np.zeros((1, 10), dtype=bool)), p)
        raw = bytearray(p.read_bytes())
        raw[16 + 7] = 0x80  # set bit 63 of the only word; n = 10
        p.write_bytes(bytes(raw))
        with pytest.raises(SpikeFileError, match="pad"):
            spikeio.read_spike_file(p)


class TestIdx:
    def test_images_round_trip(self, tmp_path, rng):
        imgs = rng.integers(0, 256, (5, 9, 7), dtype=np.uint8)
        p = tmp_path / "imgs.idx"
        write_idx_images(p, imgs)
        assert np.array_equal(spikeio.load_idx(p), imgs)

    def test_labels_round_trip(self, tmp_path):
        labels = np.array([3, 0, 9, 1], dtype=np.uint8)
        p = tmp_path / "labels.idx"
        write_idx_labels(p, labels)
        assert np.array_equal(spikeio.load_idx(p), labels)

    def test_image_set_pairs_and_validates(self, tmp_path, rng):
        imgs = rng.integers(0, 256, (4, 3, 3), dtype=np.uint8)
        labels = np.array([0, 1, 2, 3], dtype=np.uint8)
        write_idx_images(tmp_path / "i", imgs)
        write_idx_labels(tmp_path / "l", labels)
        ds = spikeio.load_image_set(tmp_path / "i", tmp_path / "l", classes=4)
        assert np.array_equal(ds.labels, labels)
        with pytest.raises(ValueError, match="label"):
            spikeio.load_image_set(tmp_path / "i", tmp_path / "l", classes=3)

    def test_count_mismatch(self, tmp_path, rng):
        write_idx_images(tmp_path / "i", rng.integers(0, 256, (4, 3, 3), dtype=np.uint8))
        write_idx_labels(tmp_path / "l", np.array([0, 1], dtype=np.uint8))
        with pytest.raises(SpikeFileError, match="counts"):
            spikeio.load_image_set(tmp_path / "i", tmp_path / "l")

    def test_truncated_idx(self, tmp_path):
        p = tmp_path / "bad.idx"
        p.write_bytes(bytes.fromhex("00000803") + (10).to_bytes(4, "big"))
        with pytest.raises(SpikeFileError):
            spikeio.load_idx(p)

    def test_bad_magic_idx(self, tmp_path):
        p = tmp_path / "bad2.idx"
        p.write_bytes(bytes(16))
        with pytest.raises(SpikeFileError, match="magic"):
            spikeio.load_idx(p)
