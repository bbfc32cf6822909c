"""WAV and FLAC reading/writing against reference byte streams."""

from __future__ import annotations

import struct

import numpy as np
import pytest

from vadbench import audio_io

from flac_encoder import encode_flac


def _rng(seed=0):
    return np.random.default_rng(seed)


class TestFloatToInt16:
    def test_scaling(self):
        out = audio_io.float_to_int16(np.array([0.0, 0.5, -0.5, 1.0]))
        assert out.dtype == np.int16
        np.testing.assert_array_equal(out, [0, 16384, -16384, 32767])

    def test_saturation(self):
        out = audio_io.float_to_int16(np.array([2.0, -2.0]))
        np.testing.assert_array_equal(out, [32767, -32768])


class TestWav:
    def test_roundtrip_mono(self, tmp_path):
        path = tmp_path / "a.wav"
        samples = _rng().uniform(-0.9, 0.9, 1000)
        audio_io.write_wav(path, samples, 16000)
        back, rate = audio_io.read_wav(path)
        assert rate == 16000
        # quantisation to int16, then back to float over 32768
        expected = audio_io.float_to_int16(samples).astype(np.float64) / 32768.0
        np.testing.assert_array_equal(back, expected)

    def test_roundtrip_stereo_mean(self, tmp_path):
        path = tmp_path / "st.wav"
        left = np.full(64, 0.5)
        right = np.full(64, -0.25)
        audio_io.write_wav(path, np.stack([left, right], axis=1), 8000)
        back, rate = audio_io.read_wav(path)
        assert rate == 8000
        q = audio_io.float_to_int16(np.stack([left, right], axis=1)).astype(np.float64) / 32768.0
        np.testing.assert_allclose(back, q.mean(axis=1))

    def test_info(self, tmp_path):
        path = tmp_path / "i.wav"
        audio_io.write_wav(path, np.zeros(321), 16000)
        frames, rate, channels = audio_io.read_wav_info(path)
        assert (frames, rate, channels) == (321, 16000, 1)

    def test_extra_chunk_odd_size_skipped(self, tmp_path):
        # chunks are word-aligned: an odd-sized chunk carries one pad byte
        data = audio_io.float_to_int16(np.array([0.25, -0.25, 0.125])).tobytes()
        fmt = struct.pack("<HHIIHH", 1, 1, 16000, 32000, 2, 16)
        odd = b"xyz"  # 3-byte payload, padded to 4
        body = (
            b"WAVE"
            + b"LIST" + struct.pack("<I", len(odd)) + odd + b"\x00"
            + b"fmt " + struct.pack("<I", len(fmt)) + fmt
            + b"data" + struct.pack("<I", len(data)) + data
        )
        blob = b"RIFF" + struct.pack("<I", len(body)) + body
        path = tmp_path / "odd.wav"
        path.write_bytes(blob)
        back, rate = audio_io.read_wav(path)
        assert rate == 16000
        np.testing.assert_allclose(back * 32768.0, [8192, -8192, 4096])

    def test_extensible_format(self, tmp_path):
        # WAVE_FORMAT_EXTENSIBLE wrapping plain PCM
        data = audio_io.float_to_int16(np.array([0.5, -0.5])).tobytes()
        # cbSize, valid bits, channel mask, then a 16-byte GUID whose first
        # two bytes carry the true format tag (1 = PCM)
        ext = struct.pack("<HHI", 22, 16, 0) + struct.pack("<H", 1) + b"\x00" * 14
        fmt = struct.pack("<HHIIHH", 0xFFFE, 1, 16000, 32000, 2, 16) + ext
        body = (
            b"WAVE"
            + b"fmt " + struct.pack("<I", len(fmt)) + fmt
            + b"data" + struct.pack("<I", len(data)) + data
        )
        blob = b"RIFF" + struct.pack("<I", len(body)) + body
        path = tmp_path / "ext.wav"
        path.write_bytes(blob)
        back, rate = audio_io.read_wav(path)
        np.testing.assert_allclose(back * 32768.0, [16384, -16384])

    def test_not_riff(self, tmp_path):
        path = tmp_path / "x.wav"
        path.write_bytes(b"JUNKJUNKJUNKJUNK")
        with pytest.raises(ValueError, match="RIFF"):
            audio_io.read_wav(path)

    def test_parent_dirs_created(self, tmp_path):
        path = tmp_path / "deep" / "dir" / "a.wav"
        audio_io.write_wav(path, np.zeros(400), 16000)
        assert path.exists()


def _ints(n, seed=0, span=4000):
    return _rng(seed).integers(-span, span, n)


def _decode(tmp_path, blob, name="t.flac"):
    path = tmp_path / name
    path.write_bytes(blob)
    return audio_io.read_flac(path)


def _expect_mono(channels, bps=16):
    stacked = np.stack([np.asarray(c, dtype=np.float64) for c in channels])
    return stacked.mean(axis=0) / float(1 << (bps - 1))


class TestFlacSubframes:
    def test_verbatim(self, tmp_path):
        x = _ints(500, seed=1)
        blob = encode_flac([x], 16000, block_size=512, subframe_spec={"type": "verbatim"})
        back, rate = _decode(tmp_path, blob)
        assert rate == 16000
        np.testing.assert_array_equal(back, _expect_mono([x]))

    def test_constant(self, tmp_path):
        x = np.full(300, -123)
        blob = encode_flac([x], 16000, block_size=512, subframe_spec={"type": "constant"})
        back, _ = _decode(tmp_path, blob)
        np.testing.assert_array_equal(back, _expect_mono([x]))

    @pytest.mark.parametrize("order", [0, 1, 2, 3, 4])
    def test_fixed_orders(self, tmp_path, order):
        x = np.cumsum(_ints(600, seed=order + 2, span=50))
        blob = encode_flac([x], 16000, block_size=1024,
                           subframe_spec={"type": "fixed", "order": order})
        back, _ = _decode(tmp_path, blob)
        np.testing.assert_array_equal(back, _expect_mono([x]))

    def test_lpc(self, tmp_path):
        x = _ints(700, seed=9)
        spec = {"type": "lpc", "coeffs": [3, -3, 1], "shift": 1, "precision": 12}
        blob = encode_flac([x], 16000, block_size=1024, subframe_spec=spec)
        back, _ = _decode(tmp_path, blob)
        np.testing.assert_array_equal(back, _expect_mono([x]))

    def test_lpc_high_order(self, tmp_path):
        x = _ints(400, seed=10)
        coeffs = list(_rng(3).integers(-40, 40, 12))
        spec = {"type": "lpc", "coeffs": coeffs, "shift": 5, "precision": 14}
        blob = encode_flac([x], 16000, block_size=512, subframe_spec=spec)
        back, _ = _decode(tmp_path, blob)
        np.testing.assert_array_equal(back, _expect_mono([x]))

    def test_wasted_bits(self, tmp_path):
        x = _ints(256, seed=4, span=2000) << 3
        blob = encode_flac([x], 16000, block_size=256,
                           subframe_spec={"type": "verbatim", "wasted": 3})
        back, _ = _decode(tmp_path, blob)
        np.testing.assert_array_equal(back, _expect_mono([x]))


class TestFlacResiduals:
    def test_partitions_with_params(self, tmp_path):
        x = np.cumsum(_ints(1024, seed=5, span=30))
        spec = {"type": "fixed", "order": 2, "partition_order": 2, "params": [3, 8, 1, 12]}
        blob = encode_flac([x], 16000, block_size=1024, subframe_spec=spec)
        back, _ = _decode(tmp_path, blob)
        np.testing.assert_array_equal(back, _expect_mono([x]))

    def test_five_bit_method(self, tmp_path):
        x = _ints(512, seed=6)
        spec = {"type": "fixed", "order": 1, "method": 1, "params": 17}
        blob = encode_flac([x], 16000, block_size=512, subframe_spec=spec)
        back, _ = _decode(tmp_path, blob)
        np.testing.assert_array_equal(back, _expect_mono([x]))

    def test_escape_partition(self, tmp_path):
        x = _ints(512, seed=7, span=60)
        spec = {"type": "fixed", "order": 0, "escape_raw_bits": 9}
        blob = encode_flac([x], 16000, block_size=512, subframe_spec=spec)
        back, _ = _decode(tmp_path, blob)
        np.testing.assert_array_equal(back, _expect_mono([x]))

    def test_escape_zero_bits(self, tmp_path):
        # perfectly linear signal: order-2 fixed predictor leaves zero residual
        x = np.arange(512) * 7 - 100
        spec = {"type": "fixed", "order": 2, "escape_raw_bits": 0}
        blob = encode_flac([x], 16000, block_size=512, subframe_spec=spec)
        back, _ = _decode(tmp_path, blob)
        np.testing.assert_array_equal(back, _expect_mono([x]))

    def test_mixed_escape_and_rice(self, tmp_path):
        x = np.cumsum(_ints(1024, seed=8, span=40))
        spec = {
            "type": "fixed", "order": 2, "partition_order": 1,
            "escape_raw_bits": [None, 13],
        }
        blob = encode_flac([x], 16000, block_size=1024, subframe_spec=spec)
        back, _ = _decode(tmp_path, blob)
        np.testing.assert_array_equal(back, _expect_mono([x]))


class TestFlacStereo:
    @pytest.mark.parametrize("mode", ["independent", "left-side", "side-right", "mid-side"])
    def test_stereo_modes(self, tmp_path, mode):
        left = _ints(900, seed=11)
        right = _ints(900, seed=12)
        blob = encode_flac([left, right], 16000, block_size=1024, channel_mode=mode,
                           subframe_spec={"type": "verbatim"})
        back, _ = _decode(tmp_path, blob)
        np.testing.assert_array_equal(back, _expect_mono([left, right]))

    def test_mid_side_odd_sums(self, tmp_path):
        # parity handling: left+right odd exercises the reconstruction carry bit
        left = np.array([1, 2, -3, 100, -101, 32000, -32000, 7])
        right = np.array([2, 2, 4, -99, -100, 31999, -31999, -8])
        blob = encode_flac([left, right], 16000, block_size=256, channel_mode="mid-side",
                           subframe_spec={"type": "verbatim"})
        back, _ = _decode(tmp_path, blob)
        np.testing.assert_array_equal(back, _expect_mono([left, right]))


class TestFlacStream:
    def test_multi_frame(self, tmp_path):
        x = _ints(3000, seed=13)
        blob = encode_flac([x], 16000, block_size=1024, subframe_spec={"type": "verbatim"})
        back, _ = _decode(tmp_path, blob)
        assert back.shape == (3000,)
        np.testing.assert_array_equal(back, _expect_mono([x]))

    def test_many_frames_long_frame_numbers(self, tmp_path):
        # >127 frames forces multi-byte coded frame indices in headers
        x = _ints(192 * 130, seed=14, span=100)
        blob = encode_flac([x], 16000, block_size=192,
                           subframe_spec={"type": "fixed", "order": 1})
        back, _ = _decode(tmp_path, blob)
        np.testing.assert_array_equal(back, _expect_mono([x]))

    def test_uncommon_blocksize_8bit_header(self, tmp_path):
        x = _ints(200, seed=15)
        blob = encode_flac([x], 16000, block_size=200, bs_code_mode="force8",
                           subframe_spec={"type": "verbatim"})
        back, _ = _decode(tmp_path, blob)
        np.testing.assert_array_equal(back, _expect_mono([x]))

    def test_uncommon_blocksize_16bit_header(self, tmp_path):
        x = _ints(1000, seed=16)
        blob = encode_flac([x], 16000, block_size=1000, bs_code_mode="force16",
                           subframe_spec={"type": "verbatim"})
        back, _ = _decode(tmp_path, blob)
        np.testing.assert_array_equal(back, _expect_mono([x]))

    @pytest.mark.parametrize("sr_code", [12, 13, 14])
    def test_explicit_rate_fields_skipped(self, tmp_path, sr_code):
        x = _ints(300, seed=17)
        blob = encode_flac([x], 16000, block_size=512, sr_code=sr_code,
                           subframe_spec={"type": "verbatim"})
        back, rate = _decode(tmp_path, blob)
        assert rate == 16000  # rate always comes from the stream info block
        np.testing.assert_array_equal(back, _expect_mono([x]))

    def test_explicit_sample_size_code(self, tmp_path):
        x = _ints(300, seed=18)
        blob = encode_flac([x], 16000, block_size=512, ss_code=4,
                           subframe_spec={"type": "verbatim"})
        back, _ = _decode(tmp_path, blob)
        np.testing.assert_array_equal(back, _expect_mono([x]))

    def test_8_bit_stream(self, tmp_path):
        x = _rng(19).integers(-128, 128, 400)
        blob = encode_flac([x], 16000, bps=8, block_size=512,
                           subframe_spec={"type": "verbatim"})
        back, _ = _decode(tmp_path, blob)
        np.testing.assert_array_equal(back, _expect_mono([x], bps=8))

    def test_total_samples_trims_padding(self, tmp_path):
        x = np.concatenate([_ints(500, seed=20), np.zeros(12, dtype=np.int64)])
        blob = encode_flac([x], 16000, block_size=512, total_samples=500,
                           subframe_spec={"type": "verbatim"})
        back, _ = _decode(tmp_path, blob)
        assert back.shape == (500,)
        np.testing.assert_array_equal(back, _expect_mono([x[:500]]))

    def test_header_crc_corruption_detected(self, tmp_path):
        x = _ints(400, seed=21)
        blob = bytearray(encode_flac([x], 16000, block_size=512,
                                     subframe_spec={"type": "verbatim"}))
        # flip a bit inside the first frame header (after magic + 4-byte block
        # header + 34-byte stream info): byte 42 is within the header, before CRC
        blob[44] ^= 0x10
        path = tmp_path / "bad.flac"
        path.write_bytes(bytes(blob))
        with pytest.raises(ValueError, match="CRC|sync|reserved|coded number"):
            audio_io.read_flac(path)

    def test_not_flac(self, tmp_path):
        path = tmp_path / "no.flac"
        path.write_bytes(b"abcd" * 10)
        with pytest.raises(ValueError, match="not a FLAC file"):
            audio_io.read_flac(path)


class TestReadAudio:
    def test_magic_sniffing_overrides_extension(self, tmp_path):
        x = _ints(256, seed=22)
        blob = encode_flac([x], 16000, block_size=256, subframe_spec={"type": "verbatim"})
        path = tmp_path / "mislabeled.wav"  # FLAC bytes behind a .wav name
        path.write_bytes(blob)
        back, rate = audio_io.read_audio(path)
        assert rate == 16000
        np.testing.assert_array_equal(back, _expect_mono([x]))

    def test_wav_path(self, tmp_path):
        path = tmp_path / "w.wav"
        audio_io.write_wav(path, np.full(100, 0.25), 16000)
        back, rate = audio_io.read_audio(path)
        assert rate == 16000
        assert back.shape == (100,)
