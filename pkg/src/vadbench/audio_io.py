"""Audio file I/O: 16-bit PCM WAV read/write and a self-contained FLAC reader.

All readers return mono float64 in [-1, 1] (multi-channel input is averaged).
The writer emits 16 kHz-agnostic RIFF PCM s16le with saturating conversion and
no dither. The FLAC path is a from-scratch decoder for the standard subset
(constant/verbatim/fixed/LPC subframes, Rice residuals, stereo decorrelation);
no external decoder exists in this environment.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

__all__ = [
    "read_audio",
    "read_wav",
    "read_wav_info",
    "write_wav",
    "read_flac",
    "float_to_int16",
    "int16_to_float",
]


def float_to_int16(samples: np.ndarray) -> np.ndarray:
    """Saturating float [-1, 1] -> int16, round-half-even, no dither."""
    scaled = np.rint(np.asarray(samples, dtype=np.float64) * 32767.0)
    return np.clip(scaled, -32768, 32767).astype("<i2")


def int16_to_float(samples: np.ndarray) -> np.ndarray:
    return np.asarray(samples, dtype=np.float64) / 32768.0


def write_wav(path: str | Path, samples: np.ndarray, rate: int) -> None:
    """Write mono (or [n, ch]) float samples as RIFF PCM s16le."""
    samples = np.asarray(samples)
    if samples.ndim == 1:
        channels = 1
    elif samples.ndim == 2:
        channels = samples.shape[1]
    else:
        raise ValueError("samples must be 1-D or 2-D [n, channels]")
    pcm = float_to_int16(samples).reshape(-1, channels)
    data = pcm.tobytes()
    byte_rate = rate * channels * 2
    block_align = channels * 2
    header = b"RIFF" + struct.pack("<I", 36 + len(data)) + b"WAVE"
    header += b"fmt " + struct.pack("<IHHIIHH", 16, 1, channels, rate, byte_rate, block_align, 16)
    header += b"data" + struct.pack("<I", len(data))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as handle:
        handle.write(header)
        handle.write(data)


def _parse_wav_chunks(data: bytes) -> tuple[dict, bytes]:
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise ValueError("not a RIFF/WAVE file")
    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        size = struct.unpack("<I", data[pos + 4:pos + 8])[0]
        body = data[pos + 8:pos + 8 + size]
        if chunk_id == b"fmt ":
            audio_format, channels, rate, _, block_align, bits = struct.unpack("<HHIIHH", body[:16])
            if audio_format == 0xFFFE and size >= 40:
                # WAVE_FORMAT_EXTENSIBLE: true format lives in the GUID prefix
                audio_format = struct.unpack("<H", body[24:26])[0]
            fmt = {
                "format": audio_format,
                "channels": channels,
                "rate": rate,
                "bits": bits,
                "block_align": block_align,
            }
        elif chunk_id == b"data":
            payload = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned
    if fmt is None or payload is None:
        raise ValueError("WAV file missing fmt or data chunk")
    return fmt, payload


def read_wav_info(path: str | Path) -> tuple[int, int, int]:
    """Header-only probe: (num_samples_per_channel, rate, channels)."""
    fmt, payload = _parse_wav_chunks(Path(path).read_bytes())
    frame_size = fmt["channels"] * (fmt["bits"] // 8)
    return len(payload) // frame_size, fmt["rate"], fmt["channels"]


def read_wav(path: str | Path) -> tuple[np.ndarray, int]:
    """Read 16-bit PCM WAV as mono float64 in [-1, 1]."""
    fmt, payload = _parse_wav_chunks(Path(path).read_bytes())
    if fmt["format"] != 1 or fmt["bits"] != 16:
        raise ValueError(
            f"unsupported WAV encoding (format={fmt['format']}, bits={fmt['bits']}); "
            "only 16-bit PCM is accepted"
        )
    usable = len(payload) - len(payload) % (2 * fmt["channels"])
    pcm = np.frombuffer(payload[:usable], dtype="<i2")
    if fmt["channels"] > 1:
        pcm = pcm.reshape(-1, fmt["channels"]).mean(axis=1)
    return np.asarray(pcm, dtype=np.float64) / 32768.0, fmt["rate"]


# ---------------------------------------------------------------------------
# FLAC
# ---------------------------------------------------------------------------

_FLAC_BLOCKSIZES = {1: 192, 2: 576, 3: 1152, 4: 2304, 5: 4608,
                    8: 256, 9: 512, 10: 1024, 11: 2048, 12: 4096,
                    13: 8192, 14: 16384, 15: 32768}
_FLAC_SAMPLE_SIZES = {1: 8, 2: 12, 4: 16, 5: 20, 6: 24, 7: 32}


def _crc8(data: bytes) -> int:
    # polynomial x^8 + x^2 + x + 1
    crc = 0
    for byte in data:
        crc ^= byte
        for _ in range(8):
            crc = ((crc << 1) ^ 0x07) & 0xFF if crc & 0x80 else (crc << 1) & 0xFF
    return crc


class _BitReader:
    """MSB-first bit reader over a bytes object."""

    def __init__(self, data: bytes, byte_pos: int = 0):
        self.data = data
        self.byte_pos = byte_pos
        self._buf = 0
        self._bits = 0

    @property
    def aligned_pos(self) -> int:
        if self._bits % 8 != 0:
            raise ValueError("reader is not byte-aligned")
        return self.byte_pos - self._bits // 8

    def at_end(self) -> bool:
        return self._bits == 0 and self.byte_pos >= len(self.data)

    def read_uint(self, n: int) -> int:
        while self._bits < n:
            if self.byte_pos >= len(self.data):
                raise EOFError("truncated FLAC stream")
            self._buf = (self._buf << 8) | self.data[self.byte_pos]
            self.byte_pos += 1
            self._bits += 8
        self._bits -= n
        value = (self._buf >> self._bits) & ((1 << n) - 1)
        self._buf &= (1 << self._bits) - 1
        return value

    def read_int(self, n: int) -> int:
        value = self.read_uint(n)
        if value >= 1 << (n - 1):
            value -= 1 << n
        return value

    def read_unary(self) -> int:
        count = 0
        while True:
            if self._bits == 0:
                if self.byte_pos >= len(self.data):
                    raise EOFError("truncated FLAC stream")
                self._buf = self.data[self.byte_pos]
                self.byte_pos += 1
                self._bits = 8
            if self._buf == 0:
                count += self._bits
                self._bits = 0
                continue
            top = self._buf.bit_length()
            count += self._bits - top
            self._bits = top - 1
            self._buf &= (1 << self._bits) - 1
            return count

    def align_to_byte(self) -> None:
        self._bits -= self._bits % 8
        self._buf &= (1 << self._bits) - 1

    def read_coded_number(self) -> int:
        # UTF-8-style variable-length integer, extended to 36-bit values
        first = self.read_uint(8)
        if first < 0x80:
            return first
        mask = 0x40
        extra = 0
        while first & mask:
            extra += 1
            mask >>= 1
        if extra == 0 or extra > 6:
            raise ValueError("invalid coded number in frame header")
        value = first & (mask - 1)
        for _ in range(extra):
            cont = self.read_uint(8)
            if cont & 0xC0 != 0x80:
                raise ValueError("invalid coded number continuation")
            value = (value << 6) | (cont & 0x3F)
        return value


def _parse_streaminfo(body: bytes) -> dict:
    bits = int.from_bytes(body[:18], "big")  # fields before the MD5 digest
    # layout (MSB first): 16+16+24+24+20+3+5+36 = 144 bits
    total = bits & ((1 << 36) - 1)
    bits >>= 36
    bps = (bits & 0x1F) + 1
    bits >>= 5
    channels = (bits & 0x07) + 1
    bits >>= 3
    rate = bits & ((1 << 20) - 1)
    return {"rate": rate, "channels": channels, "bits": bps, "total_samples": total}


def _read_residual(reader: _BitReader, block_size: int, order: int) -> list[int]:
    method = reader.read_uint(2)
    if method > 1:
        raise ValueError("reserved residual coding method")
    param_bits = 4 if method == 0 else 5
    escape = (1 << param_bits) - 1
    partition_order = reader.read_uint(4)
    partitions = 1 << partition_order
    if block_size % partitions != 0:
        raise ValueError("invalid residual partition order")
    residual: list[int] = []
    for part in range(partitions):
        count = (block_size >> partition_order) - (order if part == 0 else 0)
        param = reader.read_uint(param_bits)
        if param == escape:
            raw_bits = reader.read_uint(5)
            if raw_bits == 0:
                residual.extend([0] * count)
            else:
                residual.extend(reader.read_int(raw_bits) for _ in range(count))
        else:
            for _ in range(count):
                value = reader.read_unary()
                if param:
                    value = (value << param) | reader.read_uint(param)
                residual.append((value >> 1) ^ -(value & 1))
    return residual


_FIXED_COEFFS = {0: [], 1: [1], 2: [2, -1], 3: [3, -3, 1], 4: [4, -6, 4, -1]}


def _decode_subframe(reader: _BitReader, block_size: int, bps: int) -> list[int]:
    if reader.read_uint(1) != 0:
        raise ValueError("invalid subframe padding bit")
    code = reader.read_uint(6)
    wasted = 0
    if reader.read_uint(1):
        wasted = reader.read_unary() + 1
    bps -= wasted

    if code == 0:  # CONSTANT
        samples = [reader.read_int(bps)] * block_size
    elif code == 1:  # VERBATIM
        samples = [reader.read_int(bps) for _ in range(block_size)]
    elif 8 <= code <= 12:  # FIXED, order 0..4
        order = code & 0x07
        samples = [reader.read_int(bps) for _ in range(order)]
        residual = _read_residual(reader, block_size, order)
        coeffs = _FIXED_COEFFS[order]
        for res in residual:
            pred = sum(c * samples[-1 - j] for j, c in enumerate(coeffs))
            samples.append(res + pred)
    elif code >= 32:  # LPC, order 1..32
        order = (code & 0x1F) + 1
        samples = [reader.read_int(bps) for _ in range(order)]
        precision = reader.read_uint(4) + 1
        if precision == 16:
            raise ValueError("invalid LPC coefficient precision")
        shift = reader.read_int(5)
        coeffs = [reader.read_int(precision) for _ in range(order)]
        residual = _read_residual(reader, block_size, order)
        for res in residual:
            pred = sum(c * samples[-1 - j] for j, c in enumerate(coeffs)) >> shift
            samples.append(res + pred)
    else:
        raise ValueError(f"reserved subframe type {code}")

    if wasted:
        samples = [value << wasted for value in samples]
    return samples


def _decode_frame(reader: _BitReader, info: dict) -> list[list[int]]:
    start = reader.aligned_pos
    sync = reader.read_uint(14)
    if sync != 0x3FFE:
        raise ValueError("lost FLAC frame sync")
    reader.read_uint(1)  # reserved
    reader.read_uint(1)  # blocking strategy
    bs_code = reader.read_uint(4)
    sr_code = reader.read_uint(4)
    chan_code = reader.read_uint(4)
    ss_code = reader.read_uint(3)
    reader.read_uint(1)  # reserved
    reader.read_coded_number()

    if bs_code == 0:
        raise ValueError("reserved block size code")
    elif bs_code == 6:
        block_size = reader.read_uint(8) + 1
    elif bs_code == 7:
        block_size = reader.read_uint(16) + 1
    else:
        block_size = _FLAC_BLOCKSIZES[bs_code]

    if sr_code == 12:
        reader.read_uint(8)
    elif sr_code in (13, 14):
        reader.read_uint(16)

    bps = info["bits"] if ss_code == 0 else _FLAC_SAMPLE_SIZES.get(ss_code)
    if bps is None:
        raise ValueError("reserved sample size code")

    header_crc = _crc8(reader.data[start:reader.aligned_pos])
    if reader.read_uint(8) != header_crc:
        raise ValueError("FLAC frame header CRC mismatch")

    if chan_code < 8:
        channels = [_decode_subframe(reader, block_size, bps) for _ in range(chan_code + 1)]
    elif chan_code in (8, 9, 10):
        # stereo decorrelation; the side channel carries one extra bit
        first_extra = 1 if chan_code == 9 else 0
        second_extra = 1 if chan_code in (8, 10) else 0
        ch0 = _decode_subframe(reader, block_size, bps + first_extra)
        ch1 = _decode_subframe(reader, block_size, bps + second_extra)
        if chan_code == 8:  # left/side
            channels = [ch0, [l - s for l, s in zip(ch0, ch1)]]
        elif chan_code == 9:  # side/right
            channels = [[s + r for s, r in zip(ch0, ch1)], ch1]
        else:  # mid/side
            left, right = [], []
            for mid, side in zip(ch0, ch1):
                mid2 = (mid << 1) | (side & 1)
                left.append((mid2 + side) >> 1)
                right.append((mid2 - side) >> 1)
            channels = [left, right]
    else:
        raise ValueError("reserved channel assignment")

    reader.align_to_byte()
    reader.read_uint(16)  # frame CRC-16 (not validated)
    return channels


def read_flac(path: str | Path) -> tuple[np.ndarray, int]:
    """Decode a FLAC file to mono float64 in [-1, 1]."""
    data = Path(path).read_bytes()
    if data[:4] != b"fLaC":
        raise ValueError("not a FLAC file")
    pos = 4
    info = None
    while True:
        if pos + 4 > len(data):
            raise ValueError("truncated FLAC metadata")
        last = bool(data[pos] & 0x80)
        block_type = data[pos] & 0x7F
        length = int.from_bytes(data[pos + 1:pos + 4], "big")
        if block_type == 0:
            info = _parse_streaminfo(data[pos + 4:pos + 4 + length])
        pos += 4 + length
        if last:
            break
    if info is None:
        raise ValueError("FLAC stream missing STREAMINFO")

    reader = _BitReader(data, pos)
    per_channel: list[list[int]] = [[] for _ in range(info["channels"])]
    while not reader.at_end():
        frame = _decode_frame(reader, info)
        for channel, samples in zip(per_channel, frame):
            channel.extend(samples)

    length = info["total_samples"] or len(per_channel[0])
    stacked = np.asarray([ch[:length] for ch in per_channel], dtype=np.float64)
    mono = stacked.mean(axis=0)
    return mono / float(1 << (info["bits"] - 1)), info["rate"]


def read_audio(path: str | Path) -> tuple[np.ndarray, int]:
    """Read WAV or FLAC by content sniffing (extension as fallback)."""
    path = Path(path)
    with open(path, "rb") as handle:
        magic = handle.read(4)
    if magic == b"fLaC":
        return read_flac(path)
    if magic == b"RIFF":
        return read_wav(path)
    if path.suffix.lower() == ".flac":
        return read_flac(path)
    return read_wav(path)
