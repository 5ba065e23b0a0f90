"""Server-side framing for the PGD1 wire protocol.

One frame, both directions:

    magic "PGD1" (4 bytes)
    height   u32 little-endian
    width    u32 little-endian
    channels u32 little-endian (always 1)
    sigma_d  f32 little-endian
    payload  height * width f32 little-endian, row-major

A zero-height frame from the client is the shutdown signal.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"PGD1"
HEADER = struct.Struct("<4sIIIf")
HEADER_SIZE = HEADER.size


class FrameError(Exception):
    """The byte stream violates the protocol."""


@dataclass
class Request:
    height: int
    width: int
    sigma_d: float
    payload: bytes  # raw little-endian f32 pixels

    @property
    def shutdown(self) -> bool:
        return self.height == 0

    def image(self) -> np.ndarray:
        return (
            np.frombuffer(self.payload, dtype="<f4")
            .reshape(self.height, self.width)
            .astype(np.float64)
        )


def read_exact(stream, n: int) -> bytes | None:
    """Read exactly n bytes; None on clean EOF at offset 0."""
    buf = bytearray()
    while len(buf) < n:
        chunk = stream.read(n - len(buf))
        if not chunk:
            if not buf:
                return None
            raise FrameError(f"stream truncated after {len(buf)}/{n} bytes")
        buf.extend(chunk)
    return bytes(buf)


def read_request(stream, max_frame_bytes: int) -> Request | None:
    """Read one request frame; None on clean EOF before any bytes."""
    header = read_exact(stream, HEADER_SIZE)
    if header is None:
        return None
    magic, height, width, channels, sigma_d = HEADER.unpack(header)
    if magic != MAGIC:
        raise FrameError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if height == 0:
        return Request(0, 0, 0.0, b"")
    if channels != 1:
        raise FrameError(f"unsupported channel count {channels}, expected 1")
    if width == 0:
        raise FrameError("zero-width frame with nonzero height")
    n_bytes = height * width * 4
    if n_bytes > max_frame_bytes:
        raise FrameError(
            f"frame of {height}x{width} ({n_bytes} bytes) exceeds the "
            f"{max_frame_bytes}-byte limit"
        )
    payload = read_exact(stream, n_bytes)
    if payload is None:
        raise FrameError("stream closed before the payload")
    return Request(height, width, sigma_d, payload)


def write_reply(stream, height: int, width: int, sigma_d: float, payload: bytes) -> None:
    stream.write(HEADER.pack(MAGIC, height, width, 1, sigma_d))
    stream.write(payload)
    stream.flush()


def image_payload(image: np.ndarray) -> bytes:
    return np.ascontiguousarray(image, dtype="<f4").tobytes()
