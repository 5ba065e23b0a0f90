"""Client-side framing for the external denoiser wire protocol.

One frame, in both directions, over the child process's standard
streams:

    magic "PGD1" (4 bytes)
    height   u32 little-endian
    width    u32 little-endian
    channels u32 little-endian (always 1)
    sigma_d  f32 little-endian
    payload  height * width f32 little-endian, row-major

The server replies with exactly one frame of identical dimensions per
request. A zero-height frame from the client is the shutdown signal.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import ProtocolError

MAGIC = b"PGD1"
HEADER = struct.Struct("<4sIIIf")
HEADER_SIZE = HEADER.size  # 20 bytes


def pack_frame(image: np.ndarray, sigma_d: float) -> bytes:
    """Serialize an image and noise level into one wire frame."""
    img = np.ascontiguousarray(image, dtype="<f4")
    if img.ndim != 2:
        raise ProtocolError(f"frame payload must be 2-D, got shape {img.shape}")
    h, w = img.shape
    return HEADER.pack(MAGIC, h, w, 1, float(sigma_d)) + img.tobytes()


def pack_shutdown() -> bytes:
    """The zero-height frame that asks the server to exit."""
    return HEADER.pack(MAGIC, 0, 0, 1, 0.0)


def parse_header(buf: bytes) -> tuple[int, int, int, float]:
    """Decode a header, returning (height, width, channels, sigma_d)."""
    if len(buf) != HEADER_SIZE:
        raise ProtocolError(f"short header: {len(buf)} bytes, expected {HEADER_SIZE}")
    magic, h, w, c, sigma = HEADER.unpack(buf)
    if magic != MAGIC:
        raise ProtocolError(f"bad magic {magic!r}, expected {MAGIC!r}")
    return h, w, c, sigma


def payload_to_image(buf: bytes, height: int, width: int) -> np.ndarray:
    """Decode a payload into a float64 image."""
    expected = height * width * 4
    if len(buf) != expected:
        raise ProtocolError(f"short payload: {len(buf)} bytes, expected {expected}")
    return np.frombuffer(buf, dtype="<f4").reshape(height, width).astype(np.float64)
