"""Image file formats and run manifests.

Two formats cover the two needs: "IMGF" is a raw little-endian float32
container that preserves solver precision, and 16-bit grayscale PNG
(values = round(x * 65535), clamped) serves visual inspection. Every
simulation writes a JSON manifest carrying everything needed to
reproduce and restore it: seed, noise parameters, the actual kernel
taps, decimation, and content hashes.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ConfigError, ShapeError
from .grid import as_image

IMGF_MAGIC = b"IMGF"
_IMGF_HEADER = struct.Struct("<4sII")


def write_imgf(path, image) -> None:
    """Write a raw float32 image file (magic, u32 h, u32 w, payload)."""
    img = as_image(image)
    h, w = img.shape
    payload = np.ascontiguousarray(img, dtype="<f4").tobytes()
    with open(path, "wb") as f:
        f.write(_IMGF_HEADER.pack(IMGF_MAGIC, h, w))
        f.write(payload)


def read_imgf(path) -> np.ndarray:
    """Read an IMGF file into a float64 image."""
    with open(path, "rb") as f:
        header = f.read(_IMGF_HEADER.size)
        if len(header) != _IMGF_HEADER.size:
            raise ConfigError(f"{path}: truncated IMGF header")
        magic, h, w = _IMGF_HEADER.unpack(header)
        if magic != IMGF_MAGIC:
            raise ConfigError(f"{path}: bad IMGF magic {magic!r}")
        payload = f.read(h * w * 4)
    if len(payload) != h * w * 4:
        raise ConfigError(f"{path}: truncated IMGF payload")
    if h == 0 or w == 0:
        raise ShapeError(f"{path}: empty image")
    return np.frombuffer(payload, dtype="<f4").reshape(h, w).astype(np.float64)


def write_png16(path, image) -> None:
    """Write a 16-bit grayscale PNG with values round(x * 65535), clamped."""
    img = as_image(image)
    q = np.clip(np.rint(img * 65535.0), 0, 65535).astype(np.uint16)
    Image.fromarray(q).save(path, format="PNG")


def read_png16(path) -> np.ndarray:
    """Read a 16-bit grayscale PNG back to floats in [0, 1]."""
    with Image.open(path) as im:
        arr = np.asarray(im, dtype=np.uint16)
    if arr.ndim != 2:
        raise ConfigError(f"{path}: expected single-channel PNG, got shape {arr.shape}")
    return arr.astype(np.float64) / 65535.0


def sha256_array(arr: np.ndarray) -> str:
    """Content hash of an array (shape plus float64 payload)."""
    arr = np.ascontiguousarray(arr, dtype="<f8")
    digest = hashlib.sha256()
    digest.update(str(arr.shape).encode())
    digest.update(arr.tobytes())
    return digest.hexdigest()


def sha256_json(obj) -> str:
    """Hash of a JSON-serializable object with stable key ordering."""
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


def write_manifest(path, manifest: dict) -> None:
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def read_manifest(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(
            f"manifest {p} not found; a restore run needs the simulation manifest "
            "(fields: seed, noise.sigma0, noise.gain_k, operator.taps, "
            "operator.decimation, operator.phase, files)"
        )
    with open(p) as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"manifest {p} is not valid JSON: {exc}")
