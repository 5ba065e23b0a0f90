"""The serve loop: one request frame in, one reply frame out, in order.

Exit codes: 0 on shutdown frame or clean EOF, 3 when the hosted
denoiser raises, 4 on a protocol violation (diagnostic on stderr).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .denoisers import PluginError, echo, gaussian_blur, load_plugin
from .frame import FrameError, image_payload, read_request, write_reply

MODES = ("echo", "blur", "plugin")
DEFAULT_MAX_FRAME_BYTES = 64 * 1024 * 1024


@dataclass(frozen=True)
class ServerConfig:
    """What to host and how much to accept per frame."""

    mode: str = "echo"
    plugin: Optional[str] = None
    device: Optional[str] = None
    max_frame_bytes: int = DEFAULT_MAX_FRAME_BYTES

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "plugin" and not self.plugin:
            raise ValueError("plugin mode requires a plugin path or module")
        if self.max_frame_bytes <= 0:
            raise ValueError("max_frame_bytes must be positive")


def serve(config: ServerConfig, stdin=None, stdout=None, stderr=None) -> int:
    """Process frames until a shutdown frame or EOF; returns the exit code."""
    stdin = stdin if stdin is not None else sys.stdin.buffer
    stdout = stdout if stdout is not None else sys.stdout.buffer
    stderr = stderr if stderr is not None else sys.stderr

    if config.mode == "echo":
        denoiser = echo
    elif config.mode == "blur":
        denoiser = gaussian_blur
    else:
        try:
            denoiser = load_plugin(config.plugin, config.device)
        except PluginError as exc:
            print(f"plugin error: {exc}", file=stderr)
            return 3

    while True:
        try:
            request = read_request(stdin, config.max_frame_bytes)
        except FrameError as exc:
            print(f"protocol error: {exc}", file=stderr)
            return 4
        if request is None or request.shutdown:
            return 0
        if config.mode == "echo":
            # Reply with the request payload byte-for-byte.
            write_reply(stdout, request.height, request.width, request.sigma_d, request.payload)
            continue
        try:
            out = np.asarray(denoiser(request.image(), request.sigma_d), dtype=np.float64)
        except Exception as exc:
            print(f"denoiser error: {exc!r}", file=stderr)
            return 3
        if out.shape != (request.height, request.width):
            print(
                f"denoiser error: plugin returned shape {out.shape}, "
                f"expected {(request.height, request.width)}",
                file=stderr,
            )
            return 3
        write_reply(stdout, request.height, request.width, request.sigma_d, image_payload(out))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pgdpir-server",
        description="External denoiser server speaking the PGD1 stdio protocol",
    )
    parser.add_argument("--mode", choices=MODES, default="echo")
    parser.add_argument(
        "--plugin",
        default=None,
        help="plugin source for --mode plugin: file.py, module, or module:callable "
        "exposing denoise(image, sigma) -> image",
    )
    parser.add_argument("--device", default=None, help="device hint passed to the plugin")
    parser.add_argument(
        "--max-frame-bytes",
        type=int,
        default=DEFAULT_MAX_FRAME_BYTES,
        help="reject request payloads larger than this",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = ServerConfig(
            mode=args.mode,
            plugin=args.plugin,
            device=args.device,
            max_frame_bytes=args.max_frame_bytes,
        )
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return serve(config)


def cli_entry() -> None:
    sys.exit(main())
