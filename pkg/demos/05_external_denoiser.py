"""Plugging in an out-of-process denoiser over the binary stdio protocol.

The solver only needs a command line; here it drives the reference
server (the pgdpir-server package) in blur mode. Any process speaking
the same frame format can take its place, e.g. one wrapping a neural
denoiser on a GPU.

Requires the pgdpir-server package (see denoiser_server/ in this repo).
"""

import sys
from pathlib import Path

import numpy as np

import pgdpir as pg

try:
    import pgdpir_server  # noqa: F401  (availability check only)
except ImportError:
    sys.exit("pgdpir-server is not installed: pip install -e denoiser_server/")

out = Path(__file__).parent / "output" / "05_external"
out.mkdir(parents=True, exist_ok=True)

target, y, op, noise = pg.make_ir_instance(seed=2, size=64)
server_cmd = [sys.executable, "-m", "pgdpir_server", "--mode", "blur"]
spec = pg.DenoiserSpec.external(server_cmd)

cfg = pg.SolverConfig(n_iters=8, lam=0.08)
restored, trace = pg.pg_dpir(y, op, noise, spec, cfg)
print(f"server: {' '.join(server_cmd)}")
print(f"PSNR degraded {pg.psnr(y, target):.2f} dB -> restored {pg.psnr(restored, target):.2f} dB")

# Same run with the in-process denoiser of identical math: the protocol
# round trip only adds float32 payload quantization.
in_process, _ = pg.pg_dpir(y, op, noise, pg.DenoiserSpec.gaussian(), cfg)
print(f"max |external - in-process| = {np.max(np.abs(restored - in_process)):.2e}")

pg.write_png16(out / "restored_external.png", np.clip(restored, 0, 1))
print(f"wrote images to {out}")
