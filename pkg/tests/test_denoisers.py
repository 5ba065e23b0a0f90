import logging
import sys
from pathlib import Path

import numpy as np
import pytest

from pgdpir import (
    DenoiserError,
    DenoiserSpec,
    ExternalDenoiser,
    ParameterError,
    ProtocolError,
    denoise,
    gaussian_smooth,
    median_denoise,
    open_denoiser,
    tv_denoise,
)

SERVER = Path(__file__).parent / "protocol_servers.py"


def server_cmd(mode):
    return [sys.executable, str(SERVER), mode]


def f32_image(seed, shape=(8, 8)):
    # Values exactly representable in float32, so protocol round trips
    # can be compared bit-for-bit.
    rng = np.random.default_rng(seed)
    return rng.standard_normal(shape).astype(np.float32).astype(np.float64)


class TestSpec:
    def test_unknown_kind(self):
        with pytest.raises(ParameterError):
            DenoiserSpec("wavelet")

    def test_unknown_params(self):
        with pytest.raises(ParameterError):
            DenoiserSpec("tv", {"weight": 1.0})

    def test_external_requires_cmd(self):
        with pytest.raises(ParameterError):
            DenoiserSpec("external")

    def test_parse(self):
        assert DenoiserSpec.parse("tv").kind == "tv"
        assert DenoiserSpec.parse("gaussian").kind == "gaussian_smooth"
        spec = DenoiserSpec.parse("external:python3 server.py blur")
        assert spec.kind == "external"
        assert spec.external_cmd == ("python3", "server.py", "blur")

    def test_defaults_filled(self):
        spec = DenoiserSpec("tv", {"iters": 30})
        assert spec.params["iters"] == 30
        assert spec.params["weight_scale"] == 8.0


class TestBuiltins:
    def test_identity(self):
        x = f32_image(0)
        out = denoise(x, 0.05, DenoiserSpec.identity())
        assert np.array_equal(out, x)

    def test_tv_constant_unchanged(self):
        x = np.full((16, 16), 0.42)
        out = denoise(x, 0.05, DenoiserSpec.tv())
        assert np.max(np.abs(out - 0.42)) < 1e-12

    def test_tv_reduces_variance_keeps_edge(self):
        rng = np.random.default_rng(1)
        clean = np.zeros((32, 32))
        clean[:, 16:] = 1.0
        noisy = clean + rng.normal(0, 0.05, clean.shape)
        out = denoise(noisy, 0.05, DenoiserSpec.tv())
        assert out.var() < noisy.var()
        col_means = out.mean(axis=0)
        edge = int(np.argmax(np.abs(np.diff(col_means)))) + 1
        assert abs(edge - 16) <= 1

    def test_tv_objective_monotone(self):
        rng = np.random.default_rng(2)
        noisy = rng.uniform(0, 1, (24, 24))
        _, objectives = tv_denoise(noisy, weight=0.02, return_objectives=True)
        assert all(b <= a + 1e-10 for a, b in zip(objectives, objectives[1:]))

    def test_builtins_preserve_mean(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(0, 1, (24, 24))
        for spec in (DenoiserSpec.identity(), DenoiserSpec.gaussian(), DenoiserSpec.tv()):
            out = denoise(x, 0.08, spec)
            assert abs(out.mean() - x.mean()) <= 1e-6, spec.kind

    def test_builtins_deterministic(self):
        rng = np.random.default_rng(4)
        x = rng.uniform(0, 1, (16, 16))
        for spec in (
            DenoiserSpec.identity(),
            DenoiserSpec.gaussian(),
            DenoiserSpec.tv(),
            DenoiserSpec.median(),
        ):
            assert np.array_equal(denoise(x, 0.05, spec), denoise(x, 0.05, spec)), spec.kind

    def test_gaussian_bandwidth_grows_with_sigma(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((32, 32))
        v1 = gaussian_smooth(x, 0.02).var()
        v2 = gaussian_smooth(x, 0.1).var()
        assert v2 < v1 < x.var()

    def test_median_removes_outlier(self):
        x = np.full((9, 9), 0.5)
        x[4, 4] = 5.0
        out = median_denoise(x)
        assert out[4, 4] == 0.5

    def test_sigma_clamped_with_warning(self, caplog):
        rng = np.random.default_rng(6)
        x = rng.uniform(0, 1, (16, 16))
        with caplog.at_level(logging.WARNING, logger="pgdpir.denoisers"):
            big = denoise(x, 0.9, DenoiserSpec.gaussian())
        assert any("clamping" in rec.message for rec in caplog.records)
        at_limit = denoise(x, 0.5, DenoiserSpec.gaussian())
        assert np.array_equal(big, at_limit)

    def test_nonpositive_sigma_rejected(self):
        with pytest.raises(ParameterError):
            denoise(np.zeros((4, 4)), 0.0, DenoiserSpec.identity())


class TestExternal:
    def test_echo_round_trip_bit_exact(self):
        x = f32_image(10)
        out = denoise(x, 0.05, DenoiserSpec.external(server_cmd("echo")))
        assert np.array_equal(out, x)

    def test_blur_server_matches_in_process(self):
        x = f32_image(11, (16, 16))
        spec = DenoiserSpec.external(server_cmd("blur"))
        with open_denoiser(spec) as fn:
            out = fn(x, 0.06)
        ref = gaussian_smooth(x, 0.06)
        # float32 payload quantization bounds the agreement; 1e-6 holds.
        assert np.max(np.abs(out - ref)) < 1e-6

    def test_sequential_requests_in_order(self):
        spec = DenoiserSpec.external(server_cmd("echo"))
        with open_denoiser(spec) as fn:
            for seed in range(5):
                x = f32_image(seed, (4, 6))
                assert np.array_equal(fn(x, 0.01 * (seed + 1)), x)

    def test_truncated_response_raises_protocol_error(self):
        handle = ExternalDenoiser(server_cmd("truncate"))
        try:
            with pytest.raises(ProtocolError):
                handle.denoise(f32_image(12), 0.05)
        finally:
            handle.close()

    def test_bad_magic_raises_protocol_error(self):
        handle = ExternalDenoiser(server_cmd("badmagic"))
        try:
            with pytest.raises(ProtocolError):
                handle.denoise(f32_image(13), 0.05)
        finally:
            handle.close()

    def test_shape_mismatch_raises_protocol_error(self):
        handle = ExternalDenoiser(server_cmd("wrongshape"))
        try:
            with pytest.raises(ProtocolError):
                handle.denoise(f32_image(14), 0.05)
        finally:
            handle.close()

    def test_crash_surfaces_stderr(self):
        handle = ExternalDenoiser(server_cmd("crash"))
        try:
            with pytest.raises(DenoiserError) as err:
                handle.denoise(f32_image(15), 0.05)
            assert "synthetic failure" in str(err.value)
        finally:
            handle.close()

    def test_timeout(self):
        handle = ExternalDenoiser(server_cmd("sleep"), timeout=0.5)
        try:
            with pytest.raises(DenoiserError, match="timed out"):
                handle.denoise(f32_image(16), 0.05)
        finally:
            handle.close()

    def test_missing_command_fails(self):
        with pytest.raises(DenoiserError):
            ExternalDenoiser(["definitely-not-a-real-binary-4711"])

    def test_clean_shutdown(self):
        handle = ExternalDenoiser(server_cmd("echo"))
        handle.denoise(f32_image(17), 0.05)
        handle.close()
        assert handle._proc.returncode == 0
