import struct

import numpy as np
import pytest

from pgdpir_server import ServerConfig
from pgdpir_server.denoisers import PluginError, load_plugin
from client import read_frame, send_frame, send_raw, shutdown, start


class TestConfig:
    def test_bad_mode(self):
        with pytest.raises(ValueError):
            ServerConfig(mode="identity")

    def test_plugin_requires_path(self):
        with pytest.raises(ValueError):
            ServerConfig(mode="plugin")

    def test_defaults(self):
        cfg = ServerConfig()
        assert cfg.mode == "echo"
        assert cfg.max_frame_bytes > 0


class TestEcho:
    def test_single_round_trip(self):
        proc = start("--mode", "echo")
        try:
            img = np.random.default_rng(0).standard_normal((7, 9)).astype(np.float32)
            send_frame(proc, img, 0.05)
            h, w, sigma, payload = read_frame(proc)
            assert (h, w) == (7, 9)
            assert sigma == np.float32(0.05)
            assert payload == img.astype("<f4").tobytes()
        finally:
            assert shutdown(proc) == 0

    def test_consecutive_frames_stay_ordered(self):
        proc = start("--mode", "echo")
        try:
            rng = np.random.default_rng(1)
            for k in range(50):
                img = np.full((3, 3), float(k), dtype=np.float32)
                send_frame(proc, img, 0.01)
                _, _, _, payload = read_frame(proc)
                assert np.frombuffer(payload, dtype="<f4")[0] == k
        finally:
            assert shutdown(proc) == 0

    def test_eof_without_shutdown_frame_is_clean(self):
        proc = start("--mode", "echo")
        proc.stdin.close()
        assert proc.wait(timeout=10) == 0


class TestProtocolViolations:
    def test_bad_magic_exits_4(self):
        proc = start("--mode", "echo")
        send_raw(proc, b"XXXX" + struct.pack("<IIIf", 1, 1, 1, 0.0) + b"\0" * 4)
        proc.stdin.close()
        assert proc.wait(timeout=10) == 4
        assert b"protocol error" in proc.stderr.read()

    def test_truncated_payload_exits_4(self):
        proc = start("--mode", "echo")
        send_raw(proc, struct.pack("<4sIIIf", b"PGD1", 4, 4, 1, 0.0) + b"\0" * 8)
        proc.stdin.close()
        assert proc.wait(timeout=10) == 4

    def test_wrong_channel_count_exits_4(self):
        proc = start("--mode", "echo")
        send_raw(proc, struct.pack("<4sIIIf", b"PGD1", 2, 2, 3, 0.0) + b"\0" * 48)
        proc.stdin.close()
        assert proc.wait(timeout=10) == 4

    def test_frame_size_limit_exits_4(self):
        proc = start("--mode", "echo", "--max-frame-bytes", "1024")
        send_raw(proc, struct.pack("<4sIIIf", b"PGD1", 64, 64, 1, 0.0))
        proc.stdin.close()
        assert proc.wait(timeout=10) == 4
        assert b"limit" in proc.stderr.read()


class TestPlugin:
    def test_file_plugin(self, tmp_path):
        plugin = tmp_path / "negate.py"
        plugin.write_text("def denoise(image, sigma):\n    return -image\n")
        proc = start("--mode", "plugin", "--plugin", str(plugin))
        try:
            img = np.arange(6, dtype=np.float32).reshape(2, 3)
            send_frame(proc, img, 0.1)
            _, _, _, payload = read_frame(proc)
            out = np.frombuffer(payload, dtype="<f4").reshape(2, 3)
            assert np.array_equal(out, -img)
        finally:
            assert shutdown(proc) == 0

    def test_plugin_exception_exits_3(self, tmp_path):
        plugin = tmp_path / "broken.py"
        plugin.write_text("def denoise(image, sigma):\n    raise ValueError('nope')\n")
        proc = start("--mode", "plugin", "--plugin", str(plugin))
        send_frame(proc, np.zeros((2, 2), dtype=np.float32), 0.1)
        proc.stdin.close()
        assert proc.wait(timeout=10) == 3
        assert b"denoiser error" in proc.stderr.read()

    def test_plugin_wrong_shape_exits_3(self, tmp_path):
        plugin = tmp_path / "reshaper.py"
        plugin.write_text(
            "import numpy as np\n"
            "def denoise(image, sigma):\n    return np.zeros((1, 1))\n"
        )
        proc = start("--mode", "plugin", "--plugin", str(plugin))
        send_frame(proc, np.zeros((2, 2), dtype=np.float32), 0.1)
        proc.stdin.close()
        assert proc.wait(timeout=10) == 3

    def test_missing_plugin_exits_3(self):
        proc = start("--mode", "plugin", "--plugin", "no_such_module_4711")
        proc.stdin.close()
        assert proc.wait(timeout=10) == 3

    def test_device_hint_forwarded(self, tmp_path):
        plugin = tmp_path / "dev.py"
        plugin.write_text(
            "def denoise(image, sigma, device='unset'):\n"
            "    return image * (2.0 if device == 'cpu' else 0.0)\n"
        )
        fn = load_plugin(str(plugin), device="cpu")
        out = fn(np.ones((2, 2)), 0.1)
        assert np.array_equal(out, 2.0 * np.ones((2, 2)))

    def test_module_attr_plugin(self):
        fn = load_plugin("numpy:copy")  # any callable resolves
        assert callable(fn)

    def test_bad_plugin_spec(self):
        with pytest.raises(PluginError):
            load_plugin("numpy:no_such_attr_4711")

    def test_bad_config_exits_2(self):
        import subprocess
        import sys

        out = subprocess.run(
            [sys.executable, "-m", "pgdpir_server", "--mode", "plugin"],
            capture_output=True,
        )
        assert out.returncode == 2
