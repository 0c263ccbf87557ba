"""End-to-end smoke tests for the Python bindings.

The compiled module's directory comes in through REDNET_PY_DIR (set by the
ctest harness); a plain `pip install .` makes the import work without it.
"""

import os
import sys

_py_dir = os.environ.get("REDNET_PY_DIR")
if _py_dir and _py_dir not in sys.path:
    sys.path.insert(0, _py_dir)

import numpy as np
import pytest

import rednet_py as rn


def synth(h, w, seed):
    rng = np.random.default_rng(seed)
    base = np.linspace(0.2, 0.8, w)[None, :] * np.ones((h, 1))
    base += 0.2 * np.sin(np.arange(h))[:, None] / 3.0
    base += 0.05 * rng.standard_normal((h, w))
    return np.clip(base, 0.0, 1.0)


def test_config_presets():
    cfg = rn.Config.red20()
    assert cfg.conv_layers == 10
    assert cfg.feature_width == 64
    assert cfg.skip_style == rn.SkipStyle.mirrored
    assert cfg.total_layers() == 20
    round_trip = rn.config_from_json(rn.config_to_json(cfg))
    assert round_trip == cfg


def test_config_validation_raises():
    cfg = rn.Config()
    cfg.conv_layers = 0
    with pytest.raises(rn.ConfigError):
        cfg.validate()


def test_network_forward_and_skip_edges():
    cfg = rn.Config()
    cfg.conv_layers = 3
    cfg.feature_width = 4
    net = rn.Network.build(cfg, seed=7)
    assert net.param_count() > 0
    # Source 1 is absent: its mirror would be the final image-producing
    # layer, which has no feature maps to sum into.
    assert net.skip_edges() == [(3, 4)]

    img = synth(20, 24, 1)
    out = net.forward(img)
    assert out.shape == img.shape
    assert np.isfinite(out).all()


def test_restore_is_clipped_and_deterministic():
    cfg = rn.Config()
    cfg.conv_layers = 2
    cfg.feature_width = 3
    net = rn.Network.build(cfg, seed=3)
    img = synth(18, 18, 2)
    a = rn.restore(net, img)
    b = rn.restore(net, img)
    assert (a == b).all()
    assert a.min() >= 0.0 and a.max() <= 1.0


def test_ensemble_is_equivariant_under_rotation():
    cfg = rn.Config()
    cfg.conv_layers = 2
    cfg.feature_width = 3
    net = rn.Network.build(cfg, seed=5)
    img = synth(13, 17, 4)
    base = rn.restore_ensemble(net, img)
    turned = rn.restore_ensemble(net, np.rot90(img))
    assert np.array_equal(turned, np.rot90(base))


def test_checkpoint_round_trip(tmp_path):
    cfg = rn.Config()
    cfg.conv_layers = 2
    cfg.feature_width = 3
    net = rn.Network.build(cfg, seed=11)
    path = tmp_path / "net.ckpt"
    rn.save_checkpoint(net, path)
    loaded = rn.load_checkpoint(path)
    assert loaded.config == net.config
    img = synth(16, 16, 6)
    assert np.array_equal(net.forward(img), loaded.forward(img))


def test_checkpoint_bad_magic_raises(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"XXXX" + b"\x00" * 16)
    with pytest.raises(rn.FormatError):
        rn.load_checkpoint(path)


def test_metrics():
    a = synth(32, 32, 8)
    assert rn.psnr(a, a) == float("inf")
    assert rn.ssim(a, a) == pytest.approx(1.0)
    b = np.clip(a + 0.1, 0.0, 1.0)
    # Clipping can only shrink the uniform 0.1 offset, so MSE <= 0.01.
    assert rn.psnr(a, b) >= 20.0 - 1e-9
    with pytest.raises(rn.ShapeError):
        rn.psnr(a, synth(16, 16, 9))


def test_degradations():
    img = synth(40, 40, 10)
    noisy = rn.corrupt_gaussian(img, 30.0, seed=1)
    assert noisy.shape == img.shape
    # Same seed, same noise; different seed, different noise.
    assert np.array_equal(noisy, rn.corrupt_gaussian(img, 30.0, seed=1))
    assert not np.array_equal(noisy, rn.corrupt_gaussian(img, 30.0, seed=2))
    resid = noisy - img
    assert abs(resid.std() - 30.0 / 255.0) < 0.02

    small = rn.resize_bicubic(img, 20, 20)
    assert small.shape == (20, 20)
    blurred = rn.degrade_sr(img, 2)
    assert blurred.shape == img.shape
    assert rn.mse(blurred, img) > 0.0

    with pytest.raises(rn.ConfigError):
        rn.degrade_sr(img, 1)


def test_image_io_round_trip(tmp_path):
    img = np.round(synth(24, 24, 12) * 255.0) / 255.0
    path = tmp_path / "img.pgm"
    rn.save_image(img, path)
    back = rn.load_image(path)
    assert np.allclose(back, img, atol=1e-12)

    png = tmp_path / "img.png"
    rn.save_image(img, png)
    assert np.allclose(rn.load_image(png), img, atol=1e-12)
