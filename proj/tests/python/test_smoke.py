"""Smoke tests for the python bindings: a thin pass over the main operations.
The exhaustive numeric suites live in the C++ tests."""

import math

import numpy as np
import pytest

import waveletgan as wg


def test_mexican_hat_values():
    assert wg.mexican_hat(0.0, 1.0) == pytest.approx(-0.86732507058407752, rel=1e-12)
    assert wg.mexican_hat(1.0, 1.0) == 0.0
    assert wg.mexican_hat(1.3, 0.7) == wg.mexican_hat(-1.3, 0.7)
    with pytest.raises(ValueError):
        wg.mexican_hat(0.0, -1.0)


def test_kernel_symmetry_and_derivative():
    k = wg.sample_kernel(2.0, 9)
    assert len(k) == 9
    assert k == k[::-1]
    d = wg.sample_kernel_dscale(1.0, 9)
    assert d[4] == pytest.approx(0.43366253529203876, rel=1e-12)


def test_convolve_same_convention():
    assert wg.convolve_same([1, 2, 3], [1, 0, -1]) == [2.0, 2.0, -2.0]


def test_wavelet_deconv_shape_and_grads():
    layer = wg.WaveletDeconv([1.0, 2.0, 4.0], kernel_width=9)
    rng = np.random.default_rng(0)
    z = rng.normal(size=(2, 8, 8, 1))
    out = layer.forward(z)
    assert out.shape == z.shape
    gin = layer.backward(np.ones_like(out))
    assert gin.shape == z.shape
    assert len(layer.scale_grad) == 3
    layer.apply_scale_update(0.01)
    assert all(s > 0 for s in layer.scales)


def test_frechet_diagonal_case():
    mu_a, cov_a = np.zeros(2), np.diag([1.0, 1.0])
    mu_b, cov_b = np.array([1.0, 0.0]), np.diag([4.0, 1.0])
    assert wg.frechet_distance(mu_a, cov_a, mu_b, cov_b) == pytest.approx(2.0, abs=1e-10)
    assert wg.METRIC_LABEL == "proxy-FID"


def test_features_and_gaussian_fit():
    images, labels = wg.synthetic_shapes(8, size=28, channels=1, seed=3)
    assert images.shape == (8, 28, 28, 1)
    assert images.min() >= 0.0 and images.max() <= 1.0
    assert len(labels) == 8
    feats = wg.extract_features(images)
    assert feats.shape == (8, 64)
    mu, cov = wg.fit_gaussian(feats)
    assert mu.shape == (64,)
    assert cov.shape == (64, 64)
    assert np.allclose(cov, cov.T)


def test_tiny_training_run(tmp_path):
    images, _ = wg.synthetic_shapes(16, seed=5)
    gan = wg.build_gan(base_width=8, z_dim=16, batch=4, n_disc=2,
                       wavelet_channels=3, seed=11)
    rows = gan.train_steps(images, 2)
    assert len(rows) == 2
    assert all(math.isfinite(r["d_loss"]) and math.isfinite(r["g_loss"]) for r in rows)
    assert gan.step == 2
    assert len(gan.scales) == 3

    samples = gan.sample(4, seed=1)
    assert samples.shape == (4, 28, 28, 1)
    assert samples.min() > 0.0 and samples.max() < 1.0

    path = str(tmp_path / "model.wgc1")
    gan.save(path)
    back = wg.load_gan(path)
    assert back.step == 2
    assert np.allclose(back.sample(4, seed=1), samples)

    layers = gan.generator_layers
    assert any(name.startswith("wavelet_deconv") for name in layers)


def test_gradcheck_binding():
    reports = wg.gradcheck(seed=99)
    assert reports and all(r["pass"] for r in reports)
