import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from PIL import Image as PILImage

from deepradon.metrics import entropy, psnr, ssim
from deepradon.phantoms import (SHEPP_LOGAN_ELLIPSES, Phantom, disks, ellipse_value,
                                render_phantom, shepp_logan)


def point_in_ellipses(x, y):
    """Signed intensity sum at one point, straight from the parameter table."""
    total = 0.0
    for value, a, b, x0, y0, phi in SHEPP_LOGAN_ELLIPSES:
        t = math.radians(phi)
        dx, dy = x - x0, y - y0
        u = dx * math.cos(t) + dy * math.sin(t)
        v = -dx * math.sin(t) + dy * math.cos(t)
        if (u / a) ** 2 + (v / b) ** 2 <= 1:
            total += value
    return total


def test_disk_centre_and_corner():
    img = render_phantom(Phantom("disks", 64))
    assert img[32, 32] == 1.0 and img[31, 31] == 1.0
    assert img[0, 0] == 0.0


def test_shepp_logan_centre_value():
    img = shepp_logan(64)
    expected = point_in_ellipses(0.0, 0.0)
    assert expected == pytest.approx(0.2)
    # the four pixels around the centre are fully inside the same ellipses
    assert img[31:33, 31:33] == pytest.approx(np.full((2, 2), expected))
    assert ellipse_value(0.0, 0.0) == pytest.approx(expected)


def test_ellipse_value_matches_point_oracle(rng):
    pts = rng.uniform(-1, 1, (200, 2))
    got = ellipse_value(pts[:, 0], pts[:, 1])
    want = [point_in_ellipses(px, py) for px, py in pts]
    np.testing.assert_allclose(got, want, atol=1e-12)


@pytest.mark.parametrize("kind", ["shepp_logan", "disks", "squares"])
def test_render_deterministic_and_in_range(kind):
    a = render_phantom(Phantom(kind, 32))
    b = render_phantom(Phantom(kind, 32))
    assert np.array_equal(a, b)
    assert a.min() >= 0 and a.max() <= 1 and a.shape == (32, 32)


def test_bad_phantom_rejected(tmp_path):
    with pytest.raises(ValueError, match="multiple of 16"):
        Phantom("disks", 40)
    with pytest.raises(ValueError, match="unknown"):
        Phantom("blob", 64)
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"not an image")
    with pytest.raises(ValueError, match="cannot read"):
        render_phantom(Phantom("file", 32, path=str(bad)))


@pytest.mark.parametrize("suffix,dtype", [(".png", np.uint8), (".pgm", np.uint8),
                                          (".png", np.uint16)])
def test_file_phantom_normalized(tmp_path, suffix, dtype):
    top = np.iinfo(dtype).max
    ramp = np.linspace(10, top - 10, 48 * 48).reshape(48, 48).astype(dtype)
    path = tmp_path / f"ramp{suffix}"
    PILImage.fromarray(ramp).save(path)
    img = render_phantom(Phantom("file", 32, path=str(path)))
    assert img.shape == (32, 32)
    assert img.min() == 0.0 and img.max() == 1.0
    # a linear ramp stays monotone along rows after bilinear resampling
    assert np.all(np.diff(img[:, 5]) > 0)


def test_psnr_values():
    a = np.zeros((16, 16))
    assert psnr(a, a) == math.inf
    assert psnr(a + 0.1, a) == pytest.approx(20.0)
    with pytest.raises(ValueError, match="shapes"):
        psnr(a, np.zeros((8, 8)))


def test_psnr_falls_with_noise(rng):
    ref = shepp_logan(32)
    noise = rng.standard_normal(ref.shape)
    assert psnr(ref + 0.05 * noise, ref) > psnr(ref + 0.1 * noise, ref)


def test_ssim_identity_and_constants():
    ref = shepp_logan(64)
    assert ssim(ref, ref) == 1.0
    c = np.full((32, 32), 0.3)
    assert ssim(c, c) == 1.0


def test_ssim_negation_is_low():
    ref = shepp_logan(64)
    assert ssim(1 - ref, ref) < 0.5


def test_ssim_matches_reference_implementation(rng):
    skm = pytest.importorskip("skimage.metrics")
    ref = shepp_logan(64)
    x = ref + 0.05 * rng.standard_normal(ref.shape)
    want = skm.structural_similarity(x, ref, data_range=float(ref.max() - ref.min()),
                                     gaussian_weights=True, sigma=1.5,
                                     use_sample_covariance=False)
    assert ssim(x, ref) == pytest.approx(want, abs=1e-9)


def test_entropy_values():
    assert entropy(np.full((8, 8), 3.0)) == 0.0
    uniform = np.arange(256, dtype=float).reshape(16, 16)
    assert entropy(uniform) == pytest.approx(8.0, abs=1e-12)
    two = np.array([0.0, 0.0, 1.0, 1.0])
    assert entropy(two) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        entropy(two, bins=1)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(0.01, 100), shift=st.floats(-50, 50))
def test_entropy_affine_invariant(seed, scale, shift):
    x = np.random.default_rng(seed).standard_normal((24, 24))
    assert entropy(scale * x + shift) == entropy(x)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_metric_symmetry(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.random((2, 20, 20))
    assert psnr(a, b) == psnr(b, a)
    assert abs(ssim(a, b, data_range=1.0) - ssim(b, a, data_range=1.0)) <= 1e-9
    assert -1.0 <= ssim(a, b) <= 1.0


def test_disks_custom_shapes():
    img = disks(32, ((5.0, 0.0, 3.0, 0.5),))
    assert img[16, 21] == pytest.approx(0.5)
    assert img[16, 5] == 0.0
