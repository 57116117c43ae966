import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cervprep.color import LabColor, delta_ab, rgb_to_lab_image, srgb_to_lab

# sRGB (255, 0, 0) through IEC 61966-2-1 / D65 / CIE 1976 L*a*b*, evaluated with
# skimage.color.rgb2lab in a separate scratch session and frozen here
RED_LAB = (53.24059, 80.09231, 67.20275)

byte = st.integers(0, 255)
labs = st.builds(LabColor, st.floats(0, 100), st.floats(-128, 127), st.floats(-128, 127))


def test_white_and_black():
    w = srgb_to_lab(255, 255, 255)
    assert w.L == pytest.approx(100, abs=1e-3)
    assert abs(w.a) <= 1e-3 and abs(w.b) <= 1e-3
    k = srgb_to_lab(0, 0, 0)
    assert (k.L, k.a, k.b) == pytest.approx((0, 0, 0), abs=1e-9)


def test_red_matches_reference():
    c = srgb_to_lab(255, 0, 0)
    assert (c.L, c.a, c.b) == pytest.approx(RED_LAB, abs=0.05)


def test_against_skimage_on_random_colors(rng):
    skcolor = pytest.importorskip("skimage.color")
    img = rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8)
    ours = rgb_to_lab_image(img)
    ref = skcolor.rgb2lab(img / 255.0)
    np.testing.assert_allclose(ours.L, ref[..., 0], atol=0.01)
    np.testing.assert_allclose(ours.a, ref[..., 1], atol=0.02)
    np.testing.assert_allclose(ours.b, ref[..., 2], atol=0.02)


def test_image_matches_scalar(rng):
    img = rng.integers(0, 256, size=(5, 7, 3), dtype=np.uint8)
    lab = rgb_to_lab_image(img)
    for y in range(5):
        for x in range(7):
            c = srgb_to_lab(*img[y, x])
            assert (lab.L[y, x], lab.a[y, x], lab.b[y, x]) == pytest.approx((c.L, c.a, c.b), abs=1e-9)


def test_white_image():
    lab = rgb_to_lab_image(np.full((1, 1, 3), 255, np.uint8))
    assert lab.L[0, 0] == pytest.approx(100, abs=1e-3)
    assert abs(lab.a[0, 0]) <= 1e-3 and abs(lab.b[0, 0]) <= 1e-3


def test_gray_ramp_is_neutral_and_monotone():
    v = np.arange(256, dtype=np.uint8)
    img = np.stack([v, v, v], axis=-1)[None]
    lab = rgb_to_lab_image(img)
    assert np.all(np.diff(lab.L[0]) >= 0)
    assert np.abs(lab.a).max() <= 0.2
    assert np.abs(lab.b).max() <= 0.2


def test_lightness_range_over_all_levels():
    levels = np.arange(256, dtype=np.uint8)
    grid = np.stack(np.meshgrid(levels[::5], levels[::5], levels[::5], indexing="ij"), axis=-1).reshape(-1, 1, 3)
    L = rgb_to_lab_image(grid).L
    assert L.min() >= 0 and L.max() <= 100 + 1e-6


def test_features_shape():
    lab = rgb_to_lab_image(np.zeros((3, 4, 3), np.uint8))
    assert lab.features().shape == (12, 2)
    assert lab.features(use_lightness=True).shape == (12, 3)


def test_delta_ab_examples():
    c = LabColor(10, 2, 3)
    assert delta_ab(c, c) == 0
    assert delta_ab(LabColor(50, 3, 0), LabColor(90, 0, 4)) == pytest.approx(5.0)


@settings(max_examples=200)
@given(x=labs, y=labs, z=labs)
def test_delta_ab_is_pseudometric(x, y, z):
    assert delta_ab(x, y) >= 0
    assert delta_ab(x, y) == delta_ab(y, x)
    assert delta_ab(x, z) <= delta_ab(x, y) + delta_ab(y, z) + 1e-9


@given(v=byte)
def test_neutral_axis(v):
    c = srgb_to_lab(v, v, v)
    assert abs(c.a) <= 0.2 and abs(c.b) <= 0.2
