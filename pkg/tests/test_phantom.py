import numpy as np
import pytest

from cervprep.phantom import PhantomSpec, generate_phantom
from cervprep.roi import bbox_with_margin
from cervprep.specular import SpecularConfig, detect_specular

SMALL = dict(width=160, height=120, axes=(60.0, 42.0), specular_radius_range=(2, 4), n_speculars=6)


def test_no_perturbation_gives_clean_image():
    img, truth = generate_phantom(PhantomSpec(**{**SMALL, "n_speculars": 0}, noise_sigma=0.0, seed=4))
    np.testing.assert_array_equal(img, truth.clean_image)
    assert not truth.specular_mask.any()


def test_seed_determinism_and_variation():
    a, ta = generate_phantom(PhantomSpec(**SMALL, seed=11))
    b, tb = generate_phantom(PhantomSpec(**SMALL, seed=11))
    c, _ = generate_phantom(PhantomSpec(**SMALL, seed=12))
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(ta.specular_mask, tb.specular_mask)
    assert not np.array_equal(a, c)


@pytest.mark.parametrize("seed", range(5))
def test_truth_consistency(seed):
    img, truth = generate_phantom(PhantomSpec(**SMALL, seed=seed))
    assert not (truth.specular_mask & ~truth.ellipse_mask).any()
    assert (img[truth.specular_mask] == 255).all()
    assert truth.ellipse_bbox == bbox_with_margin(truth.ellipse_mask, 0)
    assert detect_specular(img, SpecularConfig(240))[truth.specular_mask].all()
    # noise never reaches the white cutoff outside the dots
    assert not (detect_specular(img, SpecularConfig(240)) & ~truth.specular_mask).any()


def test_default_geometry_fits_the_paper_scene():
    img, truth = generate_phantom(PhantomSpec(seed=0))
    assert img.shape == (480, 640, 3)
    frac = truth.ellipse_mask.mean()
    assert 0.35 < frac < 0.6  # the cervix covers roughly half the frame


def test_ellipse_out_of_bounds():
    with pytest.raises(ValueError, match="fit"):
        generate_phantom(PhantomSpec(width=100, height=100, axes=(80, 30), jitter=0))


def test_speculars_cannot_fit():
    with pytest.raises(ValueError, match="specular"):
        generate_phantom(PhantomSpec(width=60, height=60, axes=(4, 4), specular_radius_range=(5, 6), jitter=0))
