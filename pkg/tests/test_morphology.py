import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hmmdetect.morphology import (DEFAULT_SE, StructuringElement, as_gray_image, bottom_hat,
                                  close, dilate, erode)
from reference import naive_bottom_hat, naive_dilate, naive_erode, random_offsets

ORIGIN = StructuringElement(((0, 0),))

images = st.integers(1, 16).flatmap(lambda h: st.integers(1, 16).flatmap(
    lambda w: arrays(np.float64, (h, w), elements=st.floats(0, 255, allow_nan=False))))
offset_sets = st.lists(st.tuples(st.integers(-2, 2), st.integers(-2, 2)), max_size=8).map(
    lambda offs: StructuringElement(tuple(offs) + ((0, 0),)))


def test_structuring_element_requires_origin():
    with pytest.raises(ValueError):
        StructuringElement(((1, 0),))
    with pytest.raises(ValueError):
        StructuringElement(())


def test_default_is_3x3_square():
    assert len(DEFAULT_SE.offsets) == 9
    assert DEFAULT_SE == StructuringElement.square(3)


def test_from_mask_matches_square():
    assert StructuringElement.from_mask(np.ones((3, 3))) == DEFAULT_SE


def test_gray_image_validation():
    with pytest.raises(ValueError):
        as_gray_image([[1.0, -1.0]])
    with pytest.raises(ValueError):
        as_gray_image([1.0, 2.0, 3.0], width=2, height=2)
    img = as_gray_image([1, 2, 3, 4, 5, 6], width=3, height=2)
    assert img.shape == (2, 3) and img[1, 0] == 4.0


@pytest.mark.parametrize("op", [dilate, erode, bottom_hat])
def test_constant_image(op):
    img = np.full((5, 7), 42.0)
    expected = np.zeros_like(img) if op is bottom_hat else img
    np.testing.assert_array_equal(op(img), expected)


@pytest.mark.parametrize("op", [dilate, erode])
def test_origin_only_is_identity(op, rng):
    img = rng.uniform(0, 255, (6, 9))
    np.testing.assert_array_equal(op(img, ORIGIN), img)


def test_dilate_bright_pixel_spreads_to_block():
    img = np.zeros((5, 5))
    img[2, 2] = 10.0
    expected = np.zeros((5, 5))
    expected[1:4, 1:4] = 10.0
    np.testing.assert_array_equal(dilate(img), expected)
    corner = np.zeros((5, 5))
    corner[0, 0] = 10.0
    expected = np.zeros((5, 5))
    expected[:2, :2] = 10.0
    np.testing.assert_array_equal(dilate(corner), expected)


def test_bottom_hat_dark_pixel():
    img = np.full((7, 7), 10.0)
    img[3, 3] = 0.0
    expected = np.zeros((7, 7))
    expected[3, 3] = 10.0
    np.testing.assert_array_equal(bottom_hat(img), expected)


def test_bottom_hat_ignores_bright_pixel():
    img = np.zeros((7, 7))
    img[3, 3] = 10.0
    np.testing.assert_array_equal(bottom_hat(img), np.zeros((7, 7)))


def test_asymmetric_se_against_reference():
    se = StructuringElement(((0, 0), (1, 0), (2, 1)))
    img = np.arange(20, dtype=float).reshape(4, 5) % 7
    np.testing.assert_array_equal(dilate(img, se), naive_dilate(img, se.offsets))
    np.testing.assert_array_equal(erode(img, se), naive_erode(img, se.offsets))


def test_random_images_match_reference(rng):
    for _ in range(60):
        h, w = rng.integers(1, 17, 2)
        img = rng.uniform(0, 255, (h, w))
        se = StructuringElement(tuple(random_offsets(rng)))
        np.testing.assert_array_equal(dilate(img, se), naive_dilate(img, se.offsets))
        np.testing.assert_array_equal(erode(img, se), naive_erode(img, se.offsets))
        np.testing.assert_array_equal(bottom_hat(img, se), naive_bottom_hat(img, se.offsets))


@settings(max_examples=60, deadline=None)
@given(images, offset_sets)
def test_erode_dilate_duality(img, se):
    np.testing.assert_array_equal(erode(img, se), -dilate(-img, se.reflected()))


@settings(max_examples=40, deadline=None)
@given(images)
def test_duality_with_symmetric_se(img):
    np.testing.assert_array_equal(erode(img), -dilate(-img))


@settings(max_examples=60, deadline=None)
@given(images, offset_sets)
def test_bottom_hat_nonnegative(img, se):
    assert np.all(bottom_hat(img, se) >= 0.0)


@settings(max_examples=60, deadline=None)
@given(images, offset_sets)
def test_closing_idempotent(img, se):
    once = close(img, se)
    np.testing.assert_array_equal(close(once, se), once)
