import cv2
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from procap.errors import OCRUnavailableError, RegionOutOfBoundsError, UndecodableImageError
from procap.preprocess import (
    ContourTextDetector,
    FixtureOCR,
    TextRegion,
    check_image,
    clean_image,
    inpaint,
    load_image,
    lower_median,
    make_ocr,
    save_image,
)


def rendered(word="HELLO", bg=(40, 60, 80)):
    img = np.zeros((100, 160, 3), np.uint8)
    img[:] = bg
    cv2.putText(img, word, (30, 60), cv2.FONT_HERSHEY_SIMPLEX, 0.9, (255, 255, 255), 2)
    return img


def test_lower_median_matches_sorted_oracle():
    rng = np.random.default_rng(0)
    for n in range(1, 40):
        vals = rng.integers(0, 256, size=(n, 3))
        expected = np.sort(vals, axis=0)[(n - 1) // 2]
        assert np.array_equal(lower_median(vals), expected)


def test_inpaint_ring_fill_uses_border_median():
    img = np.full((20, 20, 3), 10, np.uint8)
    img[5:10, 5:10] = 200  # the "text"
    out = inpaint(img, [TextRegion((5, 5, 5, 5))])
    assert (out[5:10, 5:10] == 10).all()
    assert (img[5:10, 5:10] == 200).all(), "input must not be modified"


def test_inpaint_image_median_and_fallback():
    img = np.zeros((4, 4, 3), np.uint8)
    img[:2] = 100
    whole = TextRegion((0, 0, 4, 4))
    expected = lower_median(img.reshape(-1, 3))
    assert (inpaint(img, [whole])[0, 0] == expected).all()  # empty ring -> image median
    assert (inpaint(img, [TextRegion((1, 1, 1, 1))], fill="median-image")[1, 1] == expected).all()


def test_inpaint_no_regions_is_identity_copy():
    img = rendered()
    out = inpaint(img, [])
    assert np.array_equal(out, img) and out is not img


@given(st.integers(-5, 30), st.integers(-5, 30), st.integers(-2, 30), st.integers(-2, 30))
@settings(max_examples=200, deadline=None)
def test_region_bounds(x, y, w, h):
    img = np.zeros((20, 25, 3), np.uint8)
    region = TextRegion((x, y, w, h))
    inside = w > 0 and h > 0 and x >= 0 and y >= 0 and x + w <= 25 and y + h <= 20
    if inside:
        inpaint(img, [region])
    else:
        with pytest.raises(RegionOutOfBoundsError):
            inpaint(img, [region])


def test_empty_image_rejected():
    with pytest.raises(UndecodableImageError):
        check_image(np.zeros((0, 0, 3), np.uint8))
    with pytest.raises(UndecodableImageError):
        check_image(None)


def test_undecodable_file(tmp_path):
    bad = tmp_path / "x.png"
    bad.write_bytes(b"not a png")
    with pytest.raises(UndecodableImageError):
        load_image(bad)
    with pytest.raises(UndecodableImageError):
        load_image(tmp_path / "missing.png")


def test_png_round_trip(tmp_path):
    img = rendered()
    assert np.array_equal(load_image(save_image(img, tmp_path / "a.png")), img)


def test_contour_detector_finds_and_clears_text():
    img = rendered()
    det = ContourTextDetector()
    regions = det.detect(img)
    assert len(regions) == 1
    x, y, w, h = regions[0].bbox
    ys, xs = np.nonzero((img != img[0, 0]).any(axis=2))  # ink pixels
    assert x <= xs.min() and x + w > xs.max() and y <= ys.min() and y + h > ys.max()
    cleaned, _ = clean_image(img, det)
    assert det.detect(cleaned) == []


def test_contour_detector_blank_image():
    assert ContourTextDetector().detect(np.full((30, 30, 3), 90, np.uint8)) == []


def test_fixture_ocr_drops_regions_in_uniform_patches():
    img = rendered()
    ocr = FixtureOCR({"m": [{"bbox": [28, 38, 95, 28], "text": "HELLO"}]})
    cleaned, regions = clean_image(img, ocr, image_id="m")
    assert [r.detected_text for r in regions] == ["HELLO"]
    assert ocr.detect(cleaned, image_id="m") == []
    with pytest.raises(OCRUnavailableError):
        ocr.detect(img)


def test_clean_image_without_text_is_unchanged():
    img = np.full((30, 30, 3), 90, np.uint8)
    cleaned, regions = clean_image(img, ContourTextDetector())
    assert regions == [] and np.array_equal(cleaned, img)


def test_make_ocr():
    assert isinstance(make_ocr("contour"), ContourTextDetector)
    with pytest.raises(OCRUnavailableError):
        make_ocr("tesseract")
