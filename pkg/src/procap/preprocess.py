"""Meme-text detection and in-painting.

Images are ``numpy.ndarray`` of shape (H, W, 3) and dtype uint8 (RGB).
OCR engines sit behind :class:`OCRBackend`; three implementations ship:

* :class:`FixtureOCR` reads regions from a JSON sidecar (no engine needed),
* :class:`ContourTextDetector` finds high-contrast glyph clusters with OpenCV,
* :class:`EasyOCRBackend` wraps the ``easyocr`` package when installed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import cv2
import numpy as np

from .errors import OCRUnavailableError, RegionOutOfBoundsError, UndecodableImageError

RING_WIDTH = 4
FILL_STRATEGIES = ("median-ring", "median-image")


@dataclass(frozen=True)
class TextRegion:
    bbox: tuple[int, int, int, int]  # x, y, width, height
    detected_text: str = ""
    confidence: float = 1.0

    def __post_init__(self):
        if len(self.bbox) != 4:
            raise ValueError("bbox must have four integers")
        object.__setattr__(self, "bbox", tuple(int(v) for v in self.bbox))
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")

    def check_bounds(self, width: int, height: int) -> None:
        x, y, w, h = self.bbox
        if w <= 0 or h <= 0 or x < 0 or y < 0 or x + w > width or y + h > height:
            raise RegionOutOfBoundsError(f"region {self.bbox} outside image of size {width}x{height}")

    def to_json(self) -> dict:
        return {"bbox": list(self.bbox), "text": self.detected_text, "confidence": self.confidence}


def check_image(image) -> np.ndarray:
    if image is None:
        raise UndecodableImageError("no image data")
    arr = np.asarray(image)
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    if arr.ndim != 3 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise UndecodableImageError(f"image has empty or invalid shape {arr.shape}")
    return arr


def load_image(path) -> np.ndarray:
    """Decode an image file to an RGB uint8 array."""
    data = np.fromfile(str(path), dtype=np.uint8) if Path(path).is_file() else None
    if data is None or data.size == 0:
        raise UndecodableImageError(f"cannot read image {path}")
    bgr = cv2.imdecode(data, cv2.IMREAD_COLOR)
    if bgr is None:
        raise UndecodableImageError(f"cannot decode image {path}")
    return check_image(cv2.cvtColor(bgr, cv2.COLOR_BGR2RGB))


def save_image(image: np.ndarray, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ok, buf = cv2.imencode(path.suffix or ".png", cv2.cvtColor(check_image(image), cv2.COLOR_RGB2BGR))
    if not ok:
        raise UndecodableImageError(f"cannot encode image for {path}")
    path.write_bytes(buf.tobytes())
    return path


def encode_png(image: np.ndarray) -> bytes:
    ok, buf = cv2.imencode(".png", cv2.cvtColor(check_image(image), cv2.COLOR_RGB2BGR))
    if not ok:
        raise UndecodableImageError("cannot encode image")
    return buf.tobytes()


def sort_regions(regions: Sequence[TextRegion]) -> list[TextRegion]:
    """Top-to-bottom, then left-to-right."""
    return sorted(regions, key=lambda r: (r.bbox[1], r.bbox[0], r.bbox[3], r.bbox[2]))


class OCRBackend:
    """Finds text regions in an image."""

    name = "ocr"

    def detect(self, image: np.ndarray, image_id: Optional[str] = None) -> list[TextRegion]:
        raise NotImplementedError


class FixtureOCR(OCRBackend):
    """Regions read from a sidecar JSON ``{image_id: [{bbox, text, confidence}, ...]}``.

    Regions whose box lies in a uniform patch of the given image are dropped,
    so a cleaned image reports no text where it was painted over.
    """

    name = "fixture"

    def __init__(self, sidecar):
        if isinstance(sidecar, (str, Path)):
            sidecar = json.loads(Path(sidecar).read_text(encoding="utf-8"))
        self.regions = {
            str(k): [TextRegion(tuple(r["bbox"]), r.get("text", ""), float(r.get("confidence", 1.0))) for r in v]
            for k, v in sidecar.items()
        }

    def detect(self, image, image_id=None):
        arr = check_image(image)
        if image_id is None:
            raise OCRUnavailableError("fixture OCR needs an image id")
        found = []
        for region in self.regions.get(str(image_id), []):
            region.check_bounds(arr.shape[1], arr.shape[0])
            x, y, w, h = region.bbox
            patch = arr[y:y + h, x:x + w]
            if not (patch == patch[0, 0]).all():
                found.append(region)
        return sort_regions(found)


class ContourTextDetector(OCRBackend):
    """Localises meme captions without recognising them.

    Meme text is rendered in a colour that contrasts strongly with its local
    background; we take the morphological gradient, threshold it, merge glyphs
    into words with a horizontal closing and keep boxes of text-like shape.
    Recognition is not supported: ``detected_text`` holds one ``"?"`` per
    glyph component, which is enough to count characters.
    """

    name = "contour"

    def __init__(self, min_height: int = 6, min_contrast: int = 60, join: int = 9):
        self.min_height = min_height
        self.min_contrast = min_contrast
        self.join = join

    def detect(self, image, image_id=None):
        arr = check_image(image)
        gray = cv2.cvtColor(arr, cv2.COLOR_RGB2GRAY)
        grad = cv2.morphologyEx(gray, cv2.MORPH_GRADIENT, np.ones((3, 3), np.uint8))
        _, edges = cv2.threshold(grad, self.min_contrast, 255, cv2.THRESH_BINARY)
        if not edges.any():
            return []
        kernel = cv2.getStructuringElement(cv2.MORPH_RECT, (self.join, 3))
        words = cv2.morphologyEx(edges, cv2.MORPH_CLOSE, kernel)
        n, _, stats, _ = cv2.connectedComponentsWithStats(words, connectivity=8)
        height, width = gray.shape
        regions = []
        for i in range(1, n):
            x, y, w, h, area = (int(v) for v in stats[i])
            if h < self.min_height or w < h // 2:
                continue
            x0, y0 = max(x - 1, 0), max(y - 1, 0)
            x1, y1 = min(x + w + 1, width), min(y + h + 1, height)
            glyphs, _ = cv2.connectedComponents(edges[y0:y1, x0:x1], connectivity=8)
            fill = area / float(w * h)
            regions.append(TextRegion((x0, y0, x1 - x0, y1 - y0), "?" * max(glyphs - 1, 1),
                                      round(min(1.0, fill), 4)))
        return sort_regions(regions)


class EasyOCRBackend(OCRBackend):
    name = "easyocr"

    def __init__(self, languages=("en",), gpu: bool = False):
        try:
            import easyocr
        except ImportError as exc:
            raise OCRUnavailableError("easyocr is not installed") from exc
        try:
            self.reader = easyocr.Reader(list(languages), gpu=gpu)
        except Exception as exc:  # model download or init failure
            raise OCRUnavailableError(f"easyocr failed to initialise: {exc}") from exc

    def detect(self, image, image_id=None):
        arr = check_image(image)
        height, width = arr.shape[:2]
        regions = []
        for box, text, conf in self.reader.readtext(arr):
            xs = [p[0] for p in box]
            ys = [p[1] for p in box]
            x0, y0 = max(int(min(xs)), 0), max(int(min(ys)), 0)
            x1, y1 = min(int(np.ceil(max(xs))), width), min(int(np.ceil(max(ys))), height)
            if x1 > x0 and y1 > y0:
                regions.append(TextRegion((x0, y0, x1 - x0, y1 - y0), text, float(min(max(conf, 0.0), 1.0))))
        return sort_regions(regions)


def make_ocr(spec: str) -> OCRBackend:
    """``fixture:<sidecar.json>``, ``contour`` or ``easyocr``."""
    if spec.startswith("fixture:"):
        return FixtureOCR(spec[len("fixture:"):])
    if spec == "contour":
        return ContourTextDetector()
    if spec == "easyocr":
        return EasyOCRBackend()
    raise OCRUnavailableError(f"unknown OCR backend {spec!r}")


def detect_text_regions(image, ocr_backend: OCRBackend, image_id: Optional[str] = None) -> list[TextRegion]:
    arr = check_image(image)
    regions = ocr_backend.detect(arr, image_id=image_id)
    for r in regions:
        r.check_bounds(arr.shape[1], arr.shape[0])
    return sort_regions(regions)


def lower_median(values: np.ndarray) -> np.ndarray:
    """Per-channel lower median of an (N, C) array; integer-valued, no rounding."""
    k = (values.shape[0] - 1) // 2
    return np.partition(values, k, axis=0)[k]


def _ring_pixels(image: np.ndarray, bbox, width: int) -> np.ndarray:
    x, y, w, h = bbox
    H, W = image.shape[:2]
    x0, y0 = max(x - width, 0), max(y - width, 0)
    x1, y1 = min(x + w + width, W), min(y + h + width, H)
    mask = np.zeros((y1 - y0, x1 - x0), dtype=bool)
    mask[:] = True
    mask[y - y0:y - y0 + h, x - x0:x - x0 + w] = False
    return image[y0:y1, x0:x1][mask]


def inpaint(image, regions: Sequence[TextRegion], fill: str = "median-ring") -> np.ndarray:
    """Paint over each region with a flat colour.

    ``median-ring`` uses the per-channel median of the ``RING_WIDTH``-pixel
    border around the box (falling back to the whole-image median when the box
    touches every edge); ``median-image`` uses the whole-image median. Medians
    are taken on the original image so the result does not depend on region
    order except where boxes overlap.
    """
    if fill not in FILL_STRATEGIES:
        raise ValueError(f"unknown fill strategy {fill!r}")
    src = check_image(image)
    H, W = src.shape[:2]
    for r in regions:
        r.check_bounds(W, H)
    if not regions:
        return src.copy()
    out = src.copy()
    flat = src.reshape(-1, src.shape[2])
    image_median = None
    for r in regions:
        ring = _ring_pixels(src, r.bbox, RING_WIDTH) if fill == "median-ring" else np.empty((0, src.shape[2]))
        if ring.shape[0] == 0:
            if image_median is None:
                image_median = lower_median(flat)
            colour = image_median
        else:
            colour = lower_median(ring)
        x, y, w, h = r.bbox
        out[y:y + h, x:x + w] = colour.astype(src.dtype)
    return out


def clean_image(image, ocr_backend: OCRBackend, image_id=None, fill: str = "median-ring"):
    """Detect then in-paint. Images without detected text come back unchanged."""
    regions = detect_text_regions(image, ocr_backend, image_id=image_id)
    return inpaint(image, regions, fill=fill), regions
