"""Frame preprocessing: working-width resize, face-box selection, ROI crop,
fixed-size rescale and /255 normalization, plus the detections sidecar loader.

Face detection itself is externalized: a text sidecar supplies per-frame
bounding boxes, and the detector parameters travel along as metadata.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .video import Frame


class DetectionsError(ValueError):
    pass


class MalformedLine(DetectionsError):
    def __init__(self, line_number: int, detail: str):
        super().__init__(f"line {line_number}: {detail}")
        self.line_number = line_number


class NegativeField(DetectionsError):
    pass


class EmptyIntersection(ValueError):
    """Raised when a clamped crop box has zero area inside the frame."""


@dataclass(frozen=True)
class BoundingBox:
    fX: int
    fY: int
    fW: int
    fH: int

    @property
    def area(self) -> int:
        return self.fW * self.fH

    def scaled(self, factor: float) -> "BoundingBox":
        return BoundingBox(
            fX=int(round(self.fX * factor)), fY=int(round(self.fY * factor)),
            fW=max(1, int(round(self.fW * factor))),
            fH=max(1, int(round(self.fH * factor))))


@dataclass(frozen=True)
class DetectionMeta:
    scale_factor: float = 1.0
    min_neighbors: int = 12
    min_size: tuple[int, int] = (60, 60)


@dataclass(frozen=True)
class Roi:
    """Square grayscale face crop with values normalized into [0, 1]."""
    pixels: np.ndarray  # (side, side) float32

    @property
    def side(self) -> int:
        return self.pixels.shape[0]


# ---------------------------------------------------------------------------
# resizing
# ---------------------------------------------------------------------------

def bilinear_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resample with half-pixel sample centers; returns float64.

    An identity-size call reproduces the input exactly.
    """
    in_h, in_w = img.shape
    src = img.astype(np.float64)
    ys = (np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5
    xs = (np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5
    ys = np.clip(ys, 0.0, in_h - 1.0)
    xs = np.clip(xs, 0.0, in_w - 1.0)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    top = src[np.ix_(y0, x0)] * (1 - wx) + src[np.ix_(y0, x1)] * wx
    bot = src[np.ix_(y1, x0)] * (1 - wx) + src[np.ix_(y1, x1)] * wx
    return top * (1 - wy) + bot * wy


def resize_to_width(frame: Frame, target_width: int) -> Frame:
    """Aspect-preserving bilinear resize to the working width."""
    if target_width < 1:
        raise ValueError(f"target width must be >= 1, got {target_width}")
    if target_width == frame.width:
        return frame
    out_h = max(1, int(round(frame.height * target_width / frame.width)))
    resized = bilinear_resize(frame.luma, out_h, target_width)
    luma = np.clip(np.rint(resized), 0, 255).astype(np.uint8)
    return Frame(index=frame.index, width=target_width, height=out_h, luma=luma)


# ---------------------------------------------------------------------------
# face selection and ROI extraction
# ---------------------------------------------------------------------------

def select_primary_face(boxes: list[BoundingBox]) -> BoundingBox | None:
    """Largest-area box wins; equal areas tie-break on smaller (fY, fX)."""
    if not boxes:
        return None
    return min(boxes, key=lambda b: (-b.area, b.fY, b.fX))


def extract_roi(frame: Frame, box: BoundingBox, roi_size: int = 28) -> Roi:
    """Clamped crop, bilinear rescale to roi_size^2, then divide by 255."""
    y0 = max(0, box.fY)
    x0 = max(0, box.fX)
    y1 = min(frame.height, box.fY + box.fH)
    x1 = min(frame.width, box.fX + box.fW)
    if y1 <= y0 or x1 <= x0:
        raise EmptyIntersection(
            f"box {box} does not intersect frame {frame.width}x{frame.height}")
    crop = frame.luma[y0:y1, x0:x1]
    resized = bilinear_resize(crop, roi_size, roi_size)
    return Roi(pixels=(resized / 255.0).astype(np.float32))


def rgb_to_gray(rgb: np.ndarray) -> np.ndarray:
    """Luma conversion for RGB sources feeding the PGM tooling (BT.601 weights)."""
    w = np.array([0.299, 0.587, 0.114])
    return np.clip(np.rint(rgb.astype(np.float64) @ w), 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# detections sidecar
# ---------------------------------------------------------------------------

@dataclass
class DetectionSet:
    boxes: dict[int, list[BoundingBox]] = field(default_factory=dict)
    meta: DetectionMeta = DetectionMeta()
    dropped_below_min_size: int = 0

    def for_frame(self, index: int) -> list[BoundingBox]:
        return self.boxes.get(index, [])


def _parse_meta(line: str) -> DetectionMeta:
    meta = DetectionMeta()
    kwargs = {}
    for tok in line.lstrip("#").split():
        if "=" not in tok:
            continue
        key, val = tok.split("=", 1)
        if key == "scale_factor":
            kwargs["scale_factor"] = float(val)
        elif key == "min_neighbors":
            kwargs["min_neighbors"] = int(val)
        elif key == "min_size":
            w, h = val.lower().split("x")
            kwargs["min_size"] = (int(w), int(h))
    return DetectionMeta(**kwargs) if kwargs else meta


def load_detections(data: bytes | str) -> DetectionSet:
    """Parse the sidecar: one `frame_index fX fY fW fH` record per line.

    An optional `# scale_factor=.. min_neighbors=.. min_size=WxH` header is
    captured verbatim as metadata; boxes smaller than min_size are dropped
    and counted.
    """
    if isinstance(data, bytes):
        data = data.decode("ascii", "replace")
    result = DetectionSet()
    meta_seen = False
    for lineno, raw in enumerate(data.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if not meta_seen and "=" in line:
                result.meta = _parse_meta(line)
                meta_seen = True
            continue
        parts = line.split()
        if len(parts) != 5:
            raise MalformedLine(lineno, f"expected 5 fields, got {len(parts)}")
        try:
            frame_index, fx, fy, fw, fh = (int(p) for p in parts)
        except ValueError:
            raise MalformedLine(lineno, f"non-integer field in {line!r}") from None
        if min(frame_index, fx, fy) < 0 or fw < 0 or fh < 0:
            raise NegativeField(f"line {lineno}: negative field in {line!r}")
        min_w, min_h = result.meta.min_size
        if fw < min_w or fh < min_h:
            result.dropped_below_min_size += 1
            continue
        result.boxes.setdefault(frame_index, []).append(BoundingBox(fx, fy, fw, fh))
    return result
