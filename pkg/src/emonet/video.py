"""Grayscale frame ingestion: YUV4MPEG2 (Y4M) streams and binary PGM images.

Only the luma plane of a Y4M stream is consumed; 4:2:0 chroma planes are
read and discarded. Both formats round-trip bit-exactly through the
matching write functions, which the test suite leans on heavily.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np


class VideoFormatError(ValueError):
    """Base class for parse failures in this module."""


class MissingSignature(VideoFormatError):
    pass


class MalformedTag(VideoFormatError):
    pass


class UnsupportedChroma(VideoFormatError):
    pass


class MalformedFrameMarker(VideoFormatError):
    pass


class TruncatedFrame(VideoFormatError):
    pass


class BadMagic(VideoFormatError):
    pass


class MaxvalUnsupported(VideoFormatError):
    pass


class TruncatedPixels(VideoFormatError):
    pass


@dataclass(frozen=True)
class VideoHeader:
    width: int
    height: int
    fps_numerator: int
    fps_denominator: int
    chroma: str  # "mono" or "420"


@dataclass(frozen=True)
class Frame:
    """One decoded grayscale frame; luma is a row-major (height, width) uint8 array."""
    index: int
    width: int
    height: int
    luma: np.ndarray

    def __post_init__(self):
        if self.luma.shape != (self.height, self.width):
            raise VideoFormatError(
                f"luma shape {self.luma.shape} does not match {self.height}x{self.width}")


# ---------------------------------------------------------------------------
# Y4M
# ---------------------------------------------------------------------------

_Y4M_MAGIC = b"YUV4MPEG2"


def _read_line(stream: io.BufferedIOBase, what: str) -> bytes:
    out = bytearray()
    while True:
        b = stream.read(1)
        if not b:
            raise TruncatedFrame(f"stream ended inside {what}")
        if b == b"\n":
            return bytes(out)
        out += b


def parse_y4m_header(stream) -> VideoHeader:
    """Parse the YUV4MPEG2 signature line; stops right after the first 0x0A.

    W, H and F tags are mandatory; C is optional and defaults to 4:2:0.
    """
    if isinstance(stream, (bytes, bytearray)):
        stream = io.BytesIO(stream)
    line = _read_line(stream, "Y4M header")
    fields = line.split(b" ")
    if fields[0] != _Y4M_MAGIC:
        raise MissingSignature(f"expected YUV4MPEG2 signature, got {fields[0][:16]!r}")
    width = height = None
    fps_num = fps_den = None
    chroma = "420"
    for tag in fields[1:]:
        if not tag:
            continue
        key, val = tag[:1], tag[1:].decode("ascii", "replace")
        try:
            if key == b"W":
                width = int(val)
            elif key == b"H":
                height = int(val)
            elif key == b"F":
                num, den = val.split(":")
                fps_num, fps_den = int(num), int(den)
            elif key == b"C":
                if val == "mono":
                    chroma = "mono"
                elif val.startswith("420"):
                    chroma = "420"
                else:
                    raise UnsupportedChroma(f"chroma {val!r} is not mono or 4:2:0")
            # A/I/X tags are legal and ignored
        except (ValueError,) as exc:
            if isinstance(exc, UnsupportedChroma):
                raise
            raise MalformedTag(f"bad {key.decode()} tag {val!r}") from exc
    if width is None or height is None:
        raise MalformedTag("missing W or H tag")
    if fps_num is None:
        raise MalformedTag("missing F tag")
    if width < 1 or height < 1 or fps_den < 1:
        raise MalformedTag(f"non-positive geometry or rate: W{width} H{height} F{fps_num}:{fps_den}")
    return VideoHeader(width, height, fps_num, fps_den, chroma)


class Y4mReader:
    """Sequential Y4M frame reader; single-owner, frames are immutable."""

    def __init__(self, stream):
        if isinstance(stream, (bytes, bytearray)):
            stream = io.BytesIO(stream)
        self._stream = stream
        self.header = parse_y4m_header(stream)
        self._next_index = 0

    def next_frame(self) -> Frame | None:
        """Decode the next frame, or return None at a clean end-of-stream."""
        marker = self._stream.read(5)
        if marker == b"":
            return None
        if marker != b"FRAME":
            raise MalformedFrameMarker(f"expected FRAME marker, got {marker!r}")
        _read_line(self._stream, "FRAME parameter line")   # params ignored
        h = self.header
        n_luma = h.width * h.height
        luma = self._stream.read(n_luma)
        if len(luma) != n_luma:
            raise TruncatedFrame(
                f"frame {self._next_index}: wanted {n_luma} luma bytes, got {len(luma)}")
        if h.chroma == "420":
            n_chroma = n_luma // 2
            skipped = self._stream.read(n_chroma)
            if len(skipped) != n_chroma:
                raise TruncatedFrame(
                    f"frame {self._next_index}: wanted {n_chroma} chroma bytes, "
                    f"got {len(skipped)}")
        frame = Frame(index=self._next_index, width=h.width, height=h.height,
                      luma=np.frombuffer(luma, dtype=np.uint8).reshape(h.height, h.width))
        self._next_index += 1
        return frame

    def __iter__(self):
        while (frame := self.next_frame()) is not None:
            yield frame


def write_y4m(header: VideoHeader, frames, stream=None) -> bytes | None:
    """Serialize frames as a Y4M stream; chroma planes are written as 0x80."""
    out = stream if stream is not None else io.BytesIO()
    tags = f"YUV4MPEG2 W{header.width} H{header.height} " \
           f"F{header.fps_numerator}:{header.fps_denominator}"
    if header.chroma == "mono":
        tags += " Cmono"
    else:
        tags += " C420"
    out.write(tags.encode("ascii") + b"\n")
    n_chroma = header.width * header.height // 2
    for frame in frames:
        out.write(b"FRAME\n")
        out.write(frame.luma.tobytes())
        if header.chroma == "420":
            out.write(b"\x80" * n_chroma)
    if stream is None:
        return out.getvalue()
    return None


# ---------------------------------------------------------------------------
# PGM (binary P5, maxval 255)
# ---------------------------------------------------------------------------

def parse_pgm(data: bytes, index: int = 0) -> Frame:
    """Parse a binary P5 PGM with maxval 255; '#' comments allowed in the header."""
    if not data.startswith(b"P5"):
        raise BadMagic(f"not a binary PGM: starts with {data[:2]!r}")
    pos = 2
    tokens = []
    while len(tokens) < 3:
        if pos >= len(data):
            raise TruncatedPixels("header ended before width/height/maxval")
        c = data[pos:pos + 1]
        if c == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
        elif c.isspace():
            pos += 1
        else:
            end = pos
            while end < len(data) and not data[end:end + 1].isspace():
                end += 1
            tokens.append(data[pos:end])
            pos = end
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise BadMagic(f"non-numeric header token in {tokens!r}") from exc
    if maxval != 255:
        raise MaxvalUnsupported(f"maxval {maxval} unsupported (only 255)")
    pos += 1  # single whitespace byte after maxval
    n = width * height
    pixels = data[pos:pos + n]
    if len(pixels) != n:
        raise TruncatedPixels(f"wanted {n} pixel bytes, got {len(pixels)}")
    return Frame(index=index, width=width, height=height,
                 luma=np.frombuffer(pixels, dtype=np.uint8).reshape(height, width))


def write_pgm(frame: Frame) -> bytes:
    header = f"P5\n{frame.width} {frame.height}\n255\n".encode("ascii")
    return header + frame.luma.tobytes()


# ---------------------------------------------------------------------------
# temporal smoothing
# ---------------------------------------------------------------------------

def temporal_smooth(frames: list[Frame]) -> Frame:
    """Per-pixel median over an odd window of 1, 3 or 5 same-size frames.

    The output keeps the index of the middle frame. A window of 1 is the
    identity; disabled by default in the pipeline.
    """
    k = len(frames)
    if k not in (1, 3, 5):
        raise ValueError(f"window must be 1, 3 or 5 frames, got {k}")
    if k == 1:
        return frames[0]
    mid = frames[k // 2]
    for f in frames:
        if (f.width, f.height) != (mid.width, mid.height):
            raise VideoFormatError(
                f"frame {f.index} is {f.width}x{f.height}, "
                f"window expects {mid.width}x{mid.height}")
    stack = np.stack([f.luma for f in frames])
    med = np.median(stack, axis=0).astype(np.uint8)   # odd k: exact integer median
    return Frame(index=mid.index, width=mid.width, height=mid.height, luma=med)
