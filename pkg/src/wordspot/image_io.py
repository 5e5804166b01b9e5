"""Reading and writing pages as portable bitmap/graymap files.

Supported on input: P1/P4 bitmaps and P2/P5 graymaps. Grayscale pixels are
binarized with a global threshold, by default 50% of the declared maxval
(darker than the threshold counts as ink). Output is always P4.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from .features import PageImage


def _tokens(data: bytes):
    """Yield whitespace-separated header tokens, skipping # comments."""
    pos = 0
    while pos < len(data):
        ch = data[pos : pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            pos = data.index(b"\n", pos) + 1
        else:
            end = pos
            while end < len(data) and not data[end : end + 1].isspace():
                end += 1
            yield pos, data[pos:end]
            pos = end


def read_page_bytes(data: bytes, threshold: float = 0.5) -> PageImage:
    """Decode PBM/PGM bytes into a binarized page."""
    reader = _tokens(data)
    try:
        _, magic = next(reader)
    except StopIteration:
        raise ValueError("empty raster file") from None
    if magic not in (b"P1", b"P2", b"P4", b"P5"):
        raise ValueError(f"unsupported raster magic {magic!r}")

    try:
        _, wtok = next(reader)
        hpos, htok = next(reader)
        width, height = int(wtok), int(htok)
        last_pos, last_tok = hpos, htok
        if magic in (b"P2", b"P5"):
            mpos, mtok = next(reader)
            maxval = int(mtok)
            last_pos, last_tok = mpos, mtok
        else:
            maxval = 1
    except (StopIteration, ValueError):
        raise ValueError("malformed raster header") from None
    if width < 1 or height < 1 or maxval < 1:
        raise ValueError("malformed raster header")

    if magic == b"P1":
        digits = [t for _, t in reader]
        bits = np.frombuffer(b"".join(digits), dtype="S1")
        if len(bits) < width * height:
            raise ValueError("truncated P1 raster")
        ink = (bits[: width * height] == b"1").reshape(height, width)
        return PageImage(ink)

    if magic == b"P2":
        values = [int(t) for _, t in reader]
        if len(values) < width * height:
            raise ValueError("truncated P2 raster")
        gray = np.array(values[: width * height]).reshape(height, width)
        return PageImage(gray <= maxval * threshold)

    # Binary bodies start one whitespace byte after the last header token.
    body_start = last_pos + len(last_tok) + 1

    if magic == b"P4":
        row_bytes = (width + 7) // 8
        body = data[body_start : body_start + row_bytes * height]
        if len(body) < row_bytes * height:
            raise ValueError("truncated P4 raster")
        rows = np.frombuffer(body, dtype=np.uint8).reshape(height, row_bytes)
        bits = np.unpackbits(rows, axis=1)[:, :width]
        return PageImage(bits == 1)

    # P5
    if maxval > 255:
        raise ValueError("16-bit graymaps are not supported")
    body = data[body_start : body_start + width * height]
    if len(body) < width * height:
        raise ValueError("truncated P5 raster")
    gray = np.frombuffer(body, dtype=np.uint8).reshape(height, width)
    return PageImage(gray <= maxval * threshold)


def read_page(path: str | Path, threshold: float = 0.5) -> PageImage:
    return read_page_bytes(Path(path).read_bytes(), threshold=threshold)


def write_page_bytes(page: PageImage) -> bytes:
    """Encode a page as a binary P4 bitmap."""
    buf = io.BytesIO()
    buf.write(f"P4\n{page.width} {page.height}\n".encode("ascii"))
    buf.write(np.packbits(page.pixels.astype(np.uint8), axis=1).tobytes())
    return buf.getvalue()


def write_page(page: PageImage, path: str | Path) -> None:
    Path(path).write_bytes(write_page_bytes(page))
