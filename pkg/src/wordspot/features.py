"""Word segmentation and shape descriptors for binarized page images.

A page is a boolean ink grid. Words are located by horizontal run-length
smearing followed by connected-component labeling, and each word box is
summarized by a 93-component descriptor in [0, 1] built from seven feature
families:

========  =====================================  ======
slice     feature                                length
========  =====================================  ======
[0]       width-to-height ratio, clamped at 4       1
[1]       ink density of the box                    1
[2:4]     center of gravity (x, y), normalized      2
[4:29]    vertical projection, 25 column bins      25
[29:45]   top shape profile, 16 column bins        16
[45:61]   bottom shape profile, 16 column bins     16
[61:77]   upper-half 4x4 grid densities            16
[77:93]   lower-half 4x4 grid densities            16
========  =====================================  ======

All features are computed box-locally, so descriptors are invariant under
translation of the word on the page.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DegenerateWordError

DESCRIPTOR_SIZE = 93
VERTICAL_BINS = 25
PROFILE_BINS = 16
GRID_SIZE = 4
RATIO_CLAMP = 4.0

# Smear gap threshold as a fraction of the median raw component height.
SMEAR_FACTOR = 0.4

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class PageImage:
    """A binarized page: boolean grid, True = ink."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("page must be a 2-D grid with positive extent")
        if px.dtype != bool:
            values = np.unique(px)
            if len(values) > 2:
                raise ValueError("page is not binarized (more than two pixel states)")
            px = px > 0
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True, order=True)
class WordBox:
    """Axis-aligned word bounding box, top-left anchored."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValueError("box extent must be positive")
        if self.x < 0 or self.y < 0:
            raise ValueError("box origin must be non-negative")

    def crop(self, page: PageImage) -> np.ndarray:
        if self.x + self.w > page.width or self.y + self.h > page.height:
            raise ValueError("box exceeds page bounds")
        return page.pixels[self.y : self.y + self.h, self.x : self.x + self.w]


def _smear_rows(ink: np.ndarray, gap: int) -> np.ndarray:
    """Fill horizontal white runs of length <= gap that lie between ink."""
    h, w = ink.shape
    cols = np.arange(w)
    # Nearest ink column at or left of each pixel (-1 when none).
    left = np.where(ink, cols, -1)
    left = np.maximum.accumulate(left, axis=1)
    # Nearest ink column at or right of each pixel (w when none).
    right = np.where(ink, cols, w)
    right = np.minimum.accumulate(right[:, ::-1], axis=1)[:, ::-1]
    run = right - left - 1
    fill = (~ink) & (left >= 0) & (right < w) & (run <= gap)
    return ink | fill


def _group_into_lines(boxes: list[WordBox]) -> list[WordBox]:
    """Order boxes top-to-bottom by text line, then left-to-right."""
    if not boxes:
        return []
    by_center = sorted(boxes, key=lambda b: (b.y + b.h / 2.0, b.x))
    lines: list[list[WordBox]] = [[by_center[0]]]
    span = [by_center[0].y, by_center[0].y + by_center[0].h]
    for box in by_center[1:]:
        overlap = min(span[1], box.y + box.h) - max(span[0], box.y)
        if overlap >= 0.5 * min(box.h, span[1] - span[0]):
            lines[-1].append(box)
            span[0] = min(span[0], box.y)
            span[1] = max(span[1], box.y + box.h)
        else:
            lines.append([box])
            span = [box.y, box.y + box.h]
    ordered: list[WordBox] = []
    for line in lines:
        ordered.extend(sorted(line, key=lambda b: b.x))
    return ordered


def segment_words(page: PageImage) -> list[WordBox]:
    """Locate word boxes on a binarized page.

    Letters are merged into words by filling horizontal gaps up to
    ``max(1, round(0.4 * median raw component height))`` pixels, then taking
    8-connected components of the smeared image. Boxes come back in reading
    order. A blank page yields an empty list.
    """
    ink = page.pixels
    if not ink.any():
        return []

    labels, count = ndimage.label(ink, structure=_EIGHT_CONNECTED)
    heights = [sl[0].stop - sl[0].start for sl in ndimage.find_objects(labels)]
    gap = max(1, round(SMEAR_FACTOR * float(np.median(heights))))

    smeared = _smear_rows(ink, gap)
    labels, count = ndimage.label(smeared, structure=_EIGHT_CONNECTED)
    boxes = []
    for sl in ndimage.find_objects(labels):
        rows, cols = sl
        boxes.append(
            WordBox(
                x=int(cols.start),
                y=int(rows.start),
                w=int(cols.stop - cols.start),
                h=int(rows.stop - rows.start),
            )
        )
    return _group_into_lines(boxes)


def _column_bins(width: int, bins: int) -> list[tuple[int, int]]:
    edges = [(j * width) // bins for j in range(bins + 1)]
    return [(edges[j], edges[j + 1]) for j in range(bins)]


def scalar_features(page: PageImage, box: WordBox) -> tuple[float, float, float, float]:
    """Width-to-height ratio, ink density, and normalized center of gravity.

    The ratio is ``min(w/h, 4) / 4``; the centroid uses pixel centers at
    ``(i + 0.5) / extent`` so a uniformly inked box lands exactly on (0.5, 0.5).
    """
    crop = box.crop(page)
    ys, xs = np.nonzero(crop)
    if len(xs) == 0:
        raise DegenerateWordError(f"box {box} contains no ink")
    ratio = min(box.w / box.h, RATIO_CLAMP) / RATIO_CLAMP
    density = len(xs) / (box.w * box.h)
    cog_x = float(np.mean(xs + 0.5)) / box.w
    cog_y = float(np.mean(ys + 0.5)) / box.h
    return ratio, density, cog_x, cog_y


def projection_features(
    page: PageImage, box: WordBox
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vertical projection (25 bins) plus top and bottom profiles (16 bins).

    Per column bin: the vertical projection is the ink fraction of the bin
    (ink count over bin height x width, so a half-inked bin reads 0.5 at any
    box width); the top profile is ``1 - first_ink_row / h``; the bottom
    profile is ``(last_ink_row + 1) / h``. Bins without ink are zero.
    """
    crop = box.crop(page)
    if not crop.any():
        raise DegenerateWordError(f"box {box} contains no ink")
    h = box.h

    vertical = np.zeros(VERTICAL_BINS)
    for j, (c0, c1) in enumerate(_column_bins(box.w, VERTICAL_BINS)):
        if c1 > c0:
            vertical[j] = crop[:, c0:c1].sum() / (h * (c1 - c0))

    top = np.zeros(PROFILE_BINS)
    bottom = np.zeros(PROFILE_BINS)
    for j, (c0, c1) in enumerate(_column_bins(box.w, PROFILE_BINS)):
        if c1 <= c0:
            continue
        rows = np.nonzero(crop[:, c0:c1].any(axis=1))[0]
        if len(rows) == 0:
            continue
        top[j] = 1.0 - rows[0] / h
        bottom[j] = (rows[-1] + 1) / h

    return (
        np.clip(vertical, 0.0, 1.0),
        np.clip(top, 0.0, 1.0),
        np.clip(bottom, 0.0, 1.0),
    )


def _half_grid(half: np.ndarray, width: int) -> np.ndarray:
    cells = np.zeros(GRID_SIZE * GRID_SIZE)
    if half.shape[0] == 0:
        return cells
    row_bins = _column_bins(half.shape[0], GRID_SIZE)
    col_bins = _column_bins(width, GRID_SIZE)
    k = 0
    for r0, r1 in row_bins:
        for c0, c1 in col_bins:
            area = (r1 - r0) * (c1 - c0)
            if area > 0:
                cells[k] = half[r0:r1, c0:c1].sum() / area
            k += 1
    return cells


def grid_features(page: PageImage, box: WordBox) -> tuple[np.ndarray, np.ndarray]:
    """4x4 ink-density grids over the upper and lower halves of the box.

    The box is split at the horizontal midline (upper half gets rows
    ``[0, h // 2)``); each half is covered by a 4x4 grid and each cell
    reports its ink density, row-major. Zero-area cells are zero.
    """
    crop = box.crop(page)
    if not crop.any():
        raise DegenerateWordError(f"box {box} contains no ink")
    mid = box.h // 2
    upper = _half_grid(crop[:mid], box.w)
    lower = _half_grid(crop[mid:], box.w)
    return np.clip(upper, 0.0, 1.0), np.clip(lower, 0.0, 1.0)


def extract_descriptor(page: PageImage, box: WordBox) -> np.ndarray:
    """Build the 93-component descriptor for one word box.

    Raises DegenerateWordError when the box has no ink.
    """
    ratio, density, cog_x, cog_y = scalar_features(page, box)
    vertical, top, bottom = projection_features(page, box)
    upper, lower = grid_features(page, box)
    descriptor = np.concatenate(
        [[ratio, density, cog_x, cog_y], vertical, top, bottom, upper, lower]
    )
    assert descriptor.shape == (DESCRIPTOR_SIZE,)
    return np.clip(descriptor, 0.0, 1.0)
