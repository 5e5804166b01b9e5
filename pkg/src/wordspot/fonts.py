"""A hand-drawn 5x7 lowercase bitmap font for rendering synthetic pages.

Each glyph is a single 8-connected blob (no detached dots), so a rendered
letter never splits into multiple components during segmentation. Baseline
sits below row 5; row 6 is the descender row.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

GLYPH_WIDTH = 5
GLYPH_HEIGHT = 7

GLYPHS: dict[str, tuple[str, ...]] = {
    "a": (".....", ".###.", "....#", ".####", "#...#", ".####", "....."),
    "b": ("#....", "#....", "####.", "#...#", "#...#", "####.", "....."),
    "c": (".....", ".####", "#....", "#....", "#....", ".####", "....."),
    "d": ("....#", "....#", ".####", "#...#", "#...#", ".####", "....."),
    "e": (".....", ".###.", "#...#", "#####", "#....", ".####", "....."),
    "f": ("..###", ".#...", "####.", ".#...", ".#...", ".#...", "....."),
    "g": (".....", ".####", "#...#", ".####", "....#", "....#", ".###."),
    "h": ("#....", "#....", "####.", "#...#", "#...#", "#...#", "....."),
    "i": (".....", ".##..", "..#..", "..#..", "..#..", ".###.", "....."),
    "j": (".....", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."),
    "k": ("#....", "#...#", "#..#.", "###..", "#..#.", "#...#", "....."),
    "l": (".#...", ".#...", ".#...", ".#...", ".#...", "..##.", "....."),
    "m": (".....", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "....."),
    "n": (".....", "####.", "#...#", "#...#", "#...#", "#...#", "....."),
    "o": (".....", ".###.", "#...#", "#...#", "#...#", ".###.", "....."),
    "p": (".....", "####.", "#...#", "####.", "#....", "#....", "#...."),
    "q": (".....", ".####", "#...#", ".####", "....#", "....#", "....#"),
    "r": (".....", "#.##.", "##..#", "#....", "#....", "#....", "....."),
    "s": (".....", ".####", "#....", ".###.", "....#", "####.", "....."),
    "t": (".#...", ".#...", "####.", ".#...", ".#...", "..###", "....."),
    "u": (".....", "#...#", "#...#", "#...#", "#...#", ".###.", "....."),
    "v": (".....", "#...#", "#...#", "#...#", ".#.#.", "..#..", "....."),
    "w": (".....", "#...#", "#...#", "#.#.#", "#.#.#", ".#.#.", "....."),
    "x": (".....", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "....."),
    "y": (".....", "#...#", "#...#", ".####", "....#", "....#", ".###."),
    "z": (".....", "#####", "...#.", "..#..", ".#...", "#####", "....."),
}


@lru_cache(maxsize=None)
def glyph_array(ch: str) -> np.ndarray:
    if ch not in GLYPHS:
        raise KeyError(f"no glyph for character {ch!r}")
    rows = GLYPHS[ch]
    return np.array([[c == "#" for c in row] for row in rows], dtype=bool)


def _letter_bitmap(ch: str, scale: int, bold: bool, dy: int, height: int) -> np.ndarray:
    letter = np.kron(glyph_array(ch), np.ones((scale, scale), dtype=bool))
    if bold:
        widened = np.zeros((letter.shape[0], letter.shape[1] + 1), dtype=bool)
        widened[:, :-1] = letter
        widened[:, 1:] |= letter
        letter = widened
    framed = np.zeros((height, letter.shape[1]), dtype=bool)
    framed[dy : dy + letter.shape[0]] = letter
    return framed


def render_word(
    word: str,
    scale: int = 2,
    bold: bool | tuple[bool, ...] = False,
    spacing: int = 2,
    jitter: tuple[int, ...] | None = None,
) -> np.ndarray:
    """Render a lowercase word as a tight boolean ink canvas.

    Letters are kerned: each glyph is placed so that its closest row-wise
    ink gap to the previous letter is exactly ``spacing`` pixels, which
    keeps inter-letter gaps below the segmentation smear threshold no
    matter which letter shapes face each other. ``jitter`` gives per-letter
    downward offsets; ``bold`` widens ink runs by one pixel and may vary
    per letter.
    """
    if not word:
        raise ValueError("cannot render an empty word")
    if scale < 1 or spacing < 1:
        raise ValueError("scale must be >= 1 and spacing >= 1")
    offsets = jitter if jitter is not None else (0,) * len(word)
    if len(offsets) != len(word):
        raise ValueError("jitter length must match word length")
    weights = bold if isinstance(bold, tuple) else (bold,) * len(word)
    if len(weights) != len(word):
        raise ValueError("bold flag count must match word length")

    height = GLYPH_HEIGHT * scale + max(offsets)
    letters = [
        _letter_bitmap(ch, scale, b, dy, height)
        for ch, b, dy in zip(word, weights, offsets)
    ]

    width_bound = sum(letter.shape[1] + spacing for letter in letters)
    canvas = np.zeros((height, width_bound), dtype=bool)
    canvas[:, : letters[0].shape[1]] = letters[0]

    def right_profile(bitmap: np.ndarray, origin: int) -> np.ndarray:
        has_ink = bitmap.any(axis=1)
        last = bitmap.shape[1] - 1 - np.argmax(bitmap[:, ::-1], axis=1)
        return np.where(has_ink, origin + last, -np.inf)

    right = right_profile(letters[0], 0)
    for letter in letters[1:]:
        has_ink = letter.any(axis=1)
        left = np.where(has_ink, np.argmax(letter, axis=1), np.inf)
        kern = np.max(right - left)
        if not np.isfinite(kern):
            kern = np.max(right[np.isfinite(right)])
        x = max(int(kern) + 1 + spacing, 0)
        canvas[:, x : x + letter.shape[1]] |= letter
        right = np.maximum(right, right_profile(letter, x))

    ink_cols = np.nonzero(canvas.any(axis=0))[0]
    ink_rows = np.nonzero(canvas.any(axis=1))[0]
    return canvas[ink_rows[0] : ink_rows[-1] + 1, ink_cols[0] : ink_cols[-1] + 1]
