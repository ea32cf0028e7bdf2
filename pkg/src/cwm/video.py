"""Frames, patch grids, token sets and masks.

A clip is 2-3 RGB frames in [0,1] tiled by non-overlapping patches.
Tokens are addressed by (frame, row, col); a Mask is the set of visible
token indices, its complement is the prediction target.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np
from PIL import Image

FILL_VALUE = 0.5  # mid-gray for tokens with unknown content


class TokenIndex(NamedTuple):
    frame: int
    row: int
    col: int


@dataclass(frozen=True)
class VideoClip:
    """2-3 RGB frames with patch geometry. frames: (F, H, W, 3) float32."""

    frames: np.ndarray
    delta_ms: float = 150.0
    patch_h: int = 8
    patch_w: int = 8

    def __post_init__(self):
        f = np.asarray(self.frames, dtype=np.float32)
        object.__setattr__(self, "frames", f)
        if f.ndim != 4 or f.shape[-1] != 3:
            raise ValueError(f"frames must be (F, H, W, 3), got {f.shape}")
        if not 2 <= f.shape[0] <= 3:
            raise ValueError(f"frame count must be 2 or 3, got {f.shape[0]}")
        if f.shape[1] % self.patch_h or f.shape[2] % self.patch_w:
            raise ValueError("frame size not divisible by patch size")
        if f.min() < 0.0 or f.max() > 1.0:
            raise ValueError("pixel values outside [0,1]")

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    @property
    def grid_rows(self) -> int:
        return self.height // self.patch_h

    @property
    def grid_cols(self) -> int:
        return self.width // self.patch_w

    @property
    def tokens_per_frame(self) -> int:
        return self.grid_rows * self.grid_cols

    def all_indices(self, frame: int) -> list[TokenIndex]:
        return [TokenIndex(frame, r, c)
                for r in range(self.grid_rows) for c in range(self.grid_cols)]


@dataclass(frozen=True)
class Mask:
    """Visible token index set over a (n_frames, rows, cols) grid."""

    visible: frozenset[TokenIndex]
    n_frames: int
    grid_rows: int
    grid_cols: int

    def __post_init__(self):
        object.__setattr__(self, "visible", frozenset(self.visible))
        for t in self.visible:
            if not (0 <= t.frame < self.n_frames
                    and 0 <= t.row < self.grid_rows
                    and 0 <= t.col < self.grid_cols):
                raise ValueError(f"token index out of bounds: {t}")

    def frame_visible(self, frame: int) -> frozenset[TokenIndex]:
        return frozenset(t for t in self.visible if t.frame == frame)

    def hidden(self) -> frozenset[TokenIndex]:
        full = {TokenIndex(f, r, c)
                for f in range(self.n_frames)
                for r in range(self.grid_rows)
                for c in range(self.grid_cols)}
        return frozenset(full - self.visible)


@dataclass
class TokenSet:
    """Positionally-indexed patch values: list of (TokenIndex, block)."""

    entries: list[tuple[TokenIndex, np.ndarray]] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for idx, _ in self.entries:
            if idx in seen:
                raise ValueError(f"duplicate token index {idx}")
            seen.add(idx)

    def __len__(self) -> int:
        return len(self.entries)

    def indices(self) -> list[TokenIndex]:
        return [idx for idx, _ in self.entries]

    def as_dict(self) -> dict[TokenIndex, np.ndarray]:
        return dict(self.entries)


def patchify(clip: VideoClip) -> TokenSet:
    """Split every frame into its full set of patch tokens (lossless)."""
    ph, pw = clip.patch_h, clip.patch_w
    entries = []
    for f in range(clip.n_frames):
        for r in range(clip.grid_rows):
            for c in range(clip.grid_cols):
                block = clip.frames[f, r * ph:(r + 1) * ph, c * pw:(c + 1) * pw]
                entries.append((TokenIndex(f, r, c), block.copy()))
    return TokenSet(entries)


def assemble(tokens: TokenSet, frame: int, height: int, width: int,
             patch_h: int = 8, patch_w: int = 8,
             fill: float = FILL_VALUE) -> np.ndarray:
    """Place a frame's tokens on a grid; missing tokens become `fill`."""
    out = np.full((height, width, 3), fill, dtype=np.float32)
    rows, cols = height // patch_h, width // patch_w
    for idx, block in tokens.entries:
        if idx.frame != frame:
            continue
        if not (0 <= idx.row < rows and 0 <= idx.col < cols):
            raise ValueError(f"token index out of bounds: {idx}")
        if block.shape != (patch_h, patch_w, 3):
            raise ValueError(f"bad block shape {block.shape} at {idx}")
        out[idx.row * patch_h:(idx.row + 1) * patch_h,
            idx.col * patch_w:(idx.col + 1) * patch_w] = block
    return out


def assemble_clip(tokens: TokenSet, clip: VideoClip,
                  fill: float = FILL_VALUE) -> np.ndarray:
    """Assemble all frames of `clip`'s geometry from `tokens`."""
    return np.stack([
        assemble(tokens, f, clip.height, clip.width,
                 clip.patch_h, clip.patch_w, fill)
        for f in range(clip.n_frames)])


def apply_mask(clip: VideoClip, mask: Mask) -> tuple[TokenSet, TokenSet]:
    """Partition the clip's tokens into (visible, hidden) per the mask."""
    if mask.n_frames != clip.n_frames:
        raise ValueError("mask frame count does not match clip")
    if (mask.grid_rows, mask.grid_cols) != (clip.grid_rows, clip.grid_cols):
        raise ValueError("mask grid does not match clip")
    full = patchify(clip)
    vis, hid = [], []
    for idx, block in full.entries:
        (vis if idx in mask.visible else hid).append((idx, block))
    return TokenSet(vis), TokenSet(hid)


def load_png(path) -> np.ndarray:
    """8-bit sRGB PNG -> float32 (H, W, 3) in [0,1] via /255."""
    img = Image.open(path).convert("RGB")
    return np.asarray(img, dtype=np.float32) / 255.0


def save_png(frame: np.ndarray, path) -> None:
    arr = np.clip(np.asarray(frame) * 255.0 + 0.5, 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="RGB").save(path)
