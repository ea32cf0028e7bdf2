"""Patch tokenization, masks, and PNG round-trips."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cwm.video import (FILL_VALUE, Mask, TokenIndex, TokenSet, VideoClip,
                       apply_mask, assemble, load_png, patchify, save_png)

RNG = np.random.Generator(np.random.PCG64(7))


def random_clip(h=64, w=64, n=2, patch=8):
    # quantized to the 8-bit grid so PNG round-trips are exact
    frames = RNG.integers(0, 256, size=(n, h, w, 3)).astype(np.float32) / 255.0
    return VideoClip(frames, patch_h=patch, patch_w=patch)


class TestVideoClip:
    def test_invariants_enforced(self):
        with pytest.raises(ValueError):
            VideoClip(np.zeros((2, 63, 64, 3), np.float32), patch_h=8, patch_w=8)
        with pytest.raises(ValueError):
            VideoClip(np.zeros((1, 64, 64, 3), np.float32), patch_h=8, patch_w=8)
        with pytest.raises(ValueError):
            VideoClip(np.full((2, 64, 64, 3), 1.5, np.float32),
                      patch_h=8, patch_w=8)

    def test_grid_properties(self):
        clip = random_clip()
        assert clip.grid_rows == 8 and clip.grid_cols == 8
        assert clip.tokens_per_frame == 64


class TestPatchify:
    def test_round_trip_bit_exact(self):
        clip = random_clip()
        toks = patchify(clip)
        for f in range(2):
            frame = assemble(toks, f, 64, 64, 8, 8)
            assert frame.tobytes() == clip.frames[f].tobytes()

    def test_round_trip_rect_frame(self):
        clip = random_clip(h=32, w=64, patch=8)
        toks = patchify(clip)
        frame = assemble(toks, 1, 32, 64, 8, 8)
        assert frame.tobytes() == clip.frames[1].tobytes()

    def test_fill_for_missing_tokens(self):
        clip = random_clip()
        toks = patchify(clip)
        frame0_only = TokenSet([e for e in toks.entries if e[0].frame == 0])
        frame = assemble(frame0_only, 1, 64, 64, 8, 8)
        assert np.all(frame == FILL_VALUE)

    def test_duplicate_token_rejected(self):
        blk = np.zeros((8, 8, 3), np.float32)
        with pytest.raises(ValueError):
            TokenSet([(TokenIndex(0, 0, 0), blk), (TokenIndex(0, 0, 0), blk)])


class TestMask:
    def _full(self):
        return frozenset(TokenIndex(f, r, c)
                         for f in range(2) for r in range(8) for c in range(8))

    def test_all_visible_hidden_empty(self):
        m = Mask(self._full(), 2, 8, 8)
        assert m.hidden() == frozenset()

    def test_none_visible(self):
        m = Mask(frozenset(), 2, 8, 8)
        assert len(m.hidden()) == 128

    def test_one_visible_63_hidden(self):
        m = Mask(frozenset({TokenIndex(0, 0, 0)}), 1, 8, 8)
        assert len(m.hidden()) == 63

    def test_out_of_bounds_rejected(self):
        with pytest.raises(ValueError):
            Mask(frozenset({TokenIndex(2, 0, 0)}), 2, 8, 8)

    @given(st.sets(st.tuples(st.integers(0, 1), st.integers(0, 7),
                             st.integers(0, 7)), max_size=128))
    @settings(max_examples=50, deadline=None)
    def test_partition_property(self, vis):
        m = Mask(frozenset(TokenIndex(*t) for t in vis), 2, 8, 8)
        assert m.visible | m.hidden() == self._full()
        assert m.visible & m.hidden() == frozenset()

    def test_apply_mask_partition(self):
        clip = random_clip()
        m = Mask(frozenset({TokenIndex(0, r, c)
                            for r in range(8) for c in range(8)}), 2, 8, 8)
        vis, hid = apply_mask(clip, m)
        assert set(vis.indices()) == set(m.visible)
        assert set(hid.indices()) == set(m.hidden())


class TestPng:
    def test_round_trip(self, tmp_path):
        clip = random_clip()
        p = tmp_path / "f.png"
        save_png(clip.frames[0], p)
        back = load_png(p)
        assert back.tobytes() == clip.frames[0].tobytes()
