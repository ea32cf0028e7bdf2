"""Predictor geometry, differentiability, training and checkpoint IO."""

import numpy as np
import pytest

from cwm.masking import MaskingPolicy, RngState, sample_mask
from cwm.model import (CheckpointError, LearnedPredictor, PredictorConfig,
                       StubLayeredWarp, StubTranslate, clip_tokens,
                       init_params, load_checkpoint, load_predictor,
                       mask_positions, masked_loss, predict_clip,
                       save_checkpoint, tokens_to_frames, train)
from cwm.video import Mask, TokenIndex, VideoClip

RNG = np.random.Generator(np.random.PCG64(21))

SMALL = PredictorConfig(frame_size=32, patch=8, embed_dim=32, enc_layers=1,
                        dec_layers=1, heads=2)


def random_clip(size=32, patch=8):
    frames = RNG.integers(0, 256, size=(2, size, size, 3)) / 255.0
    return VideoClip(frames.astype(np.float32), patch_h=patch, patch_w=patch)


def full_frame0_mask(config, extra=()):
    g = config.grid
    vis = {TokenIndex(0, r, c) for r in range(g) for c in range(g)} | set(extra)
    return Mask(frozenset(vis), config.n_frames, g, g)


class TestGeometry:
    def test_clip_tokens_round_trip(self):
        clip = random_clip(64)
        cfg = PredictorConfig()
        toks = clip_tokens(clip)
        assert toks.shape == (cfg.seq_len, cfg.patch_dim)
        back = tokens_to_frames(toks, cfg)
        assert back.tobytes() == clip.frames.tobytes()

    def test_config_validation(self):
        with pytest.raises(ValueError):
            PredictorConfig(embed_dim=30, heads=4)
        with pytest.raises(ValueError):
            PredictorConfig(conditioning="imu")


class TestPredict:
    def test_untrained_prediction_is_midgray(self):
        # output head starts at zero weights with bias 0.5
        pred = LearnedPredictor(SMALL, init_params(SMALL, seed=0))
        clip = random_clip()
        out = predict_clip(pred, clip, full_frame0_mask(SMALL))
        hidden_frame = out[1]
        assert np.all(hidden_frame == 0.5)

    def test_keep_visible_copies_tokens(self):
        pred = LearnedPredictor(SMALL, init_params(SMALL, seed=0))
        clip = random_clip()
        out = predict_clip(pred, clip, full_frame0_mask(SMALL))
        assert out[0].tobytes() == clip.frames[0].tobytes()

    def test_gradient_matches_fd(self):
        # d sum(prediction) / d input pixels vs central differences
        params = {k: v + RNG.normal(0, 0.01, v.shape).astype(np.float32)
                  for k, v in init_params(SMALL, seed=1).items()}
        pred = LearnedPredictor(SMALL, params)
        clip = random_clip()
        tokens = clip_tokens(clip)
        vis = mask_positions(full_frame0_mask(SMALL))

        def token_sum(t, out_tok):
            out = pred.predict_full_batch(t[None], vis[None],
                                          keep_visible=False)
            return float(out[0, out_tok].astype(np.float64).sum())

        # JVP with one-hot tangents doubles as the analytic gradient probe;
        # each probe reads one output token so float32 summation noise stays
        # far below the FD signal
        flat = tokens.reshape(-1)
        probes = RNG.choice(flat.size, size=50, replace=False)
        out_toks = RNG.integers(0, SMALL.seq_len, size=50)
        eps = 1e-2
        for pos, out_tok in zip(probes, out_toks):
            tang = np.zeros_like(tokens)
            tang.reshape(-1)[pos] = 1.0
            jvp = float(pred.jvp_full_batch(
                tokens[None], vis[None], tang[None],
                keep_visible=False)[0, out_tok].astype(np.float64).sum())
            tp, tm = flat.copy(), flat.copy()
            tp[pos] += eps
            tm[pos] -= eps
            fd = (token_sum(tp.reshape(tokens.shape), out_tok)
                  - token_sum(tm.reshape(tokens.shape), out_tok)) / (2 * eps)
            assert abs(jvp - fd) <= 1e-3 * max(abs(fd), abs(jvp), 1.0)

    def test_conditioning_required_and_rejected(self):
        cond_cfg = PredictorConfig(frame_size=32, patch=8, embed_dim=32,
                                   enc_layers=1, dec_layers=1, heads=2,
                                   conditioning="head_motion")
        pred = LearnedPredictor(cond_cfg, init_params(cond_cfg, seed=0))
        clip = random_clip()
        toks = clip_tokens(clip)[None]
        vis = mask_positions(full_frame0_mask(cond_cfg))[None]
        with pytest.raises(ValueError):
            pred.predict_full_batch(toks, vis)  # missing cond
        out = pred.predict_full_batch(toks, vis, cond=(0.5, -1.0))
        assert out.shape == toks.shape
        plain = LearnedPredictor(SMALL, init_params(SMALL, seed=0))
        with pytest.raises(ValueError):
            plain.predict_full_batch(toks, vis, cond=(0.5, -1.0))


class TestStubs:
    def test_translate_moves_tokens(self):
        cfg = SMALL
        stub = StubTranslate(cfg, (1, 0))
        clip = random_clip()
        out = predict_clip(stub, clip, full_frame0_mask(cfg))
        # frame1 row r equals frame0 row r-8 (one patch down)
        assert np.array_equal(out[1][8:], clip.frames[0][:-8])
        assert np.all(out[1][:8] == 0.5)

    def test_layered_warp_jacobian_closed_form(self):
        cfg = SMALL
        g = cfg.grid
        seg = np.zeros((g, g), np.int64)
        seg[1:3, 1:3] = 1
        stub = StubLayeredWarp(cfg, seg, {0: (0, 0), 1: (1, 1)},
                               {0: 2.0, 1: 1.0})
        clip = random_clip()
        tokens = clip_tokens(clip)[None]
        vis = mask_positions(full_frame0_mask(cfg))[None]
        G = cfg.tokens_per_frame
        wf = stub.warp_field()
        for (r, c), dst in wf.items():
            tang = np.zeros_like(tokens)
            tang[0, r * g + c] = 1.0
            tan = stub.jvp_full_batch(tokens, vis, tang, keep_visible=False)
            col = tan[0, G:2 * G]
            if dst is None:
                assert np.all(col == 0.0)
            else:
                hot = dst[0] * g + dst[1]
                assert np.all(col[hot] == 1.0)
                assert np.all(np.delete(col, hot, axis=0) == 0.0)


class TestTraining:
    def _clips(self, n=4):
        return [random_clip() for _ in range(n)]

    def test_initial_loss_matches_data_variance(self):
        clips = self._clips()
        policy = MaskingPolicy("tmp", 0.99)
        _, curve = train(SMALL, policy, clips, steps=1, seed=3, lr=1e-3)
        var = np.mean([(c.frames - 0.5) ** 2 for c in clips])
        # step-0 prediction is constant 0.5 -> loss = E[(x-0.5)^2]
        assert curve[0] == pytest.approx(var, rel=0.15)

    def test_deterministic_curve(self):
        clips = self._clips()
        policy = MaskingPolicy("tmp", 0.99)
        _, c1 = train(SMALL, policy, clips, steps=5, seed=9, lr=1e-3)
        _, c2 = train(SMALL, policy, clips, steps=5, seed=9, lr=1e-3)
        assert c1 == c2

    def test_policy_arity_checked(self):
        with pytest.raises(ValueError):
            train(SMALL, MaskingPolicy("ext", 0.99), self._clips(), steps=1,
                  seed=0)

    def test_head_motion_requires_conds(self):
        cfg = PredictorConfig(frame_size=32, patch=8, embed_dim=32,
                              enc_layers=1, dec_layers=1, heads=2,
                              conditioning="head_motion")
        with pytest.raises(ValueError):
            train(cfg, MaskingPolicy("tmp", 0.99), self._clips(), steps=1,
                  seed=0)


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        params = init_params(SMALL, seed=4)
        path = tmp_path / "m.cwmc"
        save_checkpoint(params, SMALL, path)
        cfg, loaded = load_checkpoint(path)
        assert cfg == SMALL
        assert sorted(loaded) == sorted(params)
        for k in params:
            assert loaded[k].tobytes() == params[k].tobytes()

    def test_wrong_magic_rejected(self, tmp_path):
        path = tmp_path / "m.cwmc"
        save_checkpoint(init_params(SMALL, seed=0), SMALL, path)
        raw = bytearray(path.read_bytes())
        raw[:4] = b"NOPE"
        path.write_bytes(bytes(raw))
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_corruption_detected(self, tmp_path):
        path = tmp_path / "m.cwmc"
        save_checkpoint(init_params(SMALL, seed=0), SMALL, path)
        raw = bytearray(path.read_bytes())
        raw[len(raw) // 2] ^= 0xFF
        path.write_bytes(bytes(raw))
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_truncation_detected(self, tmp_path):
        path = tmp_path / "m.cwmc"
        save_checkpoint(init_params(SMALL, seed=0), SMALL, path)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_geometry_mismatch_rejected(self, tmp_path):
        path = tmp_path / "m.cwmc"
        save_checkpoint(init_params(SMALL, seed=0), SMALL, path)
        other = PredictorConfig(frame_size=64, patch=8, embed_dim=32,
                                enc_layers=1, dec_layers=1, heads=2)
        with pytest.raises(CheckpointError):
            load_checkpoint(path, expect_config=other)

    def test_load_predictor_predicts_identically(self, tmp_path):
        params = init_params(SMALL, seed=5)
        path = tmp_path / "m.cwmc"
        save_checkpoint(params, SMALL, path)
        a = LearnedPredictor(SMALL, params)
        b = load_predictor(path)
        clip = random_clip()
        mask = full_frame0_mask(SMALL)
        assert predict_clip(a, clip, mask).tobytes() == \
            predict_clip(b, clip, mask).tobytes()


class TestMaskedLoss:
    def test_perfect_prediction_zero(self):
        cfg = SMALL
        # a clip whose frame1 equals frame0 shifted exactly like the stub
        f0 = RNG.integers(0, 256, size=(32, 32, 3)) / 255.0
        f1 = np.full_like(f0, 0.5)
        f1[8:] = f0[:-8]
        clip = VideoClip(np.stack([f0, f1]).astype(np.float32),
                         patch_h=8, patch_w=8)
        stub = StubTranslate(cfg, (1, 0))
        assert masked_loss(stub, clip, full_frame0_mask(cfg)) == 0.0

    def test_wrong_shift_positive(self):
        cfg = SMALL
        clip = random_clip()
        stub = StubTranslate(cfg, (1, 0))
        assert masked_loss(stub, clip, full_frame0_mask(cfg)) > 0.0
