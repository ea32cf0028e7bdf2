"""Policy cardinalities, determinism, uniformity, and orientation."""

import numpy as np
import pytest

from cwm.masking import (KINDS, MaskingPolicy, RngState, format_policy,
                         orientation, parse_policy, sample_mask,
                         visible_count)

ALL_POLICIES = [
    MaskingPolicy("uniform", p=0.75),
    MaskingPolicy("tmp", p=0.99),
    MaskingPolicy("fractional", p=0.99, q=0.25),
    MaskingPolicy("fb", p=0.99),
    MaskingPolicy("ext", p=0.99),
    MaskingPolicy("int", p=0.99),
    MaskingPolicy("intext", p=0.99),
]


class TestVisibleCount:
    def test_round_half_up(self):
        # (1-0.75)*64 = 16 exactly; (1-0.99)*64 = 0.64 -> floor first, 1
        assert visible_count(0.75, 64) == 16
        assert visible_count(0.99, 64) == 1
        assert visible_count(1.0, 64) == 1   # max(1, .) floor
        assert visible_count(0.0, 64) == 64
        # half-up: (1-0.5)*5 = 2.5 -> 3
        assert visible_count(0.5, 5) == 3


class TestCardinality:
    @pytest.mark.parametrize("policy", ALL_POLICIES,
                             ids=[p.kind for p in ALL_POLICIES])
    def test_exact_cardinalities(self, policy):
        rng = RngState(11)
        n = 64
        for _ in range(20):
            m = sample_mask(policy, policy.arity, 8, 8, rng)
            counts = [len(m.frame_visible(f)) for f in range(policy.arity)]
            full, sparse = n, visible_count(policy.p, n)
            if policy.kind == "uniform":
                assert counts == [sparse, sparse]
            elif policy.kind == "tmp":
                assert counts == [full, sparse]
            elif policy.kind == "fractional":
                assert counts == [visible_count(policy.q, n), sparse]
            elif policy.kind == "fb":
                assert sorted(counts) == [sparse, full]
            elif policy.kind == "ext":
                assert counts == [full, full, sparse]
            elif policy.kind == "int":
                assert counts == [full, sparse, full]
            elif policy.kind == "intext":
                assert sorted(counts) == [sparse, full, full]

    def test_tmp_99_reveals_one_of_64(self):
        m = sample_mask(MaskingPolicy("tmp", 0.99), 2, 8, 8, RngState(0))
        assert len(m.frame_visible(0)) == 64
        assert len(m.frame_visible(1)) == 1

    def test_uniform_75_reveals_16(self):
        m = sample_mask(MaskingPolicy("uniform", 0.75), 2, 8, 8, RngState(0))
        assert len(m.frame_visible(0)) == 16
        assert len(m.frame_visible(1)) == 16


class TestDeterminism:
    @pytest.mark.parametrize("policy", ALL_POLICIES,
                             ids=[p.kind for p in ALL_POLICIES])
    def test_same_seed_same_mask(self, policy):
        seq_a = [sample_mask(policy, policy.arity, 8, 8, RngState(99))
                 for _ in range(5)]
        seq_b = [sample_mask(policy, policy.arity, 8, 8, RngState(99))
                 for _ in range(5)]
        # RngState is stateful across draws; re-seeding reproduces the run
        rng = RngState(99)
        seq_c = [sample_mask(policy, policy.arity, 8, 8, rng) for _ in range(5)]
        assert seq_a == seq_b
        assert seq_a[0] == seq_c[0]

    def test_splitmix_reference_values(self):
        # splitmix64 of seed 0: published first outputs
        rng = RngState(0)
        assert rng.next_u64() == 0xE220A8397B1DCDAF
        assert rng.next_u64() == 0x6E789E6AA1B965F4


class TestUniformity:
    def test_uniform_frequency(self):
        # each token visible with prob 0.25 +- 0.01 over 1e5 draws
        policy = MaskingPolicy("uniform", 0.75)
        rng = RngState(5)
        counts = np.zeros(64)
        draws = 100_000
        for _ in range(draws):
            perm = rng.permutation(64)[:16]
            counts[perm] += 1
        freq = counts / draws
        assert np.all(np.abs(freq - 0.25) <= 0.01)

    def test_fb_orientation_frequency(self):
        policy = MaskingPolicy("fb", 0.99)
        rng = RngState(3)
        fwd = sum(orientation(sample_mask(policy, 2, 8, 8, rng)) == "forward"
                  for _ in range(10_000))
        assert abs(fwd / 10_000 - 0.5) <= 0.02


class TestOrientation:
    def test_forward_backward_interpolate(self):
        t0 = {(0, r, c) for r in range(8) for c in range(8)}
        t1 = {(1, r, c) for r in range(8) for c in range(8)}
        t2 = {(2, r, c) for r in range(8) for c in range(8)}
        from cwm.video import Mask, TokenIndex

        def mk(vis, n):
            return Mask(frozenset(TokenIndex(*t) for t in vis), n, 8, 8)

        assert orientation(mk(t0 | {(1, 0, 0)}, 2)) == "forward"
        assert orientation(mk(t1 | {(0, 0, 0)}, 2)) == "backward"
        assert orientation(mk(t0 | t2 | {(1, 0, 0)}, 3)) == "interpolate"
        assert orientation(mk(t0 | t1 | {(2, 0, 0)}, 3)) == "extrapolate"
        with pytest.raises(ValueError):
            orientation(mk(t0 | t1, 2))


class TestPolicyStrings:
    @pytest.mark.parametrize("text", [
        "tmp:p=0.99", "uniform:p=0.75", "fractional:q=0.25,p=0.99",
        "fb:p=0.99", "intext:p=0.99", "ext:p=0.99", "int:p=0.99"])
    def test_round_trip(self, text):
        assert format_policy(parse_policy(text)) == text

    def test_bad_strings_rejected(self):
        with pytest.raises(ValueError):
            parse_policy("bogus:p=0.5")
        with pytest.raises(ValueError):
            parse_policy("tmp:p=1.5")

    def test_arity_mismatch_rejected(self):
        with pytest.raises(ValueError):
            sample_mask(MaskingPolicy("ext", 0.99), 2, 8, 8, RngState(0))
