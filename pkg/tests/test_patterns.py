import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from loadtex import image as im
from loadtex import patterns as pat
from loadtex.errors import ConfigError


class TestSignThreshold:
    def test_zero_is_one(self):
        assert pat.sign_threshold(0.0) == 1

    def test_small_negative(self):
        assert pat.sign_threshold(-0.0001) == 0

    def test_positive(self):
        assert pat.sign_threshold(5.0) == 1


class TestTransitions:
    def test_constant(self):
        assert pat.transitions(0b00000000) == 0
        assert pat.transitions(0b11111111) == 0

    def test_known_uniform(self):
        assert pat.transitions(0b00001110) == 2
        assert pat.transitions(0b11000011) == 2

    def test_alternating(self):
        assert pat.transitions(0b01010101) == 8

    def test_known_non_uniform(self):
        assert pat.transitions(0b00100100) == 4
        assert pat.transitions(0b01001110) == 4

    @given(st.integers(0, 255))
    def test_always_even(self, code):
        assert pat.transitions(code) % 2 == 0

    @given(st.integers(0, 255), st.integers(0, 7))
    def test_rotation_invariant(self, code, k):
        rotated = ((code << k) | (code >> (8 - k))) & 0xFF
        assert pat.transitions(code) == pat.transitions(rotated)


class TestUniformTable:
    def test_exactly_58_uniform(self):
        below = [c for c in range(256) if pat.uniform_index(c) < 58]
        assert len(below) == 58
        assert all(pat.transitions(c) <= 2 for c in below)

    def test_uniform_bins_distinct(self):
        bins = [pat.uniform_index(c) for c in range(256) if pat.transitions(c) <= 2]
        assert sorted(bins) == list(range(58))

    def test_catch_all(self):
        assert pat.uniform_index(0b01001110) == 58
        assert pat.uniform_index(0b00100100) == 58

    def test_known_uniform_mapped_low(self):
        assert pat.uniform_index(0b11000011) < 58

    def test_stable(self):
        assert np.array_equal(pat.build_uniform_table(), pat.UNIFORM_TABLE)


class TestLbpCode:
    def test_constant_image(self):
        img = im.GrayImage(np.full((5, 5), 42.0))
        assert pat.lbp_code(img, (2, 2)) == 0b11111111

    def test_bright_center(self):
        px = np.zeros((5, 5))
        px[2, 2] = 200.0
        assert pat.lbp_code(im.GrayImage(px), (2, 2)) == 0

    def test_step_edge(self):
        # Left half dark, right half bright; center on the dark side.
        px = np.zeros((5, 5))
        px[:, 3:] = 255.0
        code = pat.lbp_code(im.GrayImage(px), (2, 2))
        # Neighbors facing right (p = 0, 1, 7) see the bright half; the
        # rest see dark pixels equal to the center (sign(0) = 1).
        for p in range(8):
            assert (code >> p) & 1 == 1

    def test_step_edge_center_above_background(self):
        px = np.full((5, 5), 10.0)
        px[:, 3:] = 255.0
        px[2, 2] = 11.0
        code = pat.lbp_code(im.GrayImage(px), (2, 2))
        right_facing = {0, 1, 7}
        for p in range(8):
            assert ((code >> p) & 1 == 1) == (p in right_facing)

    def test_affine_invariance_bitwise(self):
        rng = np.random.default_rng(0)
        img = im.GrayImage(rng.uniform(0, 255, (16, 16)))
        lit = im.affine_intensity(img, 3.0, 7.0)
        for xy in [(3, 3), (8, 5), (10, 12)]:
            assert pat.lbp_code(img, xy) == pat.lbp_code(lit, xy)

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            pat.PatternConfig(P=3)
        with pytest.raises(ConfigError):
            pat.PatternConfig(R=0)


class TestLbpHistogram:
    def test_constant_image(self):
        img = im.GrayImage(np.full((10, 10), 7.0))
        hist = pat.lbp_histogram(img)
        assert hist[pat.uniform_index(0b11111111)] == pytest.approx(1.0)
        assert hist.sum() == pytest.approx(1.0)

    def test_sums_to_one(self):
        rng = np.random.default_rng(1)
        img = im.GrayImage(rng.uniform(0, 255, (32, 32)))
        assert pat.lbp_histogram(img).sum() == pytest.approx(1.0)

    def test_affine_invariance_exact(self):
        rng = np.random.default_rng(2)
        img = im.GrayImage(rng.uniform(0, 255, (32, 32)))
        lit = im.affine_intensity(img, 3.0, 7.0)
        assert np.array_equal(pat.lbp_histogram(img), pat.lbp_histogram(lit))

    def test_dense_matches_scalar_path(self):
        rng = np.random.default_rng(3)
        img = im.GrayImage(rng.uniform(0, 255, (9, 9)))
        codes = pat._lbp_codes_dense(img, pat.PatternConfig())
        for y in range(1, 8):
            for x in range(1, 8):
                assert codes[y - 1, x - 1] == pat.lbp_code(img, (x, y))

    def test_p_not_8_rejected(self):
        img = im.GrayImage(np.zeros((10, 10)))
        with pytest.raises(ConfigError):
            pat.lbp_histogram(img, pat.PatternConfig(P=12, R=2))
