import numpy as np
import pytest

from loadtex import image as im
from loadtex.errors import (
    DegenerateOutput,
    MalformedFile,
    OutOfBounds,
    UnsupportedFormat,
)


def make_pgm(width, height, values, maxval=255):
    return f"P5\n{width} {height}\n{maxval}\n".encode() + bytes(values)


class TestDecode:
    def test_minimal_pgm(self):
        img = im.decode_image(make_pgm(2, 2, [0, 255, 128, 64]))
        assert img.width == 2 and img.height == 2
        assert img.pixels.ravel().tolist() == [0.0, 255.0, 128.0, 64.0]

    def test_pgm_comments_and_whitespace(self):
        data = b"P5 # comment\n# another\n 2\t1 255\n" + bytes([7, 9])
        img = im.decode_image(data)
        assert img.pixels.ravel().tolist() == [7.0, 9.0]

    def test_truncated_raster(self):
        with pytest.raises(MalformedFile):
            im.decode_image(make_pgm(4, 4, [1, 2, 3]))

    def test_truncated_header(self):
        with pytest.raises(MalformedFile):
            im.decode_image(b"P5\n3 3")

    def test_sixteen_bit_rejected(self):
        with pytest.raises(UnsupportedFormat):
            im.decode_image(b"P5\n1 1\n65535\n\x00\x00")

    def test_ascii_pgm_rejected(self):
        with pytest.raises(UnsupportedFormat):
            im.decode_image(b"P2\n1 1\n255\n0\n")

    def test_garbage_rejected(self):
        with pytest.raises(UnsupportedFormat):
            im.decode_image(b"\x00\x01not an image")

    def test_png_gray_roundtrip(self, tmp_path):
        from PIL import Image

        arr = np.arange(12, dtype=np.uint8).reshape(3, 4)
        p = tmp_path / "g.png"
        Image.fromarray(arr, mode="L").save(p)
        img = im.load_image(p)
        assert np.array_equal(img.pixels, arr.astype(np.float64))

    def test_png_rgb_luma(self, tmp_path):
        from PIL import Image

        rgb = np.zeros((1, 2, 3), dtype=np.uint8)
        rgb[0, 0] = (255, 255, 255)
        rgb[0, 1] = (255, 0, 0)
        p = tmp_path / "c.png"
        Image.fromarray(rgb, mode="RGB").save(p)
        img = im.load_image(p)
        assert img.pixels[0, 0] == pytest.approx(255.0)
        assert img.pixels[0, 1] == pytest.approx(76.245)

    def test_pgm_encode_roundtrip(self):
        img = im.decode_image(make_pgm(3, 2, range(6)))
        again = im.decode_image(im.encode_pgm(img))
        assert np.array_equal(img.pixels, again.pixels)


class TestBilinear:
    def setup_method(self):
        rng = np.random.default_rng(0)
        self.img = im.GrayImage(rng.uniform(0, 255, (8, 10)))

    def test_lattice_identity(self):
        assert im.sample_bilinear(self.img, 3, 5) == self.img.pixels[5, 3]

    def test_midpoint(self):
        img = im.GrayImage(np.array([[0.0, 0.0], [100.0, 100.0]]))
        assert im.sample_bilinear(img, 0.5, 0.5) == pytest.approx(50.0)

    def test_1d_lerp(self):
        img = im.GrayImage(np.array([[0.0, 100.0]]))
        assert im.sample_bilinear(img, 0.25, 0) == pytest.approx(25.0)

    def test_out_of_bounds(self):
        with pytest.raises(OutOfBounds):
            im.sample_bilinear(self.img, -0.1, 0)
        with pytest.raises(OutOfBounds):
            im.sample_bilinear(self.img, 0, 7.01)

    def test_edge_corner_ok(self):
        assert im.sample_bilinear(self.img, 9.0, 7.0) == self.img.pixels[7, 9]


class TestRescale:
    def test_identity_factor(self):
        img = im.GrayImage(np.random.default_rng(1).uniform(0, 255, (20, 30)))
        assert im.rescale(img, 1.0).pixels is img.pixels

    def test_half_sqrt2(self):
        img = im.GrayImage(np.zeros((100, 100)))
        out = im.rescale(img, 2 ** -0.5)
        assert (out.width, out.height) == (71, 71)

    def test_too_small(self):
        img = im.GrayImage(np.zeros((16, 16)))
        with pytest.raises(DegenerateOutput):
            im.rescale(img, 0.25, min_dim=40)

    def test_upscale_preserves_range(self):
        img = im.GrayImage(np.random.default_rng(2).uniform(10, 20, (9, 9)))
        out = im.rescale(img, 1.7)
        assert out.pixels.min() >= 10 and out.pixels.max() <= 20


class TestRotate90:
    def test_zero_turns(self):
        img = im.GrayImage(np.arange(6.0).reshape(2, 3))
        assert im.rotate90(img, 0) is img

    def test_two_turns_reverses(self):
        img = im.GrayImage(np.array([[1.0, 2.0]]))
        out = im.rotate90(img, 2)
        assert out.pixels.ravel().tolist() == [2.0, 1.0]

    def test_four_turns_identity(self):
        img = im.GrayImage(np.random.default_rng(3).uniform(0, 255, (5, 7)))
        out = img
        for _ in range(4):
            out = im.rotate90(out, 1)
        assert np.array_equal(out.pixels, img.pixels)

    def test_point_map_matches_pixels(self):
        img = im.GrayImage(np.random.default_rng(4).uniform(0, 255, (4, 6)))
        for k in range(4):
            rot = im.rotate90(img, k)
            for y in range(img.height):
                for x in range(img.width):
                    rx, ry = im.rotate90_point(x, y, img.width, img.height, k)
                    assert rot.pixels[int(ry), int(rx)] == img.pixels[y, x]


class TestAffine:
    def test_identity(self):
        img = im.GrayImage(np.arange(4.0).reshape(2, 2))
        out = im.affine_intensity(img, 1.0, 0.0)
        assert np.array_equal(out.pixels, img.pixels)

    def test_arithmetic(self):
        img = im.GrayImage(np.array([[5.0]]))
        assert im.affine_intensity(img, 2.0, 10.0).pixels[0, 0] == 20.0

    def test_order_preserved(self):
        rng = np.random.default_rng(5)
        img = im.GrayImage(rng.uniform(0, 255, (6, 6)))
        out = im.affine_intensity(img, 2.5, -40.0)
        a, b = img.pixels.ravel(), out.pixels.ravel()
        for i in range(len(a) - 1):
            assert np.sign(a[i] - a[i + 1]) == np.sign(b[i] - b[i + 1])

    def test_negative_gain_rejected(self):
        img = im.GrayImage(np.zeros((2, 2)))
        with pytest.raises(ValueError):
            im.affine_intensity(img, -1.0, 0.0)


class TestDenseGrid:
    def test_reference_count(self):
        img = im.GrayImage(np.zeros((100, 100)))
        grid = im.dense_grid(img, step=4, margin=20)
        assert len(grid) == 256
        assert len(grid.points) == 256

    def test_step_equals_width(self):
        img = im.GrayImage(np.zeros((50, 50)))
        grid = im.dense_grid(img, step=50, margin=10)
        assert len(grid.xs) == 1 and len(grid.ys) == 1

    def test_margin_too_large(self):
        img = im.GrayImage(np.zeros((100, 100)))
        with pytest.raises(DegenerateOutput):
            im.dense_grid(img, step=4, margin=51)

    def test_points_row_major(self):
        img = im.GrayImage(np.zeros((30, 30)))
        grid = im.dense_grid(img, step=10, margin=5)
        pts = grid.points
        assert pts[0].tolist() == [5, 5]
        assert pts[1].tolist() == [15, 5]  # x varies fastest
