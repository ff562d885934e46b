import numpy as np
import pytest

from loadtex import storage
from loadtex.errors import MalformedFile


class TestDescriptors:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(0)
        d = rng.uniform(0, 1, (17, 236)).astype(np.float32)
        p = tmp_path / "d.lodf"
        storage.write_descriptors(p, d)
        out = storage.read_descriptors(p)
        assert out.dtype == np.float32
        assert np.array_equal(out, d)

    def test_empty_matrix(self, tmp_path):
        p = tmp_path / "e.lodf"
        storage.write_descriptors(p, np.zeros((0, 59), dtype=np.float32))
        out = storage.read_descriptors(p)
        assert out.shape == (0, 59)

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "bad"
        p.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(MalformedFile):
            storage.read_descriptors(p)

    def test_truncated(self, tmp_path):
        p = tmp_path / "d.lodf"
        storage.write_descriptors(p, np.ones((4, 8), dtype=np.float32))
        data = p.read_bytes()
        p.write_bytes(data[:-6])
        with pytest.raises(MalformedFile):
            storage.read_descriptors(p)

    def test_wrong_version(self, tmp_path):
        p = tmp_path / "d.lodf"
        storage.write_descriptors(p, np.ones((1, 1), dtype=np.float32))
        data = bytearray(p.read_bytes())
        data[4] = 99
        p.write_bytes(bytes(data))
        with pytest.raises(MalformedFile):
            storage.read_descriptors(p)


class TestModels:
    def test_pca_roundtrip(self, tmp_path):
        rng = np.random.default_rng(1)
        mean = rng.standard_normal(12)
        basis = rng.standard_normal((4, 12))
        p = tmp_path / "m.lpca"
        storage.write_pca(p, mean, basis)
        m2, b2 = storage.read_pca(p)
        assert np.array_equal(m2, mean)
        assert np.array_equal(b2, basis)

    def test_gmm_roundtrip(self, tmp_path):
        rng = np.random.default_rng(2)
        priors = np.full(3, 1 / 3)
        means = rng.standard_normal((3, 5))
        sigmas = rng.uniform(0.5, 2.0, (3, 5))
        p = tmp_path / "m.lgmm"
        storage.write_gmm(p, priors, means, sigmas)
        p2, m2, s2 = storage.read_gmm(p)
        assert np.array_equal(p2, priors)
        assert np.array_equal(m2, means)
        assert np.array_equal(s2, sigmas)

    def test_svm_label_mismatch(self, tmp_path):
        p = tmp_path / "m.lsvm"
        storage.write_svm(p, np.zeros((2, 3)), np.zeros(2), ["a", "b"])
        (tmp_path / "m.lsvm.labels").write_text("a\n")
        with pytest.raises(MalformedFile):
            storage.read_svm(p)

    def test_cross_format_rejected(self, tmp_path):
        p = tmp_path / "m.lpca"
        storage.write_pca(p, np.zeros(2), np.zeros((1, 2)))
        with pytest.raises(MalformedFile):
            storage.read_gmm(p)
