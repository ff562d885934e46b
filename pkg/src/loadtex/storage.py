"""Binary on-disk formats for descriptors and fitted models.

All files are little-endian with a 4-byte magic and a u32 format
version.  Descriptor files ("LODF") store float32 row-major matrices;
model files ("LPCA", "LGMM", "LSVM") store float64 parameters.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import MalformedFile

DESCRIPTOR_MAGIC = b"LODF"
PCA_MAGIC = b"LPCA"
GMM_MAGIC = b"LGMM"
SVM_MAGIC = b"LSVM"
FORMAT_VERSION = 1


def _read_exact(f, n: int) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise MalformedFile("unexpected end of file")
    return data


def _check_header(f, magic: bytes) -> None:
    got = _read_exact(f, 4)
    if got != magic:
        raise MalformedFile(f"bad magic {got!r}, expected {magic!r}")
    (version,) = struct.unpack("<I", _read_exact(f, 4))
    if version != FORMAT_VERSION:
        raise MalformedFile(f"unsupported format version {version}")


def _read_array(f, dtype: str, count: int) -> np.ndarray:
    itemsize = np.dtype(dtype).itemsize
    return np.frombuffer(_read_exact(f, count * itemsize), dtype=dtype).copy()


def write_descriptors(path, descriptors: np.ndarray) -> None:
    """Write an (n, dim) float matrix as an LODF file."""
    arr = np.ascontiguousarray(descriptors, dtype="<f4")
    if arr.ndim != 2:
        raise ValueError("descriptors must be a 2-D array")
    with open(path, "wb") as f:
        f.write(DESCRIPTOR_MAGIC)
        f.write(struct.pack("<IQI", FORMAT_VERSION, arr.shape[0], arr.shape[1]))
        f.write(arr.tobytes())


def read_descriptors(path) -> np.ndarray:
    with open(path, "rb") as f:
        _check_header(f, DESCRIPTOR_MAGIC)
        count, dim = struct.unpack("<QI", _read_exact(f, 12))
        return _read_array(f, "<f4", count * dim).reshape(count, dim)


def write_pca(path, mean: np.ndarray, basis: np.ndarray) -> None:
    mean = np.ascontiguousarray(mean, dtype="<f8")
    basis = np.ascontiguousarray(basis, dtype="<f8")
    d, d_in = basis.shape
    with open(path, "wb") as f:
        f.write(PCA_MAGIC)
        f.write(struct.pack("<III", FORMAT_VERSION, d_in, d))
        f.write(mean.tobytes())
        f.write(basis.tobytes())


def read_pca(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, "rb") as f:
        _check_header(f, PCA_MAGIC)
        d_in, d = struct.unpack("<II", _read_exact(f, 8))
        mean = _read_array(f, "<f8", d_in)
        basis = _read_array(f, "<f8", d * d_in).reshape(d, d_in)
        return mean, basis


def write_gmm(path, priors: np.ndarray, means: np.ndarray,
              sigmas: np.ndarray) -> None:
    k, d = means.shape
    with open(path, "wb") as f:
        f.write(GMM_MAGIC)
        f.write(struct.pack("<III", FORMAT_VERSION, d, k))
        f.write(np.ascontiguousarray(priors, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(means, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(sigmas, dtype="<f8").tobytes())


def read_gmm(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    with open(path, "rb") as f:
        _check_header(f, GMM_MAGIC)
        d, k = struct.unpack("<II", _read_exact(f, 8))
        priors = _read_array(f, "<f8", k)
        means = _read_array(f, "<f8", k * d).reshape(k, d)
        sigmas = _read_array(f, "<f8", k * d).reshape(k, d)
        return priors, means, sigmas


def write_svm(path, weights: np.ndarray, biases: np.ndarray,
              classes: list[str]) -> None:
    """LSVM weight file plus a plain-text sidecar listing class labels."""
    c, fdim = weights.shape
    with open(path, "wb") as f:
        f.write(SVM_MAGIC)
        f.write(struct.pack("<III", FORMAT_VERSION, c, fdim))
        f.write(np.ascontiguousarray(weights, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(biases, dtype="<f8").tobytes())
    with open(str(path) + ".labels", "w", encoding="utf-8") as f:
        for label in classes:
            f.write(label + "\n")


def read_svm(path) -> tuple[np.ndarray, np.ndarray, list[str]]:
    with open(path, "rb") as f:
        _check_header(f, SVM_MAGIC)
        c, fdim = struct.unpack("<II", _read_exact(f, 8))
        weights = _read_array(f, "<f8", c * fdim).reshape(c, fdim)
        biases = _read_array(f, "<f8", c)
    with open(str(path) + ".labels", encoding="utf-8") as f:
        classes = [line.rstrip("\n") for line in f if line.strip()]
    if len(classes) != c:
        raise MalformedFile("label sidecar does not match class count")
    return weights, biases, classes
