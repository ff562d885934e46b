"""Dataset manifests, split protocols, and end-to-end experiment orchestration.

A manifest is a line-oriented text file next to its images:

    <relative-path>\t<class-label>\t<split-tags comma separated>

Comment lines start with '#'.  A split tag has the form
``<split-name>:train`` or ``<split-name>:test``; one manifest can carry
several independent train/test configurations.
"""

from __future__ import annotations

import hashlib
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import classifier as clf
from .descriptor import (
    DEFAULT_PYRAMID_FACTORS,
    DEFAULT_STEP,
    LoadConfig,
    extract_at_points,
    extract_dense,
)
from .encoder import GmmModel, PcaModel, fisher_encode, gmm_fit, pca_fit, pca_project
from .errors import (
    DegenerateOutput,
    EmptyClass,
    InsufficientImages,
    MissingFile,
    ParseError,
)
from .image import (
    GrayImage,
    affine_intensity,
    dense_grid,
    load_image,
    rotate90,
    rotate90_point,
    save_pgm,
)
from .patterns import PatternConfig, lbp_histogram
from .storage import read_descriptors, write_descriptors

log = logging.getLogger(__name__)

CACHE_ENV_VAR = "LOADTEX_CACHE"


# ---------------------------------------------------------------------------
# Manifests

@dataclass(frozen=True)
class ManifestEntry:
    path: str  # relative to the manifest's root
    label: str
    tags: frozenset[str]


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    root: Path
    entries: tuple[ManifestEntry, ...]

    @property
    def classes(self) -> tuple[str, ...]:
        return tuple(sorted({e.label for e in self.entries}))

    @property
    def split_names(self) -> tuple[str, ...]:
        names = set()
        for e in self.entries:
            for tag in e.tags:
                names.add(tag.split(":", 1)[0])
        return tuple(sorted(names))

    def split(self, name: str) -> tuple[tuple[ManifestEntry, ...], tuple[ManifestEntry, ...]]:
        train = tuple(e for e in self.entries if f"{name}:train" in e.tags)
        test = tuple(e for e in self.entries if f"{name}:test" in e.tags)
        return train, test

    def full_path(self, entry: ManifestEntry) -> Path:
        return self.root / entry.path


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"manifest not found: {path}")
    root = path.parent
    entries: list[ManifestEntry] = []
    seen: dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) not in (2, 3):
                raise ParseError(f"{path}:{lineno}: expected 2 or 3 tab-separated fields")
            rel, label = parts[0], parts[1]
            tags = frozenset(t for t in (parts[2].split(",") if len(parts) == 3 else []) if t)
            if rel in seen:
                raise ParseError(
                    f"{path}:{lineno}: duplicate path {rel!r} "
                    f"(already labeled {seen[rel]!r})"
                )
            seen[rel] = label
            if not (root / rel).is_file():
                raise MissingFile(f"{path}:{lineno}: missing image file {root / rel}")
            entries.append(ManifestEntry(rel, label, tags))
    manifest = DatasetManifest(name=path.stem, root=root, entries=tuple(entries))
    if not manifest.entries:
        raise ParseError(f"{path}: manifest has no entries")
    _validate_splits(manifest)
    return manifest


def _validate_splits(manifest: DatasetManifest) -> None:
    for split in manifest.split_names:
        train, test = manifest.split(split)
        for cls in manifest.classes:
            if not any(e.label == cls for e in train):
                raise EmptyClass(f"class {cls!r} has no train entry in split {split!r}")
            if not any(e.label == cls for e in test):
                raise EmptyClass(f"class {cls!r} has no test entry in split {split!r}")


def save_manifest(manifest: DatasetManifest, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("# <relative-path>\t<class-label>\t<split-tags>\n")
        for e in manifest.entries:
            tags = ",".join(sorted(e.tags))
            f.write(f"{e.path}\t{e.label}\t{tags}\n")


def make_splits(manifest: DatasetManifest, n_train_per_class: int,
                n_configs: int, seed: int = 0) -> DatasetManifest:
    """Create seeded random train/test partitions as named splits.

    Each configuration assigns ``n_train_per_class`` images of every
    class to training and the rest to testing.
    """
    by_class: dict[str, list[int]] = {}
    for i, e in enumerate(manifest.entries):
        by_class.setdefault(e.label, []).append(i)
    for cls, idxs in by_class.items():
        if len(idxs) <= n_train_per_class:
            raise InsufficientImages(
                f"class {cls!r} has {len(idxs)} images, needs > {n_train_per_class}"
            )
    new_tags: list[set[str]] = [set(e.tags) for e in manifest.entries]
    for cfg_i in range(n_configs):
        rng = np.random.default_rng((seed, cfg_i))
        for cls in sorted(by_class):
            idxs = np.array(by_class[cls])
            perm = rng.permutation(len(idxs))
            for j, idx in enumerate(idxs[perm]):
                role = "train" if j < n_train_per_class else "test"
                new_tags[idx].add(f"split{cfg_i}:{role}")
    entries = tuple(
        replace(e, tags=frozenset(tags))
        for e, tags in zip(manifest.entries, new_tags)
    )
    return DatasetManifest(manifest.name, manifest.root, entries)


def load_outex_suite(problem_dir, images_dir=None, name="outex") -> DatasetManifest:
    """Manifest from an Outex-style test-suite directory.

    Expects ``train.txt`` and ``test.txt`` under ``problem_dir`` (first
    line a count, then "<filename> <label>" pairs) with images in a
    sibling ``images`` directory unless ``images_dir`` is given.
    """
    problem_dir = Path(problem_dir)
    images = Path(images_dir) if images_dir else problem_dir.parent / "images"
    entries: list[ManifestEntry] = []
    for role in ("train", "test"):
        listing = problem_dir / f"{role}.txt"
        if not listing.is_file():
            raise MissingFile(f"missing {listing}")
        with open(listing, encoding="utf-8") as f:
            lines = [ln.split() for ln in f if ln.strip()]
        if lines and len(lines[0]) == 1:
            lines = lines[1:]  # leading sample count
        for fname, label in lines:
            rel = os.path.relpath(images / fname, images.parent)
            if not (images.parent / rel).is_file():
                raise MissingFile(f"missing image {images / fname}")
            entries.append(ManifestEntry(rel, label, frozenset({f"{name}:{role}"})))
    manifest = DatasetManifest(name=name, root=images.parent, entries=tuple(entries))
    _validate_splits(manifest)
    return manifest


# ---------------------------------------------------------------------------
# Synthetic texture generator

def _synth_image(rng: np.random.Generator, size: int, frequency: float,
                 noise_sigma: float, noise_amp: float) -> GrayImage:
    """Oriented sinusoid plus low-pass-filtered noise, scaled to [20, 235]."""
    from scipy.ndimage import gaussian_filter

    angle = rng.uniform(-0.12, 0.12)  # small jitter around horizontal stripes
    phase = rng.uniform(0, 2 * np.pi)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    axis = xx * np.cos(angle) + yy * np.sin(angle)
    wave = np.sin(2.0 * np.pi * frequency * axis / size + phase)
    noise = gaussian_filter(rng.standard_normal((size, size)), noise_sigma)
    nstd = noise.std()
    if nstd > 0:
        noise /= nstd
    raw = wave + noise_amp * noise
    lo, hi = raw.min(), raw.max()
    pixels = 20.0 + 215.0 * (raw - lo) / (hi - lo + 1e-12)
    return GrayImage(pixels)


@dataclass(frozen=True)
class SynthParams:
    n_classes: int = 5
    per_class: int = 40
    size: int = 64
    seed: int = 0
    n_configs: int = 5
    n_train_per_class: int | None = None  # default: half of per_class


def synth_textures(out_dir, params: SynthParams = SynthParams()) -> DatasetManifest:
    """Generate a small labeled texture set with rotated, re-lit test images.

    Class identity is carried by the stripe frequency and the noise
    bandwidth.  Every image is written twice: clean, and a transformed
    twin rotated by a random multiple of 90 degrees with a random
    positive intensity map.  Each split trains on clean images and tests
    on the transformed twins of the held-out indices, so test-time
    rotation never leaks into training.
    """
    if params.n_classes > 10:
        raise ValueError("at most 10 synthetic classes")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n_train = params.n_train_per_class or params.per_class // 2
    frequencies = np.linspace(3.0, 17.0, params.n_classes)
    noise_sigmas = np.linspace(0.8, 2.6, params.n_classes)

    entries: list[ManifestEntry] = []
    for c in range(params.n_classes):
        label = f"class{c}"
        (out_dir / label).mkdir(exist_ok=True)
        tags_clean: list[set[str]] = [set() for _ in range(params.per_class)]
        tags_trans: list[set[str]] = [set() for _ in range(params.per_class)]
        for cfg_i in range(params.n_configs):
            srng = np.random.default_rng((params.seed, 7, c, cfg_i))
            perm = srng.permutation(params.per_class)
            for j, idx in enumerate(perm):
                if j < n_train:
                    tags_clean[idx].add(f"split{cfg_i}:train")
                else:
                    tags_trans[idx].add(f"split{cfg_i}:test")
        for i in range(params.per_class):
            rng = np.random.default_rng((params.seed, c, i))
            img = _synth_image(rng, params.size, frequencies[c],
                               noise_sigmas[c], noise_amp=0.9)
            turns = int(rng.integers(1, 4))
            gain = rng.uniform(0.7, 1.4)
            offset = rng.uniform(-20.0, 20.0)
            twin = affine_intensity(rotate90(img, turns), gain, offset)

            rel_clean = f"{label}/img{i:03d}.pgm"
            rel_trans = f"{label}/img{i:03d}_t.pgm"
            save_pgm(img, out_dir / rel_clean)
            save_pgm(twin, out_dir / rel_trans)
            entries.append(ManifestEntry(rel_clean, label, frozenset(tags_clean[i])))
            entries.append(ManifestEntry(rel_trans, label, frozenset(tags_trans[i])))

    manifest = DatasetManifest(name="synth", root=out_dir, entries=tuple(entries))
    save_manifest(manifest, out_dir / "manifest.txt")
    return manifest


# ---------------------------------------------------------------------------
# Pipeline configuration and caching

@dataclass(frozen=True)
class PipelineConfig:
    """Everything the end-to-end experiment needs, with two stock profiles."""

    descriptor: LoadConfig = LoadConfig()
    step: int = DEFAULT_STEP
    pyramid_factors: tuple[float, ...] = DEFAULT_PYRAMID_FACTORS
    pca_dim: int = 100
    gmm_components: int = 256
    vocab_size: int = 100_000
    c_param: float = 10.0
    seed: int = 0
    threads: int = 1
    stratified_vocab: bool = False
    whiten: bool = False
    cache_dir: str | None = None

    def descriptor_key(self, kind: str) -> str:
        d = self.descriptor
        return (
            f"{kind}|scales={','.join(str(s) for s in d.scales)}"
            f"|pr={d.patch_radius}|acs={d.adaptive_orientation}"
            f"|step={self.step}"
            f"|pyr={','.join(f'{f:.6f}' for f in self.pyramid_factors)}"
        )


def desk_profile(**overrides) -> PipelineConfig:
    cfg = PipelineConfig(
        pyramid_factors=(2.0**0.5, 1.0),
        pca_dim=32,
        gmm_components=16,
        vocab_size=10_000,
    )
    return replace(cfg, **overrides)


def paper_profile(**overrides) -> PipelineConfig:
    return replace(PipelineConfig(), **overrides)


PROFILES = {"desk": desk_profile, "paper": paper_profile}


def resolve_cache_dir(config: PipelineConfig, base: Path | None = None) -> Path:
    if config.cache_dir:
        return Path(config.cache_dir)
    env = os.environ.get(CACHE_ENV_VAR)
    if env:
        return Path(env)
    return (base or Path.cwd()) / ".loadtex_cache"


def _atomic_write_descriptors(path: Path, arr: np.ndarray) -> None:
    tmp = path.with_suffix(path.suffix + f".tmp{os.getpid()}")
    write_descriptors(tmp, arr)
    os.replace(tmp, path)


def _file_sha(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


class FeatureCache:
    """Content-addressed store of per-image descriptor (and FV) files."""

    def __init__(self, root: Path):
        self.root = Path(root)
        (self.root / "desc").mkdir(parents=True, exist_ok=True)
        (self.root / "fv").mkdir(parents=True, exist_ok=True)

    def descriptor_key(self, image_path: Path, config_key: str) -> str:
        h = hashlib.sha256()
        h.update(_file_sha(image_path).encode())
        h.update(config_key.encode())
        return h.hexdigest()

    def descriptor_path(self, key: str) -> Path:
        return self.root / "desc" / f"{key}.lodf"

    def fv_path(self, desc_key: str, model_key: str) -> Path:
        h = hashlib.sha256((desc_key + model_key).encode()).hexdigest()
        return self.root / "fv" / f"{h}.lodf"


def _model_key(pca: PcaModel, gmm: GmmModel) -> str:
    h = hashlib.sha256()
    for arr in (pca.mean, pca.basis, gmm.priors, gmm.means, gmm.sigmas):
        h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Feature extraction front-ends

def image_features(img: GrayImage, kind: str, config: PipelineConfig) -> np.ndarray:
    """Per-image descriptor set: dense patch descriptors, or one LBP histogram."""
    if kind == "load":
        return extract_dense(img, config.descriptor, config.step,
                             config.pyramid_factors)
    if kind == "lbp":
        return lbp_histogram(img, PatternConfig())[np.newaxis, :]
    raise ValueError(f"unknown descriptor kind {kind!r}")


def cached_image_features(path: Path, kind: str, config: PipelineConfig,
                          cache: FeatureCache | None) -> np.ndarray:
    if cache is None:
        return image_features(load_image(path), kind, config)
    key = cache.descriptor_key(path, config.descriptor_key(kind))
    cpath = cache.descriptor_path(key)
    if cpath.is_file():
        return read_descriptors(cpath).astype(np.float64)
    feats = image_features(load_image(path), kind, config)
    _atomic_write_descriptors(cpath, feats)
    # Re-read so cached and cold runs see identical float32-rounded values.
    return read_descriptors(cpath).astype(np.float64)


def _extract_all(paths: list[Path], kind: str, config: PipelineConfig,
                 cache: FeatureCache | None) -> list[np.ndarray]:
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            return list(pool.map(
                lambda p: cached_image_features(p, kind, config, cache), paths
            ))
    return [cached_image_features(p, kind, config, cache) for p in paths]


# ---------------------------------------------------------------------------
# Experiment driver

@dataclass
class EvalReport:
    """Aggregated classification results over the manifest's splits."""

    dataset: str
    descriptor: str
    classes: tuple[str, ...]
    split_names: tuple[str, ...]
    accuracies: tuple[float, ...]  # one per split, in [0, 1]
    confusion: np.ndarray  # (c, c) counts summed over splits; rows = true class
    timings: dict = field(default_factory=dict)

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std_accuracy(self) -> float:
        return float(np.std(self.accuracies))

    def to_csv(self) -> str:
        """Deterministic serialization (no timing) used for run comparison."""
        lines = [f"dataset,{self.dataset}", f"descriptor,{self.descriptor}"]
        for name, acc in zip(self.split_names, self.accuracies):
            lines.append(f"accuracy,{name},{acc:.6f}")
        lines.append(f"mean_accuracy,{self.mean_accuracy:.6f}")
        lines.append(f"std_accuracy,{self.std_accuracy:.6f}")
        lines.append("confusion," + ",".join(self.classes))
        for cls, row in zip(self.classes, self.confusion):
            lines.append(f"{cls}," + ",".join(str(int(v)) for v in row))
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        pct = 100.0 * self.mean_accuracy
        spread = 100.0 * self.std_accuracy
        lines = [
            f"dataset: {self.dataset}  descriptor: {self.descriptor}",
            f"accuracy: {pct:.1f}% +/- {spread:.1f}% over {len(self.accuracies)} splits",
            "per-split: " + " ".join(f"{100 * a:.1f}%" for a in self.accuracies),
            "confusion (rows = true):",
        ]
        header = "          " + " ".join(f"{c:>8}" for c in self.classes)
        lines.append(header)
        for cls, row in zip(self.classes, self.confusion):
            lines.append(f"{cls:>9} " + " ".join(f"{int(v):8d}" for v in row))
        for stage, secs in self.timings.items():
            lines.append(f"time[{stage}]: {secs:.2f}s")
        return "\n".join(lines) + "\n"


def _sample_vocab(features: list[np.ndarray], labels: list[str], size: int,
                  rng: np.random.Generator, stratified: bool) -> np.ndarray:
    if stratified:
        per_label: dict[str, list[np.ndarray]] = {}
        for feats, label in zip(features, labels):
            per_label.setdefault(label, []).append(feats)
        share = max(1, size // len(per_label))
        picked = []
        for label in sorted(per_label):
            stack = np.concatenate(per_label[label], axis=0)
            k = min(share, len(stack))
            picked.append(stack[rng.choice(len(stack), size=k, replace=False)])
        return np.concatenate(picked, axis=0)
    stack = np.concatenate(features, axis=0)
    if len(stack) <= size:
        log.warning("vocabulary pool has only %d descriptors (wanted %d)",
                    len(stack), size)
        return stack
    return stack[rng.choice(len(stack), size=size, replace=False)]


def run_experiment(manifest: DatasetManifest, kind: str,
                   config: PipelineConfig,
                   cache: FeatureCache | None = None,
                   model_sink=None) -> EvalReport:
    """Full per-split pipeline and aggregate report.

    ``kind`` selects the descriptor: "load" runs the Fisher-vector
    pipeline (vocabulary sample, PCA, GMM, encode); "lbp" feeds the
    per-image histogram straight into the classifier as the baseline.
    ``model_sink(split_name, pca, gmm, linear_model)`` is called per
    split when given, so callers can persist models.
    """
    splits = manifest.split_names
    if not splits:
        raise ParseError("manifest defines no train/test splits")
    classes = manifest.classes
    cls_index = {c: i for i, c in enumerate(classes)}
    confusion = np.zeros((len(classes), len(classes)), dtype=np.int64)
    accuracies = []
    timings = {"extract": 0.0, "fit": 0.0, "encode": 0.0, "train": 0.0}

    # Extract once up front; every split reuses the same per-image features.
    all_entries = sorted({e for e in manifest.entries if e.tags},
                         key=lambda e: e.path)
    t0 = time.perf_counter()
    paths = [manifest.full_path(e) for e in all_entries]
    feats = _extract_all(paths, kind, config, cache)
    timings["extract"] += time.perf_counter() - t0
    by_path = {e.path: f for e, f in zip(all_entries, feats)}
    key_by_path = {}
    if cache is not None:
        key_by_path = {
            e.path: cache.descriptor_key(manifest.full_path(e),
                                         config.descriptor_key(kind))
            for e in all_entries
        }

    for split_i, split in enumerate(splits):
        train_e, test_e = manifest.split(split)
        if kind == "load":
            t0 = time.perf_counter()
            rng = np.random.default_rng((config.seed, split_i))
            vocab = _sample_vocab([by_path[e.path] for e in train_e],
                                  [e.label for e in train_e],
                                  config.vocab_size, rng,
                                  config.stratified_vocab)
            pca = pca_fit(vocab, config.pca_dim, whiten=config.whiten)
            gmm = gmm_fit(pca_project(pca, vocab), config.gmm_components,
                          seed=config.seed)
            timings["fit"] += time.perf_counter() - t0

            t0 = time.perf_counter()
            mkey = _model_key(pca, gmm)

            def encode(entry):
                if cache is not None:
                    fvp = cache.fv_path(key_by_path[entry.path], mkey)
                    if fvp.is_file():
                        return read_descriptors(fvp)[0].astype(np.float64)
                fv = fisher_encode(gmm, pca_project(pca, by_path[entry.path]))
                if cache is not None:
                    _atomic_write_descriptors(fvp, fv[np.newaxis, :])
                    return read_descriptors(fvp)[0].astype(np.float64)
                return fv

            x_train = np.stack([encode(e) for e in train_e])
            x_test = np.stack([encode(e) for e in test_e])
            timings["encode"] += time.perf_counter() - t0
        else:
            pca = gmm = None
            x_train = np.stack([by_path[e.path][0] for e in train_e])
            x_test = np.stack([by_path[e.path][0] for e in test_e])

        t0 = time.perf_counter()
        model = clf.train(x_train, [e.label for e in train_e],
                          c_param=config.c_param, seed=config.seed)
        timings["train"] += time.perf_counter() - t0

        predictions = clf.predict_batch(model, x_test)
        hits = 0
        for entry, pred in zip(test_e, predictions):
            confusion[cls_index[entry.label], cls_index[pred]] += 1
            hits += pred == entry.label
        accuracies.append(hits / len(test_e))
        if model_sink is not None:
            model_sink(split, pca, gmm, model)

    return EvalReport(
        dataset=manifest.name, descriptor=kind, classes=classes,
        split_names=splits, accuracies=tuple(accuracies),
        confusion=confusion, timings=timings,
    )


# ---------------------------------------------------------------------------
# Invariance and throughput benchmarks

@dataclass(frozen=True)
class InvarianceRow:
    transform: str
    mean_l1: float
    max_l1: float


def invariance_bench(images: list[GrayImage],
                     cfg: LoadConfig = LoadConfig(),
                     step: int = DEFAULT_STEP,
                     affine_gain: float = 1.8,
                     affine_offset: float = -25.0) -> list[InvarianceRow]:
    """Mean descriptor drift under exact transforms, matched per grid point.

    For each image, dense descriptors (single pyramid level) of the
    original are compared entry by entry against descriptors of the
    identity, 90-degree-rotated, and intensity-remapped variants at the
    corresponding grid locations.
    """
    if not images:
        raise ValueError("at least one image is required")
    dists: dict[str, list[float]] = {"identity": [], "rotate90": [], "affine": []}
    margin = cfg.margin
    for img in images:
        grid = dense_grid(img, step, margin)
        pts = grid.points
        base = extract_at_points(img, pts, cfg)

        same = extract_at_points(img, pts, cfg)
        dists["identity"].extend(np.abs(base - same).sum(axis=1))

        rot = rotate90(img, 1)
        rpts = np.array([
            rotate90_point(x, y, img.width, img.height, 1) for x, y in pts
        ], dtype=np.int64)
        rdesc = extract_at_points(rot, rpts, cfg)
        dists["rotate90"].extend(np.abs(base - rdesc).sum(axis=1))

        lit = affine_intensity(img, affine_gain, affine_offset)
        ldesc = extract_at_points(lit, pts, cfg)
        dists["affine"].extend(np.abs(base - ldesc).sum(axis=1))
    return [
        InvarianceRow(name, float(np.mean(vals)), float(np.max(vals)))
        for name, vals in dists.items()
    ]


def invariance_csv(rows: list[InvarianceRow]) -> str:
    lines = ["transform,mean_l1,max_l1"]
    lines += [f"{r.transform},{r.mean_l1:.9g},{r.max_l1:.9g}" for r in rows]
    return "\n".join(lines) + "\n"


def throughput_bench(cfg: LoadConfig = LoadConfig(),
                     step: int = DEFAULT_STEP,
                     pyramid_factors: tuple[float, ...] = DEFAULT_PYRAMID_FACTORS,
                     size: int = 300, seed: int = 0,
                     repeats: int = 3) -> tuple[float, int]:
    """Single-threaded dense-extraction rate on a synthetic image.

    Returns (descriptors_per_second, descriptors_per_image).  The first
    extraction is run outside the timed region to exclude JIT warm-up.
    """
    rng = np.random.default_rng(seed)
    img = GrayImage(rng.uniform(0.0, 255.0, size=(size, size)))
    desc = extract_dense(img, cfg, step, pyramid_factors)  # warm-up
    n = len(desc)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        extract_dense(img, cfg, step, pyramid_factors)
        best = min(best, time.perf_counter() - t0)
    return n / best, n
