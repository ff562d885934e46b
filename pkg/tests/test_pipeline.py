import numpy as np
import pytest

from loadtex import pipeline as pl
from loadtex.errors import (
    EmptyClass,
    InsufficientImages,
    MissingFile,
    ParseError,
)
from loadtex.image import GrayImage, load_image, save_pgm


def write_images(root, names):
    for name in names:
        p = root / name
        p.parent.mkdir(parents=True, exist_ok=True)
        save_pgm(GrayImage(np.full((4, 4), 100.0)), p)


def write_manifest(root, lines):
    p = root / "manifest.txt"
    p.write_text("\n".join(lines) + "\n")
    return p


class TestManifest:
    def test_parse(self, tmp_path):
        write_images(tmp_path, ["a/x.pgm", "a/y.pgm", "b/z.pgm", "b/w.pgm"])
        p = write_manifest(tmp_path, [
            "# comment",
            "a/x.pgm\tA\ts0:train",
            "a/y.pgm\tA\ts0:test",
            "b/z.pgm\tB\ts0:train",
            "b/w.pgm\tB\ts0:test",
        ])
        m = pl.load_manifest(p)
        assert m.classes == ("A", "B")
        assert m.split_names == ("s0",)
        train, test = m.split("s0")
        assert [e.path for e in train] == ["a/x.pgm", "b/z.pgm"]
        assert [e.path for e in test] == ["a/y.pgm", "b/w.pgm"]

    def test_missing_image(self, tmp_path):
        p = write_manifest(tmp_path, ["ghost.pgm\tA\t"])
        with pytest.raises(MissingFile):
            pl.load_manifest(p)

    def test_duplicate_path(self, tmp_path):
        write_images(tmp_path, ["x.pgm"])
        p = write_manifest(tmp_path, ["x.pgm\tA\t", "x.pgm\tB\t"])
        with pytest.raises(ParseError):
            pl.load_manifest(p)

    def test_bad_field_count(self, tmp_path):
        write_images(tmp_path, ["x.pgm"])
        p = write_manifest(tmp_path, ["x.pgm"])
        with pytest.raises(ParseError):
            pl.load_manifest(p)

    def test_empty_class_in_split(self, tmp_path):
        write_images(tmp_path, ["x.pgm", "y.pgm", "z.pgm"])
        p = write_manifest(tmp_path, [
            "x.pgm\tA\ts0:train",
            "y.pgm\tA\ts0:test",
            "z.pgm\tB\ts0:train",  # B never appears in s0:test
        ])
        with pytest.raises(EmptyClass):
            pl.load_manifest(p)

    def test_save_roundtrip(self, tmp_path):
        write_images(tmp_path, ["x.pgm", "y.pgm"])
        p = write_manifest(tmp_path, ["x.pgm\tA\t", "y.pgm\tB\t"])
        m = pl.load_manifest(p)
        out = tmp_path / "copy.txt"
        pl.save_manifest(m, out)
        again = pl.load_manifest(out)
        assert again.entries == m.entries


class TestMakeSplits:
    def make(self, tmp_path, per_class=6):
        names = [f"c{c}/i{i}.pgm" for c in range(2) for i in range(per_class)]
        write_images(tmp_path, names)
        lines = [f"{n}\tc{n[1]}\t" for n in names]
        return pl.load_manifest(write_manifest(tmp_path, lines))

    def test_counts(self, tmp_path):
        m = pl.make_splits(self.make(tmp_path), 4, n_configs=3, seed=0)
        assert m.split_names == ("split0", "split1", "split2")
        for s in m.split_names:
            train, test = m.split(s)
            assert len(train) == 8 and len(test) == 4
            for cls in m.classes:
                assert sum(e.label == cls for e in train) == 4

    def test_deterministic(self, tmp_path):
        base = self.make(tmp_path)
        m1 = pl.make_splits(base, 3, 2, seed=5)
        m2 = pl.make_splits(base, 3, 2, seed=5)
        assert m1.entries == m2.entries

    def test_seed_changes_assignment(self, tmp_path):
        base = self.make(tmp_path)
        m1 = pl.make_splits(base, 3, 4, seed=0)
        m2 = pl.make_splits(base, 3, 4, seed=1)
        assert m1.entries != m2.entries

    def test_too_few_images(self, tmp_path):
        with pytest.raises(InsufficientImages):
            pl.make_splits(self.make(tmp_path, per_class=4), 4, 1)


class TestOutexSuite:
    def test_listing(self, tmp_path):
        images = tmp_path / "images"
        write_images(images, ["000001.pgm", "000002.pgm", "000003.pgm", "000004.pgm"])
        problem = tmp_path / "tc"
        problem.mkdir()
        (problem / "train.txt").write_text(
            "2\n000001.pgm 0\n000002.pgm 1\n")
        (problem / "test.txt").write_text(
            "2\n000003.pgm 0\n000004.pgm 1\n")
        m = pl.load_outex_suite(problem)
        assert m.classes == ("0", "1")
        train, test = m.split("outex")
        assert len(train) == 2 and len(test) == 2

    def test_missing_listing(self, tmp_path):
        with pytest.raises(MissingFile):
            pl.load_outex_suite(tmp_path)


class TestSynth:
    def test_layout_and_split_hygiene(self, tmp_path):
        params = pl.SynthParams(n_classes=2, per_class=4, size=48, n_configs=2)
        m = pl.synth_textures(tmp_path / "d", params)
        assert m.classes == ("class0", "class1")
        assert len(m.entries) == 2 * 4 * 2  # clean + transformed twin
        for s in m.split_names:
            train, test = m.split(s)
            # Training uses clean files only; testing only transformed twins.
            assert all(not e.path.endswith("_t.pgm") for e in train)
            assert all(e.path.endswith("_t.pgm") for e in test)
            # No base index appears on both sides of one split.
            train_ids = {e.path.rsplit(".", 1)[0] for e in train}
            test_ids = {e.path[:-len("_t.pgm")] for e in test}
            assert not train_ids & test_ids

    def test_deterministic_bytes(self, tmp_path):
        params = pl.SynthParams(n_classes=2, per_class=3, size=40, n_configs=1)
        m1 = pl.synth_textures(tmp_path / "one", params)
        m2 = pl.synth_textures(tmp_path / "two", params)
        for e1, e2 in zip(m1.entries, m2.entries):
            assert e1.path == e2.path
            assert m1.full_path(e1).read_bytes() == m2.full_path(e2).read_bytes()

    def test_manifest_loadable(self, tmp_path):
        params = pl.SynthParams(n_classes=2, per_class=4, size=48, n_configs=1)
        pl.synth_textures(tmp_path / "d", params)
        m = pl.load_manifest(tmp_path / "d" / "manifest.txt")
        assert len(m.split_names) == 1


def tiny_config(**overrides):
    from loadtex.descriptor import LoadConfig

    base = dict(
        descriptor=LoadConfig(scales=(1.0, 2.0), patch_radius=4.0),
        step=6,
        pyramid_factors=(1.0,),
        pca_dim=8,
        gmm_components=4,
        vocab_size=2000,
        seed=0,
    )
    base.update(overrides)
    return pl.PipelineConfig(**base)


@pytest.fixture(scope="module")
def tiny_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("synthdata")
    params = pl.SynthParams(n_classes=3, per_class=8, size=56, n_configs=2)
    return pl.synth_textures(root, params)


class TestRunExperiment:
    def test_load_beats_chance(self, tiny_dataset):
        report = pl.run_experiment(tiny_dataset, "load", tiny_config())
        assert report.mean_accuracy > 0.5
        assert report.confusion.sum() == sum(
            len(tiny_dataset.split(s)[1]) for s in tiny_dataset.split_names
        )

    def test_lbp_baseline_runs(self, tiny_dataset):
        report = pl.run_experiment(tiny_dataset, "lbp", tiny_config())
        assert 0.0 <= report.mean_accuracy <= 1.0
        assert report.descriptor == "lbp"

    def test_deterministic_reports(self, tiny_dataset):
        r1 = pl.run_experiment(tiny_dataset, "load", tiny_config())
        r2 = pl.run_experiment(tiny_dataset, "load", tiny_config())
        assert r1.to_csv() == r2.to_csv()

    def test_cache_warm_run_identical(self, tiny_dataset, tmp_path):
        cache = pl.FeatureCache(tmp_path / "cache")
        cfg = tiny_config()
        cold = pl.run_experiment(tiny_dataset, "load", cfg, cache=cache)
        n_files = len(list((tmp_path / "cache" / "desc").iterdir()))
        n_tagged = sum(1 for e in tiny_dataset.entries if e.tags)
        assert n_files == n_tagged
        warm = pl.run_experiment(tiny_dataset, "load", cfg, cache=cache)
        assert warm.to_csv() == cold.to_csv()
        # Cache did not grow on the warm run.
        assert len(list((tmp_path / "cache" / "desc").iterdir())) == n_files

    def test_model_sink_called(self, tiny_dataset):
        captured = []
        pl.run_experiment(
            tiny_dataset, "load", tiny_config(),
            model_sink=lambda s, p, g, m: captured.append((s, p, g, m)),
        )
        assert len(captured) == len(tiny_dataset.split_names)
        assert all(p is not None and g is not None for _, p, g, _ in captured)

    def test_report_csv_shape(self, tiny_dataset):
        report = pl.run_experiment(tiny_dataset, "lbp", tiny_config())
        csv = report.to_csv()
        assert csv.startswith("dataset,synth\n")
        assert "mean_accuracy," in csv
        assert "time[" not in csv  # timing never leaks into the CSV
        assert "time[" in report.to_text()


class TestBenches:
    def test_invariance_rows(self):
        rng = np.random.default_rng(0)
        imgs = [GrayImage(rng.uniform(0, 255, (64, 64))) for _ in range(2)]
        rows = pl.invariance_bench(imgs, step=8)
        by_name = {r.transform: r for r in rows}
        assert by_name["identity"].max_l1 == 0.0
        assert by_name["rotate90"].max_l1 < 1e-3
        assert by_name["affine"].max_l1 < 1e-6
        csv = pl.invariance_csv(rows)
        assert csv.splitlines()[0] == "transform,mean_l1,max_l1"

    def test_throughput_returns_counts(self):
        rate, n = pl.throughput_bench(size=120, pyramid_factors=(1.0,), repeats=1)
        assert rate > 0 and n > 0


class TestCacheResolution:
    def test_explicit_wins(self, tmp_path, monkeypatch):
        monkeypatch.setenv(pl.CACHE_ENV_VAR, str(tmp_path / "env"))
        cfg = tiny_config(cache_dir=str(tmp_path / "explicit"))
        assert pl.resolve_cache_dir(cfg) == tmp_path / "explicit"

    def test_env_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv(pl.CACHE_ENV_VAR, str(tmp_path / "env"))
        assert pl.resolve_cache_dir(tiny_config()) == tmp_path / "env"

    def test_default(self, tmp_path, monkeypatch):
        monkeypatch.delenv(pl.CACHE_ENV_VAR, raising=False)
        assert pl.resolve_cache_dir(tiny_config(), base=tmp_path) == \
            tmp_path / ".loadtex_cache"
