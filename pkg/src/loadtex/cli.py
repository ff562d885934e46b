"""Command-line entry point.

Subcommands cover every pipeline stage:

    synth    generate a synthetic labeled texture set
    extract  dense descriptors for every manifest image -> LODF files
    fit      vocabulary sample + PCA + GMM -> LPCA / LGMM files
    encode   Fisher vectors for every manifest image
    train    one-vs-all linear model from encoded features -> LSVM file
    eval     end-to-end experiment over the manifest's splits
    bench    invariance and throughput measurements

Exit codes: 0 success, 1 stage failure, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import classifier as clf
from . import pipeline as pl
from . import storage
from .descriptor import LoadConfig, extract_dense
from .encoder import GmmModel, PcaModel, fisher_encode, gmm_fit, pca_fit, pca_project
from .errors import LoadTexError
from .image import load_image

log = logging.getLogger("loadtex")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def _load_config_file(path: str) -> dict[str, str]:
    values = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise LoadTexError(f"config line without '=': {line!r}")
            key, val = line.split("=", 1)
            values[key.strip()] = val.strip()
    return values


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--profile", choices=sorted(pl.PROFILES), default="paper",
                        help="parameter profile (default: %(default)s)")
    parser.add_argument("--config", metavar="FILE",
                        help="key=value file; explicit flags win on conflict")
    parser.add_argument("--scales", type=_parse_floats, default=None,
                        metavar="S1,S2,...",
                        help="descriptor ring radii (default: 1,2,3,4)")
    parser.add_argument("--patch-radius", type=float, default=None,
                        help="circular patch radius in pixels (default: 15)")
    parser.add_argument("--step", type=int, default=None,
                        help="dense sampling step in pixels (default: 4)")
    parser.add_argument("--pyramid-factors", type=_parse_floats, default=None,
                        metavar="F1,F2,...",
                        help="image rescale factors (default: 2^(-i/2), i=-1..4)")
    parser.add_argument("--pca-dim", type=int, default=None,
                        help="kept principal components (default: 100)")
    parser.add_argument("--gmm-components", type=int, default=None,
                        help="mixture size (default: 256)")
    parser.add_argument("--vocab-size", type=int, default=None,
                        help="descriptors sampled for the vocabulary (default: 100000)")
    parser.add_argument("--c-param", type=float, default=None,
                        help="classifier regularization trade-off (default: 10)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for per-image stages")
    parser.add_argument("--cache-dir", default=None,
                        help=f"feature cache directory (or ${pl.CACHE_ENV_VAR})")
    parser.add_argument("--no-cache", action="store_true",
                        help="disable the on-disk feature cache")


def _build_config(args) -> pl.PipelineConfig:
    cfg = pl.PROFILES[args.profile]()
    if args.config:
        file_vals = _load_config_file(args.config)
        casts = {
            "scales": _parse_floats, "patch_radius": float, "step": int,
            "pyramid_factors": _parse_floats, "pca_dim": int,
            "gmm_components": int, "vocab_size": int, "c_param": float,
            "seed": int, "threads": int, "cache_dir": str,
        }
        for key, raw in file_vals.items():
            if key not in casts:
                raise LoadTexError(f"unknown config key {key!r}")
            if getattr(args, key, None) is None:
                setattr(args, key, casts[key](raw))
    desc = cfg.descriptor
    if args.scales is not None or args.patch_radius is not None:
        desc = LoadConfig(
            scales=args.scales if args.scales is not None else desc.scales,
            patch_radius=args.patch_radius
            if args.patch_radius is not None else desc.patch_radius,
        )
    updates = {"descriptor": desc, "seed": args.seed, "threads": args.threads}
    for field_name in ("step", "pyramid_factors", "pca_dim", "gmm_components",
                       "vocab_size", "c_param", "cache_dir"):
        val = getattr(args, field_name)
        if val is not None:
            updates[field_name] = val
    return replace(cfg, **updates)


def _cache_for(args, config: pl.PipelineConfig, base: Path) -> pl.FeatureCache | None:
    if args.no_cache:
        return None
    return pl.FeatureCache(pl.resolve_cache_dir(config, base))


def _descriptor_paths(manifest: pl.DatasetManifest, out_dir: Path) -> dict[str, Path]:
    return {
        e.path: out_dir / (e.path.replace("/", "__") + ".lodf")
        for e in manifest.entries
    }


def cmd_synth(args) -> int:
    params = pl.SynthParams(
        n_classes=args.classes, per_class=args.per_class, size=args.size,
        seed=args.seed, n_configs=args.configs,
    )
    manifest = pl.synth_textures(args.out, params)
    print(f"wrote {len(manifest.entries)} images under {args.out}")
    print(f"manifest: {Path(args.out) / 'manifest.txt'}")
    return EXIT_OK


def cmd_extract(args) -> int:
    config = _build_config(args)
    manifest = pl.load_manifest(args.manifest)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = _descriptor_paths(manifest, out_dir)
    failures = 0
    for entry in manifest.entries:
        t0 = time.perf_counter()
        try:
            feats = pl.image_features(load_image(manifest.full_path(entry)),
                                      args.kind, config)
        except (LoadTexError, OSError) as exc:
            print(f"extract failed for {entry.path}: {exc}", file=sys.stderr)
            failures += 1
            continue
        storage.write_descriptors(paths[entry.path], feats)
        print(f"{entry.path}: {len(feats)} descriptors "
              f"in {time.perf_counter() - t0:.2f}s", file=sys.stderr)
    if failures:
        print(f"{failures} image(s) failed", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def _split_train_descriptors(manifest, args, out_dir):
    paths = _descriptor_paths(manifest, out_dir)
    split = args.split or (manifest.split_names[0] if manifest.split_names else None)
    if split:
        train_e, _ = manifest.split(split)
    else:
        train_e = manifest.entries
    feats, labels = [], []
    for e in train_e:
        feats.append(storage.read_descriptors(paths[e.path]).astype(np.float64))
        labels.append(e.label)
    return feats, labels


def cmd_fit(args) -> int:
    config = _build_config(args)
    manifest = pl.load_manifest(args.manifest)
    feats, labels = _split_train_descriptors(manifest, args, Path(args.descriptors))
    if config.pca_dim > feats[0].shape[1]:
        print(f"pca dim {config.pca_dim} exceeds descriptor dim "
              f"{feats[0].shape[1]}", file=sys.stderr)
        return EXIT_USAGE
    rng = np.random.default_rng((config.seed, 0))
    vocab = pl._sample_vocab(feats, labels, config.vocab_size, rng,
                             config.stratified_vocab)
    pca = pca_fit(vocab, config.pca_dim, whiten=config.whiten)
    gmm = gmm_fit(pca_project(pca, vocab), config.gmm_components,
                  seed=config.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    storage.write_pca(out / "model.lpca", pca.mean, pca.basis)
    storage.write_gmm(out / "model.lgmm", gmm.priors, gmm.means, gmm.sigmas)
    print(f"final EM log-likelihood: {gmm.log_likelihoods[-1]:.3f}",
          file=sys.stderr)
    print(f"models written to {out}")
    return EXIT_OK


def _read_models(model_dir: Path) -> tuple[PcaModel, GmmModel]:
    mean, basis = storage.read_pca(model_dir / "model.lpca")
    priors, means, sigmas = storage.read_gmm(model_dir / "model.lgmm")
    return PcaModel(mean, basis), GmmModel(priors, means, sigmas)


def cmd_encode(args) -> int:
    manifest = pl.load_manifest(args.manifest)
    pca, gmm = _read_models(Path(args.models))
    desc_dir = Path(args.descriptors)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    dpaths = _descriptor_paths(manifest, desc_dir)
    fpaths = _descriptor_paths(manifest, out_dir)
    for entry in manifest.entries:
        desc = storage.read_descriptors(dpaths[entry.path]).astype(np.float64)
        fv = fisher_encode(gmm, pca_project(pca, desc))
        storage.write_descriptors(fpaths[entry.path], fv[np.newaxis, :])
    print(f"encoded {len(manifest.entries)} images to {out_dir}")
    return EXIT_OK


def cmd_train(args) -> int:
    config = _build_config(args)
    manifest = pl.load_manifest(args.manifest)
    split = args.split or (manifest.split_names[0] if manifest.split_names else None)
    if split is None:
        print("manifest has no splits; nothing to train on", file=sys.stderr)
        return EXIT_USAGE
    train_e, _ = manifest.split(split)
    fpaths = _descriptor_paths(manifest, Path(args.features))
    x = np.stack([
        storage.read_descriptors(fpaths[e.path])[0].astype(np.float64)
        for e in train_e
    ])
    model = clf.train(x, [e.label for e in train_e],
                      c_param=config.c_param, seed=config.seed)
    storage.write_svm(args.out, model.weights, model.biases, list(model.classes))
    print(f"model written to {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    config = _build_config(args)
    manifest = pl.load_manifest(args.manifest)
    cache = _cache_for(args, config, manifest.root)

    sink = None
    if args.model_out:
        model_dir = Path(args.model_out)
        model_dir.mkdir(parents=True, exist_ok=True)

        def sink(split, pca, gmm, linear):
            if pca is not None:
                storage.write_pca(model_dir / f"{split}.lpca", pca.mean, pca.basis)
                storage.write_gmm(model_dir / f"{split}.lgmm", gmm.priors,
                                  gmm.means, gmm.sigmas)
            storage.write_svm(model_dir / f"{split}.lsvm", linear.weights,
                              linear.biases, list(linear.classes))

    report = pl.run_experiment(manifest, args.kind, config, cache=cache,
                               model_sink=sink)
    print(report.to_text(), end="")
    if args.report:
        with open(args.report, "w", encoding="utf-8") as f:
            f.write(report.to_csv())
        print(f"report written to {args.report}", file=sys.stderr)
    return EXIT_OK


def cmd_bench(args) -> int:
    config = _build_config(args)
    if args.mode in ("throughput", "both"):
        rate, per_image = pl.throughput_bench(
            config.descriptor, config.step, config.pyramid_factors,
            seed=config.seed,
        )
        print(f"throughput: {rate:.0f} descriptors/s "
              f"({per_image} per 300x300 image, single-threaded)")
    if args.mode in ("invariance", "both"):
        if args.images:
            images = [load_image(p) for p in args.images]
        else:
            rng = np.random.default_rng(config.seed)
            from .image import GrayImage
            images = [GrayImage(rng.uniform(0, 255, size=(64, 64)))
                      for _ in range(5)]
        rows = pl.invariance_bench(images, config.descriptor, config.step)
        csv = pl.invariance_csv(rows)
        print(csv, end="")
        if args.out:
            with open(args.out, "w", encoding="utf-8") as f:
                f.write(csv)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loadtex",
        description="Regional texture descriptors, Fisher-vector encoding, "
                    "and linear classification over image datasets.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic texture dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--per-class", type=int, default=40)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--configs", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="dense descriptors for manifest images")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=("load", "lbp"), default="load")
    _add_common(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("fit", help="fit PCA and GMM from train descriptors")
    p.add_argument("--manifest", required=True)
    p.add_argument("--descriptors", required=True,
                   help="directory written by 'extract'")
    p.add_argument("--out", required=True)
    p.add_argument("--split", default=None,
                   help="split whose train half feeds the vocabulary")
    _add_common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("encode", help="Fisher vectors for manifest images")
    p.add_argument("--manifest", required=True)
    p.add_argument("--descriptors", required=True)
    p.add_argument("--models", required=True, help="directory written by 'fit'")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("train", help="train the one-vs-all linear model")
    p.add_argument("--manifest", required=True)
    p.add_argument("--features", required=True, help="directory written by 'encode'")
    p.add_argument("--out", required=True)
    p.add_argument("--split", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="run the full experiment over all splits")
    p.add_argument("--manifest", required=True)
    p.add_argument("--kind", choices=("load", "lbp"), default="load")
    p.add_argument("--report", default=None, help="write the CSV report here")
    p.add_argument("--model-out", default=None,
                   help="directory for per-split model files")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="throughput and invariance benchmarks")
    p.add_argument("--mode", choices=("throughput", "invariance", "both"),
                   default="both")
    p.add_argument("--images", nargs="*", default=None)
    p.add_argument("--out", default=None, help="invariance CSV output path")
    _add_common(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except LoadTexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
