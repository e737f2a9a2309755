"""Command-line entry points for the experiment harness."""

import argparse
import dataclasses
import sys
from pathlib import Path

from . import harness
from .harness import (ExperimentManifest, default_dim_manifest,
                      default_efficiency_manifest, default_grid_manifest,
                      derive_seed, generate_synthetic)
from .io import save_dataset_csv


def _add_common(parser):
    parser.add_argument("--out-dir", default="artifacts",
                        help="directory for CSV/JSON outputs")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the master seed")


def _add_manifest(parser):
    parser.add_argument("--manifest", default=None,
                        help="JSON manifest; defaults are used if omitted")
    parser.add_argument("--workers", type=int, default=1,
                        help="parallel cells (1 = run inline)")


def _load_manifest(args, factory, kind):
    if args.manifest:
        manifest = ExperimentManifest.load(args.manifest)
        if manifest.kind != kind:
            raise SystemExit(
                f"manifest kind {manifest.kind!r} does not match "
                f"subcommand ({kind!r})"
            )
    else:
        manifest = factory()
    if args.seed is not None:
        manifest = dataclasses.replace(manifest, master_seed=args.seed)
    return manifest


def _run_chain_grid(args, factory, kind) -> int:
    manifest = _load_manifest(args, factory, kind)
    path, n_failed = harness.run_manifest(manifest, args.out_dir,
                                          workers=args.workers)
    print(f"wrote {path} ({n_failed} failed cells)")
    return 1 if n_failed else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="kinkhmc",
        description="Leapfrog HMC experiments on kinked posteriors",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-data",
                       help="write the synthetic cosine dataset as CSV")
    _add_common(p)
    p.add_argument("--n", type=int, default=100)

    for name, help_text in [
        ("run-grid", "acceptance grid over step sizes and step counts"),
        ("efficiency-sweep", "fixed-travel-time efficiency sweep"),
        ("dim-sweep", "acceptance across architectures"),
    ]:
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        _add_manifest(p)

    p = sub.add_parser("error-order",
                       help="local and global energy-error order fits")
    _add_common(p)

    p = sub.add_parser("crossing-stats",
                       help="crossing-offset window fractions on the 1-D kink")
    _add_common(p)

    p = sub.add_parser("proxy-scaling",
                       help="dimension scaling on the product kink target")
    _add_common(p)

    p = sub.add_parser("tuning-curves",
                       help="acceptance/efficiency curves and optima")
    _add_common(p)

    args = parser.parse_args(argv)
    out_dir = Path(args.out_dir)

    if args.command == "generate-data":
        seed = args.seed if args.seed is not None else 1
        data = generate_synthetic(args.n, derive_seed(seed, "data"))
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / "dataset.csv"
        save_dataset_csv(data, path)
        print(f"wrote {path}")
        return 0
    if args.command == "run-grid":
        return _run_chain_grid(args, default_grid_manifest, "grid")
    if args.command == "efficiency-sweep":
        return _run_chain_grid(args, default_efficiency_manifest,
                               "efficiency-sweep")
    if args.command == "dim-sweep":
        return _run_chain_grid(args, default_dim_manifest, "dim-sweep")
    if args.command == "error-order":
        studies = harness.run_error_order(out_dir)
        for name, study in sorted(studies.items()):
            fit = getattr(study, "measured_fit", None) or study.fit
            print(f"{name}: slope={fit.slope:.3f}")
        return 0
    if args.command == "crossing-stats":
        seed = args.seed if args.seed is not None else 0
        stats = harness.run_crossing_stats(out_dir, seed=seed)
        print(f"single-crossing steps: {stats.n_single}/{stats.n_samples}")
        return 0
    if args.command == "proxy-scaling":
        seed = args.seed if args.seed is not None else 0
        out = harness.run_proxy_scaling(out_dir, seed=seed)
        print(f"wrote {out['path']} "
              f"(predicted plateau {out['meta']['predicted_plateau']:.3f})")
        return 0
    if args.command == "tuning-curves":
        path = harness.run_tuning_curves(out_dir)
        print(f"wrote {path}")
        return 0
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
