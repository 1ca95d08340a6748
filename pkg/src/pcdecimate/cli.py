"""Command line: ``pcdecimate filter | bench | gen``."""

import argparse
import logging
import sys

from . import bench
from .baseline import brute_force_decimate, voxel_centroid_filter
from .cloud import crop_z
from .decimate import decimate
from .errors import (
    ConfigError,
    DecimateError,
    DeterminismError,
    MaxPassesExceeded,
    PcdError,
)
from .pcd import read_pcd, write_pcd
from .scenes import KINDS, SceneSpec, gen_synthetic

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DETERMINISM = 4
EXIT_FILTER = 5

logger = logging.getLogger("pcdecimate")


def _floats(text):
    return tuple(float(v) for v in text.split(","))


def _threads(text):
    return tuple(None if v == "default" else (v if v == "max" else int(v)) for v in text.split(","))


def _add_source(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="PCD file to read")
    src.add_argument("--scene", choices=KINDS, help="generate a synthetic scene instead")
    _add_scene(p)
    p.add_argument("--z-min", type=float, default=float("-inf"), help="drop points below this height")
    p.add_argument("--z-max", type=float, default=float("inf"), help="drop points above this height")


def _add_scene(p):
    p.add_argument("--points", type=int, default=100_000, help="synthetic point count")
    p.add_argument("--extents", type=_floats, default=(10.0, 3.0, 2.5), help="length,width,height in m")
    p.add_argument("--noise", type=float, default=0.0, help="Gaussian noise sigma in m")
    p.add_argument("--scene-seed", type=int, default=0)


def _add_filter_params(p):
    p.add_argument("--radius", type=float, default=None, help="neighbor radius in m (default: widest allowed)")
    p.add_argument("--threshold", type=int, default=3, help="max tolerated neighbor count")
    p.add_argument("--batch-size", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0, help="batch selection seed")


def build_parser():
    parser = argparse.ArgumentParser(prog="pcdecimate", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("filter", help="decimate one cloud")
    _add_source(p)
    _add_filter_params(p)
    p.add_argument("--resolution", type=float, default=0.05, help="target cell size in m")
    p.add_argument("--threads", default=None, help="worker count or 'max'")
    p.add_argument("--impl", choices=bench.IMPLS + ("brute-force",), default="bucket-parallel")
    p.add_argument("--output", help="write the result to this PCD file")
    p.add_argument("--mode", choices=("binary", "ascii"), default="binary")

    p = sub.add_parser("bench", help="timed sweep over resolutions and worker counts")
    _add_source(p)
    _add_filter_params(p)
    p.add_argument("--resolutions", type=_floats, default=(0.02, 0.04, 0.05))
    p.add_argument("--threads", type=_threads, default=(None,), help="comma list of worker counts, 'max' allowed")
    p.add_argument("--impls", type=lambda s: tuple(s.split(",")), default=bench.IMPLS)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--warmup", type=int, default=2)
    p.add_argument("--csv", help="write records to this CSV file")

    p = sub.add_parser("gen", help="write a synthetic scene to PCD")
    p.add_argument("--kind", choices=KINDS, default="corridor")
    _add_scene(p)
    p.add_argument("--output", required=True)
    p.add_argument("--mode", choices=("binary", "ascii"), default="binary")
    return parser


def _load(args):
    if args.input:
        cloud = read_pcd(args.input)
    else:
        cloud = gen_synthetic(
            SceneSpec(args.scene, args.extents, args.points, args.noise, args.scene_seed)
        )
    return crop_z(cloud, args.z_min, args.z_max)


def _suite(args, **kw):
    return bench.SuiteConfig(
        threshold=args.threshold,
        radius=args.radius,
        batch_size=args.batch_size,
        seed=args.seed,
        **kw,
    )


def cmd_filter(args):
    cloud = _load(args)
    suite = _suite(args, repetitions=3, resolutions=(args.resolution,))
    if args.impl == "voxel-centroid":
        out = voxel_centroid_filter(cloud, args.resolution)
        print(f"voxel-centroid: {len(cloud)} -> {len(out)} points")
    else:
        cfg = bench.filter_config(cloud, args.resolution, suite)
        if args.impl == "brute-force":
            out, stats = brute_force_decimate(cloud, cfg)
        else:
            threads = 1 if args.impl == "bucket-serial" else args.threads
            out, stats = decimate(cloud, cfg, threads=threads)
        print(
            f"{args.impl}: {stats.input_size} -> {stats.output_size} points, "
            f"{stats.passes} passes, n={cfg.n}, radius={cfg.radius:.6g} m, "
            f"{stats.total_time * 1e3:.2f} ms"
        )
    if args.output:
        write_pcd(out, args.output, mode=args.mode)


def cmd_bench(args):
    cloud = _load(args)
    suite = _suite(
        args,
        resolutions=args.resolutions,
        threads=args.threads,
        impls=args.impls,
        repetitions=args.reps,
        warmup=args.warmup,
    )
    records = bench.run_bench(cloud, suite)
    print(bench.emit_table(records), end="")
    if args.csv:
        bench.emit_csv(records, args.csv)


def cmd_gen(args):
    cloud = gen_synthetic(SceneSpec(args.kind, args.extents, args.points, args.noise, args.scene_seed))
    write_pcd(cloud, args.output, mode=args.mode)
    print(f"wrote {len(cloud)} points to {args.output}")


COMMANDS = {"filter": cmd_filter, "bench": cmd_bench, "gen": cmd_gen}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        COMMANDS[args.command](args)
    except ConfigError as e:
        logger.error("%s", e)
        return EXIT_CONFIG
    except (PcdError, OSError) as e:
        logger.error("%s", e)
        return EXIT_IO
    except DeterminismError as e:
        logger.error("%s", e)
        return EXIT_DETERMINISM
    except MaxPassesExceeded as e:
        logger.error("%s", e)
        return EXIT_FILTER
    except DecimateError as e:
        logger.error("%s", e)
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
