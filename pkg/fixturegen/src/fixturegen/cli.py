"""Entry points: gen-scenes writes a scene set, gen-oracles the oracle JSONs."""

import argparse
import sys

from .dataset import write_scene_set
from .oracles import write_oracles


def main_scenes(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gen-scenes", description="generate synthetic scenes and pseudo outputs"
    )
    parser.add_argument("--seed", type=int, required=True)
    parser.add_argument("--count", type=int, required=True)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--size", type=int, default=128, help="image side, multiple of 8")
    parser.add_argument("--classes", type=int, default=5)
    parser.add_argument("--k", type=int, default=8, help="prototype slots")
    parser.add_argument("--noise", type=float, default=0.0)
    parser.add_argument("--overlap-prob", type=float, default=0.3)
    parser.add_argument("--min-instances", type=int, default=1)
    parser.add_argument("--max-instances", type=int, default=4)
    args = parser.parse_args(argv)
    try:
        summary = write_scene_set(
            args.out,
            seed=args.seed,
            count=args.count,
            size=args.size,
            num_classes=args.classes,
            k=args.k,
            noise_level=args.noise,
            overlap_prob=args.overlap_prob,
            min_instances=args.min_instances,
            max_instances=args.max_instances,
        )
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(
        f"wrote {summary['count']} scenes ({summary['annotations']} instances) "
        f"to {summary['out_dir']}"
    )
    return 0


def main_oracles(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gen-oracles", description="write brute-force oracle JSON files"
    )
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=20240817)
    args = parser.parse_args(argv)
    try:
        written = write_oracles(args.out, seed=args.seed)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main_scenes())
