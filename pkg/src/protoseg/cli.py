"""Command-line entry point.

Subcommands: postprocess, nms-bench, eval, viz, rle. Exit codes:
0 success, 1 input error (files, formats, configuration, arguments),
2 internal error.
"""

import argparse
import json
import os
import sys

import numpy as np

from .config import PipelineConfig, load_config
from .errors import ConfigError, FormatError
from .bench import bench_nms
from .evaluation import evaluate_ap
from .maskops import rle_decode, rle_encode
from .pipeline import (
    load_gt,
    process_dump_dirs,
    read_detection_dump,
    write_detection_dump,
)
from .reports import write_bench_report, write_eval_report
from .visualize import load_image, save_png, visualize


class _Parser(argparse.ArgumentParser):
    """argparse whose usage errors exit 1 (input error), not 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="protoseg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    post = sub.add_parser("postprocess", help="dump directories -> detection records")
    post.add_argument("dumps", nargs="+", help="image dump directories")
    post.add_argument("--config", help="JSON config file")
    post.add_argument("--nms", choices=["fast", "traditional"], help="override nms method")
    post.add_argument("--rescore", choices=["off", "oracle"], help="override rescore mode")
    post.add_argument("--gt", help="ground-truth JSON (needed for --rescore oracle)")
    post.add_argument("--out", required=True, help="output detection JSONL path")

    bench = sub.add_parser("nms-bench", help="time fast vs traditional suppression")
    bench.add_argument("--n", type=int, default=1000, help="number of boxes")
    bench.add_argument("--c", type=int, default=80, help="number of classes")
    bench.add_argument("--repeats", type=int, default=5)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--iou-threshold", type=float, default=0.5)
    bench.add_argument("--top-n", type=int, default=200)
    bench.add_argument("--out", required=True, help="output directory for csv/json/png")

    ev = sub.add_parser("eval", help="average precision of a detection dump")
    ev.add_argument("--dets", required=True, help="detection JSONL")
    ev.add_argument("--gt", required=True, help="ground-truth JSON")
    ev.add_argument("--iou-kind", choices=["box", "mask"], default="mask")
    ev.add_argument("--score-key", choices=["score", "final_score"], default="final_score")
    ev.add_argument("--area-breakdown", action="store_true")
    ev.add_argument("--out", required=True, help="output directory for csv/json/png")

    viz = sub.add_parser("viz", help="overlay detections on an image")
    viz.add_argument("--image", required=True, help="PNG or PPM input image")
    viz.add_argument("--dets", required=True, help="detection JSONL")
    viz.add_argument("--image-id", help="only draw records with this image_id")
    viz.add_argument("--threshold", type=float, default=None,
                     help="final-score display threshold (default from config)")
    viz.add_argument("--config", help="JSON config file")
    viz.add_argument("--out", required=True, help="output PNG path")

    rle = sub.add_parser("rle", help="run-length codec utility")
    rle.add_argument("--mode", choices=["encode", "decode"], required=True)
    rle.add_argument("--input", required=True,
                     help="encode: PNG/PPM image (nonzero = foreground); decode: RLE JSON")
    rle.add_argument("--out", required=True,
                     help="encode: RLE JSON path; decode: PNG path")
    return parser


def _load_pipeline_config(args) -> PipelineConfig:
    config = load_config(args.config) if args.config else PipelineConfig()
    overrides = {}
    if getattr(args, "nms", None):
        from dataclasses import replace

        overrides["nms"] = replace(config.nms, method=args.nms)
    if getattr(args, "rescore", None):
        overrides["rescore"] = args.rescore
    if overrides:
        from dataclasses import replace

        config = replace(config, **overrides)
    return config


def _cmd_postprocess(args) -> int:
    config = _load_pipeline_config(args)
    gt_data = load_gt(args.gt) if args.gt else None
    if config.rescore == "oracle" and gt_data is None:
        raise ConfigError("--rescore oracle requires --gt")
    records = process_dump_dirs(args.dumps, config, gt_data)
    write_detection_dump(args.out, records)
    print(f"wrote {len(records)} detections to {args.out}")
    return 0


def _cmd_bench(args) -> int:
    try:
        report = bench_nms(
            n=args.n,
            c=args.c,
            repeats=args.repeats,
            seed=args.seed,
            iou_threshold=args.iou_threshold,
            top_n=args.top_n,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    paths = write_bench_report(report, args.out)
    print(
        f"fast {report.fast_ms_median:.3f} ms, traditional "
        f"{report.traditional_ms_median:.3f} ms, speedup {report.speedup:.2f}x, "
        f"jaccard {report.agreement_jaccard:.4f}"
    )
    for path in paths:
        print(f"wrote {path}")
    return 0


def _cmd_eval(args) -> int:
    records = read_detection_dump(args.dets)
    gt_data = load_gt(args.gt)
    report = evaluate_ap(
        records,
        gt_data,
        iou_kind=args.iou_kind,
        score_key=args.score_key,
        with_area_breakdown=args.area_breakdown,
    )
    paths = write_eval_report(report, args.out)
    print(f"ap {report.ap:.4f}, ap50 {report.ap50:.4f}, ap75 {report.ap75:.4f}")
    for path in paths:
        print(f"wrote {path}")
    return 0


def _cmd_viz(args) -> int:
    config = load_config(args.config) if args.config else PipelineConfig()
    threshold = args.threshold if args.threshold is not None else config.display_score_threshold
    image = load_image(args.image)
    records = read_detection_dump(args.dets)
    if args.image_id is not None:
        records = [r for r in records if str(r["image_id"]) == args.image_id]
    out = visualize(image, records, score_threshold=threshold)
    save_png(args.out, out)
    print(f"wrote {args.out} ({len(records)} records considered)")
    return 0


def _cmd_rle(args) -> int:
    if args.mode == "encode":
        image = load_image(args.input)
        mask = image.any(axis=2)
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(rle_encode(mask), fh, sort_keys=True)
            fh.write("\n")
    else:
        try:
            with open(args.input, "r", encoding="utf-8") as fh:
                rle = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{args.input} is not valid JSON: {exc}") from exc
        mask = rle_decode(rle)
        save_png(args.out, np.where(mask[..., None], 255, 0).astype(np.uint8).repeat(3, axis=2))
    print(f"wrote {args.out}")
    return 0


_COMMANDS = {
    "postprocess": _cmd_postprocess,
    "nms-bench": _cmd_bench,
    "eval": _cmd_eval,
    "viz": _cmd_viz,
    "rle": _cmd_rle,
}

INPUT_ERRORS = (ConfigError, FormatError, OSError, json.JSONDecodeError)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # internal failure: wrong shapes, bugs
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
