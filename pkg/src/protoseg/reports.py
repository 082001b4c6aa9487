"""Report writers: delimited text, JSON, and rendered figures.

Every figure goes to a file via the Agg backend so the CLI works
headless; nothing here opens a window.
"""

import csv
import json

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .bench import BenchReport
from .evaluation import ApReport


def write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_bench_report(report: BenchReport, out_dir, stem: str = "bench") -> list:
    """bench.{csv,json,png} under out_dir; returns the paths written."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    json_path = os.path.join(out_dir, f"{stem}.json")
    png_path = os.path.join(out_dir, f"{stem}.png")

    write_csv(
        csv_path,
        ["method", "median_ms", "n", "c", "repeats", "seed", "agreement_jaccard"],
        [
            ["fast", f"{report.fast_ms_median:.6f}", report.n, report.c, report.repeats,
             report.seed, f"{report.agreement_jaccard:.6f}"],
            ["traditional", f"{report.traditional_ms_median:.6f}", report.n, report.c,
             report.repeats, report.seed, f"{report.agreement_jaccard:.6f}"],
        ],
    )
    write_json(json_path, report.as_dict())

    fig, (ax_time, ax_agree) = plt.subplots(1, 2, figsize=(9, 4))
    ax_time.bar(["fast", "traditional"],
                [report.fast_ms_median, report.traditional_ms_median],
                color=["#0a7", "#777"])
    ax_time.set_ylabel("median wall time (ms)")
    ax_time.set_title(f"suppression time, n={report.n}, c={report.c}")
    for i, v in enumerate([report.fast_ms_median, report.traditional_ms_median]):
        ax_time.text(i, v, f"{v:.2f}", ha="center", va="bottom")
    ax_agree.bar(["kept-set jaccard", "classes identical"],
                 [report.agreement_jaccard, report.classes_identical],
                 color=["#07a", "#a70"])
    ax_agree.set_ylim(0.0, 1.05)
    ax_agree.set_title(f"agreement (speedup {report.speedup:.2f}x)")
    fig.tight_layout()
    fig.savefig(png_path, dpi=110)
    plt.close(fig)
    return [csv_path, json_path, png_path]


def write_eval_report(report: ApReport, out_dir, stem: str = "eval") -> list:
    """eval.{csv,json,png} under out_dir; returns the paths written."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    json_path = os.path.join(out_dir, f"{stem}.json")
    png_path = os.path.join(out_dir, f"{stem}.png")

    rows = [["overall", "ap", f"{report.ap:.6f}"],
            ["overall", "ap50", f"{report.ap50:.6f}"],
            ["overall", "ap75", f"{report.ap75:.6f}"]]
    for cls, value in sorted(report.per_class.items()):
        rows.append([f"class_{cls}", "ap", f"{value:.6f}"])
    for thr, value in sorted(report.per_threshold.items()):
        rows.append([f"iou_{thr:.2f}", "ap", f"{value:.6f}"])
    write_csv(csv_path, ["scope", "metric", "value"], rows)
    write_json(json_path, report.as_dict())

    fig, (ax_thr, ax_cls) = plt.subplots(1, 2, figsize=(9, 4))
    thresholds = sorted(report.per_threshold)
    ax_thr.plot(thresholds, [report.per_threshold[t] for t in thresholds], marker="o")
    ax_thr.set_xlabel("IoU threshold")
    ax_thr.set_ylabel("AP")
    ax_thr.set_ylim(-0.02, 1.05)
    ax_thr.set_title(f"AP by threshold (mean {report.ap:.3f})")
    classes = sorted(report.per_class)
    ax_cls.bar([str(cl) for cl in classes], [report.per_class[cl] for cl in classes],
               color="#07a")
    ax_cls.set_xlabel("class id")
    ax_cls.set_ylim(0.0, 1.05)
    ax_cls.set_title("AP by class")
    fig.tight_layout()
    fig.savefig(png_path, dpi=110)
    plt.close(fig)
    return [csv_path, json_path, png_path]
