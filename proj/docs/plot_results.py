#!/usr/bin/env python3
"""Render the CSV series written by `fgsan plot-data`.

Usage: plot_results.py PLOT_DIR [OUT_PREFIX]

Reads PLOT_DIR/loss_curve.csv and PLOT_DIR/metric_bars.csv and writes
OUT_PREFIX_loss.png and OUT_PREFIX_metrics.png (OUT_PREFIX defaults to
PLOT_DIR/plot). Needs matplotlib.
"""

import csv
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read_rows(path):
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))


def plot_loss(rows, out):
    epochs = [int(r["epoch"]) for r in rows]
    fig, left = plt.subplots(figsize=(7, 4))
    left.plot(epochs, [float(r["train_bce"]) for r in rows], label="BCE")
    left.plot(epochs, [float(r["train_kl"]) for r in rows], label="KL")
    left.set_xlabel("epoch")
    left.set_ylabel("training loss terms")
    right = left.twinx()
    right.plot(epochs, [float(r["val_acc"]) for r in rows], color="black", linewidth=0.8, label="val ACC")
    right.set_ylabel("validation accuracy")
    right.set_ylim(0.0, 1.0)
    handles = left.get_legend_handles_labels()[0] + right.get_legend_handles_labels()[0]
    left.legend(handles, [h.get_label() for h in handles], loc="center right")
    fig.tight_layout()
    fig.savefig(out, dpi=120)


def plot_metrics(rows, out):
    by_variant = defaultdict(dict)
    for r in rows:
        by_variant[r["variant"]][r["metric"]] = (float(r["mean"]), float(r["std"]))
    metrics = ["acc", "prec", "sen", "spec"]
    variants = list(by_variant)
    width = 0.8 / max(len(variants), 1)
    fig, ax = plt.subplots(figsize=(7, 4))
    for v_index, variant in enumerate(variants):
        xs = [m + v_index * width for m in range(len(metrics))]
        means = [100 * by_variant[variant][m][0] for m in metrics]
        stds = [100 * by_variant[variant][m][1] for m in metrics]
        ax.bar(xs, means, width, yerr=stds, capsize=3, label=variant)
    ax.set_xticks([m + 0.4 - width / 2 for m in range(len(metrics))])
    ax.set_xticklabels([m.upper() for m in metrics])
    ax.set_ylabel("%")
    ax.set_ylim(0, 100)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=120)


def main(argv):
    if len(argv) < 2:
        print(__doc__, file=sys.stderr)
        return 2
    plot_dir = Path(argv[1])
    prefix = argv[2] if len(argv) > 2 else str(plot_dir / "plot")
    plot_loss(read_rows(plot_dir / "loss_curve.csv"), prefix + "_loss.png")
    plot_metrics(read_rows(plot_dir / "metric_bars.csv"), prefix + "_metrics.png")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
