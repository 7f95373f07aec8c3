"""Figure and CSV rendering for simulation and sweep results.

Every figure gets a sibling CSV with the plotted series, same basename. All
rendering is headless (Agg) and file-based; nothing opens a window.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .montecarlo import SimReport

NINES_LEVELS = (2, 3, 4, 5, 6)


def write_cdf(reports: dict[str, SimReport], outdir, stem: str = "unavail_cdf"
              ) -> list[Path]:
    """Unavailability CDF across flows, one curve per labelled report."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / f"{stem}.csv"
    png_path = outdir / f"{stem}.png"

    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["label", "unavailability", "cdf"])
        for label in sorted(reports):
            for x, y in zip(*reports[label].unavailability_cdf()):
                w.writerow([label, x, y])

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label in sorted(reports):
        xs, ys = reports[label].unavailability_cdf()
        # log axis cannot show exact zeros; clip to the resolution floor
        n = max(reports[label].replications, 2)
        xs = [max(x, 1.0 / n) for x in xs]
        ax.step(xs, ys, where="post", label=label)
    ax.set_xscale("log")
    ax.set_xlabel("flow unavailability")
    ax.set_ylabel("fraction of flows")
    ax.set_ylim(0.0, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return [png_path, csv_path]


def write_nines_bars(reports: dict[str, SimReport], outdir,
                     stem: str = "nines") -> list[Path]:
    """Fraction of flows at or above k nines, grouped bars per report."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / f"{stem}.csv"
    png_path = outdir / f"{stem}.png"

    labels = sorted(reports)
    series = {lab: reports[lab].nines_fractions(NINES_LEVELS)
              for lab in labels}
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["label"] + [f"ge_{k}_nines" for k in NINES_LEVELS])
        for lab in labels:
            w.writerow([lab] + [series[lab][k] for k in NINES_LEVELS])

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    width = 0.8 / max(len(labels), 1)
    for i, lab in enumerate(labels):
        xs = [k + (i - (len(labels) - 1) / 2) * width for k in NINES_LEVELS]
        ax.bar(xs, [series[lab][k] for k in NINES_LEVELS], width=width,
               label=lab)
    ax.set_xticks(list(NINES_LEVELS))
    ax.set_xlabel("availability level (nines)")
    ax.set_ylabel("fraction of flows at or above")
    ax.set_ylim(0.0, 1.05)
    ax.grid(True, axis="y", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return [png_path, csv_path]


def write_usage(metrics: dict, outdir, stem: str = "usage") -> list[Path]:
    """Backup instance usage per availability class plus the overbuild ratio.

    Takes the metrics dict form (MetricsReport.as_dict or a parsed results
    file).
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / f"{stem}.csv"
    png_path = outdir / f"{stem}.png"

    used = metrics["used_by_class"]
    acc = metrics["acceptance_by_class"]
    classes = sorted(used)
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["class", "backups_used", "acceptance"])
        for c in classes:
            w.writerow([c, used[c], acc.get(c, "")])
        w.writerow(["__total__", metrics["backups_used"],
                    metrics["flows_accepted"] / max(metrics["flows_total"], 1)])
        w.writerow(["__overbuild__", metrics["overbuild"], ""])

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.0, 4.0))
    ax1.bar(range(len(classes)), [used[c] for c in classes], color="#4878a8")
    ax1.set_xticks(range(len(classes)))
    ax1.set_xticklabels(classes, rotation=20)
    ax1.set_ylabel("backup instances used")
    ax1.grid(True, axis="y", alpha=0.3)
    ax2.bar(range(len(classes)), [acc.get(c, 0.0) for c in classes],
            color="#70a870")
    ax2.set_xticks(range(len(classes)))
    ax2.set_xticklabels(classes, rotation=20)
    ax2.set_ylabel("acceptance ratio")
    ax2.set_ylim(0.0, 1.05)
    ax2.grid(True, axis="y", alpha=0.3)
    fig.suptitle(f"overbuild {metrics['overbuild']:.3f} "
                 f"({metrics['backups_used']}/{metrics['primaries']})")
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return [png_path, csv_path]


def write_sweep(sweep: dict, outdir, stem: str = "threshold_sweep"
                ) -> list[Path]:
    """Backups used, acceptance and correlation coverage versus threshold."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / f"{stem}.csv"
    png_path = outdir / f"{stem}.png"

    rows = sweep["thresholds"]
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["threshold", "backups_placed", "backups_used",
                    "overbuild", "accepted", "coverage"])
        for r in rows:
            w.writerow([r["threshold"], r["backups_placed"],
                        r["backups_used"], r["overbuild"], r["accepted"],
                        r["coverage"]])

    ts = [r["threshold"] for r in rows]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(ts, [r["backups_used"] for r in rows], marker="o",
            label="backups used")
    ax.plot(ts, [r["backups_placed"] for r in rows], marker="s",
            linestyle="--", label="backups placed")
    ax.set_xlabel("dependency threshold")
    ax.set_ylabel("instances")
    ax.grid(True, alpha=0.3)
    ax2 = ax.twinx()
    ax2.plot(ts, [r["coverage"] for r in rows], marker="^", color="#a85050",
             label="correlation coverage")
    ax2.set_ylabel("mean correlated-set share")
    ax2.set_ylim(0.0, 1.05)
    h1, l1 = ax.get_legend_handles_labels()
    h2, l2 = ax2.get_legend_handles_labels()
    ax.legend(h1 + h2, l1 + l2, loc="best")
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return [png_path, csv_path]
