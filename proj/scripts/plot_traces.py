#!/usr/bin/env python3
"""Plot mean ELBO and parameter traces from one or more run directories."""

import argparse
import csv
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read_mean_trace(run_dir):
    with open(pathlib.Path(run_dir) / "mean_trace.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    columns = {key: [float(r[key]) for r in rows] for key in rows[0]}
    return columns


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("runs", nargs="+", help="run directories, e.g. runs/noisy_scale_nesvb")
    parser.add_argument("--out", default="traces.png")
    args = parser.parse_args()

    traces = {pathlib.Path(r).name: read_mean_trace(r) for r in args.runs}
    extra = [k for k in next(iter(traces.values())) if k not in ("step", "seeds", "elbo")]
    fig, axes = plt.subplots(1, 1 + len(extra), figsize=(4.5 * (1 + len(extra)), 3.5))
    for name, cols in traces.items():
        axes[0].plot(cols["step"], cols["elbo"], label=name)
        for ax, key in zip(axes[1:], extra):
            ax.plot(cols["step"], cols[key], label=name)
    axes[0].set_title("mean ELBO")
    for ax, key in zip(axes[1:], extra):
        ax.set_title(key)
    for ax in axes:
        ax.set_xlabel("step")
    axes[0].legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
