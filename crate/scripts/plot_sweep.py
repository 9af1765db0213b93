#!/usr/bin/env python3
"""Plot median support recovery and l2 error against outlier fraction.

Usage: python3 scripts/plot_sweep.py rows.csv [out.png]
"""
import csv
import statistics
import sys
from collections import defaultdict

import matplotlib.pyplot as plt


def main():
    path = sys.argv[1]
    out = sys.argv[2] if len(sys.argv) > 2 else "sweep.png"
    cells = defaultdict(lambda: {"support": [], "l2": []})
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            if row["status"] != "ok":
                continue
            key = (float(row["alpha"]), float(row["outlier_fraction"]))
            cells[key]["support"].append(float(row["recovered_support"]))
            cells[key]["l2"].append(float(row["l2_error"]))

    fig, (ax_s, ax_e) = plt.subplots(1, 2, figsize=(10, 4))
    for alpha in sorted({a for a, _ in cells}):
        fracs = sorted(f for a, f in cells if a == alpha)
        ax_s.plot(fracs, [statistics.median(cells[(alpha, f)]["support"]) for f in fracs], marker="o", label=f"alpha={alpha:g}")
        ax_e.plot(fracs, [statistics.median(cells[(alpha, f)]["l2"]) for f in fracs], marker="o", label=f"alpha={alpha:g}")
    ax_s.set_xlabel("outlier fraction")
    ax_s.set_ylabel("median recovered support")
    ax_e.set_xlabel("outlier fraction")
    ax_e.set_ylabel("median l2 error")
    ax_e.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=120)


if __name__ == "__main__":
    main()
