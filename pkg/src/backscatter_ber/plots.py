"""SVG rendering of sweep CSV files.

Plots are a pure function of the CSV contents: the renderer reads the
file back rather than reusing in-memory results, and the SVG output is
deterministic (fixed hash salt, no timestamps), so re-plotting the same
CSV yields byte-identical files.
"""

from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

CSV_COLUMNS = ["axis", "detector", "receiver", "analytical_ber", "mc_ber", "ci95", "frames"]

_AXIS_LABEL = {"snr": "SNR (dB)", "n": "samples per symbol N", "rho": "correlation factor"}
_COLOR = {
    ("manchester", "sa"): "tab:blue",
    ("ook", "sa"): "tab:orange",
    ("manchester", "ma"): "tab:green",
    ("ook", "ma"): "tab:red",
}


def read_sweep_csv(path):
    """Parse a sweep CSV back into a list of row dicts (floats where
    applicable, None for blanks)."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_COLUMNS:
            raise ValueError(
                "unexpected CSV schema %r (want %r)" % (reader.fieldnames, CSV_COLUMNS)
            )
        for raw in reader:
            rows.append(
                {
                    "axis": float(raw["axis"]),
                    "detector": raw["detector"],
                    "receiver": raw["receiver"],
                    "analytical_ber": float(raw["analytical_ber"]) if raw["analytical_ber"] else None,
                    "mc_ber": float(raw["mc_ber"]) if raw["mc_ber"] else None,
                    "ci95": float(raw["ci95"]) if raw["ci95"] else None,
                    "frames": int(raw["frames"]) if raw["frames"] else None,
                }
            )
    return rows


def plot_sweep_csv(csv_path, svg_path, title="", axis_kind="snr"):
    """Render one sweep CSV to a log-scale BER plot in SVG."""
    rows = read_sweep_csv(csv_path)
    with plt.rc_context({"svg.hashsalt": title or "backscatter-ber"}):
        fig, ax = plt.subplots(figsize=(7.0, 5.0))
        chains = sorted({(r["detector"], r["receiver"]) for r in rows})
        for det, rx in chains:
            pts = [r for r in rows if r["detector"] == det and r["receiver"] == rx]
            pts.sort(key=lambda r: r["axis"])
            color = _COLOR.get((det, rx), "tab:gray")
            label = "%s %s" % (det, rx.upper())
            ana = [(r["axis"], r["analytical_ber"]) for r in pts if r["analytical_ber"]]
            mc = [(r["axis"], r["mc_ber"]) for r in pts if r["mc_ber"]]
            if ana:
                ax.plot(*zip(*ana), "-", color=color, label=label + " (theory)")
            if mc:
                ax.plot(*zip(*mc), "o", ms=4, mfc="none", color=color,
                        label=label + " (sim)")
        ax.set_yscale("log")
        ax.set_xlabel(_AXIS_LABEL.get(axis_kind, axis_kind))
        ax.set_ylabel("BER")
        if title:
            ax.set_title(title)
        ax.grid(True, which="both", alpha=0.3)
        if chains:
            ax.legend(fontsize=8)
        fig.savefig(svg_path, format="svg", metadata={"Date": None})
        plt.close(fig)
