"""Figures and a gnuplot script written next to a CSV report."""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_report(rows, path, title=""):
    """Log-scale tail plot: MC estimates with 95% bars and the asymptote curve."""
    us = np.array([r.u for r in rows])
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    mc = [(r.u, r.mc_estimate, r.ci_low, r.ci_high) for r in rows if r.mc_estimate is not None and r.mc_estimate > 0]
    if mc:
        u, p, lo, hi = map(np.array, zip(*mc))
        ax.errorbar(u, p, yerr=[p - lo, hi - p], fmt="o", ms=4, capsize=3, label="Monte Carlo")
    asy = [(r.u, r.asymptote) for r in rows if r.asymptote is not None and r.asymptote > 0]
    if asy:
        u, a = map(np.array, zip(*asy))
        ax.plot(u, a, "-", label="asymptote")
    ax.set_yscale("log")
    if len(us) and us.min() > 0 and us.max() / us.min() > 10:
        ax.set_xscale("log")
    ax.set_xlabel("u")
    ax.set_ylabel("P{V > u}")
    if title:
        ax.set_title(title, fontsize=9)
    if mc or asy:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def write_gnuplot_script(csv_path, script_path, title=""):
    """Plain gnuplot script reading the CSV columns directly."""
    png = os.path.splitext(os.path.basename(csv_path))[0] + "_gnuplot.png"
    text = "\n".join([
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set logscale y",
        "set xlabel 'u'",
        "set ylabel 'P{V > u}'",
        "set title '%s'" % title.replace("'", ""),
        "set terminal pngcairo size 800,560",
        "set output '%s'" % png,
        "plot '%s' using 1:2:3:4 with yerrorbars title 'Monte Carlo', \\" % os.path.basename(csv_path),
        "     '' using 1:5 with lines title 'asymptote'",
        "",
    ])
    with open(script_path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return script_path
