"""SVG figures: per-image histograms, section CI chart and relative-diameter fits.

Styling is cosmetic; the JSON reports carry the numbers.
"""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "fragscan"


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def histogram_svg(dist, path, title="", marks=None):
    """Bars of bin shares on a log-x axis with the cumulative curve overlaid."""
    fig, ax = plt.subplots(figsize=(6, 4))
    lo = dist.bin_edges[:-1]
    occupied = dist.bin_shares > 0
    left = np.maximum(lo[occupied], dist.bin_width / 2)
    ax.bar(left, 100 * dist.bin_shares[occupied], width=dist.bin_width, align="edge",
           color="#4c72b0", edgecolor="none")
    ax.set_xscale("log")
    ax.set_xlabel("Equivalent diameter d (cm)")
    ax.set_ylabel("Share by %s (%%)" % dist.mode)
    ax2 = ax.twinx()
    cum = dist.cumulative
    ax2.plot(np.maximum(cum[:, 0], 1e-3), 100 * cum[:, 1], "r--", lw=1)
    ax2.set_ylim(0, 100)
    ax2.set_ylabel("Cumulative (%)")
    for name, value in (marks or {}).items():
        ax2.axvline(value, color="grey", lw=0.6)
        ax2.text(value, 2, f" {name}={value:.2f}", rotation=90, fontsize=7, va="bottom")
    if title:
        ax.set_title(title)
    _save(fig, path)


def sections_svg(sections, path):
    """Section means with 95% confidence intervals for d10, d50 and d90."""
    fig, ax = plt.subplots(figsize=(6, 4))
    x = np.arange(1, len(sections) + 1)
    for k, (name, colour) in enumerate((("d10", "#55a868"), ("d50", "#4c72b0"), ("d90", "#c44e52"))):
        means = np.array([s.mean.as_tuple()[k] for s in sections])
        lo = np.array([s.ci95[name][0] for s in sections])
        hi = np.array([s.ci95[name][1] for s in sections])
        ax.errorbar(x + (k - 1) * 0.08, means, yerr=[means - lo, hi - means], fmt="o-",
                    capsize=3, color=colour, label=name)
    ax.set_xticks(x, [s.section_id for s in sections])
    ax.set_ylabel("Characteristic diameter (cm)")
    ax.legend()
    _save(fig, path)


def ratios_svg(report, path):
    """Relative characteristic diameters per section with their fitted lines."""
    fig, ax = plt.subplots(figsize=(6, 4))
    order = list(report.section_order)
    x = np.arange(1, len(order) + 1)
    for k, (name, colour) in enumerate((("d10", "#55a868"), ("d50", "#4c72b0"), ("d90", "#c44e52"))):
        y = [report.ratios[s][k] for s in order]
        fit = report.fits[name]
        ax.plot(x, y, "o", color=colour, label=f"{name}/{name[0]}'{name[1:]}")
        ax.plot(x, fit.slope * x + fit.intercept, "-", color=colour, lw=1,
                label=f"slope {fit.slope:.3f}")
    ax.axhline(1.0, color="grey", lw=0.6, ls=":")
    ax.set_xticks(x, order)
    ax.set_ylabel("Relative characteristic diameter")
    ax.legend(fontsize=7)
    _save(fig, path)
