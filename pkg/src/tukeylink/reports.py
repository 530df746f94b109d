"""Figure rendering for experiment runs.

Each run writes one PNG next to its CSV.  The Agg backend is forced up
front so runs work on headless machines; these helpers only arrange
axes and never recompute results.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "save_class_histogram",
    "save_bandwidth_curves",
    "save_sweep_figure",
    "save_power_check",
]


def save_class_histogram(sizes, counts, path, subtitle: str = "") -> None:
    """Bar chart of equivalence-class sizes vs how many classes have each."""
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    positions = np.arange(len(sizes))
    ax.bar(positions, counts, color="#4878a8", width=0.7)
    ax.set_xticks(positions)
    ax.set_xticklabels([str(s) for s in sizes])
    ax.set_xlabel("class size")
    ax.set_ylabel("number of classes")
    title = "Square-law equivalence classes"
    if subtitle:
        title += f"\n{subtitle}"
    ax.set_title(title, fontsize=10)
    for pos, count in zip(positions, counts):
        ax.annotate(str(count), (pos, count), ha="center", va="bottom",
                    fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_bandwidth_curves(rows, path) -> None:
    """Occupied bandwidth vs taper parameter, one curve per energy fraction.

    ``rows`` is an iterable of (beta, fraction, bandwidth) triples.
    """
    rows = list(rows)
    fractions = sorted({f for _, f, _ in rows})
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    for frac in fractions:
        pts = sorted((b, bw) for b, f, bw in rows if f == frac)
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "o-",
                label=f"{100 * frac:g}% energy")
    ax.axhline(0.5, color="gray", lw=0.8, ls="--", label="Nyquist (0.5/T)")
    ax.set_xlabel(r"taper parameter $\beta$")
    ax.set_ylabel("one-sided bandwidth (cycles/symbol)")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_sweep_figure(result, ylabel, path, logy: bool = False,
                      subtitle: str = "",
                      xlabel: str = "received optical power (dBm)") -> None:
    """Metric vs optical power with half-width error bars."""
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    value = np.asarray(result.value, dtype=float)
    half = np.asarray(result.half_width, dtype=float)
    if logy:
        # A log axis cannot show zero-error points; clip the lower bar.
        lower = np.where(value - half > 0, half, value * (1 - 1e-9))
        ax.errorbar(result.power_dbm, value, yerr=np.vstack([lower, half]),
                    fmt="o-", capsize=3, color="#a84848")
        ax.set_yscale("log")
    else:
        ax.errorbar(result.power_dbm, value, yerr=half, fmt="o-", capsize=3,
                    color="#48a868")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if subtitle:
        ax.set_title(subtitle, fontsize=10)
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_power_check(target_w, empirical_w, path) -> None:
    """Side-by-side bars of the configured vs measured average power."""
    fig, ax = plt.subplots(figsize=(4.2, 3.4))
    bars = ax.bar(["ensemble average", "waveform measurement"],
                  [target_w, empirical_w], color=["#4878a8", "#a87848"],
                  width=0.6)
    for bar, val in zip(bars, [target_w, empirical_w]):
        ax.annotate(f"{val:.6g} W", (bar.get_x() + bar.get_width() / 2, val),
                    ha="center", va="bottom", fontsize=8)
    rel = abs(empirical_w - target_w) / target_w
    ax.set_ylabel("average power (W)")
    ax.set_title(f"relative error {rel:.2e}", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
