"""File-only figures for the CLI reports (Agg backend, no display)."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.figsize": (5.0, 3.4),
    "savefig.dpi": 150,
    "svg.hashsalt": "pymentropy",  # stable SVG ids
}

_METADATA = {
    ".png": {"Software": None},
    ".svg": {"Date": None},
    ".pdf": {"CreationDate": None, "Producer": None},
}


def _save(fig, path):
    suffix = "." + str(path).rsplit(".", 1)[-1].lower() if "." in str(path) else ".png"
    fig.savefig(path, metadata=_METADATA.get(suffix))
    plt.close(fig)


def convergence_figure(rows, path, title=None):
    """Mean entropy -/+ one posterior std against sample size, per estimator.

    ``rows`` are dicts with keys size, estimator, mean, std, true_entropy;
    trials are averaged, failed cells (mean None) skipped.
    """
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        estimators = sorted({r["estimator"] for r in rows})
        for k, est in enumerate(estimators):
            sizes = sorted({r["size"] for r in rows if r["estimator"] == est})
            xs, ms, ss = [], [], []
            for n in sizes:
                cell = [r for r in rows if r["estimator"] == est and r["size"] == n and r["mean"] is not None]
                if not cell:
                    continue
                xs.append(n)
                ms.append(np.mean([r["mean"] for r in cell]))
                stds = [r["std"] for r in cell if r["std"] is not None]
                ss.append(np.mean(stds) if stds else 0.0)
            if not xs:
                continue
            xs, ms, ss = map(np.asarray, (xs, ms, ss))
            line, = ax.plot(xs, ms, marker="o", ms=3, lw=1.2, label=est)
            if np.any(ss > 0):
                ax.fill_between(xs, ms - ss, ms + ss, color=line.get_color(), alpha=0.2, lw=0)
        truths = {r["true_entropy"] for r in rows if r.get("true_entropy") is not None}
        if len(truths) == 1:
            ax.axhline(truths.pop(), color="k", ls="--", lw=0.8, label="true")
        ax.set_xscale("log")
        ax.set_xlabel("sample size N")
        ax.set_ylabel("entropy (nats)")
        if title:
            ax.set_title(title, fontsize=9)
        ax.legend(frameon=False)
        fig.tight_layout()
        _save(fig, path)


def posterior_figure(samples, path, mean=None, std=None, title=None):
    """Histogram of posterior entropy samples with the mean -/+ 2 std band."""
    samples = np.asarray(samples, float)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        if samples.size:
            ax.hist(samples, bins=min(60, max(10, samples.size // 50)), density=True,
                    color="0.6", edgecolor="none")
        if mean is not None:
            ax.axvline(mean, color="k", lw=1.0, label="posterior mean")
            if std:
                ax.axvspan(mean - 2 * std, mean + 2 * std, color="C0", alpha=0.15, label="mean -/+ 2 std")
            ax.legend(frameon=False)
        ax.set_xlabel("entropy (nats)")
        ax.set_ylabel("density")
        if title:
            ax.set_title(title, fontsize=9)
        fig.tight_layout()
        _save(fig, path)
