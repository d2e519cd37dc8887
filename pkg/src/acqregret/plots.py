"""
Figures for a finished regret experiment.

Per benchmark, two SVG panels are written:

* ``<bench>_min.svg``: incumbent best observation against round, one faint
  line per repeat and the across-repeat mean on top;
* ``<bench>_diff.svg``: regret difference per start count, the raw
  across-repeat mean faint and its trailing moving average solid.

``<bench>_curves.csv`` holds the plotted numbers.  SVG output carries no
timestamp and uses a fixed id salt, so equal inputs give equal files.
"""

from __future__ import annotations

import math
import os

import numpy as np

from .regret import moving_average

__all__ = ["emit_plots", "curves", "curves_header"]


def curves(records, histories_best, counts, window):
    """Plotted series.

    ``histories_best`` is a list (one per repeat) of the incumbent best
    after each BO round.  Returns ``(rounds, best_mean, {N: raw}, {N: ma})``.
    """
    rounds = sorted({r.round for r in records if r.error is None})
    raw = {}
    for n in counts:
        by_round = {t: [] for t in rounds}
        for r in records:
            if r.error is None and math.isfinite(r.regret_diff[n]):
                by_round[r.round].append(r.regret_diff[n])
        raw[n] = np.array([np.mean(by_round[t]) if by_round[t] else np.nan for t in rounds])
    ma = {n: moving_average(raw[n], window) for n in counts}
    T = len(rounds)
    best = np.full(T, np.nan)
    if histories_best:
        stack = np.full((len(histories_best), T), np.nan)
        for i, h in enumerate(histories_best):
            h = np.asarray(h, dtype=float)[:T]
            stack[i, : h.size] = h
        with np.errstate(all="ignore"):
            best = np.nanmean(stack, axis=0)
    return np.array(rounds), best, raw, ma


def curves_header(counts) -> str:
    cols = ["round", "best_mean"]
    cols += [f"regret_diff_{n}_mean" for n in counts]
    cols += [f"regret_diff_{n}_ma" for n in counts]
    return ",".join(cols)


def emit_plots(records, histories_best, counts, out_dir, benchmark: str, window: int = 10):
    """Write the two panels and the curve CSV; returns the written paths."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(out_dir, exist_ok=True)
    rounds, best, raw, ma = curves(records, histories_best, counts, window)
    paths = []

    csv_path = os.path.join(out_dir, f"{benchmark}_curves.csv")
    try:
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(curves_header(counts) + "\n")
            for i, t in enumerate(rounds):
                cells = [str(int(t)), repr(float(best[i]))]
                cells += [repr(float(raw[n][i])) for n in counts]
                cells += [repr(float(ma[n][i])) for n in counts]
                fh.write(",".join(cells) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {csv_path}: {exc}") from exc
    paths.append(csv_path)

    rc = {"svg.hashsalt": "acqregret", "svg.fonttype": "path"}
    with plt.rc_context(rc):
        fig, ax = plt.subplots(figsize=(5, 3.2))
        for h in histories_best:
            h = np.asarray(h, dtype=float)[: len(rounds)]
            ax.plot(rounds[: h.size], h, color="tab:blue", alpha=0.15, lw=0.8)
        ax.plot(rounds, best, color="tab:blue", lw=2, label="DIRECT (mean)")
        ax.set_xlabel("round")
        ax.set_ylabel("best observed f")
        ax.set_title(f"{benchmark}: incumbent")
        ax.legend(loc="upper right", fontsize=8)
        fig.tight_layout()
        paths.append(_save(fig, os.path.join(out_dir, f"{benchmark}_min.svg")))
        plt.close(fig)

        fig, ax = plt.subplots(figsize=(5, 3.2))
        colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
        for i, n in enumerate(counts):
            c = colors[i % len(colors)]
            ax.plot(rounds, raw[n], color=c, alpha=0.3, lw=0.8)
            ax.plot(rounds, ma[n], color=c, lw=2, label=f"N={n}")
        ax.set_xlabel("round")
        ax.set_ylabel("regret difference")
        ax.set_title(f"{benchmark}: DIRECT vs N-start local")
        ax.legend(loc="upper right", fontsize=8)
        fig.tight_layout()
        paths.append(_save(fig, os.path.join(out_dir, f"{benchmark}_diff.svg")))
        plt.close(fig)
    return paths


def _save(fig, path):
    try:
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path
