"""Figure rendering for CLI reports.

Each report writer has a matching figure renderer that saves a PNG next
to the delimited output.  Matplotlib is imported lazily with the Agg
backend so headless runs work and data-only paths stay fast.
"""

from __future__ import annotations

from typing import Any, Sequence


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    _plt().close(fig)


def save_regression_figure(path: Any, slopes: Sequence[float], intercepts: Sequence[float]) -> None:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 4))
    steps = range(len(slopes))
    ax.plot(steps, slopes, label="slope")
    ax.plot(steps, intercepts, label="intercept")
    ax.set_xlabel("step")
    ax.set_ylabel("coefficient")
    ax.set_title("Line coefficients over training")
    ax.legend()
    _save(fig, path)


def save_rps_figure(path: Any, cumulative_a: Sequence[float], cumulative_b: Sequence[float],
                    label_a: str, label_b: str) -> None:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 4))
    rounds = range(1, len(cumulative_a) + 1)
    ax.plot(rounds, cumulative_a, label=label_a)
    ax.plot(rounds, cumulative_b, label=label_b)
    ax.set_xlabel("round")
    ax.set_ylabel("cumulative score")
    ax.set_title("Tournament scores")
    ax.legend()
    _save(fig, path)


def save_bandit_figure(path: Any, arm_labels: Sequence[str], pull_history: Sequence[Sequence[int]]) -> None:
    """pull_history[arm][step] holds that arm's cumulative pull count."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, counts in zip(arm_labels, pull_history):
        ax.plot(range(len(counts)), counts, label=label)
    ax.set_xlabel("step")
    ax.set_ylabel("cumulative pulls")
    ax.set_title("Arm pulls over time")
    ax.legend()
    _save(fig, path)


def save_principled_figure(path: Any, fraction_optimal: float, threshold: int, trials: int) -> None:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.bar(["optimal"], [fraction_optimal], color="tab:blue")
    ax.axhline(1.0, color="gray", linestyle=":")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("fraction of trials")
    ax.set_title(f"Stabilized policies optimal everywhere\n(t={threshold}, {trials} trials)")
    _save(fig, path)


def save_sortbench_figure(path: Any, report: dict) -> None:
    plt = _plt()
    fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4))
    contexts = [row["context"] for row in report["policy"]]
    for alg, style in (("msort", "-o"), ("isort", "-s")):
        costs = [row["avg_costs"][alg] for row in report["policy"]]
        left.plot(contexts, costs, style, markersize=3, label=alg)
    if report["cutoff_context"] is not None:
        left.axvline(report["cutoff_context"], color="gray", linestyle=":", label="cutoff")
    left.set_xlabel("size context (isqrt of length)")
    left.set_ylabel("average cost")
    left.set_title("Learned per-context costs")
    left.legend()

    sweep = report["baselines"]["sweep"]
    cutoffs = sorted(sweep, key=int)
    right.plot([int(c) for c in cutoffs], [sweep[c] for c in cutoffs], "-o", markersize=3,
               label="fixed cutoff")
    right.axhline(report["learned"]["comparisons"], color="tab:red", linestyle="--",
                  label="learned policy")
    right.set_xscale("log", base=2)
    right.set_xlabel("fixed cutoff (list length)")
    right.set_ylabel("total comparisons")
    right.set_title("Frozen policy vs fixed cutoffs")
    right.legend()
    _save(fig, path)


def save_lmopt_figure(path: Any, report: dict) -> None:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 4))
    names = sorted(report)
    width = 0.38
    xs = range(len(names))
    ax.bar([x - width / 2 for x in xs], [report[n]["standard"] for n in names], width,
           label="standard")
    ax.bar([x + width / 2 for x in xs], [report[n]["adaptive"] for n in names], width,
           label="adaptive")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(names, rotation=15)
    ax.set_ylabel("averaged scaled reduction in loss")
    ax.set_title("Budgeted optimization")
    ax.legend()
    _save(fig, path)
