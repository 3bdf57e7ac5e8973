"""Figure rendering for CLI runs: one PNG per result table.

Kept separate from the computation path; the CLI calls `render` after the
CSV is written when plotting was requested.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["render"]

_EXACT_STYLE = dict(marker="o", mfc="none", color="crimson", ls="none", ms=4)
_ASYM_STYLE = dict(color="black", lw=1.2)


def _col(rows, name):
    return [row[name] for row in rows]


def _finish(fig, ax, path, xlabel, ylabel, title):
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render(task: str, report: str, rows: list[dict], path: str) -> None:
    """Render the task-appropriate figure for a finished sweep."""
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    if task == "work" and report == "quality":
        eps = _col(rows, "epsilon")
        ax.plot(eps, _col(rows, "Fbat_target"), label="target battery state", **_ASYM_STYLE)
        ax.plot(eps, _col(rows, "Fbat_final"), "--", color="crimson", lw=1.2,
                label="actual final battery state")
        ax.axhline(rows[0]["F"], color="gray", ls=":", lw=1.0, label="initial free energy")
        _finish(fig, ax, path, "transformation error", "battery free energy", "work quality")
    elif task == "work":
        eps = _col(rows, "epsilon")
        ax.plot(eps, _col(rows, "W_asymptotic"), label="second order", **_ASYM_STYLE)
        ax.plot(eps, _col(rows, "W_exact"), label="exact optimum", **_EXACT_STYLE)
        ax.axhline(rows[0]["F"], color="gray", ls=":", lw=1.0, label="initial free energy")
        _finish(fig, ax, path, "transformation error", "extracted work", "optimal work extraction")
    elif task == "erasure":
        eps = _col(rows, "epsilon")
        ax.plot(eps, _col(rows, "W_cost"), label="closed form", **_ASYM_STYLE)
        ax.plot(eps, _col(rows, "W_exact"), label="exact optimum", **_EXACT_STYLE)
        _finish(fig, ax, path, "erasure error", "work cost", "optimal erasure cost")
    elif task == "encode":
        eps = _col(rows, "eps_d")
        ax.plot(eps, _col(rows, "R"), label="rate log M / N", **_EXACT_STYLE)
        _finish(fig, ax, path, "decoding error", "encoding rate (nats)", "thermodynamically-free encoding")
    elif task == "pure-distill":
        n = _col(rows, "N")
        ax.plot(n, _col(rows, "epsilon_asymptotic"), label="Gaussian limit", **_ASYM_STYLE)
        ax.plot(n, _col(rows, "epsilon_exact"), label="exact optimum", **_EXACT_STYLE)
        ax.set_xscale("log", base=2)
        _finish(fig, ax, path, "number of copies", "transformation error", "pure-state distillation")
    elif task == "mc-validate":
        n = _col(rows, "N")
        est = _col(rows, "estimate")
        err = [3.0 * s for s in _col(rows, "stderr")]
        ax.errorbar(n, est, yerr=err, fmt="o", ms=4, color="crimson", label="Monte Carlo (3 s.e.)")
        ax.plot(n, _col(rows, "phi_x"), label="Gaussian", **_ASYM_STYLE)
        ax.set_xscale("log")
        _finish(fig, ax, path, "number of copies", "success probability", "hyperplane validation")
    elif task == "dh":
        eps = _col(rows, "epsilon")
        ax.plot(eps, _col(rows, "dh_second_order"), label="second order", **_ASYM_STYLE)
        ax.plot(eps, _col(rows, "dh"), label="exact", **_EXACT_STYLE)
        _finish(fig, ax, path, "type-I error", "hypothesis-testing relative entropy (nats)",
                "hypothesis testing")
    else:  # distill
        x = _col(rows, "x")
        ax.plot(x, _col(rows, "epsilon_asymptotic"), label="Gaussian limit", **_ASYM_STYLE)
        ax.plot(x, _col(rows, "epsilon_upper_bound"), ":", color="steelblue", lw=1.2,
                label="single-shot bound")
        ax.plot(x, _col(rows, "epsilon_exact"), label="exact optimum", **_EXACT_STYLE)
        _finish(fig, ax, path, "standardized free energy gap", "transformation error",
                "distillation error")
