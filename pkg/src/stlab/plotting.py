"""Figures written next to the CSV/JSON reports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _floats(values):
    return [float(v) for v in values]


def render_report(report: dict, path: Path) -> Path | None:
    """Plot the report's series (log-log when positive) and target lines.

    Returns the written path, or ``None`` when the report has nothing to draw.
    """
    series = report.get("series") or {}
    rows = report.get("rows") or []
    if not series and not rows:
        return None
    fig, axes = plt.subplots(1, 2 if series else 1, figsize=(11 if series else 6, 4.2),
                             squeeze=False)
    ax_rows = axes[0, -1]
    if series:
        ax = axes[0, 0]
        positive = True
        for name, s in series.items():
            x, y = _floats(s["x"]), _floats(s["y"])
            ax.plot(x, y, lw=1.0, label=name)
            positive &= all(v > 0 for v in x) and all(v > 0 for v in y)
        targets = sorted({r["target"] for r in rows
                          if r["compare"] == "rel" and isinstance(r["target"], float)})
        for t in targets[:3]:
            ax.axhline(t, color="k", ls="--", lw=0.8)
        if positive:
            ax.set_xscale("log")
        ax.set_title(report["id"])
        ax.legend(fontsize=7)
        ax.grid(alpha=0.3)
    labels = [f"{r['label']}" + (f" {list(r['params'].values())[0]}" if r["params"] else "")
              for r in rows]
    measured = [r["measured"] if isinstance(r["measured"], float) else float("nan") for r in rows]
    target = [r["target"] if isinstance(r["target"], float) else float("nan") for r in rows]
    colors = ["tab:green" if r["pass"] else "tab:red" for r in rows]
    idx = list(range(len(rows)))
    ax_rows.scatter(idx, measured, c=colors, zorder=3, label="measured")
    ax_rows.scatter(idx, target, marker="_", s=200, c="k", label="target")
    if len(rows) <= 12:
        ax_rows.set_xticks(idx)
        ax_rows.set_xticklabels(labels, rotation=45, ha="right", fontsize=7)
    ax_rows.set_title(f"{report['kind']}: {'pass' if report['pass'] else 'FAIL'}")
    ax_rows.legend(fontsize=7)
    ax_rows.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path
