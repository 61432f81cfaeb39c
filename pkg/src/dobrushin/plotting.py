"""Optional figure output for tabular CLI results.

matplotlib is imported lazily so the library and CLI work without it;
install the ``plot`` extra to enable ``--figure``.
"""

from __future__ import annotations

import math


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:
        raise RuntimeError("--figure needs matplotlib; install the 'plot' extra") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _wide_positive(vals) -> bool:
    v = [x for x in vals if isinstance(x, (int, float)) and math.isfinite(x)]
    return bool(v) and min(v) > 0 and max(v) / min(v) >= 100


def plot_table(header: list[str], rows: list[list], path: str, title: str = "",
               logy: bool | None = None) -> str:
    """Line plot of every numeric column against the first one, saved to ``path``."""
    plt = _pyplot()
    xs = [r[0] for r in rows]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ys_all = []
    for j, name in enumerate(header[1:], start=1):
        ys = [r[j] for r in rows]
        if not all(isinstance(y, (int, float)) and not isinstance(y, bool) for y in ys):
            continue
        ax.plot(xs, ys, lw=1.5, label=name)
        ys_all.extend(ys)
    if _wide_positive(xs):
        ax.set_xscale("log")
    if logy if logy is not None else _wide_positive(ys_all):
        ax.set_yscale("log")
    ax.set_xlabel(header[0])
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
