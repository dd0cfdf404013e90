"""Figure rendering: pure views of ipslab artifacts, one file per call.

Five figure kinds:

  trace-h       window relative entropy h(t)
  trace-g       entropy loss g(t) with its bulk/boundary split
  site-heatmap  per-site alpha / beta / gamma over the window geometry
  mass-floor    positive-mass floor curves over time, per initial state
  shell-decay   shell values of the d>=3 construction on log-log axes

Rendering is deterministic: fixed style, Agg backend, no embedded dates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import readers

plt.rcParams.update(
    {
        "figure.figsize": (6.4, 4.0),
        "figure.dpi": 130,
        "savefig.dpi": 130,
        "axes.grid": True,
        "grid.alpha": 0.3,
        "font.size": 9,
        "svg.hashsalt": "ipslab-plots",
    }
)

FIGURE_KINDS = ("trace-h", "trace-g", "site-heatmap", "mass-floor", "shell-decay")


@dataclass(frozen=True)
class FigureSpec:
    """What to draw, from which artifact, into which file."""

    kind: str
    inputs: tuple[str, ...]
    out: str
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; known: {FIGURE_KINDS}")
        if not self.inputs:
            raise ValueError("at least one input artifact required")


def _save(fig, out):
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, metadata={"Date": None} if out.suffix == ".svg" else None)
    plt.close(fig)
    return out


def _title_from(meta, fallback):
    model = meta.get("model")
    scenario = meta.get("scenario")
    bits = [b for b in (model, scenario) if b]
    return " / ".join(bits) if bits else fallback


def render_trace_h(spec: FigureSpec):
    fig, ax = plt.subplots()
    for path in spec.inputs:
        meta, cols = readers.read_trace(path)
        ax.plot(cols["t"], cols["h"], marker="o", ms=3,
                label=_title_from(meta, Path(path).stem))
    ax.set_xlabel("t")
    ax.set_ylabel("window relative entropy h(t)")
    if spec.options.get("logy"):
        ax.set_yscale("log")
    ax.legend()
    ax.set_title("window relative entropy along the evolution")
    return _save(fig, spec.out)


def render_trace_g(spec: FigureSpec):
    fig, ax = plt.subplots()
    meta, cols = readers.read_trace(spec.inputs[0])
    ax.plot(cols["t"], cols["g_direct"], marker="o", ms=3, label="g (direct)")
    ax.plot(cols["t"], cols["g_bulk"], ls="--", label="bulk part")
    ax.plot(cols["t"], cols["g_boundary"], ls=":", label="boundary part")
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("entropy loss g(t)")
    ax.legend()
    ax.set_title(f"entropy loss split: {_title_from(meta, Path(spec.inputs[0]).stem)}")
    return _save(fig, spec.out)


def _site_grid(coords, values):
    """Arrange per-site values onto their window geometry (1d or 2d)."""
    coords = [tuple(c) for c in coords]
    dims = len(coords[0])
    if dims == 1:
        xs = sorted(c[0] for c in coords)
        grid = np.full((1, len(xs)), np.nan)
        for c, v in zip(coords, values):
            grid[0, xs.index(c[0])] = v
        return grid, [str(x) for x in xs], [""]
    xs = sorted({c[0] for c in coords})
    ys = sorted({c[1] for c in coords})
    grid = np.full((len(ys), len(xs)), np.nan)
    for c, v in zip(coords, values):
        grid[ys.index(c[1]), xs.index(c[0])] = v
    return grid, [str(x) for x in xs], [str(y) for y in ys]


def render_site_heatmap(spec: FigureSpec):
    meta, tables = readers.read_site_tables(spec.inputs[0])
    panels = [("alpha_final", "alpha"), ("beta_final", "beta"), ("gamma", "gamma")]
    fig, axes = plt.subplots(1, len(panels), figsize=(10.8, 3.4))
    for ax, (key, label) in zip(axes, panels):
        grid, xt, yt = _site_grid(tables["coords"], tables[key])
        im = ax.imshow(grid, origin="lower", aspect="equal", cmap="viridis")
        ax.set_xticks(range(len(xt)), xt)
        ax.set_yticks(range(len(yt)), yt)
        ax.set_title(label)
        fig.colorbar(im, ax=ax, shrink=0.8)
    fig.suptitle(f"site coefficients: {_title_from(meta, Path(spec.inputs[0]).stem)}")
    return _save(fig, spec.out)


def render_mass_floor(spec: FigureSpec):
    fig, ax = plt.subplots()
    meta, cols = readers.read_mass_floor(spec.inputs[0])
    labels = cols["init_label"]
    for label in sorted(set(labels)):
        mask = labels == label
        order = np.argsort(cols["t"][mask])
        ax.errorbar(
            cols["t"][mask][order],
            cols["floor"][mask][order],
            yerr=cols["std_err"][mask][order],
            marker="o",
            ms=3,
            alpha=0.55,
            label=str(label),
        )
    ts = sorted(set(cols["t"]))
    floor_curve = [cols["floor"][cols["t"] == t].min() for t in ts]
    ax.plot(ts, floor_curve, "k-", lw=2, label="floor (min over starts)")
    ax.set_xlabel("t")
    ax.set_ylabel("minimum cylinder probability")
    ax.set_ylim(bottom=-0.02)
    ax.legend(fontsize=7)
    ax.set_title(f"positive-mass floor: {_title_from(meta, Path(spec.inputs[0]).stem)}")
    return _save(fig, spec.out)


def render_shell_decay(spec: FigureSpec):
    fig, ax = plt.subplots()
    meta, cols = readers.read_shell_table(spec.inputs[0])
    k = cols["k"]
    alpha = cols["alpha"]
    positive = alpha > 0
    ax.loglog(k[positive], alpha[positive], "o-", ms=4, label="shell value")
    d = int(meta.get("d", 3))
    if positive.any():
        ref = alpha[positive][0] * (k[positive] / k[positive][0]) ** (-(2 * d - 2))
        ax.loglog(k[positive], ref, "k--", lw=0.9,
                  label=f"slope -(2d-2) = {-(2 * d - 2)}")
    ax.set_xlabel("shell radius k")
    ax.set_ylabel("coefficient value")
    ax.legend()
    ax.set_title(f"shell construction, d={d}, a={meta.get('a', '?'):.4g}"
                 if isinstance(meta.get("a"), float) else f"shell construction, d={d}")
    return _save(fig, spec.out)


_RENDERERS = {
    "trace-h": render_trace_h,
    "trace-g": render_trace_g,
    "site-heatmap": render_site_heatmap,
    "mass-floor": render_mass_floor,
    "shell-decay": render_shell_decay,
}


def render(spec: FigureSpec):
    """Render one figure file; never recomputes anything."""
    return _RENDERERS[spec.kind](spec)
