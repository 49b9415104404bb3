"""Headless figure rendering for snapshots and diagnostics tables."""

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .formats import FormatError, read_csv_table, read_snapshot
from .nematic import director_angle, order_parameter

__all__ = ["PlotSpec", "render"]

KINDS = ("director", "order", "velocity", "energy", "twin")


@dataclass
class PlotSpec:
    kind: str
    input_path: str
    output_path: str = ""
    colormap: str = "viridis"
    stride: int = 4

    def resolved_output(self):
        if self.output_path:
            return self.output_path
        stem = Path(self.input_path)
        return str(stem.with_name(f"{stem.stem}_{self.kind}.png"))


def _axes_grid(snap):
    h = snap.length / snap.n
    x = np.arange(snap.n) * h
    return np.meshgrid(x, x, indexing="ij")


def _render_order(spec, snap, ax, fig):
    s = order_parameter(snap["q11"], snap["q12"])
    im = ax.imshow(s.T, origin="lower", cmap=spec.colormap,
                   extent=(0, snap.length, 0, snap.length))
    fig.colorbar(im, ax=ax, label="order parameter S")
    ax.set_title(f"S(x), t = {snap.t:g}")


def _render_director(spec, snap, ax, fig):
    s = order_parameter(snap["q11"], snap["q12"])
    theta = director_angle(snap["q11"], snap["q12"])
    im = ax.imshow(s.T, origin="lower", cmap=spec.colormap,
                   extent=(0, snap.length, 0, snap.length), alpha=0.85)
    fig.colorbar(im, ax=ax, label="order parameter S")
    X, Y = _axes_grid(snap)
    k = max(1, spec.stride)
    sl = (slice(None, None, k), slice(None, None, k))
    # the director is a line field (n and -n identical): headless segments
    scale = 0.45 * k * snap.length / snap.n
    dx = scale * np.cos(theta[sl])
    dy = scale * np.sin(theta[sl])
    degenerate = s[sl] <= 1e-12
    xs, ys = X[sl], Y[sl]
    segs_x = np.stack([xs - dx, xs + dx]).reshape(2, -1)
    segs_y = np.stack([ys - dy, ys + dy]).reshape(2, -1)
    ax.plot(segs_x, segs_y, color="black", linewidth=0.8)
    if degenerate.any():
        ax.plot(xs[degenerate], ys[degenerate], "rx", markersize=3,
                label="degenerate")
        ax.legend(loc="upper right")
    ax.set_title(f"director, t = {snap.t:g}")


def _render_velocity(spec, snap, ax, fig):
    ux, uy = snap["ux"], snap["uy"]
    speed = np.hypot(ux, uy)
    im = ax.imshow(speed.T, origin="lower", cmap=spec.colormap,
                   extent=(0, snap.length, 0, snap.length))
    fig.colorbar(im, ax=ax, label="|u|")
    X, Y = _axes_grid(snap)
    k = max(1, spec.stride)
    sl = (slice(None, None, k), slice(None, None, k))
    if speed.max() > 0:
        ax.quiver(X[sl], Y[sl], ux[sl], uy[sl], color="white", width=0.003)
    ax.set_title(f"velocity, t = {snap.t:g}")


def _render_energy(spec, ax, fig):
    table = read_csv_table(spec.input_path)
    t = table["t"]
    for name in ("E", "kinetic", "elastic", "bulk"):
        ax.plot(t, table[name], label=name)
    ax.set_xlabel("t")
    ax.set_ylabel("energy")
    ax.legend()
    twin = ax.twinx()
    twin.plot(t, table["hs_phi"], color="gray", linestyle="--",
              label="phi")
    twin.set_ylabel("phi")
    ax.set_title("energy budget")


def _render_twin(spec, ax, fig):
    table = read_csv_table(spec.input_path)
    t = table["t"]
    for name in ("dQ_l2", "dQ_h1", "du_l2"):
        vals = table[name]
        if np.any(vals > 0):
            ax.semilogy(t[vals > 0], vals[vals > 0], label=name)
        else:
            ax.plot(t, vals, label=name)
    ax.set_xlabel("t")
    ax.set_ylabel("squared twin deltas")
    ax.legend()
    ax.set_title("twin-run separation")


def render(spec):
    """Render one figure to spec's output path; returns the path."""
    if spec.kind not in KINDS:
        raise FormatError(f"unknown plot kind {spec.kind!r}")
    fig, ax = plt.subplots(figsize=(6.4, 5.4), dpi=130)
    try:
        if spec.kind in ("director", "order", "velocity"):
            snap = read_snapshot(spec.input_path)
            needed = {"director": ("q11", "q12"), "order": ("q11", "q12"),
                      "velocity": ("ux", "uy")}[spec.kind]
            missing = [f for f in needed if f not in snap.fields]
            if missing:
                raise FormatError(
                    f"snapshot lacks fields: {', '.join(missing)}")
            if spec.kind == "order":
                _render_order(spec, snap, ax, fig)
            elif spec.kind == "director":
                _render_director(spec, snap, ax, fig)
            else:
                _render_velocity(spec, snap, ax, fig)
        elif spec.kind == "energy":
            _render_energy(spec, ax, fig)
        else:
            _render_twin(spec, ax, fig)
        out = spec.resolved_output()
        fig.savefig(out, bbox_inches="tight")
        return out
    finally:
        plt.close(fig)
