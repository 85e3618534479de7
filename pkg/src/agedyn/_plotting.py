"""Headless SVG plot helpers (matplotlib Agg backend)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def save_lines(path, curves, xlabel="", ylabel="", title="", legend=True):
    """curves: list of (x, y, label)."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for x, y, label in curves:
        ax.plot(x, y, lw=1.2, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if legend and any(lbl for _, _, lbl in curves):
        ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def save_scatter(path, x, y, xlabel="", ylabel="", title="", size=1.0, alpha=0.25):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.scatter(x, y, s=size, alpha=alpha, linewidths=0, color="k")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def save_heatmap(path, x, y, z, xlabel="", ylabel="", title="", overlays=(), cbar_label=""):
    """z indexed [y, x]; overlays: list of (x_line, y_line, style, label)."""
    fig, ax = plt.subplots(figsize=(5.6, 4.6))
    mesh = ax.pcolormesh(x, y, z, shading="auto", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label=cbar_label)
    for ox, oy, style, label in overlays:
        ax.plot(ox, oy, style, lw=1.2, label=label)
    ax.set_xlim(x.min(), x.max())
    ax.set_ylim(y.min(), y.max())
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if overlays:
        ax.legend(frameon=False, fontsize=8, loc="upper left")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def save_strips(path, strips, xlabel="evolutionary time", ylabel="age", title=""):
    """Successive equilibrium age profiles as vertical strips.

    strips: list of (t_start, t_end, ages, values); each strip is shaded by
    its density values.
    """
    fig, ax = plt.subplots(figsize=(6.5, 4))
    vmax = max(float(np.max(v)) for *_rest, v in [(s[0], s[1], s[2], s[3]) for s in strips])
    for t0, t1, ages, values in strips:
        img = values[:, None]
        ax.imshow(img, extent=(t0, t1, ages[0], ages[-1]), origin="lower",
                  aspect="auto", cmap="inferno", vmin=0.0, vmax=vmax)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def save_step(path, times, values, xlabel="", ylabel="", title=""):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.step(times, values, where="post", lw=1.2, color="k")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path
