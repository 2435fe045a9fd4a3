"""Artifact writers: deterministic CSV/JSON plus rendered figures.

CSV floats use %.17g (round-trip exact) and JSON keys are sorted, so two
runs with the same config and seed produce byte-identical numeric outputs.
Figures are rendered with the Agg backend next to the tables; PNG bytes are
not part of the determinism contract.
"""

from __future__ import annotations

import csv
import json
import os
from typing import Dict, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .grid import MeridianGrid

FLOAT_FMT = "%.17g"


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return FLOAT_FMT % x
    return str(x)


def write_csv(path: str, header: Sequence[str],
              rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(header)
        for row in rows:
            wr.writerow([_fmt(x) for x in row])


class _JSONEncoder(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, (np.floating,)):
            return float(o)
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, (np.bool_,)):
            return bool(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        return super().default(o)


def write_json(path: str, payload: Dict) -> None:
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True, cls=_JSONEncoder)
        f.write("\n")


def summary(command: str, config_echo: Dict, results: Dict,
            artifacts: Sequence[str]) -> Dict:
    return {"command": command, "config": config_echo,
            "results": results, "artifacts": sorted(artifacts)}


# ---------------------------------------------------------------- figures

def plot_spectrum(path: str, eigenvalues: np.ndarray,
                  reference: Optional[np.ndarray] = None) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    k = np.arange(1, len(eigenvalues) + 1)
    ax.plot(k, eigenvalues, "o-", label="computed")
    if reference is not None:
        ax.plot(k[:len(reference)], reference, "x--", label="separable")
        ax.legend()
    ax.set_xlabel("index k")
    ax.set_ylabel(r"$\lambda_k$")
    ax.set_title("meridian spectrum")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_sweep(path: str, lams: Sequence[float], c: Sequence[float],
               upper: Sequence[float], lower: Sequence[float],
               c0: Optional[float] = None) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    lams = np.asarray(lams)
    ax.plot(lams, c, "o-", label=r"$c_\lambda$")
    ax.plot(lams, upper, "--", label="upper bound")
    ax.plot(lams, lower, ":", label="lower bound")
    if c0 is not None:
        ax.axhline(c0, color="gray", lw=0.8, label=r"$c_0$")
    ax.set_xlabel(r"$\lambda$")
    ax.set_ylabel("level")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_field(path: str, grid: MeridianGrid, phi: np.ndarray,
               title: str = "ground state") -> None:
    full = grid.to_full(phi)
    fig, ax = plt.subplots(figsize=(4.5, 4))
    pc = ax.pcolormesh(grid.r, grid.z, full.T, shading="nearest",
                       cmap="viridis")
    fig.colorbar(pc, ax=ax, label=r"$\varphi$")
    ax.set_xlabel("r")
    ax.set_ylabel("z")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_bubble(path: str, rows: Sequence[Dict[str, float]]) -> None:
    """Log-log decay of test inner products against the scale parameter."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    eps = [r["eps"] for r in rows]
    keys = sorted(k for k in rows[0] if k.startswith("inner_M_"))
    for k in keys:
        ax.loglog(eps, [abs(r[k]) for r in rows], "o-", label=k)
    ax.loglog(eps, [r["l6"] for r in rows], "s--", label=r"$|\varphi_\epsilon|_6$")
    ax.set_xlabel(r"$\epsilon$")
    ax.legend(fontsize=8)
    ax.set_title("concentration diagnostics")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
