"""Figure rendering for sweep results and single-burst diagnostics.

Everything renders straight to PNG files next to the CSV output; nothing
opens a window.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from gclink.harness import ResultRow
from gclink.rxsync import SyncEstimate

__all__ = ["render_sweep_figures", "render_burst_diagnostics"]

_FAMILY_STYLE = {
    "cazac": dict(color="tab:blue", marker="o"),
    "golay": dict(color="tab:orange", marker="s"),
    "golay_a": dict(color="tab:orange", marker="s"),
    "zc": dict(color="tab:green", marker="^"),
    "zadoff_chu": dict(color="tab:green", marker="^"),
}


def _style(family: str) -> dict:
    return _FAMILY_STYLE.get(family, dict(marker="x"))


def render_sweep_figures(rows: list[ResultRow], outdir: str | Path) -> list[Path]:
    """Render error-vs-Eb/N0 and error-vs-length figures from sweep rows."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []

    fig, ax = plt.subplots(figsize=(7, 5))
    for family in sorted({r.family for r in rows}):
        for length in sorted({r.preamble_len for r in rows if r.family == family}):
            pts = sorted(
                (r for r in rows if r.family == family and r.preamble_len == length),
                key=lambda r: r.ebn0_db,
            )
            if len(pts) < 2:
                continue
            ax.semilogy(
                [r.ebn0_db for r in pts],
                [max(r.pb, 1e-12) for r in pts],
                label=f"{family} L={length}",
                **_style(family),
            )
    ax.set_xlabel("Eb/N0 [dB]")
    ax.set_ylabel("error metric Pb")
    ax.grid(True, which="both", alpha=0.4)
    if ax.lines:
        ax.legend()
        fig.tight_layout()
        path = outdir / "fig_error_vs_ebn0.png"
        fig.savefig(path, dpi=150)
        paths.append(path)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(7, 5))
    for family in sorted({r.family for r in rows}):
        for ebn0 in sorted({r.ebn0_db for r in rows if r.family == family}):
            pts = sorted(
                (r for r in rows if r.family == family and r.ebn0_db == ebn0),
                key=lambda r: r.preamble_len,
            )
            if len(pts) < 2:
                continue
            ax.semilogy(
                [r.preamble_len for r in pts],
                [max(r.pb, 1e-12) for r in pts],
                label=f"{family} {ebn0:g} dB",
                **_style(family),
            )
    ax.set_xlabel("preamble length [symbols]")
    ax.set_ylabel("error metric Pb")
    ax.set_xscale("log", base=2)
    ax.grid(True, which="both", alpha=0.4)
    if ax.lines:
        ax.legend()
        fig.tight_layout()
        path = outdir / "fig_error_vs_length.png"
        fig.savefig(path, dpi=150)
        paths.append(path)
    plt.close(fig)

    return paths


def render_burst_diagnostics(est: SyncEstimate, outdir: str | Path) -> list[Path]:
    """Render constellation, correlation trace, equalizer taps, CFO grid."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []

    fig, ax = plt.subplots(figsize=(5, 5))
    sym = est.recovered_symbols
    ax.scatter(np.real(sym), np.imag(sym), s=4, alpha=0.4)
    ax.set_xlabel("in-phase")
    ax.set_ylabel("quadrature")
    ax.grid(True, alpha=0.4)
    ax.set_aspect("equal")
    fig.tight_layout()
    path = outdir / "constellation.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    paths.append(path)

    if est.correlation_trace is not None:
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.plot(est.correlation_trace)
        ax.set_xlabel("window offset [rx samples]")
        ax.set_ylabel("|correlation|")
        ax.grid(True, alpha=0.4)
        fig.tight_layout()
        path = outdir / "correlation.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        paths.append(path)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.stem(np.abs(est.wiener_w))
    ax.set_xlabel("tap")
    ax.set_ylabel("|w|")
    ax.grid(True, alpha=0.4)
    fig.tight_layout()
    path = outdir / "equalizer_taps.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    paths.append(path)

    if est.grid_energies is not None:
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(est.grid_energies, marker=".")
        ax.set_xlabel("grid index")
        ax.set_ylabel("|lambda|^2")
        ax.grid(True, alpha=0.4)
        fig.tight_layout()
        path = outdir / "cfo_grid.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        paths.append(path)

    return paths
