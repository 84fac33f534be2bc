"""Render figures from pt-hybrid output directories.

Consumes the CSV/JSON files written by the ``pt-hybrid`` CLI (the files are
never modified) and produces SVG images (PNG optional):

* fig2 - switch-allowance curves per gain order from ``bounds.csv``
  (log-scale y) plus the classical dwell-time reference line;
* fig3 - state trajectories with the switching signal and dwell state
  stacked below (``trajectory.csv`` + ``signal.csv``);
* fig4 - log-scale error norm from ``errors.csv``;
* fig5 - state trace with dwell/monitor/signal panels (``trajectory.csv``
  + ``signal.csv``);
* fig6 - the two error curves from ``errors.csv`` (log-scale) with the
  signal panel.

Rendering is deterministic: no timestamps are embedded in the outputs.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

FIGURES = ("fig2", "fig3", "fig4", "fig5", "fig6")


class SchemaError(ValueError):
    """An input file is missing or lacks required columns."""


@dataclass
class FigureJob:
    in_dir: Path
    figure: str
    out_path: Path
    png: bool = False
    log_y: bool | None = None  # override the per-figure default
    title: str | None = None
    style: dict = field(default_factory=dict)

    def __post_init__(self):
        self.in_dir = Path(self.in_dir)
        self.out_path = Path(self.out_path)
        if self.figure not in FIGURES:
            raise SchemaError(f"unknown figure tag {self.figure!r}; expected one of {FIGURES}")


def _read_table(path: Path, required: tuple) -> dict:
    if not path.exists():
        raise SchemaError(f"missing input file {path}")
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        names = reader.fieldnames or []
        missing = [c for c in required if c not in names]
        if missing:
            raise SchemaError(f"{path} lacks required columns: {', '.join(missing)}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path} has no data rows")
    return {name: [row[name] for row in rows] for name in names}


def _floats(col):
    return np.array([float(v) for v in col])


def _read_signal(in_dir: Path):
    table = _read_table(in_dir / "signal.csv", ("start_time", "mode"))
    sidecar_path = in_dir / "signal.json"
    if not sidecar_path.exists():
        raise SchemaError(f"missing input file {sidecar_path}")
    sidecar = json.loads(sidecar_path.read_text())
    starts = _floats(table["start_time"])
    modes = np.array([int(v) for v in table["mode"]])
    return starts, modes, float(sidecar["end_time"])


def _save(fig, job: FigureJob):
    job.out_path.parent.mkdir(parents=True, exist_ok=True)
    fmt = "png" if job.png else "svg"
    # fixed hash salt + no date metadata: byte-identical re-renders
    with plt.rc_context({"svg.hashsalt": "plotkit"}):
        fig.savefig(job.out_path, format=fmt, metadata=None if job.png else {"Date": None})
    plt.close(fig)


def _step_signal(ax, starts, modes, end_time, **kw):
    xs = np.concatenate([starts, [end_time]])
    ys = np.concatenate([modes, [modes[-1]]])
    ax.step(xs, ys, where="post", **kw)
    ax.set_yticks(sorted(set(int(m) for m in modes)))


def _render_fig2(job: FigureJob):
    table = _read_table(job.in_dir / "bounds.csv", ("delta", "k", "bound"))
    deltas = _floats(table["delta"])
    bounds = _floats(table["bound"])
    ks = np.array(table["k"])
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    for k in sorted({v for v in ks if v != "adt"}, key=float):
        sel = ks == k
        ax.plot(deltas[sel], bounds[sel], label=f"gain order {k}")
    sel = ks == "adt"
    if np.any(sel):
        ax.plot(deltas[sel], bounds[sel], "--", color="purple", label="classical dwell bound")
    ax.set_yscale("log" if job.log_y is not False else "linear")
    ax.set_xlabel("window length")
    ax.set_ylabel("allowed switches")
    ax.legend(fontsize=8)
    ax.set_title(job.title or "switch allowance vs window length")
    fig.tight_layout()
    _save(fig, job)


def _state_columns(table):
    return [c for c in table if c.startswith("x") and c[1:].isdigit()]


def _render_fig3(job: FigureJob):
    traj = _read_table(job.in_dir / "trajectory.csv", ("t", "s", "j", "q", "tau", "mu"))
    starts, modes, end_time = _read_signal(job.in_dir)
    t = _floats(traj["t"])
    fig, (ax_x, ax_sig) = plt.subplots(
        2, 1, figsize=(6.0, 4.6), sharex=True, height_ratios=[2.2, 1.0]
    )
    for c in _state_columns(traj):
        ax_x.plot(t, _floats(traj[c]), lw=0.9)
    ax_x.set_ylabel("agent states")
    ax_x.set_title(job.title or "regulation under switching digraphs")
    _step_signal(ax_sig, starts, modes, end_time, color="purple", lw=1.0, label="mode")
    ax_tau = ax_sig.twinx()
    ax_tau.plot(t, _floats(traj["tau"]), color="brown", lw=0.8, label="dwell state")
    ax_sig.set_xlabel("t")
    ax_sig.set_ylabel("mode")
    ax_tau.set_ylabel("dwell state")
    fig.tight_layout()
    _save(fig, job)


def _render_fig4(job: FigureJob):
    table = _read_table(job.in_dir / "errors.csv", ("t", "s", "error"))
    fig, ax = plt.subplots(figsize=(4.6, 3.4))
    err = np.maximum(_floats(table["error"]), 1e-300)
    ax.plot(_floats(table["t"]), err)
    if job.log_y is not False:
        ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("error norm")
    ax.set_title(job.title or "distance to target")
    fig.tight_layout()
    _save(fig, job)


def _render_fig5(job: FigureJob):
    traj = _read_table(job.in_dir / "trajectory.csv", ("t", "s", "j", "q", "tau", "rho", "mu"))
    if all(v == "" for v in traj["rho"]):
        raise SchemaError("trajectory.csv carries no monitor state (rho column empty)")
    starts, modes, end_time = _read_signal(job.in_dir)
    t = _floats(traj["t"])
    fig, (ax_x, ax_a) = plt.subplots(
        2, 1, figsize=(6.0, 4.6), sharex=True, height_ratios=[1.6, 1.0]
    )
    for c in _state_columns(traj):
        ax_x.plot(t, _floats(traj[c]), lw=1.0)
    ax_x.set_ylabel("state")
    ax_x.set_title(job.title or "intermittent feedback")
    ax_a.plot(t, _floats(traj["tau"]), color="orange", lw=0.9, label="dwell state")
    ax_a.plot(t, _floats(traj["rho"]), color="green", lw=0.9, label="activation budget")
    _step_signal(ax_a, starts, modes, end_time, color="red", lw=0.9, label="mode")
    ax_a.set_xlabel("t")
    ax_a.legend(fontsize=7)
    fig.tight_layout()
    _save(fig, job)


def _render_fig6(job: FigureJob):
    table = _read_table(job.in_dir / "errors.csv", ("t", "s", "nesmr", "ptpsg"))
    starts, modes, end_time = _read_signal(job.in_dir)
    fig, (ax_e, ax_sig) = plt.subplots(
        2, 1, figsize=(6.0, 4.6), sharex=True, height_ratios=[2.0, 1.0]
    )
    t = _floats(table["t"])
    for name, label in (("nesmr", "momentum + restarts"), ("ptpsg", "pseudo-gradient flow")):
        ax_e.plot(t, np.maximum(_floats(table[name]), 1e-300), label=label)
    if job.log_y is not False:
        ax_e.set_yscale("log")
    ax_e.set_ylabel("distance to equilibrium")
    ax_e.legend(fontsize=8)
    ax_e.set_title(job.title or "equilibrium seeking under a shared signal")
    _step_signal(ax_sig, starts, modes, end_time, color="green", lw=1.0)
    ax_sig.set_xlabel("t")
    ax_sig.set_ylabel("mode")
    fig.tight_layout()
    _save(fig, job)


_RENDERERS = {
    "fig2": _render_fig2,
    "fig3": _render_fig3,
    "fig4": _render_fig4,
    "fig5": _render_fig5,
    "fig6": _render_fig6,
}


def render(job: FigureJob) -> Path:
    """Render one figure job; returns the output path.

    Raises SchemaError when inputs are missing or their columns do not match
    the declared schemas.  Inputs are opened read-only and never modified.
    """
    _RENDERERS[job.figure](job)
    return job.out_path
