"""Figure rendering for the CLI report paths.

Every CLI command that writes a CSV also renders a companion PNG through one
of these helpers.  Uses the Agg backend so runs are headless-safe.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .params import TWO_PI


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_waveform_figure(path, segments) -> None:
    """Envelopes of the three segments on a shared absolute time axis.

    ``segments`` is an iterable of (label, t_offset, times, values).
    """
    fig, ax = plt.subplots(figsize=(7.0, 3.2))
    for label, t0, t, v in segments:
        ax.plot(t0 + t, v, lw=1.2, label=label)
    ax.axhline(0.0, color="0.7", lw=0.6)
    ax.set_xlabel("t (ns)")
    ax.set_ylabel(r"$\varepsilon_x$ (rad/ns)")
    ax.legend(fontsize=8, frameon=False)
    _save(fig, path)


def save_spectrum_figure(path, curves, null_frequencies=()) -> None:
    """log |S| versus detuning in GHz, with markers at the intended nulls.

    ``curves`` is an iterable of (label, deltas_rad_per_ns, abs_values).
    """
    fig, ax = plt.subplots(figsize=(6.2, 3.6))
    for label, deltas, values in curves:
        ax.semilogy(np.asarray(deltas) / TWO_PI, np.maximum(values, 1e-18),
                    lw=1.0, label=label)
    for delta in null_frequencies:
        ax.axvline(delta / TWO_PI, color="0.75", lw=0.7, ls="--")
    ax.set_xlabel(r"$\delta/2\pi$ (GHz)")
    ax.set_ylabel(r"$|S(\varepsilon_x,\delta)|$")
    ax.legend(fontsize=8, frameon=False)
    _save(fig, path)


def save_sweep_time_figure(path, rows) -> None:
    """Population error and Bell infidelity versus total gate time."""
    fig, ax = plt.subplots(figsize=(6.2, 3.8))
    kinds = sorted({r["pulse_kind"] for r in rows})
    for kind in kinds:
        pts = [r for r in rows if r["pulse_kind"] == kind and not r.get("error")]
        if not pts:
            continue
        tg = [r["t_g_ns"] for r in pts]
        for column, style in (("pop_error", "-"), ("bell_infidelity", "--")):
            vals = [r[column] for r in pts]
            if all(v != v or v is None for v in vals):  # all NaN
                continue
            ax.semilogy(tg, np.maximum(vals, 1e-16), style, marker="o", ms=3,
                        lw=1.0, label=f"{kind} {column}")
    ax.set_xlabel(r"$t_g$ (ns)")
    ax.set_ylabel("error")
    ax.legend(fontsize=7, frameon=False)
    _save(fig, path)


def save_sweep_blockade_figure(path, rows) -> None:
    """Simulated population error and rescaled analytic leakage versus b0."""
    good = [r for r in rows if not r.get("error")]
    fig, ax = plt.subplots(figsize=(6.2, 3.8))
    b0 = np.array([r["b0_GHz"] for r in good])
    sim = np.array([r["pop_error"] for r in good])
    model = np.array([r["p_leak_rel"] for r in good])
    ax.semilogy(b0, np.maximum(sim, 1e-16), "o-", ms=3, lw=1.0,
                label="simulated population error")
    if sim.size and model.size and np.min(model) > 0.0:
        scaled = model * (np.min(sim) / np.min(model))
        ax.semilogy(b0, scaled, "--", lw=1.0,
                    label="analytic leakage (rescaled)")
    ax.set_xlabel(r"$\mathsf{B}_0/2\pi$ (GHz)")
    ax.set_ylabel("population error")
    ax.legend(fontsize=8, frameon=False)
    _save(fig, path)


def save_blockade_scan_figure(path, b0_ghz, p_rel, b_star_ghz=None) -> None:
    fig, ax = plt.subplots(figsize=(6.2, 3.6))
    ax.semilogy(b0_ghz, p_rel, lw=1.1)
    if b_star_ghz is not None:
        ax.axvline(b_star_ghz, color="C3", lw=0.9, ls="--",
                   label=f"optimum {b_star_ghz:.3f} GHz")
        ax.legend(fontsize=8, frameon=False)
    ax.set_xlabel(r"$\mathsf{B}_0/2\pi$ (GHz)")
    ax.set_ylabel("relative leakage probability")
    _save(fig, path)


def save_trajectory_figure(path, times, control_pops, target_pops, labels) -> None:
    """Per-atom level populations over the sequence (log scale, small floors cut)."""
    fig, axes = plt.subplots(2, 1, figsize=(7.0, 5.2), sharex=True)
    for ax, pops, name in ((axes[0], control_pops, "control"),
                           (axes[1], target_pops, "target")):
        for i, label in enumerate(labels):
            trace = np.asarray(pops)[:, i]
            if np.max(trace) < 1e-12:
                continue
            ax.semilogy(times, np.maximum(trace, 1e-14), lw=0.9, label=label)
        ax.set_ylabel(f"{name} populations")
        ax.set_ylim(1e-10, 1.5)
        ax.legend(fontsize=6, ncol=2, frameon=False)
    axes[1].set_xlabel("t (ns)")
    _save(fig, path)
