"""Figure rendering for report CSVs.

The CSV tables stay the canonical, byte-stable artifacts; these helpers
draw the standard curves (relaxation time against level, trainability
against depth, fidelity against noise) next to them when plots are
requested.
"""
from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _read(csv_path):
    with open(csv_path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _numeric(rows, key):
    return [float(r[key]) for r in rows]


def render_tau_sweep(csv_path, out_png) -> str:
    """Relaxation time against qubit count, one line per level m."""
    rows = _read(csv_path)
    fig, ax = plt.subplots(figsize=(5.4, 3.6))
    for m in sorted({int(r["m"]) for r in rows}):
        sel = [r for r in rows if int(r["m"]) == m]
        byn = {}
        for r in sel:
            byn.setdefault(int(r["n"]), []).append(float(r["tau"]))
        ns = sorted(byn)
        ax.plot(ns, [sum(byn[n]) / len(byn[n]) for n in ns], "o-", label=f"m={m}")
    ax.set_xlabel("qubits n")
    ax.set_ylabel("relaxation time")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(out_png, dpi=150)
    plt.close(fig)
    return out_png


def render_variational_sweep(csv_path, out_png) -> str:
    """Training success rate against ansatz depth, one line per n."""
    rows = _read(csv_path)
    fig, ax = plt.subplots(figsize=(5.4, 3.6))
    for n in sorted({int(r["n"]) for r in rows}):
        sel = sorted((r for r in rows if int(r["n"]) == n), key=lambda r: int(r["depth"]))
        ax.plot([int(r["depth"]) for r in sel], [float(r["success_rate"]) for r in sel],
                "s-", label=f"n={n}")
    ax.set_xlabel("ansatz depth")
    ax.set_ylabel("training success rate")
    ax.set_ylim(-0.05, 1.05)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(out_png, dpi=150)
    plt.close(fig)
    return out_png


def render_qed_sweep(csv_path, out_png) -> str:
    """Acceptance and post-selected fidelity against the noise rate."""
    rows = _read(csv_path)
    fig, ax = plt.subplots(figsize=(5.4, 3.6))
    for typ in sorted({r["type"] for r in rows}):
        sel = sorted((r for r in rows if r["type"] == typ), key=lambda r: float(r["p2"]))
        ax.plot([float(r["p2"]) for r in sel], [float(r["fidelity"]) for r in sel],
                "o-", label=f"{typ} fidelity")
        if typ != "physical":
            ax.plot([float(r["p2"]) for r in sel], [float(r["acceptance"]) for r in sel],
                    "^--", label=f"{typ} acceptance")
    ax.set_xlabel("two-qubit depolarizing rate")
    ax.set_ylabel("rate")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(out_png, dpi=150)
    plt.close(fig)
    return out_png


def render_learn_sweep(csv_path, out_png) -> str:
    """Light-cone learner success against circuit depth."""
    rows = _read(csv_path)
    fig, ax = plt.subplots(figsize=(5.4, 3.6))
    for n in sorted({int(r["n"]) for r in rows}):
        sel = sorted((r for r in rows if int(r["n"]) == n), key=lambda r: int(r["depth"]))
        ax.plot([int(r["depth"]) for r in sel], [float(r["success_frac"]) for r in sel],
                "d-", label=f"n={n}")
    ax.set_xlabel("circuit depth")
    ax.set_ylabel("recovery success fraction")
    ax.set_ylim(-0.05, 1.05)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(out_png, dpi=150)
    plt.close(fig)
    return out_png


RENDERERS = {
    "tau": render_tau_sweep,
    "variational": render_variational_sweep,
    "qed": render_qed_sweep,
    "learn": render_learn_sweep,
}
