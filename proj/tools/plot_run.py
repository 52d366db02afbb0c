#!/usr/bin/env python3
"""Plot the CSV outputs of a run directory (or convergence tables) with matplotlib."""
import argparse
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def load_history(path):
    rows = [l for l in path.read_text().splitlines() if l and not l.startswith("#")]
    xi = np.array([float(v) for v in rows[0].split(",")[1:]])
    data = np.array([[float(v) for v in r.split(",")] for r in rows[1:]])
    t = data[:, 0]
    values = data[:, 1::2] + 1j * data[:, 2::2]
    return xi, t, values


def plot_run(run_dir, out):
    det = np.loadtxt(run_dir / "detectors.csv", delimiter=",", comments="#", ndmin=2)
    xi, t, s = load_history(run_dir / "spinwave.csv")

    fig, axes = plt.subplots(3, 1, figsize=(7, 9), constrained_layout=True)
    axes[0].plot(det[:, 0], det[:, 3], label="forward, xi = 1")
    axes[0].plot(det[:, 0], det[:, 6], label="backward, xi = 0")
    axes[0].set_xlabel("t [us]")
    axes[0].set_ylabel("|E|^2")
    axes[0].legend()

    mesh = axes[1].pcolormesh(t, xi, np.abs(s).T, shading="auto")
    fig.colorbar(mesh, ax=axes[1], label="|S|")
    axes[1].set_xlabel("t [us]")
    axes[1].set_ylabel("xi")

    norm = np.trapezoid(np.abs(s) ** 2, xi, axis=1)
    axes[2].semilogy(t, norm)
    axes[2].set_xlabel("t [us]")
    axes[2].set_ylabel("integral |S|^2")
    fig.savefig(out, dpi=120)


def plot_convergence(conv_dir, out):
    fig, ax = plt.subplots(1, 2, figsize=(9, 4), constrained_layout=True)
    for axis, name, label in [(ax[0], "field_solver_convergence.csv", "h"),
                              (ax[1], "time_step_convergence.csv", "dt [us]")]:
        d = np.loadtxt(conv_dir / name, delimiter=",", comments="#", ndmin=2)
        axis.loglog(d[:, 1], d[:, 2], "o-")
        axis.set_xlabel(label)
        axis.set_ylabel("error")
    fig.savefig(out, dpi=120)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("directory", type=pathlib.Path)
    ap.add_argument("--out", type=pathlib.Path, default=None)
    args = ap.parse_args()
    d = args.directory
    if (d / "field_solver_convergence.csv").exists():
        plot_convergence(d, args.out or d / "convergence.png")
    else:
        plot_run(d, args.out or d / "run.png")


if __name__ == "__main__":
    main()
