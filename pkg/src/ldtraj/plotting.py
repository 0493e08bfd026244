"""Figures written next to the CLI's delimited output."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_trajectory(traj, path, title=None, states=None):
    k = traj.mu.shape[1]
    states = states or [str(i + 1) for i in range(k)]
    fig, (ax_mu, ax_f) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    for a in range(k):
        ax_mu.plot(traj.times, traj.mu[:, a], label=rf"$\mu_{{{states[a]}}}$")
        ax_f.plot(traj.times, traj.f[:, a], label=rf"$f_{{{states[a]}}}$")
    ax_mu.set_ylabel("position")
    ax_f.set_ylabel("momentum")
    ax_f.set_xlabel("t")
    ax_mu.legend(loc="best", fontsize="small")
    ax_f.legend(loc="best", fontsize="small")
    if title:
        ax_mu.set_title(title)
    return _finish(fig, path)


def plot_diffusion(x, mu, alpha, faces, drift, path):
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    ax0.plot(x, mu, label="density")
    ax0.plot(x, alpha, label="velocity")
    ax0.legend(loc="best", fontsize="small")
    ax1.plot(faces, drift, color="C3")
    ax1.axhline(0.0, color="0.6", lw=0.8)
    ax1.set_ylabel("reconstructed drift")
    ax1.set_xlabel("x")
    return _finish(fig, path)


def plot_mc(Ts, estimates, errors, lagrangian, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    Ts = np.asarray(Ts)
    ax.errorbar(Ts, estimates, yerr=3 * np.asarray(errors), fmt="o", capsize=3, label="Girsanov estimate (3 s.e.)")
    ax.axhline(lagrangian, color="C3", ls="--", label="Lagrangian")
    ax.set_xscale("log")
    ax.set_xlabel("T")
    ax.set_ylabel("entropy rate")
    ax.legend(loc="best", fontsize="small")
    return _finish(fig, path)
