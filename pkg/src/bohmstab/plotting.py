"""Figure rendering for experiment reports.

Every experiment that emits CSV also renders a summary figure next to it.
PNG metadata is stripped so figure bytes are reproducible run to run.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

plt.rcParams.update({
    "figure.figsize": (6.4, 4.0),
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
})


def save_figure(fig, path, dpi=130):
    fig.savefig(path, dpi=dpi, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    return path


def plot_evolution(record, widths, path):
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9, 3.6))
    grid = record.grid
    x = grid.axis_coords(0)
    n_show = min(7, len(record.frames))
    picks = np.linspace(0, len(record.frames) - 1, n_show).astype(int)
    for k in picks:
        if grid.dim == 1:
            ax0.plot(x, record.frames[k].abs2, label=f"t={record.times[k]:g}")
    ax0.set_xlabel("x")
    ax0.set_ylabel(r"$|\psi|^2$")
    ax0.legend(fontsize=7)
    ax1.plot(record.times, widths, "o-", ms=3)
    ax1.set_xlabel("t")
    ax1.set_ylabel("width")
    fig.tight_layout()
    return save_figure(fig, path)


def plot_spectrum(grid, u_values, energies, states, path):
    fig, ax = plt.subplots()
    x = grid.axis_coords(0)
    ax.plot(x, u_values, "k-", lw=1.0, label="U(x)")
    span = max(energies[-1] - energies[0], 1e-12)
    for e, st in zip(energies, states):
        prob = st.abs2
        ax.plot(x, e + prob / prob.max() * 0.35 * span / max(len(energies) - 1, 1), lw=0.9)
        ax.axhline(e, color="gray", lw=0.4, alpha=0.6)
    ax.set_xlabel("x")
    ax.set_ylabel("energy / scaled density")
    ax.set_ylim(energies[0] - 0.6 * span, energies[-1] + 0.6 * span)
    ax.legend(fontsize=7)
    return save_figure(fig, path)


def plot_residuals(rows, path):
    fig, ax = plt.subplots()
    names = sorted({r.residual_name for r in rows})
    for name in names:
        t = [r.frame_time for r in rows if r.residual_name == name]
        v = [r.l2 for r in rows if r.residual_name == name]
        ax.semilogy(t, np.maximum(v, 1e-300), "o-", ms=3, label=name)
    ax.set_xlabel("t")
    ax.set_ylabel("residual L2 norm")
    ax.legend(fontsize=7)
    return save_figure(fig, path)


def plot_trajectories(ensemble, record, distance_rows, path, n_show=40):
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9, 3.6))
    n = ensemble.n_particles
    picks = np.linspace(0, n - 1, min(n_show, n)).astype(int)
    for i in picks:
        ax0.plot(ensemble.times, ensemble.positions[:, i, 0], lw=0.5, alpha=0.7)
    ax0.set_xlabel("t")
    ax0.set_ylabel("x(t)")
    ax1.plot([r.t for r in distance_rows], [r.l1 for r in distance_rows],
             "o-", ms=3, label="L1 distance")
    ax1.plot([r.t for r in distance_rows], [r.band for r in distance_rows],
             "--", label="multinomial band")
    ax1.set_xlabel("t")
    ax1.set_ylabel("histogram distance")
    ax1.legend(fontsize=7)
    fig.tight_layout()
    return save_figure(fig, path)


def plot_stability(trajectory, spectrum, c_series, path):
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9, 3.6))
    n_renorm = spectrum.history.shape[0]
    steps = np.arange(1, n_renorm + 1) * spectrum.renorm_interval
    for j in range(spectrum.history.shape[1]):
        ax0.plot(steps, spectrum.history[:, j], lw=0.8,
                 label=f"exp {j}: {spectrum.exponents[j]:+.3f}")
    ax0.set_xlabel("t")
    ax0.set_ylabel("running exponent")
    ax0.legend(fontsize=7)
    ax1.plot(trajectory.t, c_series - c_series[0], lw=0.8)
    ax1.set_xlabel("t")
    ax1.set_ylabel("C(t) - C(0)")
    fig.tight_layout()
    return save_figure(fig, path)


def plot_action_scan(result, path):
    fig, ax = plt.subplots()
    offs = sorted(result.values)
    ax.plot([result.base_value + o for o in offs], [result.values[o] for o in offs],
            "o-", ms=4)
    ax.axvline(result.base_value, color="gray", lw=0.6)
    ax.set_xlabel(result.param)
    ax.set_ylabel(r"$\bar{Q}$")
    ax.set_title(f"d/d{result.param} = {result.headline_derivative():+.4g}", fontsize=9)
    return save_figure(fig, path)


def plot_snr(curve, sample_t, sample_x, path):
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9, 3.6))
    ax0.errorbar(curve.d_values, curve.snr, yerr=3 * curve.ci_half_width,
                 fmt="o-", ms=4, capsize=3)
    ax0.set_xscale("log")
    ax0.set_xlabel("noise intensity D")
    ax0.set_ylabel("SNR at drive frequency")
    ax0.axvline(curve.peak_d, color="gray", lw=0.6)
    ax1.plot(sample_t, sample_x, lw=0.4)
    ax1.set_xlabel("t")
    ax1.set_ylabel("x(t) sample path")
    fig.tight_layout()
    return save_figure(fig, path)
