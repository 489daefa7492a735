"""Experiment drivers: declarative configs in, artifact directories out.

Each driver writes plot-ready CSV/JSON (plus CHPF snapshots where frames are
involved), renders a summary figure alongside, and the runner seals the
directory with a manifest carrying content hashes.
"""

import json
from pathlib import Path

import numpy as np

from . import chpf, plotting
from .action import (
    AdmixtureFamily,
    PhaseRotationFamily,
    WidthScaleFamily,
    stationarity_scan,
)
from .artifacts import write_csv, write_json
from .classical import (
    ClassicalState,
    DoubleWellPotential,
    FreeAction,
    HamiltonianSpec,
    HarmonicPotential,
    InvertedHarmonicPotential,
    LibrationAction,
    PendulumPotential,
    VariationPair,
    characteristic_numbers,
    conditional_reduced_flow,
    integrate_hamilton,
    poincare_invariant,
    variational_flow,
)
from .constants import PhysicalConstants
from .errors import ConfigError
from .grids import ComplexField, build_grid, norm_sq, normalize
from .kramers import LangevinConfig, simulate_langevin, snr_curve
from .madelung import (
    amplitude_transport_residuals,
    bohm_residuals,
    energy_balance_identity,
    polar_decompose,
)
from .potentials import PotentialSpec, sample_potential
from .tdse import evolve, stationary_states
from .trajectories import (
    equivariance_distance,
    integrate_ensemble,
    sample_initial_positions,
)

EXPERIMENT_KINDS = (
    "evolve",
    "spectrum",
    "madelung-residuals",
    "trajectories",
    "stability",
    "chetaev-action",
    "kramers-sr",
)

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["experiment", "seed"],
    "properties": {
        "experiment": {"enum": list(EXPERIMENT_KINDS)},
        "seed": {"type": "integer"},
        "constants": {
            "type": "object",
            "properties": {
                "hbar": {"type": "number", "exclusiveMinimum": 0},
                "mass": {},
            },
        },
        "grid": {
            "type": "object",
            "required": ["dim", "bounds", "points"],
            "properties": {
                "dim": {"enum": [1, 2]},
                "bounds": {"type": "array"},
                "points": {"type": "array", "items": {"type": "integer", "minimum": 16}},
            },
        },
        "potential": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["free", "harmonic", "double_well", "barrier", "tabulated"]},
            },
        },
        "evolve": {
            "type": "object",
            "required": ["initial", "dt", "n_steps"],
            "properties": {
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "n_steps": {"type": "integer", "minimum": 1},
                "frame_stride": {"type": "integer", "minimum": 1},
                "snapshots": {"type": "boolean"},
            },
        },
        "spectrum": {
            "type": "object",
            "required": ["count"],
            "properties": {"count": {"type": "integer", "minimum": 1}},
        },
        "trajectories": {
            "type": "object",
            "required": ["n_particles"],
            "properties": {
                "n_particles": {"type": "integer", "minimum": 1},
                "substeps": {"type": "integer", "minimum": 1},
                "cells_per_bin": {"type": "integer", "minimum": 1},
            },
        },
        "madelung": {
            "type": "object",
            "properties": {"dump_fields": {"type": "boolean"}},
        },
        "stability": {
            "type": "object",
            "required": ["hamiltonian", "state0", "dt", "n_steps"],
        },
        "chetaev_action": {
            "type": "object",
            "required": ["family", "epsilons"],
        },
        "kramers": {
            "type": "object",
            "required": ["d_grid", "n_realizations"],
        },
    },
    "allOf": [
        {"if": {"properties": {"experiment": {"const": kind}}},
         "then": {"required": req}}
        for kind, req in [
            ("evolve", ["grid", "potential", "evolve"]),
            ("spectrum", ["grid", "potential", "spectrum"]),
            ("madelung-residuals", ["grid", "potential", "evolve"]),
            ("trajectories", ["grid", "potential", "evolve", "trajectories"]),
            ("stability", ["stability"]),
            ("chetaev-action", ["grid", "chetaev_action"]),
            ("kramers-sr", ["kramers"]),
        ]
    ],
}


def validate_config(config: dict):
    import jsonschema

    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        pointer = "/" + "/".join(str(p) for p in err.absolute_path)
        if err.validator == "required":
            missing = err.message.split("'")[1]
            pointer = pointer.rstrip("/") + "/" + missing
        raise ConfigError(f"invalid config at {pointer}: {err.message}", pointer=pointer)


# -- shared builders -----------------------------------------------------------


def _constants(config) -> PhysicalConstants:
    c = config.get("constants", {})
    return PhysicalConstants(hbar=c.get("hbar", 1.0), mass=c.get("mass", 1.0))


def _grid(config):
    g = config["grid"]
    return build_grid(g["dim"], g["bounds"], g["points"])


def _potential(config) -> PotentialSpec:
    return PotentialSpec.from_dict(config["potential"])


def _initial_state(spec: dict, grid, potential, constants) -> ComplexField:
    kind = spec.get("kind", "gaussian")
    if kind == "gaussian":
        sigma = spec.get("sigma", 1.0)
        x0 = spec.get("x0", 0.0)
        p0 = spec.get("p0", 0.0)
        mesh = grid.meshes()[0]
        vals = np.exp(-((mesh - x0) ** 2) / (4.0 * sigma**2)).astype(complex)
        vals *= np.exp(1j * p0 * (mesh - x0) / constants.hbar)
        return normalize(ComplexField(grid, vals))
    if kind == "eigenstate":
        n = int(spec.get("n", 0))
        return stationary_states(grid, potential, n + 1, constants).states[n]
    raise ConfigError(f"unknown initial state kind {kind!r}", pointer="/evolve/initial/kind")


def _evolve_from_config(config, constants):
    grid = _grid(config)
    potential = _potential(config)
    ev = config["evolve"]
    psi0 = _initial_state(ev["initial"], grid, potential, constants)
    record = evolve(
        psi0, potential, dt=ev["dt"], n_steps=ev["n_steps"],
        frame_stride=ev.get("frame_stride", 1), constants=constants,
    )
    return record


def _widths(record):
    out = []
    grid = record.grid
    x = grid.meshes()[0]
    w = grid.quadrature_weights()
    for frame in record.frames:
        p = frame.abs2
        mean = float(np.sum(x * p * w))
        var = float(np.sum((x - mean) ** 2 * p * w))
        out.append((mean, np.sqrt(max(var, 0.0))))
    return out


# -- drivers -------------------------------------------------------------------


def run_evolve(config, out_dir: Path, threads=1, plot=True) -> dict:
    constants = _constants(config)
    record = _evolve_from_config(config, constants)
    stats = _widths(record)
    write_csv(out_dir / "widths.csv",
              ["t", "centroid", "width", "norm"],
              [(t, m, s, norm_sq(f)) for t, (m, s), f
               in zip(record.times, stats, record.frames)])
    if config["evolve"].get("snapshots", True):
        record.save(out_dir / "record")
    if plot:
        plotting.plot_evolution(record, [s for _, s in stats], out_dir / "evolution.png")
    return {"final_time": float(record.times[-1]), "n_frames": len(record.frames)}


def run_spectrum(config, out_dir: Path, threads=1, plot=True) -> dict:
    constants = _constants(config)
    grid = _grid(config)
    potential = _potential(config)
    count = config["spectrum"]["count"]
    result = stationary_states(grid, potential, count, constants)
    write_csv(out_dir / "energies.csv", ["n", "energy"],
              [(n, e) for n, e in enumerate(result.energies)])
    for n, state in enumerate(result.states):
        chpf.write_field(out_dir / f"state_{n:03d}.chpf", state, constants,
                         meta={"n": n, "energy": result.energies[n]})
    if plot and grid.dim == 1:
        u = sample_potential(potential, grid, 0.0, constants).values
        plotting.plot_spectrum(grid, u, result.energies, result.states,
                               out_dir / "spectrum.png")
    return {"energies": result.energies}


def run_madelung(config, out_dir: Path, threads=1, plot=True) -> dict:
    constants = _constants(config)
    record = _evolve_from_config(config, constants)
    dump = config.get("madelung", {}).get("dump_fields", False)
    report = bohm_residuals(record, constants, keep_fields=dump)
    amp = amplitude_transport_residuals(record, constants)
    balance = energy_balance_identity(record, constants)
    rows = report.rows + amp.rows + balance.rows
    write_csv(out_dir / "residuals.csv",
              ["frame_time", "residual_name", "l2", "max", "masked_fraction", "scale"],
              [(r.frame_time, r.residual_name, r.l2, r.max, r.masked_fraction, r.scale)
               for r in rows])
    write_json(out_dir / "residuals.json", [r.to_dict() for r in rows])
    if dump:
        for (name, t), fieldv in report.fields.items():
            chpf.write_field(out_dir / f"field_{name}_t{t:.6g}.chpf", fieldv,
                             constants, meta={"residual": name, "t": t})
    if plot:
        plotting.plot_residuals(report.rows, out_dir / "residuals.png")
    aggregates = {name: report.aggregate_l2(name) for name in report.names()}
    return {"aggregate_l2": aggregates}


def run_trajectories(config, out_dir: Path, threads=1, plot=True) -> dict:
    constants = _constants(config)
    record = _evolve_from_config(config, constants)
    tr = config["trajectories"]
    seed = config["seed"]
    polar0 = polar_decompose(record.frames[0], constants)
    positions0 = sample_initial_positions(polar0, tr["n_particles"], seed)
    ensemble = integrate_ensemble(record, positions0,
                                  substeps=tr.get("substeps", 4),
                                  constants=constants, seed=seed)
    ensemble.to_csv(out_dir / "ensemble.csv")
    ensemble.save_manifest(out_dir / "ensemble.json", tr)
    rows = equivariance_distance(ensemble, record, tr.get("cells_per_bin", 15))
    write_csv(out_dir / "equivariance.csv",
              ["t", "l1", "max_dev", "band", "n_bins"],
              [(r.t, r.l1, r.max_dev, r.band, r.n_bins) for r in rows])
    if plot:
        plotting.plot_trajectories(ensemble, record, rows, out_dir / "trajectories.png")
    return {
        "frozen_fraction": ensemble.frozen_fraction(),
        "l1_final": rows[-1].l1,
    }


_CLASSICAL_POTENTIALS = {
    "harmonic": lambda p: HarmonicPotential(p.get("omega", 1.0), p.get("masses")),
    "inverted_harmonic": lambda p: InvertedHarmonicPotential(p.get("omega", 1.0), p.get("masses")),
    "double_well": lambda p: DoubleWellPotential(p.get("a", 1.0), p.get("b", 1.0)),
    "pendulum": lambda p: PendulumPotential(p.get("omega", 1.0), p.get("masses")),
}


def _hamiltonian(spec: dict) -> HamiltonianSpec:
    pot_spec = spec["potential"]
    kind = pot_spec["kind"]
    if kind not in _CLASSICAL_POTENTIALS:
        raise ConfigError(f"unknown classical potential {kind!r}",
                          pointer="/stability/hamiltonian/potential/kind")
    potential = _CLASSICAL_POTENTIALS[kind](pot_spec)
    masses = spec.get("masses", 1.0)
    n_dof = len(np.atleast_1d(pot_spec.get("omega", [1.0]))) if kind != "double_well" else 1
    return HamiltonianSpec(potential, masses=masses, n_dof=n_dof)


def run_stability(config, out_dir: Path, threads=1, plot=True) -> dict:
    sc = config["stability"]
    spec = _hamiltonian(sc["hamiltonian"])
    state0 = ClassicalState(q=np.asarray(sc["state0"]["q"], float),
                            p=np.asarray(sc["state0"]["p"], float))
    traj = integrate_hamilton(spec, state0, sc["dt"], sc["n_steps"])
    traj.to_csv(out_dir / "trajectory.csv")

    n_dof = spec.n_dof
    pair_a = variational_flow(spec, traj, VariationPair(np.eye(n_dof)[0], np.zeros(n_dof)))
    pair_b = variational_flow(spec, traj, VariationPair(np.zeros(n_dof), np.eye(n_dof)[0]))
    c_series = poincare_invariant(pair_a, pair_b)
    write_csv(out_dir / "poincare_invariant.csv", ["t", "C"],
              zip(traj.t, c_series))

    spectrum = characteristic_numbers(
        spec, traj, sc.get("n_vectors", 2 * n_dof), sc.get("renorm_interval", 1.0)
    )
    spectrum.to_json(out_dir / "exponents.json")

    summary = {
        "exponents": spectrum.exponents,
        "poincare_drift": float(np.max(np.abs(c_series - c_series[0]))),
        "energy_drift": float(np.max(np.abs(traj.energy - traj.energy[0]))),
    }
    if "reduced" in sc:
        red = sc["reduced"]
        if red["action"] == "free":
            action = FreeAction(red["p"])
        elif red["action"] == "libration":
            action = LibrationAction(spec.potential, red["energy"],
                                     mass=float(spec.masses[0]))
        else:
            raise ConfigError(f"unknown reduced action {red['action']!r}",
                              pointer="/stability/reduced/action")
        flow = conditional_reduced_flow(spec, action, traj)
        summary["reduced"] = {
            "mean_l": flow.mean_l,
            "lambda_estimate": flow.lambda_estimate,
        }
        write_csv(out_dir / "reduced_flow.csv", ["t", "xi0", "L"],
                  zip(flow.t, flow.xi[:, 0], flow.l_series))
    write_json(out_dir / "stability.json", summary)
    if plot:
        plotting.plot_stability(traj, spectrum, c_series, out_dir / "stability.png")
    return summary


def run_chetaev_action(config, out_dir: Path, threads=1, plot=True) -> dict:
    constants = _constants(config)
    grid = _grid(config)
    ca = config["chetaev_action"]
    fam_spec = ca["family"]
    kind = fam_spec["kind"]
    if kind == "phase":
        potential = _potential(config)
        base = _initial_state(ca.get("base", {"kind": "eigenstate", "n": 0}),
                              grid, potential, constants)
        family = PhaseRotationFamily(base)
        base_value = 0.0
    elif kind == "width":
        family = WidthScaleFamily(grid, center=fam_spec.get("center", 0.0))
        base_value = fam_spec.get("sigma", 1.0 / np.sqrt(2.0))
    elif kind == "admixture":
        potential = _potential(config)
        states = stationary_states(grid, potential,
                                   max(fam_spec.get("n_a", 0), fam_spec.get("n_b", 1)) + 1,
                                   constants).states
        family = AdmixtureFamily(states[fam_spec.get("n_a", 0)],
                                 states[fam_spec.get("n_b", 1)])
        base_value = fam_spec.get("theta", 0.0)
    else:
        raise ConfigError(f"unknown family kind {kind!r}",
                          pointer="/chetaev_action/family/kind")
    result = stationarity_scan(family, base_value, ca["epsilons"], constants,
                               base_label=kind)
    result.to_csv(out_dir / "action_scan.csv")
    result.to_json(out_dir / "action_scan.json")
    if plot:
        plotting.plot_action_scan(result, out_dir / "action_scan.png")
    return {"headline_derivative": result.headline_derivative(),
            "qbar_base": result.values[0.0]}


def run_kramers(config, out_dir: Path, threads=1, plot=True) -> dict:
    kc = config["kramers"]
    lc = kc.get("langevin", {})
    base = LangevinConfig(
        a=lc.get("a", 1.0), b=lc.get("b", 1.0), gamma=lc.get("gamma", 1.0),
        noise=float(kc["d_grid"][0]),
        drive_amplitude=lc.get("drive_amplitude", 0.1),
        drive_omega=lc.get("drive_omega", 2.0 * np.pi * 0.01),
        dt=lc.get("dt", 0.005), duration=lc.get("duration", 6000.0),
        seed=config["seed"], output_stride=lc.get("output_stride", 100),
    )
    curve = snr_curve(base, kc["d_grid"], kc["n_realizations"],
                      segment_length=kc.get("segment_length", 3000),
                      threads=threads)
    curve.to_csv(out_dir / "snr_curve.csv")
    curve.to_json(out_dir / "snr_curve.json")
    sample_cfg = LangevinConfig(
        a=base.a, b=base.b, gamma=base.gamma, noise=curve.peak_d,
        drive_amplitude=base.drive_amplitude, drive_omega=base.drive_omega,
        dt=base.dt, duration=min(base.duration, 2000.0), seed=config["seed"],
        output_stride=base.output_stride,
    )
    t, x = simulate_langevin(sample_cfg)
    write_csv(out_dir / "sample_path.csv", ["t", "x"], zip(t, x))
    if plot:
        plotting.plot_snr(curve, t, x, out_dir / "snr.png")
    return {"peak_d": curve.peak_d, "snr_max": float(np.max(curve.snr))}


_DRIVERS = {
    "evolve": run_evolve,
    "spectrum": run_spectrum,
    "madelung-residuals": run_madelung,
    "trajectories": run_trajectories,
    "stability": run_stability,
    "chetaev-action": run_chetaev_action,
    "kramers-sr": run_kramers,
}


def run_experiment(config: dict, out_dir, threads: int = 1, plot: bool = True) -> dict:
    validate_config(config)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    driver = _DRIVERS[config["experiment"]]
    return driver(config, out_dir, threads=threads, plot=plot)
