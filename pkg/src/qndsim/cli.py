"""Batch front end: one subcommand per experiment, deterministic seeding,
CSV/JSON emission, and the acceptance check.

Exit codes: 0 success, 1 configuration error, 2 numeric or fit error,
3 acceptance failure under check.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import acceptance, calibration, moments, protocol, readout
from .config import ConfigError, RunConfig, config_digest, default_config, load_config
from .csvio import write_csv, write_json
from .device import (
    count_pi_crossings,
    dispersive_shift,
    dressed_frequencies,
    phase_difference_spectrum,
)
from .errors import SimulationError


@dataclass
class RunReport:
    subcommand: str
    config_digest: str
    seed: int
    files: list[str] = field(default_factory=list)
    headline: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "files": self.files,
            "headline": self.headline,
        }


def _runner_seed(master: int, name: str) -> int:
    digest = hashlib.sha256(f"{master}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def _report(cfg: RunConfig, name: str, out_dir: Path, files: list[Path], headline: dict) -> RunReport:
    report = RunReport(
        subcommand=name,
        config_digest=config_digest(cfg),
        seed=cfg.seed,
        files=sorted(p.name for p in files),
        headline=headline,
    )
    write_json(out_dir / f"{name}_report.json", report.to_dict())
    return report


def run_spectrum(cfg: RunConfig, out_dir: Path) -> RunReport:
    """Conditional reflection-phase spectrum of the detector."""
    dev = cfg.device
    grid = cfg.sweeps.nu_mhz.to_array()
    points = phase_difference_spectrum(dev, grid, cfg.spectroscopy.gamma_atom_mhz)
    path = out_dir / "spectrum.csv"
    write_csv(
        path,
        ["nu_MHz", "re_rg", "im_rg", "re_re", "im_re", "delta_phi_rad"],
        [
            (p.nu, p.r_g.real, p.r_g.imag, p.r_e.real, p.r_e.imag, p.delta_phi)
            for p in points
        ],
    )
    nus = np.array([p.nu for p in points])
    dphi = np.array([p.delta_phi for p in points])
    center = dphi[np.argmin(np.abs(nus - dev.nu_ef))]
    lo, hi = dressed_frequencies(dev, 1)
    dressed_err = {}
    for tag, nu_d in (("minus", lo), ("plus", hi)):
        window = np.abs(nus - nu_d) <= 2.0
        dressed_err[tag] = float(np.min(np.abs(dphi[window] - np.pi))) if window.any() else float("nan")
    span = 2 * np.sqrt(2) * dev.g0
    in_band = [p for p in points if abs(p.nu - dev.nu_ef) <= span]
    headline = {
        "delta_phi_at_cavity": float(center),
        "pi_deviation_at_dressed_minus": dressed_err["minus"],
        "pi_deviation_at_dressed_plus": dressed_err["plus"],
        "pi_crossings": count_pi_crossings(in_band),
    }
    return _report(cfg, "spectrum", out_dir, [path], headline)


def run_theta_sweep(cfg: RunConfig, out_dir: Path) -> RunReport:
    """Click probability vs photon preparation angle."""
    rows = protocol.theta_sweep(cfg.protocol, cfg.device, cfg.sweeps.theta_rad.to_array())
    path = out_dir / "theta_sweep.csv"
    write_csv(path, ["theta_rad", "p_e"], rows)
    probs = protocol.fidelity_metrics(cfg.protocol, cfg.device)
    headline = {
        "p_e_given_1": probs.p_e_given_1,
        "p_e_given_0": probs.p_e_given_0,
        "fidelity": probs.fidelity,
        "ratio": probs.ratio,
    }
    return _report(cfg, "theta_sweep", out_dir, [path], headline)


def run_window_sweep(cfg: RunConfig, out_dir: Path) -> RunReport:
    """Efficiency, dark count, fidelity and ratio vs window length."""
    windows = cfg.sweeps.window_us.to_array()
    rows = protocol.window_sweep(cfg.protocol, cfg.device, windows)
    path = out_dir / "window_sweep.csv"
    write_csv(
        path,
        ["Tw_us", "p_e1", "p_e0", "fidelity", "ratio"],
        [
            (tw, pr.p_e_given_1, pr.p_e_given_0, pr.fidelity, pr.ratio)
            for tw, pr in rows
        ],
    )
    ratios = [pr.ratio for _, pr in rows]
    headline = {
        "peak_efficiency_window_us": protocol.optimal_window(
            cfg.protocol, cfg.device, "efficiency"
        ),
        "peak_fidelity_window_us": protocol.optimal_window(
            cfg.protocol, cfg.device, "fidelity"
        ),
        "max_ratio": float(max(ratios)),
        "ratio_at_100ns": protocol.fidelity_metrics(
            cfg.protocol.with_window(0.1), cfg.device
        ).ratio,
    }
    return _report(cfg, "window_sweep", out_dir, [path], headline)


def run_qnd(cfg: RunConfig, out_dir: Path) -> RunReport:
    """Expected ON/OFF field moments plus the shot-noise Monte Carlo."""
    thetas = np.linspace(0.0, np.pi, cfg.qnd.n_theta)
    on = [moments.expected_moments(t, "on", cfg.qnd.scale) for t in thetas]
    off = [moments.expected_moments(t, "off", cfg.qnd.scale) for t in thetas]
    path_exp = out_dir / "qnd_expected.csv"
    write_csv(
        path_exp,
        ["theta_rad", "n_on", "n_off", "re_a_on", "re_a_off"],
        [
            (t, a.n_avg, b.n_avg, a.re_a, b.re_a)
            for t, a, b in zip(thetas, on, off)
        ],
    )
    expected_dev = moments.qnd_check(on, off, cfg.qnd.gate, cfg.qnd.floor)
    base = _runner_seed(cfg.seed, "qnd")
    seeds = [
        int(s)
        for s in np.random.SeedSequence(base).generate_state(cfg.qnd.mc_seeds, np.uint64)
    ]
    results = moments.qnd_monte_carlo(
        thetas,
        seeds,
        cfg.qnd.scale,
        cfg.qnd.n_shots,
        cfg.qnd.noise_var,
        cfg.qnd.gate,
        cfg.qnd.floor,
        cfg.qnd.coherence_offset,
    )
    path_mc = out_dir / "qnd_mc.csv"
    write_csv(
        path_mc,
        ["seed_index", "max_power_deviation", "passed"],
        [(i, r.max_deviation, r.passed) for i, r in enumerate(results)],
    )
    headline = {
        "expected_max_deviation": expected_dev.max_deviation,
        "mc_pass_count": sum(r.passed for r in results),
        "mc_seeds": len(results),
    }
    return _report(cfg, "qnd", out_dir, [path_exp, path_mc], headline)


def run_mollow(cfg: RunConfig, out_dir: Path) -> RunReport:
    """Fluorescence spectra, sideband locations, and the gain-fit recovery."""
    mc = cfg.mollow
    gamma = cfg.device.gamma_source
    ratios = cfg.sweeps.drive_ratios
    rows = []
    sideband_errs = {}
    for k, ratio in enumerate(ratios):
        spec = calibration.true_mollow_spectrum(ratio, gamma, mc.span, mc.points)
        offset = k * mc.display_offset
        rows.extend(
            (ratio, float(nu), float(v), float(v + offset))
            for nu, v in zip(spec.axis, spec.values)
        )
        nominal = ratio * gamma
        fitted = calibration.fit_satellite_drive(spec, gamma, nominal)
        sideband_errs[f"sideband_rel_err_ratio_{ratio:g}"] = float(
            abs(fitted - nominal) / nominal
        )
    path = out_dir / "mollow_spectra.csv"
    write_csv(path, ["drive_ratio", "delta_MHz", "psd", "psd_display"], rows)
    dataset = calibration.synthetic_mollow_dataset(
        ratios,
        gamma,
        mc.gain_truth,
        mc.noise_frac,
        _runner_seed(cfg.seed, "mollow"),
        mc.span,
        mc.points,
    )
    fit = calibration.fit_mollow(dataset, gamma)
    path_fit = out_dir / "mollow_fit.csv"
    write_csv(
        path_fit,
        ["parameter", "estimate", "truth"],
        [
            ("gain", fit.gain, mc.gain_truth),
            ("gamma_MHz", fit.gamma, gamma),
            *(
                (f"omega_MHz_ratio_{r:g}", om, r * gamma)
                for r, om in zip(ratios, fit.omegas)
            ),
        ],
    )
    headline = {
        "gain_truth": mc.gain_truth,
        "gain_est": fit.gain,
        "gain_rel_err": abs(fit.gain - mc.gain_truth) / mc.gain_truth,
        "gamma_est": fit.gamma,
        "gamma_rel_err": abs(fit.gamma - gamma) / gamma,
        **sideband_errs,
    }
    return _report(cfg, "mollow", out_dir, [path, path_fit], headline)


def run_stark(cfg: RunConfig, out_dir: Path) -> RunReport:
    """Photon-number calibration from the linear qubit-frequency shift."""
    dev = cfg.device
    chi = dispersive_shift(dev.alpha, dev.g0, dev.delta_qc)
    slope_true = 2.0 * chi * cfg.stark.photons_per_unit
    data = calibration.synthetic_stark_dataset(
        chi,
        dev.nu_ge,
        cfg.stark.photons_per_unit,
        cfg.stark.p_max,
        cfg.stark.n_points,
        noise_mhz=cfg.stark.noise_frac * abs(slope_true) * cfg.stark.p_max,
        seed=_runner_seed(cfg.seed, "stark"),
    )
    fit = calibration.stark_fit(data)
    path = out_dir / "stark.csv"
    write_csv(
        path,
        ["P_in", "nu_q_MHz", "n_p"],
        [
            (p, nu, fit.photons_at(p, chi))
            for p, nu in zip(data.p_in, data.nu_q)
        ],
    )
    headline = {
        "chi_MHz": chi,
        "slope_true": slope_true,
        "slope_est": fit.slope,
        "slope_err": fit.slope_err,
        "nu_q0_est": fit.intercept,
    }
    return _report(cfg, "stark", out_dir, [path], headline)


def run_readout(cfg: RunConfig, out_dir: Path) -> RunReport:
    """Single-shot histograms, double-Gaussian fits, and preselection."""
    dev = cfg.device
    ro = cfg.readout
    mix = readout.GaussianMixture(0.0, ro.snr, 1.0, 0.5)
    thr = readout.midpoint_threshold(mix)
    probs = protocol.fidelity_metrics(cfg.protocol, dev)
    populations = {
        "prep_g": dev.eps_eg,
        "prep_e": 1.0 - dev.eps_ge,
        "photon_0": protocol.readout_composition(probs.p_e_given_0, dev.eps_ge, dev.eps_eg),
        "photon_1": protocol.readout_composition(probs.p_e_given_1, dev.eps_ge, dev.eps_eg),
    }
    files = []
    fit_rows = []
    assigned = {}
    for name, p_e in populations.items():
        seed = _runner_seed(cfg.seed, f"readout:{name}")
        gen = readout.GaussianMixture(mix.mu_g, mix.mu_e, mix.sigma, p_e)
        shots = readout.sample_shots(gen, p_e, ro.n_shots, seed)
        path_shots = out_dir / f"shots_{name}.csv"
        write_csv(path_shots, ["index", "q"], list(enumerate(shots.values.tolist())))
        hist = readout.histogram_shots(shots, ro.n_bins)
        path_hist = out_dir / f"hist_{name}.csv"
        write_csv(path_hist, ["bin_center", "count"], zip(hist.bin_centers, hist.counts))
        files.extend([path_shots, path_hist])
        fit = readout.fit_double_gaussian(hist)
        fit_rows.append(
            (
                name,
                fit.mixture.mu_g,
                fit.mixture.mu_e,
                fit.mixture.sigma,
                fit.mixture.w_e,
                fit.rss,
            )
        )
        assigned[name] = readout.assigned_fraction(shots, thr)
    path_fits = out_dir / "readout_fits.csv"
    write_csv(path_fits, ["dataset", "mu_g", "mu_e", "sigma", "w_e", "rss"], fit_rows)
    files.append(path_fits)

    pre_mix = readout.GaussianMixture(mix.mu_g, mix.mu_e, mix.sigma, dev.p_thermal)
    pre_shots = readout.sample_shots(
        pre_mix, dev.p_thermal, ro.n_shots, _runner_seed(cfg.seed, "readout:preselect")
    )
    pre_thr = readout.preselect_threshold(mix, ro.preselect_sigmas)
    _, discard = readout.preselect(pre_shots, pre_thr)
    pre_hist = readout.histogram_shots(pre_shots, ro.n_bins)
    path_pre = out_dir / "hist_preselect.csv"
    write_csv(path_pre, ["bin_center", "count"], zip(pre_hist.bin_centers, pre_hist.counts))
    files.append(path_pre)

    composed_f = probs.fidelity * readout.assignment_fidelity(dev.eps_ge, dev.eps_eg)
    headline = {
        "assignment_fidelity": readout.assignment_fidelity(dev.eps_ge, dev.eps_eg),
        "overlap_error": readout.overlap_error(mix),
        "assigned_e_prep_g": assigned["prep_g"],
        "assigned_e_prep_e": assigned["prep_e"],
        "discard_fraction": discard,
        "composed_p_e_given_1": populations["photon_1"],
        "composed_p_e_given_0": populations["photon_0"],
        "composed_fidelity": composed_f,
        "reference_fidelity": cfg.reference.single_shot_fidelity,
        "reference_dark": cfg.reference.single_shot_dark,
        "reference_miss": cfg.reference.single_shot_miss,
    }
    return _report(cfg, "readout", out_dir, files, headline)


def run_loss(cfg: RunConfig, out_dir: Path) -> RunReport:
    """Itemized loss budget and the end-to-end loss extraction."""
    budget = calibration.loss_budget(cfg.loss.components)
    path_budget = out_dir / "loss_budget.csv"
    cumulative = 0.0
    rows = []
    for name, frac in budget.components:
        cumulative += frac
        rows.append((name, frac, cumulative))
    write_csv(path_budget, ["name", "fraction", "cumulative"], rows)
    pipeline = calibration.loss_calibration_roundtrip(
        cfg.device,
        cfg.sweeps.drive_ratios,
        cfg.device.loss_L,
        cfg.loss.detector_gain,
        cfg.loss.noise_frac,
        _runner_seed(cfg.seed, "loss"),
        cfg.stark.photons_per_unit,
        cfg.stark.p_max,
        cfg.stark.n_points,
    )
    path_pipe = out_dir / "loss_pipeline.csv"
    write_csv(path_pipe, ["quantity", "value"], sorted(pipeline.items()))
    headline = {
        "total_additive": budget.total_additive,
        "total_multiplicative": budget.total_multiplicative,
        "loss_true": pipeline["loss_true"],
        "loss_est": pipeline["loss_est"],
        "loss_abs_err": abs(pipeline["loss_est"] - pipeline["loss_true"]),
    }
    return _report(cfg, "loss", out_dir, [path_budget, path_pipe], headline)


RUNNERS = {
    "spectrum": run_spectrum,
    "theta-sweep": run_theta_sweep,
    "window-sweep": run_window_sweep,
    "qnd": run_qnd,
    "mollow": run_mollow,
    "stark": run_stark,
    "readout": run_readout,
    "loss": run_loss,
}


def run_all(cfg: RunConfig, out_dir: Path) -> dict[str, RunReport]:
    return {name: runner(cfg, out_dir) for name, runner in RUNNERS.items()}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="qndsim",
        description="Microwave single-photon detection simulator and calibration pipeline",
    )
    parser.add_argument("subcommand", choices=[*RUNNERS, "check"])
    parser.add_argument("--config", type=Path, default=None, help="YAML run configuration")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument(
        "--check",
        action="store_true",
        help="also run the full acceptance suite (exit 3 on failure)",
    )
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config) if args.config else default_config()
        if args.seed is not None:
            cfg.seed = args.seed
            if not 0 <= cfg.seed < 2**64:
                raise ConfigError("seed must fit an unsigned 64-bit integer")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    out_dir = args.out if args.out else Path(cfg.output_dir)
    try:
        if args.subcommand == "check":
            results = acceptance.run_check(cfg, out_dir)
            print(acceptance.render_report(results))
            return 0 if all(r.passed for r in results) else 3
        report = RUNNERS[args.subcommand](cfg, out_dir)
        for key, value in report.headline.items():
            print(f"{key}: {value}")
        if args.check:
            results = acceptance.run_check(cfg, out_dir)
            print(acceptance.render_report(results))
            if not all(r.passed for r in results):
                return 3
        return 0
    except (SimulationError, ValueError) as exc:
        print(f"{args.subcommand}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
