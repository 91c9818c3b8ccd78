"""Reflected-field moment analysis: matched filtering, expected detector-ON
and detector-OFF moments, and the power-conservation check.

A nondemolition detector conserves the photon number of the reflected mode
while erasing its phase; both statements become closed-form curves vs the
preparation angle, plus a Monte Carlo of the moment estimation at finite
shot count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core.traces import TimeTrace
from .protocol import ProtocolConfig, photon_envelope

MODES = ("on", "off")

# Per-quadrature variance of the additive measurement noise, referenced to
# the photon mode. The value is calibrated so that a 12,500-shot moment
# estimate carries ~0.5% standard error at one photon: the 2% ON/OFF power
# gate compared across a 9-point angle grid needs per-point noise well
# below half the gate to pass in 95% of runs.
DEFAULT_NOISE_VAR = 0.016
DEFAULT_SHOTS = 12_500
POWER_GATE = 0.02
POWER_FLOOR = 0.25  # photons; keeps the relative deviation finite near vacuum


@dataclass
class ModeFilter:
    """Normalized temporal mode used to extract the photon amplitude."""

    envelope: TimeTrace

    def __post_init__(self):
        norm = np.trapezoid(np.abs(self.envelope.values) ** 2, self.envelope.axis)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError("filter envelope must be normalized to unit power")


def photon_mode_filter(cfg: ProtocolConfig, grid: np.ndarray) -> ModeFilter:
    """Filter matched to the emitted photon envelope, renormalized on grid."""
    grid = np.asarray(grid, dtype=float)
    values = photon_envelope(grid, cfg).astype(complex)
    norm = np.trapezoid(np.abs(values) ** 2, grid)
    if norm <= 0:
        raise ValueError("photon envelope has no support on the grid")
    return ModeFilter(TimeTrace(grid, values / np.sqrt(norm), label="photon mode"))


@dataclass
class MomentPair:
    """Mean photon number and optimized-quadrature amplitude of one mode."""

    n_avg: float
    re_a: float

    def __post_init__(self):
        if self.n_avg < 0:
            raise ValueError("photon number must be non-negative")
        if abs(self.re_a) > np.sqrt(self.n_avg) + 1e-9:
            raise ValueError("amplitude violates |<a>|^2 <= <a^dag a>")


def matched_filter(trace: TimeTrace, filt: ModeFilter) -> complex:
    """Mode amplitude a = integral of conj(f) * s over the shared grid."""
    f = filt.envelope
    if trace.axis.shape != f.axis.shape or np.max(np.abs(trace.axis - f.axis)) > 1e-12 * max(
        1.0, np.max(np.abs(f.axis))
    ):
        raise ValueError("trace and filter must share one time grid")
    return complex(np.trapezoid(np.conj(f.values) * trace.values, trace.axis))


def expected_moments(theta: float, mode: str, scale: float = 1.0) -> MomentPair:
    """Ideal detector response at preparation angle theta.

    Both modes carry the photon number scale*sin^2(theta/2); the OFF mode
    keeps the input coherence sqrt(scale)*sin(theta)/2 while the ON mode
    erases it. scale is the separately calibrated transmission of the line.
    """
    if not 0 <= theta <= np.pi:
        raise ValueError("theta must lie in [0, pi]")
    if not 0 < scale <= 1:
        raise ValueError("scale must lie in (0, 1]")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    n_avg = scale * np.sin(theta / 2) ** 2
    re_a = 0.0 if mode == "on" else np.sqrt(scale) * np.sin(theta) / 2
    return MomentPair(float(n_avg), float(re_a))


@dataclass
class QndCheckResult:
    max_deviation: float
    passed: bool


def qnd_check(
    on: list[MomentPair],
    off: list[MomentPair],
    gate: float = POWER_GATE,
    floor: float = POWER_FLOOR,
) -> QndCheckResult:
    """Largest relative ON/OFF power deviation over a shared angle grid."""
    if len(on) != len(off):
        raise ValueError("moment lists must share one angle grid")
    deviations = [
        abs(a.n_avg - b.n_avg) / max(b.n_avg, floor) for a, b in zip(on, off)
    ]
    max_dev = float(max(deviations))
    return QndCheckResult(max_dev, max_dev <= gate)


def simulate_moment_estimates(
    theta_grid: np.ndarray,
    mode: str,
    rng: np.random.Generator,
    scale: float = 1.0,
    n_shots: int = DEFAULT_SHOTS,
    noise_var: float = DEFAULT_NOISE_VAR,
    coherence_offset: float = 0.0,
) -> list[MomentPair]:
    """Moment estimates from simulated single-shot mode amplitudes.

    Each shot is the matched-filter output a = s + nu: the signal s has the
    modulus sqrt(n) with the mode's phase statistics (ON randomizes the sign,
    OFF keeps the fixed phase theta/2), and nu is complex amplifier noise
    with the calibrated per-quadrature variance. The photon-number estimator
    subtracts the known noise power. coherence_offset adds a constant
    spurious coherent amplitude to the ON-mode field (default off).
    """
    theta_grid = np.asarray(theta_grid, dtype=float)
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    out = []
    for theta in theta_grid:
        ideal = expected_moments(float(theta), mode, scale)
        # field amplitude sqrt(n) exp(i theta/2): its real part is the
        # prepared coherence sqrt(scale) sin(theta)/2
        amp = np.sqrt(ideal.n_avg) * np.exp(1j * theta / 2)
        if mode == "on":
            signs = rng.integers(0, 2, n_shots) * 2 - 1
            signal = amp * signs + coherence_offset
        else:
            signal = np.full(n_shots, amp)
        noise = np.sqrt(noise_var) * (
            rng.standard_normal(n_shots) + 1j * rng.standard_normal(n_shots)
        )
        shots = signal + noise
        n_est = float(np.mean(np.abs(shots) ** 2) - 2 * noise_var)
        re_est = float(np.mean(shots.real))
        n_safe = max(n_est, 0.0)
        re_safe = float(np.clip(re_est, -np.sqrt(n_safe), np.sqrt(n_safe)))
        out.append(MomentPair(n_safe, re_safe))
    return out


def qnd_monte_carlo(
    theta_grid: np.ndarray,
    seeds: list[int],
    scale: float = 1.0,
    n_shots: int = DEFAULT_SHOTS,
    noise_var: float = DEFAULT_NOISE_VAR,
    gate: float = POWER_GATE,
    floor: float = POWER_FLOOR,
    coherence_offset: float = 0.0,
) -> list[QndCheckResult]:
    """qnd_check on independently simulated ON/OFF estimates, one per seed."""
    results = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        on = simulate_moment_estimates(
            theta_grid, "on", rng, scale, n_shots, noise_var, coherence_offset
        )
        off = simulate_moment_estimates(theta_grid, "off", rng, scale, n_shots, noise_var)
        results.append(qnd_check(on, off, gate, floor))
    return results
