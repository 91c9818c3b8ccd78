"""Phenomenological error model of the Ramsey-based photon detection protocol.

Three independently characterized error sources enter: the finite Ramsey
coherence of the detection qubit, the photon loss between source and
detector, and the part of the photon envelope cut off by the closing pulse.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .device import DeviceParams

TWO_PI = 2.0 * math.pi

RAMSEY_LAWS = ("exponential", "gaussian")


@dataclass
class ProtocolConfig:
    """Detection window, photon preparation angle and emission parameters.

    Tw and t0 in microseconds, theta in radians, gamma_photon in MHz.
    """

    Tw: float = 0.250
    theta: float = math.pi
    t0: float = 0.020
    gamma_photon: float = 1.77
    ramsey_law: str = "exponential"

    def __post_init__(self):
        if self.Tw <= self.t0:
            raise ValueError("detection window must extend past the emission delay")
        if not 0 <= self.theta <= math.pi:
            raise ValueError("theta must lie in [0, pi]")
        if self.gamma_photon <= 0:
            raise ValueError("gamma_photon must be positive")
        if self.ramsey_law not in RAMSEY_LAWS:
            raise ValueError(f"ramsey_law must be one of {RAMSEY_LAWS}")

    def with_window(self, window_us: float) -> "ProtocolConfig":
        return replace(self, Tw=window_us)


@dataclass
class DetectionProbs:
    """Detection efficiency, dark count, and the derived figures of merit."""

    p_e_given_1: float
    p_e_given_0: float
    fidelity: float
    ratio: float

    @classmethod
    def from_probs(cls, p_e_given_1: float, p_e_given_0: float) -> "DetectionProbs":
        ratio = p_e_given_1 / p_e_given_0 if p_e_given_0 > 0 else math.inf
        return cls(p_e_given_1, p_e_given_0, p_e_given_1 - p_e_given_0, ratio)


def photon_envelope(t: float | np.ndarray, cfg: ProtocolConfig) -> float | np.ndarray:
    """Emitted wave-packet amplitude: decaying exponential from the delay t0.

    xi(t) = sqrt(G) exp(-G (t - t0) / 2) for t >= t0 with G = 2 pi gamma_photon,
    normalized so the integral of |xi|^2 over the full packet is 1.
    """
    rate = TWO_PI * cfg.gamma_photon
    t = np.asarray(t, dtype=float)
    amp = np.where(t >= cfg.t0, np.sqrt(rate) * np.exp(-rate * (t - cfg.t0) / 2), 0.0)
    return float(amp) if amp.ndim == 0 else amp


def capture_fraction(cfg: ProtocolConfig, window_us: float | None = None) -> float:
    """Fraction of the photon envelope inside the detection window."""
    tw = cfg.Tw if window_us is None else window_us
    if tw < cfg.t0:
        warnings.warn("window ends before the photon emission; nothing captured")
        return 0.0
    rate = TWO_PI * cfg.gamma_photon
    return 1.0 - math.exp(-rate * (tw - cfg.t0))


def ramsey_coherence(Tw: float, T2_star: float, law: str = "exponential") -> float:
    """Remaining Ramsey fringe contrast after a free evolution of Tw."""
    if Tw < 0:
        raise ValueError("window length must be non-negative")
    if law == "exponential":
        return math.exp(-Tw / T2_star)
    if law == "gaussian":
        return math.exp(-((Tw / T2_star) ** 2))
    raise ValueError(f"unknown ramsey law {law!r}")


def dark_count(Tw: float, params: DeviceParams, law: str = "exponential") -> float:
    """Click probability without a photon: P(e|0) = (1 - C(Tw)) / 2."""
    return (1.0 - ramsey_coherence(Tw, params.T2_star, law)) / 2.0


def detection_efficiency(cfg: ProtocolConfig, params: DeviceParams) -> float:
    """Click probability with a photon emitted.

    A captured photon (probability p_int = (1-L) * capture) flips the Ramsey
    phase, succeeding with the coherence-limited probability (1+C)/2; a lost
    or uncaptured photon leaves the interferometer undisturbed and the
    outcome reverts to dark-count statistics.
    """
    p_int = (1.0 - params.loss_L) * capture_fraction(cfg)
    c = ramsey_coherence(cfg.Tw, params.T2_star, cfg.ramsey_law)
    p_dark = dark_count(cfg.Tw, params, cfg.ramsey_law)
    return p_int * (1.0 + c) / 2.0 + (1.0 - p_int) * p_dark


def fidelity_metrics(cfg: ProtocolConfig, params: DeviceParams) -> DetectionProbs:
    """Efficiency, dark count, fidelity F = P(e|1) - P(e|0) and their ratio."""
    return DetectionProbs.from_probs(
        detection_efficiency(cfg, params),
        dark_count(cfg.Tw, params, cfg.ramsey_law),
    )


def theta_sweep(
    cfg: ProtocolConfig, params: DeviceParams, theta_grid: np.ndarray
) -> list[tuple[float, float]]:
    """Average click probability vs preparation angle.

    P_e(theta) = P(e|0) + (P(e|1) - P(e|0)) sin^2(theta/2), tracking the
    mean photon number of the prepared superposition.
    """
    theta_grid = np.asarray(theta_grid, dtype=float)
    if np.any((theta_grid < 0) | (theta_grid > math.pi)):
        raise ValueError("theta grid must lie in [0, pi]")
    probs = fidelity_metrics(cfg, params)
    p_e = probs.p_e_given_0 + probs.fidelity * np.sin(theta_grid / 2) ** 2
    return list(zip(theta_grid.tolist(), p_e.tolist()))


def window_sweep(
    cfg: ProtocolConfig, params: DeviceParams, windows: np.ndarray
) -> list[tuple[float, DetectionProbs]]:
    """fidelity_metrics evaluated across a grid of window lengths."""
    return [(float(tw), fidelity_metrics(cfg.with_window(float(tw)), params)) for tw in windows]


def optimal_window(
    cfg: ProtocolConfig,
    params: DeviceParams,
    objective: str = "efficiency",
    bounds: tuple[float, float] = (0.03, 1.5),
) -> float:
    """Window length maximizing P(e|1) (or F), by golden-section search."""
    if objective == "efficiency":
        func = lambda tw: detection_efficiency(cfg.with_window(tw), params)
    elif objective == "fidelity":
        func = lambda tw: fidelity_metrics(cfg.with_window(tw), params).fidelity
    else:
        raise ValueError("objective must be 'efficiency' or 'fidelity'")
    return _golden_section_max(func, *bounds)


def _golden_section_max(func, lo: float, hi: float, tol: float = 1e-9) -> float:
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = func(c), func(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = func(d)
    return (a + b) / 2.0


def readout_composition(p_true: float, eps_ge: float, eps_eg: float) -> float:
    """Measured excited fraction after asymmetric assignment errors."""
    for x in (p_true, eps_ge, eps_eg):
        if not 0 <= x <= 1:
            raise ValueError("probabilities must lie in [0, 1]")
    return p_true * (1.0 - eps_ge) + (1.0 - p_true) * eps_eg


def invert_readout_composition(p_meas: float, eps_ge: float, eps_eg: float) -> float:
    """Analytic inverse of readout_composition."""
    return (p_meas - eps_eg) / (1.0 - eps_ge - eps_eg)


def loss_deconvolution(p_g_given_1: float, loss: float) -> float:
    """Internal miss probability once line losses are accounted for.

    P_in(g|1) = (P(g|1) - L) / (1 - L), clamped at 0 when the raw miss
    probability is entirely explained by loss.
    """
    if not 0 <= loss < 1:
        raise ValueError("loss must lie in [0, 1)")
    if not 0 <= p_g_given_1 <= 1:
        raise ValueError("probability must lie in [0, 1]")
    if p_g_given_1 < loss:
        warnings.warn("miss probability below the loss floor; clamping to 0")
        return 0.0
    return (p_g_given_1 - loss) / (1.0 - loss)


def internal_fidelity(p_in_g_given_1: float, p_e_given_0: float) -> float:
    """Loss-corrected detector figure of merit: 1 - P_in(g|1) - P(e|0)."""
    for x in (p_in_g_given_1, p_e_given_0):
        if not 0 <= x <= 1:
            raise ValueError("probabilities must lie in [0, 1]")
    return 1.0 - p_in_g_given_1 - p_e_given_0
